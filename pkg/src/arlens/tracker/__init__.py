"""Plane tracker: features, homography estimation, frame-to-frame tracking."""

from .features import (BORDER_MARGIN, CIRCLE_OFFSETS, FeatureSet, extract_features,
                       hamming_distances, match_descriptors, to_gray)
from .homography import (EstimationError, RansacResult, apply_homography, area_scale,
                         estimate_homography_dlt, estimate_homography_ransac,
                         symmetric_transfer_error, warp_radius)
from .tracking import (Reference, TrackState, TrackStatus, TrackerConfig, build_reference,
                       track_frame)

__all__ = [
    "BORDER_MARGIN", "CIRCLE_OFFSETS", "FeatureSet", "extract_features",
    "hamming_distances", "match_descriptors", "to_gray",
    "EstimationError", "RansacResult", "apply_homography", "area_scale",
    "estimate_homography_dlt", "estimate_homography_ransac",
    "symmetric_transfer_error", "warp_radius",
    "Reference", "TrackState", "TrackStatus", "TrackerConfig", "build_reference",
    "track_frame",
]
