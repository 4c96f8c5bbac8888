"""Frame-to-reference plane tracking.

Each frame is matched against a fixed reference image of the chart; the
estimated homography maps reference pixels into the frame. Pose jitter is
damped by exponential smoothing of the projected reference corners, with
the smoothed homography refit exactly through the four smoothed points.
A short grace period coasts on the last pose when a frame fails to match.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from enum import Enum

from .features import FeatureSet, extract_features, match_descriptors
from .homography import EstimationError, apply_homography, estimate_homography_dlt, \
    estimate_homography_ransac


class TrackStatus(str, Enum):
    LIVE = "live"
    COASTING = "coasting"
    LOST = "lost"


@dataclass(frozen=True)
class TrackerConfig:
    fast_threshold: int = 20
    max_corners: int = 500
    match_ratio: float = 0.8
    ransac_threshold: float = 3.0
    ransac_iterations: int = 2000
    min_inliers: int = 8
    min_matches: int = 12
    smoothing_alpha: float = 0.5  # 1.0 disables smoothing entirely
    grace_frames: int = 5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.smoothing_alpha <= 1.0:
            raise ValueError("smoothing_alpha must be in (0, 1]")
        if self.grace_frames < 0:
            raise ValueError("grace_frames must be non-negative")


@dataclass(frozen=True, eq=False)
class Reference:
    """Precomputed appearance of the planar target."""

    features: FeatureSet
    size: tuple[int, int]  # (width, height)

    @property
    def corners(self) -> np.ndarray:
        w, h = self.size
        return np.array([[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]])


def build_reference(image: np.ndarray, config: TrackerConfig = TrackerConfig()) -> Reference:
    feats = extract_features(image, threshold=config.fast_threshold,
                             max_corners=config.max_corners)
    h, w = np.asarray(image).shape[:2]
    return Reference(features=feats, size=(w, h))


@dataclass(frozen=True, eq=False)
class TrackState:
    status: TrackStatus = TrackStatus.LOST
    homography: np.ndarray | None = None       # reference -> frame, None when lost
    smoothed_corners: np.ndarray | None = None
    frames_since_lock: int = 0
    frame_index: int = 0
    inlier_count: int = 0


def _lose(state: TrackState, config: TrackerConfig) -> TrackState:
    """Missed frame: coast on the previous pose inside the grace window."""
    if state.homography is not None and state.frames_since_lock < config.grace_frames:
        return replace(state, status=TrackStatus.COASTING,
                       frames_since_lock=state.frames_since_lock + 1,
                       frame_index=state.frame_index + 1, inlier_count=0)
    return TrackState(status=TrackStatus.LOST, frame_index=state.frame_index + 1)


def track_frame(reference: Reference, state: TrackState, frame: np.ndarray,
                config: TrackerConfig = TrackerConfig()) -> TrackState:
    """Advance the tracker by one frame; never raises on a bad frame, the
    failure mode is the COASTING / LOST status."""
    feats = extract_features(frame, threshold=config.fast_threshold,
                             max_corners=config.max_corners)
    matches = match_descriptors(reference.features.descriptors, feats.descriptors,
                                ratio=config.match_ratio)
    if matches.shape[0] < config.min_matches:
        return _lose(state, config)

    src = reference.features.corners[matches[:, 0]]
    dst = feats.corners[matches[:, 1]]
    rng = np.random.default_rng((config.seed, state.frame_index))
    try:
        result = estimate_homography_ransac(
            src, dst, threshold=config.ransac_threshold,
            iterations=config.ransac_iterations, min_inliers=config.min_inliers, rng=rng)
    except EstimationError:
        return _lose(state, config)

    raw = result.homography
    projected = apply_homography(raw, reference.corners)
    if config.smoothing_alpha >= 1.0 or state.smoothed_corners is None:
        smoothed = projected
        homography = raw
    else:
        smoothed = (config.smoothing_alpha * projected
                    + (1.0 - config.smoothing_alpha) * state.smoothed_corners)
        homography = estimate_homography_dlt(reference.corners, smoothed)
    return TrackState(status=TrackStatus.LIVE, homography=homography,
                      smoothed_corners=smoothed, frames_since_lock=0,
                      frame_index=state.frame_index + 1,
                      inlier_count=int(result.inliers.sum()))
