"""Corner detection, binary descriptors, and matching.

Detection is a segment-test corner detector (contiguous arc of 9 on a
radius-3 Bresenham circle of 16), ranked by a Harris response and thinned
with 3x3 non-maximum suppression. Descriptors are 256-bit intensity
comparisons on a smoothed 31x31 patch. Everything is integer or float64
numpy, fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError

# radius-3 Bresenham circle, clockwise from 12 o'clock
CIRCLE_OFFSETS: tuple[tuple[int, int], ...] = (
    (0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
    (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3),
)
ARC_LENGTH = 9
PATCH_HALF = 13          # descriptor pair offsets live in [-13, 13]
SMOOTH_HALF = 2          # 5x5 box smoothing before sampling
BORDER_MARGIN = PATCH_HALF + SMOOTH_HALF + 1

_POPCOUNT = np.array([bin(v).count("1") for v in range(256)], dtype=np.uint16)


def to_gray(image: np.ndarray) -> np.ndarray:
    """Integer Rec.601 luminance; uint8 in, uint8 out, bit-reproducible."""
    arr = np.asarray(image)
    if arr.dtype != np.uint8:
        raise InputError(f"expected a uint8 image, got {arr.dtype}")
    if arr.ndim == 2:
        return arr
    if arr.ndim == 3 and arr.shape[2] in (3, 4):
        rgb = arr[:, :, :3].astype(np.uint32)
        y = (299 * rgb[:, :, 0] + 587 * rgb[:, :, 1] + 114 * rgb[:, :, 2] + 500) // 1000
        return y.astype(np.uint8)
    raise InputError(f"expected HxW or HxWx3 image, got shape {arr.shape}")


def _box_filter(arr: np.ndarray, half: int) -> np.ndarray:
    """Mean over a (2*half+1)^2 window via integral image, edge-padded."""
    k = 2 * half + 1
    padded = np.pad(arr.astype(np.float64), half, mode="edge")
    integral = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1))
    np.cumsum(np.cumsum(padded, axis=0), axis=1, out=integral[1:, 1:])
    h, w = arr.shape
    sums = (integral[k:k + h, k:k + w] - integral[:h, k:k + w]
            - integral[k:k + h, :w] + integral[:h, :w])
    return sums / (k * k)


def _segment_test(gray: np.ndarray, threshold: int) -> np.ndarray:
    """Boolean map of segment-test corners (interior pixels only)."""
    h, w = gray.shape
    core = gray[3:h - 3, 3:w - 3].astype(np.int16)
    ring = np.empty((16,) + core.shape, dtype=np.int16)
    for k, (dx, dy) in enumerate(CIRCLE_OFFSETS):
        ring[k] = gray[3 + dy:h - 3 + dy, 3 + dx:w - 3 + dx]
    brighter = ring >= core + threshold
    darker = ring <= core - threshold

    # an arc of 9 must cover at least 2 of the 4 compass points
    compass = (0, 4, 8, 12)
    maybe = (sum(brighter[k].astype(np.uint8) for k in compass) >= 2) \
        | (sum(darker[k].astype(np.uint8) for k in compass) >= 2)

    result = np.zeros(core.shape, dtype=bool)
    ys, xs = np.nonzero(maybe)
    if ys.size == 0:
        return np.pad(result, 3, mode="constant")
    for flags in (brighter, darker):
        cand = flags[:, ys, xs]  # (16, m)
        doubled = np.concatenate([cand, cand], axis=0)
        run = np.zeros(cand.shape[1], dtype=np.int16)
        best = np.zeros(cand.shape[1], dtype=np.int16)
        for k in range(32):
            run = np.where(doubled[k], run + 1, 0)
            best = np.maximum(best, run)
        hit = best >= ARC_LENGTH
        result[ys[hit], xs[hit]] = True
    return np.pad(result, 3, mode="constant")


def _harris_response(gray: np.ndarray, k: float = 0.04) -> np.ndarray:
    g = gray.astype(np.float64)
    ix = np.zeros_like(g)
    iy = np.zeros_like(g)
    ix[:, 1:-1] = (g[:, 2:] - g[:, :-2]) * 0.5
    iy[1:-1, :] = (g[2:, :] - g[:-2, :]) * 0.5
    sxx = _box_filter(ix * ix, 1)
    syy = _box_filter(iy * iy, 1)
    sxy = _box_filter(ix * iy, 1)
    return sxx * syy - sxy * sxy - k * (sxx + syy) ** 2


def _non_max_3x3(response: np.ndarray, mask: np.ndarray) -> np.ndarray:
    keep = mask.copy()
    padded = np.pad(response, 1, mode="constant", constant_values=-np.inf)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            neighbor = padded[1 + dy:1 + dy + response.shape[0],
                              1 + dx:1 + dx + response.shape[1]]
            keep &= response > neighbor
    return keep


def _brief_pairs(count: int = 256, seed: int = 2654435761) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.integers(-PATCH_HALF, PATCH_HALF + 1, size=(count, 4))


_PAIRS = _brief_pairs()


@dataclass(frozen=True, eq=False)
class FeatureSet:
    corners: np.ndarray      # (n, 2) float64 pixel coordinates (x, y)
    responses: np.ndarray    # (n,) float64 corner strength
    descriptors: np.ndarray  # (n, 32) uint8, 256 bits each

    def __len__(self) -> int:
        return self.corners.shape[0]


def _empty_features() -> FeatureSet:
    return FeatureSet(corners=np.zeros((0, 2)), responses=np.zeros(0),
                      descriptors=np.zeros((0, 32), dtype=np.uint8))


def extract_features(image: np.ndarray, threshold: int = 20, max_corners: int = 500) -> FeatureSet:
    """Detect, rank, and describe corners. Corners closer than BORDER_MARGIN
    to an edge are discarded so every descriptor patch is fully inside."""
    gray = to_gray(image)
    h, w = gray.shape
    if h <= 2 * BORDER_MARGIN or w <= 2 * BORDER_MARGIN:
        return _empty_features()

    corners_mask = _segment_test(gray, threshold)
    corners_mask[:BORDER_MARGIN, :] = False
    corners_mask[h - BORDER_MARGIN:, :] = False
    corners_mask[:, :BORDER_MARGIN] = False
    corners_mask[:, w - BORDER_MARGIN:] = False
    if not corners_mask.any():
        return _empty_features()

    response = _harris_response(gray)
    keep = _non_max_3x3(response, corners_mask)
    ys, xs = np.nonzero(keep)
    if ys.size == 0:
        return _empty_features()
    scores = response[ys, xs]

    # strongest first; ties broken by scan order for reproducibility
    order = np.lexsort((xs, ys, -scores))[:max_corners]
    ys, xs, scores = ys[order], xs[order], scores[order]

    smoothed = _box_filter(gray, SMOOTH_HALF)
    a = smoothed[ys[:, None] + _PAIRS[None, :, 1], xs[:, None] + _PAIRS[None, :, 0]]
    b = smoothed[ys[:, None] + _PAIRS[None, :, 3], xs[:, None] + _PAIRS[None, :, 2]]
    bits = (a < b).astype(np.uint8)
    descriptors = np.packbits(bits, axis=1)

    return FeatureSet(corners=np.stack([xs, ys], axis=1).astype(np.float64),
                      responses=scores.astype(np.float64), descriptors=descriptors)


def hamming_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(na, nb) matrix of Hamming distances between packed descriptors."""
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]), dtype=np.uint16)
    xor = a[:, None, :] ^ b[None, :, :]
    return _POPCOUNT[xor].sum(axis=2)


def match_descriptors(desc_a: np.ndarray, desc_b: np.ndarray, ratio: float = 0.8,
                      cross_check: bool = True) -> np.ndarray:
    """(m, 2) array of (index_a, index_b) matches.

    A match must win the distance-ratio test against the runner-up on the
    query side and, when cross_check is set, be mutual best.
    """
    na, nb = desc_a.shape[0], desc_b.shape[0]
    if na == 0 or nb < 2:
        return np.zeros((0, 2), dtype=np.intp)
    dist = hamming_distances(desc_a, desc_b)
    order = np.argsort(dist, axis=1, kind="stable")
    best = order[:, 0]
    best_d = dist[np.arange(na), best]
    second_d = dist[np.arange(na), order[:, 1]]
    ok = best_d < ratio * second_d
    if cross_check:
        back = np.argmin(dist, axis=0)
        ok &= back[best] == np.arange(na)
    ia = np.nonzero(ok)[0]
    return np.stack([ia, best[ia]], axis=1).astype(np.intp)
