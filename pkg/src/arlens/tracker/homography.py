"""Planar homography estimation.

Normalized DLT for the exact / least-squares fit, and a seeded RANSAC
wrapper for correspondence sets with outliers. All arrays are float64;
points are (n, 2) in pixel coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError, RuntimeFailure


class EstimationError(RuntimeFailure):
    """No acceptable model could be estimated from the correspondences."""


def _as_points(pts, name: str) -> np.ndarray:
    arr = np.asarray(pts, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InputError(f"{name} must be an (n, 2) array, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite coordinates")
    return arr


def _normalization(pts: np.ndarray) -> np.ndarray:
    """Similarity transform taking the centroid to the origin and the mean
    distance from it to sqrt(2)."""
    centroid = pts.mean(axis=0)
    mean_dist = np.sqrt(((pts - centroid) ** 2).sum(axis=1)).mean()
    scale = np.sqrt(2.0) / mean_dist if mean_dist > 0 else 1.0
    return np.array([
        [scale, 0.0, -scale * centroid[0]],
        [0.0, scale, -scale * centroid[1]],
        [0.0, 0.0, 1.0],
    ])


def _normalize_matrix(H: np.ndarray) -> np.ndarray:
    if abs(H[2, 2]) > 1e-12:
        return H / H[2, 2]
    return H / np.linalg.norm(H)


def estimate_homography_dlt(src, dst) -> np.ndarray:
    """Direct linear transform with Hartley normalization.

    Exact for 4 exact correspondences; algebraic least squares for more.
    The result maps src -> dst and is scaled so H[2, 2] == 1 (Frobenius
    norm 1 when that entry vanishes).
    """
    src = _as_points(src, "src")
    dst = _as_points(dst, "dst")
    if src.shape != dst.shape:
        raise InputError("src and dst must have the same shape")
    n = src.shape[0]
    if n < 4:
        raise InputError(f"need at least 4 correspondences, got {n}")

    t_src = _normalization(src)
    t_dst = _normalization(dst)
    s = (src @ t_src[:2, :2].T) + t_src[:2, 2]
    d = (dst @ t_dst[:2, :2].T) + t_dst[:2, 2]

    a = np.zeros((2 * n, 9))
    a[0::2, 0] = -s[:, 0]
    a[0::2, 1] = -s[:, 1]
    a[0::2, 2] = -1.0
    a[0::2, 6] = d[:, 0] * s[:, 0]
    a[0::2, 7] = d[:, 0] * s[:, 1]
    a[0::2, 8] = d[:, 0]
    a[1::2, 3] = -s[:, 0]
    a[1::2, 4] = -s[:, 1]
    a[1::2, 5] = -1.0
    a[1::2, 6] = d[:, 1] * s[:, 0]
    a[1::2, 7] = d[:, 1] * s[:, 1]
    a[1::2, 8] = d[:, 1]

    _, sv, vt = np.linalg.svd(a)
    if n == 4 and sv[-2] < 1e-9 * max(sv[0], 1.0):
        raise EstimationError("degenerate correspondences (collinear points)")
    h_norm = vt[-1].reshape(3, 3)
    h = np.linalg.inv(t_dst) @ h_norm @ t_src
    return _normalize_matrix(h)


def apply_homography(H, pts) -> np.ndarray:
    pts = _as_points(pts, "pts")
    H = np.asarray(H, dtype=np.float64)
    hom = np.hstack([pts, np.ones((pts.shape[0], 1))]) @ H.T
    w = hom[:, 2]
    if np.any(np.abs(w) < 1e-12):
        raise RuntimeFailure("point maps to infinity under this homography")
    return hom[:, :2] / w[:, None]


def symmetric_transfer_error(H, src, dst) -> np.ndarray:
    """Per-correspondence sqrt(|H s - d|^2 + |H^-1 d - s|^2) in pixels."""
    src = _as_points(src, "src")
    dst = _as_points(dst, "dst")
    H = np.asarray(H, dtype=np.float64)
    try:
        h_inv = np.linalg.inv(H)
    except np.linalg.LinAlgError:
        raise RuntimeFailure("homography is singular")
    fwd = apply_homography(H, src) - dst
    bwd = apply_homography(h_inv, dst) - src
    return np.sqrt((fwd ** 2).sum(axis=1) + (bwd ** 2).sum(axis=1))


def _collinear_triple(pts: np.ndarray) -> bool:
    # any of the 4 triples with near-zero doubled triangle area
    for i in range(4):
        tri = np.delete(pts, i, axis=0)
        area2 = abs((tri[1, 0] - tri[0, 0]) * (tri[2, 1] - tri[0, 1])
                    - (tri[2, 0] - tri[0, 0]) * (tri[1, 1] - tri[0, 1]))
        span = np.abs(tri - tri.mean(axis=0)).max()
        if area2 <= 1e-9 * max(span * span, 1.0):
            return True
    return False


@dataclass(frozen=True, eq=False)
class RansacResult:
    homography: np.ndarray
    inliers: np.ndarray  # boolean mask over the input correspondences
    iterations: int


def estimate_homography_ransac(src, dst, *, threshold: float = 3.0, iterations: int = 2000,
                               confidence: float = 0.9999, min_inliers: int = 8,
                               rng: np.random.Generator | None = None) -> RansacResult:
    """Robust fit: minimal 4-point hypotheses scored by symmetric transfer
    error, refit on the best consensus set.

    `min_inliers` rejects models supported only by their own minimal sample;
    with fewer than that many inliers the estimate is meaningless and an
    EstimationError is raised instead.
    """
    src = _as_points(src, "src")
    dst = _as_points(dst, "dst")
    if src.shape != dst.shape:
        raise InputError("src and dst must have the same shape")
    n = src.shape[0]
    if min_inliers < 4:
        raise InputError("min_inliers must be at least 4")
    if n < min_inliers:
        raise EstimationError(f"need at least {min_inliers} correspondences, got {n}")
    if rng is None:
        rng = np.random.default_rng(0)

    best_mask: np.ndarray | None = None
    best_count = 0
    needed = iterations
    it = 0
    while it < min(needed, iterations):
        it += 1
        idx = rng.choice(n, size=4, replace=False)
        if _collinear_triple(src[idx]) or _collinear_triple(dst[idx]):
            continue
        try:
            h = estimate_homography_dlt(src[idx], dst[idx])
            err = symmetric_transfer_error(h, src, dst)
        except (RuntimeFailure, np.linalg.LinAlgError):
            continue
        mask = err < threshold
        count = int(mask.sum())
        if count > best_count:
            best_count = count
            best_mask = mask
            ratio = count / n
            # adaptive stopping: enough trials that a clean minimal sample
            # was drawn with the requested confidence
            miss = 1.0 - ratio ** 4
            if miss <= 0.0:
                needed = it
            elif miss < 1.0:
                needed = int(np.ceil(np.log(1.0 - confidence) / np.log(miss)))

    if best_mask is None or best_count < min_inliers:
        raise EstimationError(
            f"no model with {min_inliers} inliers in {it} iterations (best {best_count})")

    h = estimate_homography_dlt(src[best_mask], dst[best_mask])
    final_mask = symmetric_transfer_error(h, src, dst) < threshold
    if int(final_mask.sum()) < min_inliers:
        final_mask = best_mask
        h = estimate_homography_dlt(src[best_mask], dst[best_mask])
    return RansacResult(homography=h, inliers=final_mask, iterations=it)


def area_scale(H, x: float, y: float) -> float:
    """Local area magnification |det J| of the map at (x, y); the radius of a
    small disc scales by its square root."""
    H = np.asarray(H, dtype=np.float64)
    w = H[2, 0] * x + H[2, 1] * y + H[2, 2]
    if abs(w) < 1e-12:
        raise RuntimeFailure("point maps to infinity under this homography")
    return abs(float(np.linalg.det(H))) / abs(w) ** 3


def warp_radius(H, center: tuple[float, float], radius: float) -> float:
    return radius * float(np.sqrt(area_scale(H, center[0], center[1])))
