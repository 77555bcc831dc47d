"""Homography estimation and the visual-overlap score between frame pairs.

The overlap score is the fraction of one frame's area covered by the
other frame's warped corner quadrilateral, clipped to the image
rectangle.  The pipeline uses the symmetric form min(r(H), r(H^-1)) so
the score does not depend on which frame of a pair is warped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .features import MatchSet

__all__ = [
    "Homography",
    "OverlapScore",
    "RansacConfig",
    "DegenerateGeometryError",
    "EstimationError",
    "InsufficientMatchesError",
    "dlt_solve",
    "estimate_homography",
    "visual_overlap",
    "symmetric_overlap",
]


class DegenerateGeometryError(ValueError):
    """Correspondences are rank-deficient (collinear or coincident points)."""


class EstimationError(RuntimeError):
    """No homography with enough inliers could be found ("no overlap estimable")."""


class InsufficientMatchesError(EstimationError):
    """Fewer matches than the 4-point minimal sample requires."""


@dataclass(frozen=True)
class Homography:
    """A nondegenerate 3x3 projective map between two image planes.

    Stored normalized: Frobenius norm 1 and h[2,2] >= 0.
    """

    h: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.h, dtype=np.float64).reshape(3, 3)
        norm = np.linalg.norm(m)
        if norm == 0:
            raise ValueError("zero homography")
        m = m / norm
        if m[2, 2] < 0:
            m = -m
        if abs(np.linalg.det(m)) <= 1e-12:
            raise DegenerateGeometryError(f"homography is singular (det={np.linalg.det(m)})")
        m.setflags(write=False)
        object.__setattr__(self, "h", m)

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.h))

    def apply(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Warp (N,2) points; returns (warped (N,2), homogeneous w (N,)).

        Rows with w == 0 contain inf/nan; callers interested in validity
        should check w > 0.
        """
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        hom = np.column_stack([pts, np.ones(len(pts))]) @ self.h.T
        w = hom[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            warped = hom[:, :2] / w[:, None]
        return warped, w


@dataclass(frozen=True)
class OverlapScore:
    """Result of scoring one frame pair."""

    r_tilde: float
    inlier_count: int
    matched_count: int

    def __post_init__(self):
        if not 0.0 <= self.r_tilde <= 1.0:
            raise ValueError(f"r_tilde must be in [0,1], got {self.r_tilde}")
        if self.inlier_count > self.matched_count:
            raise ValueError("inlier_count cannot exceed matched_count")


@dataclass(frozen=True)
class RansacConfig:
    """RANSAC settings for homography fitting."""

    iterations: int = 2000
    inlier_threshold: float = 3.0
    confidence: float = 0.999
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must be in (0,1)")
        if self.inlier_threshold <= 0:
            raise ValueError("inlier_threshold must be positive")


def _hartley_normalization(points: np.ndarray) -> np.ndarray:
    """Similarity transform that centers points and scales mean distance to sqrt(2)."""
    centroid = points.mean(axis=0)
    dists = np.linalg.norm(points - centroid, axis=1)
    mean_dist = dists.mean()
    if mean_dist < 1e-12:
        raise DegenerateGeometryError("all points coincide")
    s = math.sqrt(2.0) / mean_dist
    return np.array(
        [[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]]
    )


def dlt_solve(src: np.ndarray, dst: np.ndarray) -> Homography:
    """Least-squares homography from >= 4 point correspondences.

    Uses the homogeneous DLT system with Hartley normalization (points
    centered and scaled to mean distance sqrt(2)) and denormalizes the
    result.  Exact on noise-free data; least-squares in the algebraic
    error otherwise.
    """
    src = np.asarray(src, dtype=np.float64).reshape(-1, 2)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 2)
    if len(src) != len(dst):
        raise ValueError("src and dst must pair up")
    if len(src) < 4:
        raise ValueError(f"need >= 4 correspondences, got {len(src)}")
    t_src = _hartley_normalization(src)
    t_dst = _hartley_normalization(dst)
    sn = np.column_stack([src, np.ones(len(src))]) @ t_src.T
    dn = np.column_stack([dst, np.ones(len(dst))]) @ t_dst.T

    a = np.zeros((2 * len(src), 9))
    x, y = sn[:, 0], sn[:, 1]
    u, v = dn[:, 0], dn[:, 1]
    a[0::2, 0] = -x
    a[0::2, 1] = -y
    a[0::2, 2] = -1.0
    a[0::2, 6] = u * x
    a[0::2, 7] = u * y
    a[0::2, 8] = u
    a[1::2, 3] = -x
    a[1::2, 4] = -y
    a[1::2, 5] = -1.0
    a[1::2, 6] = v * x
    a[1::2, 7] = v * y
    a[1::2, 8] = v

    _, sigma, vt = np.linalg.svd(a)
    if sigma[-2] < 1e-10 * max(sigma[0], 1.0):
        raise DegenerateGeometryError("DLT system is rank deficient (degenerate points)")
    h_norm = vt[-1].reshape(3, 3)
    h = np.linalg.inv(t_dst) @ h_norm @ t_src
    if abs(np.linalg.det(h)) <= 1e-12:
        raise DegenerateGeometryError("recovered homography is singular")
    return Homography(h)


def _transfer_errors(h: Homography, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Forward transfer error |H(src) - dst| in pixels; inf where w <= 0."""
    warped, w = h.apply(src)
    err = np.linalg.norm(warped - dst, axis=1)
    return np.where(w > 0, err, np.inf)


def _sample_is_degenerate(pts: np.ndarray) -> bool:
    """True if any 3 of the 4 sample points are (nearly) collinear."""
    for skip in range(4):
        tri = np.delete(pts, skip, axis=0)
        area = 0.5 * abs(
            (tri[1, 0] - tri[0, 0]) * (tri[2, 1] - tri[0, 1])
            - (tri[2, 0] - tri[0, 0]) * (tri[1, 1] - tri[0, 1])
        )
        if area < 1e-8:
            return True
    return False


def estimate_homography(
    matches: MatchSet,
    kps_a,
    kps_b,
    config: RansacConfig = RansacConfig(),
    rng: np.random.Generator | None = None,
) -> tuple[Homography, np.ndarray]:
    """Robustly fit a homography to matched keypoints.

    RANSAC over 4-point minimal samples with an adaptive iteration count
    derived from the running inlier ratio (capped at config.iterations),
    then a final DLT re-fit on all inliers of the best model.  The RNG is
    call-local, so a fixed seed and fixed input give an identical inlier
    mask.

    Returns (homography, boolean inlier mask over matches.pairs).
    Raises :class:`InsufficientMatchesError` with < 4 matches and
    :class:`EstimationError` when no model reaches 4 inliers.
    """
    n = len(matches.pairs)
    if n < 4:
        raise InsufficientMatchesError(f"need >= 4 matches, got {n}")
    src = np.array([[kps_a[i].x, kps_a[i].y] for i, _, _ in matches.pairs])
    dst = np.array([[kps_b[j].x, kps_b[j].y] for _, j, _ in matches.pairs])

    if rng is None:
        rng = np.random.default_rng(config.seed)
    best_mask = None
    best_count = 0
    max_iters = config.iterations
    it = 0
    while it < max_iters:
        it += 1
        idx = rng.choice(n, size=4, replace=False)
        if _sample_is_degenerate(src[idx]) or _sample_is_degenerate(dst[idx]):
            continue
        try:
            model = dlt_solve(src[idx], dst[idx])
        except DegenerateGeometryError:
            continue
        mask = _transfer_errors(model, src, dst) < config.inlier_threshold
        count = int(mask.sum())
        if count > best_count:
            best_count = count
            best_mask = mask
            ratio = count / n
            if ratio < 1.0:
                denom = math.log(1.0 - ratio**4)
                if denom < 0:
                    needed = math.ceil(math.log(1.0 - config.confidence) / denom)
                    max_iters = min(max_iters, max(needed, 1))
            else:
                max_iters = min(max_iters, it)

    if best_mask is None or best_count < 4:
        raise EstimationError(f"no homography with >= 4 inliers among {n} matches")
    try:
        refined = dlt_solve(src[best_mask], dst[best_mask])
    except DegenerateGeometryError:
        # Inlier set collapsed to a degenerate configuration; treat as failure.
        raise EstimationError("inlier set is degenerate; no overlap estimable")
    return refined, best_mask


def _clip_polygon(polygon: np.ndarray, width: float, height: float) -> np.ndarray:
    """Sutherland-Hodgman clip of a polygon against [0,width] x [0,height]."""

    def clip_edge(pts, inside, intersect):
        out = []
        m = len(pts)
        for k in range(m):
            cur, nxt = pts[k], pts[(k + 1) % m]
            cur_in, nxt_in = inside(cur), inside(nxt)
            if cur_in:
                out.append(cur)
                if not nxt_in:
                    out.append(intersect(cur, nxt))
            elif nxt_in:
                out.append(intersect(cur, nxt))
        return out

    def x_cross(p, q, x0):
        t = (x0 - p[0]) / (q[0] - p[0])
        return (x0, p[1] + t * (q[1] - p[1]))

    def y_cross(p, q, y0):
        t = (y0 - p[1]) / (q[1] - p[1])
        return (p[0] + t * (q[0] - p[0]), y0)

    pts = [tuple(p) for p in polygon]
    for inside, intersect in (
        (lambda p: p[0] >= 0.0, lambda p, q: x_cross(p, q, 0.0)),
        (lambda p: p[0] <= width, lambda p, q: x_cross(p, q, width)),
        (lambda p: p[1] >= 0.0, lambda p, q: y_cross(p, q, 0.0)),
        (lambda p: p[1] <= height, lambda p, q: y_cross(p, q, height)),
    ):
        pts = clip_edge(pts, inside, intersect)
        if not pts:
            return np.empty((0, 2))
    return np.array(pts)


def _polygon_area(points: np.ndarray) -> float:
    if len(points) < 3:
        return 0.0
    x, y = points[:, 0], points[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def corners(width: float, height: float) -> np.ndarray:
    """Image corners in counterclockwise order (x right, y down)."""
    return np.array(
        [[0.0, 0.0], [width, 0.0], [width, height], [0.0, height]], dtype=np.float64
    )


def visual_overlap(h: Homography, width: int, height: int) -> float:
    """Fraction of the image rectangle covered by the warped corner quad.

    Warps the source frame's four corners by ``h``, clips the resulting
    quadrilateral against [0,width] x [0,height], and returns clipped area
    over image area.  If any warped corner has non-positive homogeneous w
    (the quad crosses the horizon; physically meaningless for nearby
    frames), returns 0.
    """
    warped, w = h.apply(corners(width, height))
    if np.any(w <= 0):
        return 0.0
    clipped = _clip_polygon(warped, float(width), float(height))
    return _polygon_area(clipped) / (float(width) * float(height))


def symmetric_overlap(h: Homography, width: int, height: int) -> float:
    """min(r(H), r(H^-1)): invariant to swapping the frame pair."""
    return min(visual_overlap(h, width, height), visual_overlap(h.inverse(), width, height))
