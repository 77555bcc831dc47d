"""Geometric mask-propagation baselines for video object segmentation.

Fixed-in-2D holds the reference mask constant.  Fixed-in-3D lifts the
mask onto a fixed 3D surface (a plane fitted to the sparse points seen
inside the mask, or constant depth when too few points support a fit)
and reprojects it into every frame with the known camera poses.  Whether
the object is in or out of view falls out of the poses for free; no
occlusion reasoning is attempted, since sparse clouds cannot support it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from .geometry import (
    CameraIntrinsics,
    RegisteredFrame,
    SparsePoint,
    pixel_rays,
    project_points,
)

__all__ = [
    "BinaryMask",
    "PlaneSurface",
    "LiftedObject",
    "PropagationConfig",
    "LiftError",
    "fixed_in_2d",
    "lift_mask",
    "reproject_object",
    "read_mask",
    "write_mask",
    "read_palette_masks",
    "write_palette_masks",
    "write_overlay",
]


class LiftError(RuntimeError):
    """A mask could not be lifted to 3D (no supporting sparse points)."""

    def __init__(self, object_id, reason: str):
        super().__init__(f"object {object_id}: {reason}")
        self.object_id = object_id


@dataclass(frozen=True)
class BinaryMask:
    """Row-major 2D boolean mask for one object."""

    bits: np.ndarray
    object_id: int | str | None = None

    def __post_init__(self):
        arr = np.asarray(self.bits, dtype=bool)
        if arr.ndim != 2:
            raise ValueError(f"mask must be 2D, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def count(self) -> int:
        return int(self.bits.sum())

    @property
    def is_empty(self) -> bool:
        return not self.bits.any()

    @classmethod
    def empty(cls, width: int, height: int, object_id=None) -> "BinaryMask":
        return cls(np.zeros((height, width), dtype=bool), object_id)


@dataclass(frozen=True)
class PlaneSurface:
    """Plane {x : normal . x = offset} with a unit normal."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64).reshape(3)
        norm = np.linalg.norm(n)
        if norm < 1e-12:
            raise ValueError("plane normal must be nonzero")
        n = n / norm
        n.setflags(write=False)
        object.__setattr__(self, "normal", n)


@dataclass(frozen=True)
class LiftedObject:
    """A mask fixed at a 3D location.

    ``surface`` is the fitted plane, or None when the lift fell back to
    constant camera depth (``constant_depth`` set).  ``mask_samples`` are
    the lifted world points of a subsampled grid of mask pixels.
    """

    object_id: int | str | None
    anchor_points: np.ndarray
    mask_samples: np.ndarray
    surface: PlaneSurface | None = None
    constant_depth: float | None = None

    def __post_init__(self):
        if (self.surface is None) == (self.constant_depth is None):
            raise ValueError("exactly one of surface / constant_depth must be set")
        samples = np.asarray(self.mask_samples, dtype=np.float64).reshape(-1, 3)
        if len(samples) == 0:
            raise ValueError("lift produced no mask samples")
        anchors = np.asarray(self.anchor_points, dtype=np.float64).reshape(-1, 3)
        samples.setflags(write=False)
        anchors.setflags(write=False)
        object.__setattr__(self, "mask_samples", samples)
        object.__setattr__(self, "anchor_points", anchors)


@dataclass(frozen=True)
class PropagationConfig:
    """Knobs for lifting and reprojection.

    The plane-fit inlier threshold is relative: 2% of the median depth of
    the supporting points.  ``splat_radius`` defaults to ``sample_stride``
    so reprojected samples tile the mask without holes.
    """

    max_point_error: float = 2.0
    min_points: int = 10
    sample_stride: int = 2
    splat_radius: int | None = None
    visibility_min: float = 0.2
    plane_inlier_fraction: float = 0.02
    ransac_iterations: int = 100
    seed: int = 0

    @property
    def effective_splat_radius(self) -> int:
        return self.sample_stride if self.splat_radius is None else self.splat_radius


def fixed_in_2d(ref_mask: BinaryMask, n_frames: int) -> list[BinaryMask]:
    """The 2D baseline: the reference mask, unchanged, for every frame."""
    return [replace(ref_mask) for _ in range(n_frames)]


def _fit_plane_lsq(points: np.ndarray) -> PlaneSurface:
    centroid = points.mean(axis=0)
    centered = points - centroid
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    if svals[1] < 1e-12:
        raise ValueError("points are collinear; plane is undetermined")
    normal = vt[2]
    return PlaneSurface(normal, float(np.dot(normal, centroid)))


def _fit_plane_ransac(
    points: np.ndarray, threshold: float, iterations: int, rng: np.random.Generator
) -> PlaneSurface | None:
    """Plane through 3-point samples, refit on inliers; None if degenerate."""
    n = len(points)
    best_inliers = None
    best_count = 0
    for _ in range(iterations):
        idx = rng.choice(n, size=3, replace=False)
        a, b, c = points[idx]
        normal = np.cross(b - a, c - a)
        norm = np.linalg.norm(normal)
        if norm < 1e-12:
            continue
        normal = normal / norm
        dist = np.abs((points - a) @ normal)
        inliers = dist < threshold
        count = int(inliers.sum())
        if count > best_count:
            best_count = count
            best_inliers = inliers
    if best_inliers is None:
        return None
    try:
        return _fit_plane_lsq(points[best_inliers])
    except ValueError:
        return None


def _mask_grid_pixels(mask: BinaryMask, stride: int) -> np.ndarray:
    sub = np.zeros_like(mask.bits)
    sub[::stride, ::stride] = mask.bits[::stride, ::stride]
    ys, xs = np.nonzero(sub)
    return np.stack([xs, ys], axis=1).astype(np.float64)


def lift_mask(
    ref_mask: BinaryMask,
    ref_frame: RegisteredFrame,
    intr: CameraIntrinsics,
    points: list[SparsePoint],
    config: PropagationConfig = PropagationConfig(),
) -> LiftedObject:
    """Fix a reference-frame mask at a 3D location.

    Support points are the sparse points that project inside the mask
    with positive depth and stored error below ``max_point_error``.  With
    at least ``min_points`` of them a plane is fitted (RANSAC + least
    squares); with fewer, depth is held constant at their median; with
    none, the lift fails.
    """
    if ref_mask.is_empty:
        raise LiftError(ref_mask.object_id, "reference mask is empty")
    positions = np.array([p.position for p in points]).reshape(-1, 3)
    errors = np.array([p.error for p in points]) if points else np.zeros(0)
    if len(positions) == 0:
        raise LiftError(ref_mask.object_id, "no sparse points available")
    pixels, depths = project_points(positions, ref_frame.pose, intr)
    xs = np.round(pixels[:, 0]).astype(int)
    ys = np.round(pixels[:, 1]).astype(int)
    in_frame = (
        (depths > 0)
        & (xs >= 0)
        & (xs < ref_mask.width)
        & (ys >= 0)
        & (ys < ref_mask.height)
    )
    selected = in_frame.copy()
    selected[in_frame] &= ref_mask.bits[ys[in_frame], xs[in_frame]]
    selected &= errors < config.max_point_error
    support = positions[selected]
    if len(support) == 0:
        raise LiftError(ref_mask.object_id, "no sparse points project inside the mask")

    median_depth = float(np.median(depths[selected]))
    surface: PlaneSurface | None = None
    if len(support) >= config.min_points:
        rng = np.random.default_rng(config.seed)
        threshold = config.plane_inlier_fraction * median_depth
        surface = _fit_plane_ransac(support, threshold, config.ransac_iterations, rng)

    grid = _mask_grid_pixels(ref_mask, config.sample_stride)
    center, dirs = pixel_rays(grid, ref_frame.pose, intr)
    if surface is not None:
        denom = dirs @ surface.normal
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (surface.offset - np.dot(surface.normal, center)) / denom
        valid = (s > 1e-9) & np.isfinite(s)
        samples = center + s[valid, None] * dirs[valid]
        if len(samples) == 0:
            raise LiftError(ref_mask.object_id, "fitted plane is behind the camera")
        return LiftedObject(
            object_id=ref_mask.object_id,
            anchor_points=support,
            mask_samples=samples,
            surface=surface,
        )
    samples = center + median_depth * dirs
    return LiftedObject(
        object_id=ref_mask.object_id,
        anchor_points=support,
        mask_samples=samples,
        constant_depth=median_depth,
    )


def _disk(radius: int) -> np.ndarray:
    span = np.arange(-radius, radius + 1)
    dx, dy = np.meshgrid(span, span)
    return dx * dx + dy * dy <= radius * radius


def reproject_object(
    obj: LiftedObject,
    frame: RegisteredFrame,
    intr: CameraIntrinsics,
    config: PropagationConfig = PropagationConfig(),
) -> tuple[BinaryMask, bool]:
    """Render the lifted object's mask in another frame.

    Every lifted sample is projected; in-frame, positive-depth hits are
    splatted as disks and closed once with a 3x3 element.  The object
    counts as visible when at least ``visibility_min`` of its samples land
    in frame; otherwise an empty mask and visible=False are returned.
    """
    width, height = intr.width, intr.height
    pixels, depths = project_points(obj.mask_samples, frame.pose, intr)
    # Behind-camera rows carry NaN pixels and near-zero depths can produce
    # huge coordinates; squash both to a safely out-of-range finite value.
    safe = np.clip(np.nan_to_num(pixels, nan=-1.0, posinf=-1.0, neginf=-1.0), -1.0, 1e9)
    xs = np.round(safe[:, 0]).astype(np.int64)
    ys = np.round(safe[:, 1]).astype(np.int64)
    valid = (depths > 0) & (xs >= 0) & (xs < width) & (ys >= 0) & (ys < height)
    fraction = valid.sum() / len(obj.mask_samples)
    if fraction < config.visibility_min:
        return BinaryMask.empty(width, height, obj.object_id), False
    canvas = np.zeros((height, width), dtype=bool)
    canvas[ys[valid], xs[valid]] = True
    radius = config.effective_splat_radius
    if radius > 0:
        canvas = ndimage.binary_dilation(canvas, structure=_disk(radius))
    canvas = ndimage.binary_closing(canvas, structure=np.ones((3, 3), dtype=bool))
    return BinaryMask(canvas, obj.object_id), True


# ---------------------------------------------------------------------------
# Mask raster I/O: single-channel images, nonzero = foreground.  Frames
# with several objects are stored either as one file per object id or as
# a paletted image whose palette index i > 0 maps to object id i.


def read_mask(path: str | Path, object_id=None) -> BinaryMask:
    from PIL import Image

    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"))
    return BinaryMask(arr != 0, object_id)


def write_mask(mask: BinaryMask, path: str | Path) -> Path:
    from PIL import Image

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(mask.bits.astype(np.uint8) * 255, mode="L").save(path)
    return path


def read_palette_masks(path: str | Path) -> dict[int, BinaryMask]:
    """Read a paletted (index) image; index i > 0 becomes object id i."""
    from PIL import Image

    with Image.open(path) as img:
        if img.mode != "P":
            img = img.convert("P")
        arr = np.asarray(img)
    return {
        int(i): BinaryMask(arr == i, int(i)) for i in np.unique(arr) if i != 0
    }


def write_palette_masks(masks: dict[int, BinaryMask], path: str | Path) -> Path:
    """Write objects into one paletted image; higher ids win where they overlap."""
    from PIL import Image

    if not masks:
        raise ValueError("need at least one mask")
    ids = sorted(masks)
    if any(i <= 0 or i > 255 for i in ids):
        raise ValueError("palette object ids must be in 1..255")
    first = masks[ids[0]]
    canvas = np.zeros((first.height, first.width), dtype=np.uint8)
    for i in ids:
        canvas[masks[i].bits] = i
    img = Image.fromarray(canvas, mode="P")
    palette = [0, 0, 0]
    rng = np.random.default_rng(7)
    for _ in range(255):
        palette.extend(int(v) for v in rng.integers(64, 256, size=3))
    img.putpalette(palette)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    img.save(path)
    return path


def write_overlay(
    image: np.ndarray, masks: dict[int, BinaryMask], path: str | Path, alpha: float = 0.45
) -> Path:
    """Blend colored masks over a grayscale image for visual inspection."""
    from PIL import Image

    img = np.asarray(image, dtype=np.float64)
    if img.dtype == np.uint8 or img.max() > 1.5:
        img = img / 255.0
    rgb = np.stack([img] * 3, axis=-1)
    rng = np.random.default_rng(7)
    for _id in sorted(masks):
        color = rng.uniform(0.25, 1.0, size=3)
        m = masks[_id].bits
        rgb[m] = (1 - alpha) * rgb[m] + alpha * color
    out = np.clip(np.round(rgb * 255), 0, 255).astype(np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(out, mode="RGB").save(path)
    return path
