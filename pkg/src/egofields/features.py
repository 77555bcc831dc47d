"""Keypoint detection, description, and matching for overlap estimation.

The reference backend is a difference-of-Gaussians scale-space detector
with gradient-histogram descriptors (OpenCV's SIFT).  Detection is
deterministic for identical input and config.  A backend protocol lets
precomputed features be ingested from files instead of detected, so the
rest of the pipeline never depends on a specific detector.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

__all__ = [
    "Keypoint",
    "FeatureSet",
    "MatchSet",
    "FeatureConfig",
    "FeatureBackend",
    "SiftBackend",
    "detect_and_describe",
    "match",
    "write_feature_file",
    "read_feature_file",
]

MIN_IMAGE_SIDE = 32


@dataclass(frozen=True)
class Keypoint:
    """A detected interest point (pixel coordinates, detection scale, orientation)."""

    x: float
    y: float
    scale: float
    orientation: float

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class FeatureSet:
    """Keypoints plus one unit-L2-normalized descriptor row per keypoint."""

    keypoints: tuple[Keypoint, ...]
    descriptors: np.ndarray

    def __post_init__(self):
        desc = np.asarray(self.descriptors, dtype=np.float32)
        if desc.ndim != 2:
            desc = desc.reshape(len(self.keypoints), -1)
        if len(self.keypoints) != desc.shape[0]:
            raise ValueError(
                f"{len(self.keypoints)} keypoints but {desc.shape[0]} descriptors"
            )
        if desc.shape[0] > 0:
            norms = np.linalg.norm(desc, axis=1)
            if not np.allclose(norms, 1.0, atol=1e-6):
                raise ValueError("descriptors must be unit L2-normalized")
        desc.setflags(write=False)
        object.__setattr__(self, "keypoints", tuple(self.keypoints))
        object.__setattr__(self, "descriptors", desc)

    def __len__(self) -> int:
        return len(self.keypoints)

    def coordinates(self) -> np.ndarray:
        """(N,2) array of keypoint pixel coordinates."""
        return np.array([[k.x, k.y] for k in self.keypoints], dtype=np.float64).reshape(-1, 2)

    @classmethod
    def empty(cls, descriptor_dim: int = 128) -> "FeatureSet":
        return cls((), np.zeros((0, descriptor_dim), dtype=np.float32))


@dataclass(frozen=True)
class MatchSet:
    """Putative matches from set A to set B.

    Each pair is (index into A, index into B, descriptor distance); every
    A index appears at most once.
    """

    pairs: tuple[tuple[int, int, float], ...]
    ratio_threshold: float

    def __post_init__(self):
        a_indices = [p[0] for p in self.pairs]
        if len(set(a_indices)) != len(a_indices):
            raise ValueError("each A index may appear at most once")
        object.__setattr__(
            self, "pairs", tuple((int(i), int(j), float(d)) for i, j, d in self.pairs)
        )

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class FeatureConfig:
    """Detection settings.

    ``max_features`` caps the keypoint count, keeping the strongest
    responses.  Images are expected at the working resolution already
    (resizing is the caller's job).
    """

    max_features: int = 2000
    contrast_threshold: float = 0.04
    edge_threshold: float = 10.0
    sigma: float = 1.6


class FeatureBackend(Protocol):
    """Anything that can produce a FeatureSet for a grayscale image."""

    def detect_and_describe(self, image: np.ndarray, config: FeatureConfig) -> FeatureSet: ...


def _to_uint8_gray(image: np.ndarray) -> np.ndarray:
    img = np.asarray(image)
    if img.ndim == 3:
        # Rec. 601 luma; detection only needs consistent intensities.
        img = img[..., 0] * 0.299 + img[..., 1] * 0.587 + img[..., 2] * 0.114
    if img.dtype == np.uint8:
        return img
    return np.clip(np.round(img.astype(np.float64) * 255.0), 0, 255).astype(np.uint8)


class SiftBackend:
    """Difference-of-Gaussians detector + gradient-histogram descriptors (OpenCV)."""

    def detect_and_describe(self, image: np.ndarray, config: FeatureConfig) -> FeatureSet:
        import cv2

        gray = _to_uint8_gray(image)
        sift = cv2.SIFT_create(
            nfeatures=config.max_features,
            contrastThreshold=config.contrast_threshold,
            edgeThreshold=config.edge_threshold,
            sigma=config.sigma,
        )
        kps, desc = sift.detectAndCompute(gray, None)
        if not kps:
            return FeatureSet.empty()
        h, w = gray.shape
        keep = [
            (k, d)
            for k, d in zip(kps, desc)
            if 0 <= k.pt[0] < w and 0 <= k.pt[1] < h and k.size > 0
        ]
        if not keep:
            return FeatureSet.empty()
        keypoints = tuple(
            Keypoint(
                x=float(k.pt[0]),
                y=float(k.pt[1]),
                scale=float(k.size),
                orientation=float(np.deg2rad(k.angle)),
            )
            for k, _ in keep
        )
        descriptors = np.stack([d for _, d in keep]).astype(np.float32)
        norms = np.linalg.norm(descriptors, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return FeatureSet(keypoints, descriptors / norms)


_DEFAULT_BACKEND = SiftBackend()


def detect_and_describe(
    image: np.ndarray,
    config: FeatureConfig = FeatureConfig(),
    backend: FeatureBackend | None = None,
) -> FeatureSet:
    """Detect scale-covariant keypoints with rotation-normalized descriptors.

    Deterministic for identical input and config.  A structureless
    (constant) image yields an empty set rather than an error.
    """
    img = np.asarray(image)
    h, w = img.shape[:2]
    if h < MIN_IMAGE_SIDE or w < MIN_IMAGE_SIDE:
        raise ValueError(f"image must be at least {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}, got {w}x{h}")
    if backend is None:
        backend = _DEFAULT_BACKEND
    return backend.detect_and_describe(img, config)


def match(a: FeatureSet, b: FeatureSet, ratio: float = 0.8, mutual: bool = False) -> MatchSet:
    """Lowe-ratio nearest-neighbor matching from A to B.

    For each descriptor in A the nearest neighbor in B is kept iff
    dist(1st) / dist(2nd) < ratio.  When the second-best distance equals
    the best (including both zero), the match is rejected for any
    ratio <= 1.  With ``mutual=True`` the pair must also be mutual nearest
    neighbors and pass the ratio test in both directions, which makes
    (i, j) in match(a, b) equivalent to (j, i) in match(b, a).

    Either set having fewer than 2 descriptors yields an empty MatchSet.
    """
    if not 0 < ratio <= 1:
        raise ValueError(f"ratio must be in (0, 1], got {ratio}")
    if len(a) < 2 or len(b) < 2:
        return MatchSet((), ratio)
    # Squared distance via the norm identity, in float64 so identical
    # descriptors come out at (numerically) zero distance.
    da = a.descriptors.astype(np.float64)
    db = b.descriptors.astype(np.float64)
    na = np.einsum("ij,ij->i", da, da)
    nb = np.einsum("ij,ij->i", db, db)
    d2 = np.maximum(na[:, None] + nb[None, :] - 2.0 * (da @ db.T), 0.0)
    order = np.argsort(d2, axis=1, kind="stable")
    best = order[:, 0]
    rows = np.arange(len(a))
    d_best = np.sqrt(d2[rows, best])
    d_second = np.sqrt(d2[rows, order[:, 1]])
    accepted = d_best < ratio * d_second
    if mutual:
        cols = np.arange(len(b))
        order_b = np.argsort(d2, axis=0, kind="stable")
        best_for_b = order_b[0]
        ratio_b_ok = np.sqrt(d2[best_for_b, cols]) < ratio * np.sqrt(d2[order_b[1], cols])
        accepted &= (best_for_b[best] == rows) & ratio_b_ok[best]
    pairs = tuple(
        (int(i), int(best[i]), float(d_best[i])) for i in np.flatnonzero(accepted)
    )
    return MatchSet(pairs, ratio)


# Feature-file format: one binary record per frame, little-endian.
#   uint32 count
#   count * 4 float32: x, y, scale, orientation per keypoint
#   count * dim float32: descriptor matrix, row-major
# The descriptor dimension is implied by the record length.


def write_feature_file(path: str | Path, features: FeatureSet) -> None:
    path = Path(path)
    n = len(features)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", n))
        if n:
            kp = np.array(
                [[k.x, k.y, k.scale, k.orientation] for k in features.keypoints],
                dtype="<f4",
            )
            fh.write(kp.tobytes())
            fh.write(features.descriptors.astype("<f4").tobytes())


def read_feature_file(path: str | Path) -> FeatureSet:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 4:
        raise ValueError(f"{path}: truncated feature file")
    (n,) = struct.unpack_from("<I", raw, 0)
    if n == 0:
        return FeatureSet.empty()
    kp_bytes = 16 * n
    body = len(raw) - 4 - kp_bytes
    if body < 0 or body % (4 * n) != 0:
        raise ValueError(f"{path}: record length inconsistent with count {n}")
    dim = body // (4 * n)
    kp = np.frombuffer(raw, dtype="<f4", count=4 * n, offset=4).reshape(n, 4)
    desc = np.frombuffer(raw, dtype="<f4", count=n * dim, offset=4 + kp_bytes).reshape(n, dim)
    keypoints = tuple(
        Keypoint(x=float(r[0]), y=float(r[1]), scale=float(r[2]), orientation=float(r[3]))
        for r in kp
    )
    return FeatureSet(keypoints, desc.copy())


class FileFeatureBackend:
    """Backend serving precomputed features from files instead of detecting.

    Paths are resolved by the caller-provided mapping from image identity
    to feature file; the image content is ignored.
    """

    def __init__(self, path_for_image):
        self._path_for_image = path_for_image

    def detect_and_describe(self, image: np.ndarray, config: FeatureConfig) -> FeatureSet:
        return read_feature_file(self._path_for_image(image))
