"""Greedy window-based frame subsampling for reconstruction preprocessing.

Long egocentric videos dwell at hot-spots (hob, sink) and move fast in
between, so uniform downsampling wastes frames on redundant viewpoints
and starves the transitions.  The filter walks the video once: starting
from an anchor frame it extends a window while each candidate keeps
symmetric visual overlap >= threshold with the anchor, keeps only the
anchor of each window, and starts the next window at the first frame
that broke the run.  Frames that fail to match the anchor (blur, cuts)
close the window rather than silently extending it.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np

from .features import FeatureConfig, FeatureSet, detect_and_describe, match
from .overlap import EstimationError, RansacConfig, estimate_homography, symmetric_overlap

logger = logging.getLogger(__name__)

__all__ = [
    "FilterConfig",
    "FilterResult",
    "PairScore",
    "FrameSource",
    "ArrayFrameSource",
    "ImageDirectorySource",
    "FrameManifestSource",
    "FrameLoadError",
    "filter_frames",
    "compare_uniform",
    "greedy_windows",
]

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".ppm", ".pgm", ".tif", ".tiff")


class FrameLoadError(RuntimeError):
    """A frame could not be decoded; carries the frame index."""

    def __init__(self, index: int, cause: Exception):
        super().__init__(f"frame {index} unreadable: {cause}")
        self.index = index


class FrameSource(Protocol):
    """Ordered, random-access source of video frames."""

    def __len__(self) -> int: ...

    def name(self, index: int) -> str: ...

    def timestamp(self, index: int) -> float: ...

    def load(self, index: int) -> np.ndarray: ...


class ArrayFrameSource:
    """In-memory frame source; useful for synthetic sequences and tests."""

    def __init__(self, frames: Sequence[np.ndarray], fps: float = 10.0, names=None):
        self._frames = list(frames)
        self._fps = fps
        self._names = list(names) if names is not None else [
            f"frame_{i:010d}.png" for i in range(len(self._frames))
        ]

    def __len__(self) -> int:
        return len(self._frames)

    def name(self, index: int) -> str:
        return self._names[index]

    def timestamp(self, index: int) -> float:
        return index / self._fps

    def load(self, index: int) -> np.ndarray:
        return self._frames[index]


class ImageDirectorySource:
    """Frames from a directory of raster images named with zero-padded indices.

    Files are taken in sorted name order; timestamps come from the frame
    position at the given fps.
    """

    def __init__(self, root: str | Path, fps: float = 10.0):
        self.root = Path(root)
        self._paths = sorted(
            p for p in self.root.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES
        )
        if not self._paths:
            raise FileNotFoundError(f"no raster images in {self.root}")
        self._fps = fps

    def __len__(self) -> int:
        return len(self._paths)

    def name(self, index: int) -> str:
        return self._paths[index].name

    def path(self, index: int) -> Path:
        return self._paths[index]

    def timestamp(self, index: int) -> float:
        return index / self._fps

    def load(self, index: int) -> np.ndarray:
        from PIL import Image

        with Image.open(self._paths[index]) as img:
            return np.asarray(img.convert("L"), dtype=np.uint8)


class FrameManifestSource:
    """Frames listed in a manifest file: one ``path timestamp`` pair per line.

    Paths are resolved relative to the manifest's directory; blank lines
    and ``#`` comments are skipped.
    """

    def __init__(self, manifest: str | Path):
        manifest = Path(manifest)
        self.root = manifest.parent
        self._paths: list[Path] = []
        self._timestamps: list[float] = []
        for lineno, line in enumerate(manifest.read_text().splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{manifest}:{lineno}: expected 'path timestamp'")
            self._paths.append(self.root / parts[0])
            self._timestamps.append(float(parts[1]))
        if not self._paths:
            raise ValueError(f"{manifest}: empty manifest")

    def __len__(self) -> int:
        return len(self._paths)

    def name(self, index: int) -> str:
        return self._paths[index].name

    def path(self, index: int) -> Path:
        return self._paths[index]

    def timestamp(self, index: int) -> float:
        return self._timestamps[index]

    def load(self, index: int) -> np.ndarray:
        from PIL import Image

        with Image.open(self._paths[index]) as img:
            return np.asarray(img.convert("L"), dtype=np.uint8)


@dataclass(frozen=True)
class FilterConfig:
    """Settings for the greedy window filter.

    ``overlap_threshold`` is the first-pass window criterion; the pipeline
    retries rejected videos once at ``restart_threshold``.  A pair with
    fewer than ``min_matches`` ratio-test survivors is scored as overlap 0
    so degraded frames close windows instead of extending them.
    """

    overlap_threshold: float = 0.9
    restart_threshold: float = 0.95
    min_matches: int = 20
    max_window: int = 3000
    ransac: RansacConfig = field(default_factory=RansacConfig)
    frame_stride: int = 1
    ratio: float = 0.8
    mutual: bool = False
    features: FeatureConfig = field(default_factory=FeatureConfig)
    skip_unreadable: bool = False

    def __post_init__(self):
        if not 0 < self.overlap_threshold <= self.restart_threshold <= 1:
            raise ValueError(
                "thresholds must satisfy 0 < overlap_threshold <= restart_threshold <= 1"
            )
        if self.frame_stride < 1:
            raise ValueError("frame_stride must be >= 1")
        if self.max_window < 1:
            raise ValueError("max_window must be >= 1")


@dataclass(frozen=True)
class PairScore:
    """Overlap measurement between an anchor frame i and a candidate j."""

    i: int
    j: int
    r_tilde: float
    inliers: int


@dataclass
class FilterResult:
    """Kept frames and per-window bookkeeping from one filtering pass.

    ``windows`` holds (anchor index, length) pairs that partition
    [0, total); every kept frame is the first frame of its window.
    """

    kept: list[int]
    windows: list[tuple[int, int]]
    pair_log: list[PairScore]
    total: int
    threshold: float
    skipped: list[int] = field(default_factory=list)

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.kept, self.kept[1:])):
            raise ValueError("kept indices must be strictly increasing")
        cursor = 0
        anchors = set()
        for anchor, length in self.windows:
            if anchor != cursor or length < 1:
                raise ValueError("windows must be contiguous and cover the input")
            anchors.add(anchor)
            cursor += length
        if self.windows and cursor != self.total:
            raise ValueError(f"windows cover {cursor} frames, expected {self.total}")
        if self.windows and not set(self.kept) <= anchors:
            raise ValueError("every kept frame must be the first frame of its window")

    @property
    def discard_rate(self) -> float:
        return 1.0 - len(self.kept) / self.total


def greedy_windows(
    n: int,
    overlap_fn: Callable[[int, int], float],
    threshold: float,
    max_window: int = 3000,
) -> tuple[list[int], list[tuple[int, int]]]:
    """Core greedy pass over ``n`` frames using an arbitrary overlap oracle.

    ``overlap_fn(i, j)`` must return the symmetric overlap between frames
    i and j.  Windows extend while overlap to the anchor stays >= the
    threshold (measured anchor-vs-candidate directly, not chained), and
    close at the first failure or at ``max_window`` frames.
    """
    if n < 1:
        raise ValueError("need at least one frame")
    kept: list[int] = []
    windows: list[tuple[int, int]] = []
    anchor = 0
    while anchor < n:
        length = 1
        while anchor + length < n and length < max_window:
            if overlap_fn(anchor, anchor + length) >= threshold:
                length += 1
            else:
                break
        kept.append(anchor)
        windows.append((anchor, length))
        anchor += length
    return kept, windows


class _FeatureCache:
    """Per-run feature store with optional concurrent prefetch.

    Extraction is pure per frame, so prefetching ahead of the scan with a
    thread pool changes nothing but wall time.
    """

    def __init__(self, source: FrameSource, config: FilterConfig, threads: int):
        self._source = source
        self._config = config
        self._features: dict[int, FeatureSet | None] = {}
        self._futures: dict[int, object] = {}
        self._pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
        self._horizon = 2 * threads
        self.frame_shape: tuple[int, int] | None = None  # (width, height)

    def _extract(self, index: int) -> FeatureSet | None:
        try:
            image = self._source.load(index)
        except Exception as exc:  # noqa: BLE001 - decoding errors vary by backend
            if self._config.skip_unreadable:
                logger.warning("skipping unreadable frame %d: %s", index, exc)
                return None
            raise FrameLoadError(index, exc) from exc
        if self.frame_shape is None:
            self.frame_shape = (int(image.shape[1]), int(image.shape[0]))
        return detect_and_describe(image, self._config.features)

    def prefetch(self, indices: Sequence[int]) -> None:
        if self._pool is None:
            return
        for idx in indices[: self._horizon]:
            if idx not in self._features and idx not in self._futures:
                self._futures[idx] = self._pool.submit(self._extract, idx)

    def get(self, index: int) -> FeatureSet | None:
        if index not in self._features:
            future = self._futures.pop(index, None)
            self._features[index] = future.result() if future is not None else self._extract(index)
        return self._features[index]

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=False, cancel_futures=True)


def _pair_rng(base_seed: int, i: int, j: int) -> np.random.Generator:
    """Deterministic per-pair RNG so results do not depend on scan order."""
    return np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=(i, j)))


def filter_frames(
    frames: FrameSource | Sequence[np.ndarray],
    config: FilterConfig = FilterConfig(),
    threshold: float | None = None,
    threads: int = 1,
) -> FilterResult:
    """Run the greedy window filter over a frame source.

    ``threshold`` overrides ``config.overlap_threshold`` (the restart pass
    uses this to raise it without rebuilding the config).  Features are
    extracted once per frame and cached; the scan itself is sequential in
    anchors.  Deterministic for fixed input, config, and seed, regardless
    of ``threads``.
    """
    if not hasattr(frames, "load"):
        frames = ArrayFrameSource(frames)
    n_total = len(frames)
    if n_total < 1:
        raise ValueError("need at least one frame")
    thr = config.overlap_threshold if threshold is None else threshold

    candidates = list(range(0, n_total, config.frame_stride))
    cache = _FeatureCache(frames, config, threads)
    pair_log: list[PairScore] = []
    skipped: list[int] = []

    def pair_overlap(ci: int, cj: int) -> float:
        i, j = candidates[ci], candidates[cj]
        fa = cache.get(i)
        if fa is None:
            skipped.append(i)
            return -1.0  # unreadable anchor cannot anchor anything; break the window
        fb = cache.get(j)
        if fb is None:
            skipped.append(j)
            return 1.0  # absorbed into the current window, logged as skipped
        cache.prefetch(candidates[cj + 1 :])
        matches = match(fa, fb, ratio=config.ratio, mutual=config.mutual)
        if len(matches) < config.min_matches:
            pair_log.append(PairScore(i, j, 0.0, 0))
            return 0.0
        try:
            hom, inliers = estimate_homography(
                matches,
                fa.keypoints,
                fb.keypoints,
                config.ransac,
                rng=_pair_rng(config.ransac.seed, i, j),
            )
        except EstimationError:
            pair_log.append(PairScore(i, j, 0.0, 0))
            return 0.0
        width, height = cache.frame_shape
        r = symmetric_overlap(hom, width, height)
        pair_log.append(PairScore(i, j, r, int(inliers.sum())))
        return r

    try:
        kept_pos, _ = greedy_windows(len(candidates), pair_overlap, thr, config.max_window)
        anchors = [candidates[p] for p in kept_pos]
        # An unreadable frame can end up as a (possibly trailing) anchor;
        # in skip mode it is dropped from the kept list but its window stays.
        kept = [a for a in anchors if cache.get(a) is not None]
    finally:
        cache.close()

    if not kept:
        raise FrameLoadError(anchors[0], RuntimeError("no readable frames"))
    # Report windows in original frame numbering so they partition [0, n).
    boundaries = anchors + [n_total]
    windows = [(a, b - a) for a, b in zip(boundaries, boundaries[1:])]
    return FilterResult(
        kept=kept,
        windows=windows,
        pair_log=pair_log,
        total=n_total,
        threshold=thr,
        skipped=sorted(set(skipped)),
    )


def compare_uniform(total: int, kept_count: int) -> FilterResult:
    """Uniform baseline selector: every ceil(total / kept_count)-th frame.

    Used only by the filtering-vs-uniform study harness; it mirrors the
    FilterResult shape so downstream reporting is shared.
    """
    if kept_count < 1:
        raise ValueError("kept_count must be >= 1")
    if total < 1:
        raise ValueError("total must be >= 1")
    stride = -(-total // kept_count)
    kept = list(range(0, total, stride))
    boundaries = kept + [total]
    windows = [(a, b - a) for a, b in zip(boundaries, boundaries[1:])]
    return FilterResult(
        kept=kept, windows=windows, pair_log=[], total=total, threshold=0.0
    )
