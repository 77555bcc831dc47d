"""Evaluation measures for the three benchmarks.

PSNR (optionally restricted to a region, with foreground/background
splits), pixel-ranking average precision, region similarity J, and
boundary F.  All metrics operate on plain numpy arrays or the package's
mask type; aggregation lives in :class:`MetricReport`.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .propagation import BinaryMask

__all__ = [
    "ScoreMap",
    "MetricRecord",
    "MetricReport",
    "psnr",
    "psnr_split",
    "average_precision",
    "mean_average_precision",
    "pooled_average_precision",
    "jaccard",
    "boundary_f",
    "jf_mean",
    "davis_boundary_tolerance",
]


@dataclass(frozen=True)
class ScoreMap:
    """Per-pixel foreground confidence in [0,1]."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"score map must be 2D, got shape {arr.shape}")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ValueError("score values must lie in [0,1]")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


def _as_float_image(image: np.ndarray) -> np.ndarray:
    """Images are evaluated on [0,1]; 8-bit inputs are divided by 255 first."""
    arr = np.asarray(image)
    if arr.dtype == np.uint8:
        return arr.astype(np.float64) / 255.0
    return arr.astype(np.float64)


def _as_bits(mask) -> np.ndarray:
    if isinstance(mask, BinaryMask):
        return mask.bits
    return np.asarray(mask, dtype=bool)


def psnr(pred: np.ndarray, gt: np.ndarray, region=None) -> float:
    """Peak signal-to-noise ratio in dB with peak value 1.0.

    The mean squared error pools all channels over the region (the whole
    image when ``region`` is None).  Identical inputs return +inf.
    """
    p = _as_float_image(pred)
    g = _as_float_image(gt)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {g.shape}")
    diff2 = (p - g) ** 2
    if region is not None:
        bits = _as_bits(region)
        if bits.shape != p.shape[:2]:
            raise ValueError(f"region shape {bits.shape} mismatches image {p.shape[:2]}")
        if not bits.any():
            raise ValueError("region is empty")
        diff2 = diff2[bits]
    mse = float(diff2.mean())
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def psnr_split(
    pred: np.ndarray, gt: np.ndarray, fg_mask
) -> tuple[float, float | None, float | None]:
    """(all, background, foreground) PSNR; empty regions yield None.

    Frames whose foreground is empty contribute no FG entry, and the
    report aggregation skips undefined entries.
    """
    bits = _as_bits(fg_mask)
    total = psnr(pred, gt)
    bg = psnr(pred, gt, ~bits) if not bits.all() else None
    fg = psnr(pred, gt, bits) if bits.any() else None
    return total, bg, fg


def average_precision(scores, gt) -> float:
    """Average precision of ranking pixels by score against a binary mask.

    Pixels are sorted by descending score with ties broken by row-major
    pixel order (stable).  AP is the mean over positive pixels of the
    precision at their rank, i.e. sum of precision * (1/n_pos) at each
    positive.  Requires a non-empty ground truth.
    """
    vals = scores.values if isinstance(scores, ScoreMap) else np.asarray(scores, dtype=np.float64)
    bits = _as_bits(gt)
    if vals.shape != bits.shape:
        raise ValueError(f"shape mismatch: {vals.shape} vs {bits.shape}")
    flat_scores = vals.ravel()
    flat_gt = bits.ravel()
    n_pos = int(flat_gt.sum())
    if n_pos == 0:
        raise ValueError("ground truth is empty; skip this frame")
    order = np.argsort(-flat_scores, kind="stable")
    hits = flat_gt[order]
    cum_hits = np.cumsum(hits)
    ranks = np.arange(1, len(hits) + 1)
    precision_at_pos = cum_hits[hits] / ranks[hits]
    return float(precision_at_pos.sum() / n_pos)


def mean_average_precision(frames) -> tuple[list[float | None], float]:
    """Per-frame AP then the mean over frames with non-empty ground truth.

    ``frames`` yields (scores, gt) pairs.  Frames with empty ground truth
    are recorded as None and excluded from the mean.
    """
    per_frame: list[float | None] = []
    for scores, gt in frames:
        bits = _as_bits(gt)
        per_frame.append(average_precision(scores, gt) if bits.any() else None)
    defined = [v for v in per_frame if v is not None]
    if not defined:
        raise ValueError("every frame has empty ground truth")
    return per_frame, float(np.mean(defined))


def pooled_average_precision(frames) -> float:
    """AP over all pixels of all frames pooled into one ranking."""
    all_scores = []
    all_gt = []
    for scores, gt in frames:
        vals = scores.values if isinstance(scores, ScoreMap) else np.asarray(scores)
        all_scores.append(np.asarray(vals, dtype=np.float64).ravel())
        all_gt.append(_as_bits(gt).ravel())
    return average_precision(
        np.concatenate(all_scores)[None, :], np.concatenate(all_gt)[None, :]
    )


def jaccard(pred, gt) -> float:
    """Region similarity |pred & gt| / |pred | gt|; both empty counts as 1."""
    p = _as_bits(pred)
    g = _as_bits(gt)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {g.shape}")
    union = np.logical_or(p, g).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(p, g).sum() / union)


_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def _boundary(bits: np.ndarray) -> np.ndarray:
    """1-px boundary: foreground pixels with a 4-neighbor (or border) outside."""
    if not bits.any():
        return np.zeros_like(bits)
    interior = ndimage.binary_erosion(bits, structure=_CROSS, border_value=0)
    return bits & ~interior


def davis_boundary_tolerance(width: int, height: int, fraction: float = 0.008) -> float:
    """Default matching tolerance: a fraction of the image diagonal."""
    return fraction * math.hypot(width, height)


def boundary_f(pred, gt, tolerance: float | None = None) -> float:
    """Contour accuracy F: harmonic mean of boundary precision and recall.

    Boundaries are matched within a Euclidean distance ``tolerance``
    (equivalently, dilation by a disk of that radius).  Defaults to 0.8%
    of the image diagonal.  Two empty boundaries agree perfectly (1.0); an
    empty boundary against a non-empty one scores 0.
    """
    p = _as_bits(pred)
    g = _as_bits(gt)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {g.shape}")
    if tolerance is None:
        tolerance = davis_boundary_tolerance(p.shape[1], p.shape[0])
    pb = _boundary(p)
    gb = _boundary(g)
    n_pb = int(pb.sum())
    n_gb = int(gb.sum())
    if n_pb == 0 and n_gb == 0:
        return 1.0
    if n_pb == 0 or n_gb == 0:
        return 0.0
    dist_to_g = ndimage.distance_transform_edt(~gb)
    dist_to_p = ndimage.distance_transform_edt(~pb)
    precision = float((dist_to_g[pb] <= tolerance).sum() / n_pb)
    recall = float((dist_to_p[gb] <= tolerance).sum() / n_gb)
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def jf_mean(j: float, f: float) -> float:
    """The benchmark's combined score: arithmetic mean of J and F."""
    return 0.5 * (j + f)


@dataclass(frozen=True)
class MetricRecord:
    frame: str
    metric: str
    value: float | None


@dataclass
class MetricReport:
    """Per-frame metric records plus aggregate means.

    Aggregates average only over frames where a metric is defined
    (value is not None and finite values dominate; +inf PSNR entries are
    kept as-is and make the aggregate +inf only if all entries are).
    """

    records: list[MetricRecord] = field(default_factory=list)

    def add(self, frame: str, metric: str, value: float | None) -> None:
        self.records.append(MetricRecord(frame, metric, value))

    def values(self, metric: str) -> list[float]:
        return [r.value for r in self.records if r.metric == metric and r.value is not None]

    def aggregates(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for metric in sorted({r.metric for r in self.records}):
            vals = self.values(metric)
            if not vals:
                continue
            finite = [v for v in vals if math.isfinite(v)]
            out[metric] = float(np.mean(finite)) if finite else math.inf
        return out

    def grouped_aggregates(self, groups: dict[str, str]) -> dict[str, dict[str, float]]:
        """Aggregate per group label (e.g. difficulty tier) then per metric."""
        out: dict[str, dict[str, float]] = {}
        labels = sorted(set(groups.values()))
        for label in labels:
            sub = MetricReport(
                [r for r in self.records if groups.get(r.frame) == label]
            )
            if sub.records:
                out[label] = sub.aggregates()
        return out

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["frame", "metric", "value"])
            for r in self.records:
                writer.writerow([r.frame, r.metric, "" if r.value is None else repr(r.value)])
        return path

    def write_json(self, path: str | Path, groups: dict[str, str] | None = None) -> Path:
        data: dict = {"aggregates": self.aggregates()}
        if groups:
            data["by_group"] = self.grouped_aggregates(groups)
        data["frames"] = [
            {"frame": r.frame, "metric": r.metric, "value": r.value} for r in self.records
        ]
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(_json_safe(data), indent=1))
        return path


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    return obj
