"""Command-line frontend over the pipeline modules.

Every subcommand is a thin wrapper over one library operation, so CLI
outputs are byte-identical to direct library calls with the same config
and seed.  Option precedence is flags > config file > built-in defaults.
Output directories receive exactly one ``run_manifest.json`` recording
the command, the resolved options, input content hashes, and tool
versions; re-invoking a completed run with unchanged inputs skips it.

Exit codes: 0 success, 1 structured error (JSON on stderr), 3 for a
``verify`` run whose reconstruction was rejected.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .benchmark import (
    SplitConfig,
    filtering_study,
    generate_split,
    read_segments_csv,
    reconstruction_stats,
)
from .filtering import (
    FilterConfig,
    FrameManifestSource,
    ImageDirectorySource,
    compare_uniform,
    filter_frames,
)
from .geometry import RegisteredFrame, RigidPose
from .metrics import (
    MetricReport,
    average_precision,
    boundary_f,
    davis_boundary_tolerance,
    jaccard,
    jf_mean,
    pooled_average_precision,
    psnr,
    psnr_split,
)
from .overlap import RansacConfig
from .propagation import (
    BinaryMask,
    LiftError,
    PropagationConfig,
    fixed_in_2d,
    lift_mask,
    read_mask,
    reproject_object,
    write_mask,
    write_overlay,
)
from .recon_io import (
    OrchestrateConfig,
    SfmTool,
    VerifyConfig,
    orchestrate,
    read_colmap_text,
    read_epic_fields_json,
    verify,
    write_colmap_text,
    write_epic_fields_json,
)

SFM_CMD_ENV = "EGOFIELDS_SFM_CMD"
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_REJECTED = 3

DEFAULTS = {
    "seed": 0,
    "threads": os.cpu_count() or 1,
    "fps": 10.0,
    "overlap_threshold": 0.9,
    "restart_threshold": 0.95,
    "accept_threshold": 0.7,
    "min_matches": 20,
    "max_window": 3000,
    "ratio": 0.8,
    "max_features": 2000,
    "ransac_iterations": 2000,
    "inlier_threshold": 3.0,
    "confidence": 0.999,
    "sample_stride": 2,
    "splat_radius": None,
    "visibility_min": 0.2,
    "min_points": 10,
    "max_point_error": 2.0,
    "exclusion_window": 1.0,
    "easy_fraction": 0.30,
    "ooa_eval_rate": 0.08,
    "boundary_tolerance": None,
}


def _load_config_file(path: str | Path) -> dict:
    path = Path(path)
    if path.suffix.lower() == ".toml":
        try:
            import tomllib  # type: ignore[import-not-found]
        except ModuleNotFoundError:
            import tomli as tomllib
        return tomllib.loads(path.read_text())
    return json.loads(path.read_text())


class Options:
    """Resolved option values: flag > config file > default."""

    def __init__(self, args: argparse.Namespace):
        self._args = vars(args)
        self._file = _load_config_file(args.config) if getattr(args, "config", None) else {}

    def get(self, key: str):
        flag = self._args.get(key)
        if flag is not None:
            return flag
        if key in self._file:
            return self._file[key]
        return DEFAULTS.get(key)

    def resolved(self) -> dict:
        keys = set(DEFAULTS) | set(self._file)
        return {k: self.get(k) for k in sorted(keys)}

    def filter_config(self) -> FilterConfig:
        from .features import FeatureConfig

        return FilterConfig(
            overlap_threshold=self.get("overlap_threshold"),
            restart_threshold=self.get("restart_threshold"),
            min_matches=int(self.get("min_matches")),
            max_window=int(self.get("max_window")),
            ransac=RansacConfig(
                iterations=int(self.get("ransac_iterations")),
                inlier_threshold=self.get("inlier_threshold"),
                confidence=self.get("confidence"),
                seed=int(self.get("seed")),
            ),
            ratio=self.get("ratio"),
            features=FeatureConfig(max_features=int(self.get("max_features"))),
        )

    def propagation_config(self) -> PropagationConfig:
        splat = self.get("splat_radius")
        return PropagationConfig(
            max_point_error=self.get("max_point_error"),
            min_points=int(self.get("min_points")),
            sample_stride=int(self.get("sample_stride")),
            splat_radius=None if splat is None else int(splat),
            visibility_min=self.get("visibility_min"),
            seed=int(self.get("seed")),
        )


# ---------------------------------------------------------------------------
# Run manifests


def _hash_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _hash_input(path: str | Path) -> str:
    path = Path(path)
    if path.is_file():
        return _hash_file(path)
    if path.is_dir():
        digest = hashlib.sha256()
        for sub in sorted(p for p in path.rglob("*") if p.is_file()):
            digest.update(str(sub.relative_to(path)).encode())
            digest.update(_hash_file(sub).encode())
        return digest.hexdigest()
    raise FileNotFoundError(path)


def _manifest_payload(command: list[str], options: dict, inputs: dict[str, str]) -> dict:
    import cv2

    return {
        "command": command,
        "options": options,
        "inputs": {name: _hash_input(p) for name, p in inputs.items()},
        "versions": {
            "egofields": __version__,
            "numpy": np.__version__,
            "opencv": cv2.__version__,
        },
    }


def _write_manifest(out_dir: Path, payload: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = dict(payload)
    payload["finished"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    (out_dir / "run_manifest.json").write_text(json.dumps(payload, indent=1))


def _manifest_matches(out_dir: Path, payload: dict) -> bool:
    path = out_dir / "run_manifest.json"
    if not path.is_file():
        return False
    try:
        existing = json.loads(path.read_text())
    except json.JSONDecodeError:
        return False
    return all(existing.get(k) == payload[k] for k in ("command", "options", "inputs"))


# ---------------------------------------------------------------------------
# Shared helpers


def _frame_source(path: str | Path, fps: float):
    path = Path(path)
    if path.is_dir():
        return ImageDirectorySource(path, fps=fps)
    return FrameManifestSource(path)


def _load_model(path: str | Path, total: int | None = None):
    path = Path(path)
    if path.is_dir():
        return read_colmap_text(path, total_frame_count=total)
    return read_epic_fields_json(path, total_frame_count=total)


def _load_image(path: Path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as img:
        if img.mode in ("L", "I;16", "I"):
            return np.asarray(img.convert("L"), dtype=np.float64) / 255.0
        return np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0


def _matching_files(directory: Path) -> dict[str, Path]:
    exts = {".png", ".jpg", ".jpeg", ".bmp", ".npy"}
    return {p.stem: p for p in sorted(directory.iterdir()) if p.suffix.lower() in exts}


def _load_scores(path: Path) -> np.ndarray:
    if path.suffix.lower() == ".npy":
        arr = np.load(path)
        return np.asarray(arr, dtype=np.float64)
    return np.asarray(_load_image(path), dtype=np.float64)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_filter(args: argparse.Namespace, opts: Options) -> int:
    out_dir = Path(args.output)
    payload = _manifest_payload(
        ["filter", str(args.frames)],
        {**opts.resolved(), "threshold": args.threshold},
        {"frames": args.frames},
    )
    if _manifest_matches(out_dir, payload) and (out_dir / "kept.txt").is_file():
        print(f"{out_dir} is up to date; skipping")
        return EXIT_OK
    source = _frame_source(args.frames, opts.get("fps"))
    config = opts.filter_config()
    result = filter_frames(
        source, config, threshold=args.threshold, threads=int(opts.get("threads"))
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "kept.txt").write_text(
        "\n".join(source.name(i) for i in result.kept) + "\n"
    )
    with open(out_dir / "windows.csv", "w") as fh:
        fh.write("anchor,length\n")
        for anchor, length in result.windows:
            fh.write(f"{anchor},{length}\n")
    with open(out_dir / "pair_log.csv", "w") as fh:
        fh.write("i,j,r_tilde,inliers\n")
        for p in result.pair_log:
            fh.write(f"{p.i},{p.j},{p.r_tilde!r},{p.inliers}\n")
    _write_manifest(out_dir, payload)
    print(
        f"kept {len(result.kept)} of {result.total} frames "
        f"(discard rate {result.discard_rate:.3f}) at threshold {result.threshold}"
    )
    return EXIT_OK


def _tool_from_args(args: argparse.Namespace) -> SfmTool:
    if getattr(args, "tool", None):
        return SfmTool.from_config_file(args.tool)
    env = os.environ.get(SFM_CMD_ENV)
    if env:
        return SfmTool.from_config_file(env)
    raise SystemExit(
        f"no SfM tool configured: pass --tool FILE or set {SFM_CMD_ENV} to a config path"
    )


def cmd_reconstruct(args: argparse.Namespace, opts: Options) -> int:
    source = _frame_source(args.frames, opts.get("fps"))
    config = OrchestrateConfig(
        filter=opts.filter_config(),
        verify=VerifyConfig(accept_threshold=opts.get("accept_threshold")),
        tool=_tool_from_args(args),
        workdir=Path(args.output),
        threads=int(opts.get("threads")),
        fps=opts.get("fps"),
    )
    state, recon = orchestrate(source, config)
    registered = len(recon.frames) if recon is not None else 0
    print(
        f"{state.stage.value}: attempt {state.attempt}, "
        f"registration rate {state.registration_rate:.3f} ({registered} frames)"
    )
    payload = _manifest_payload(
        ["reconstruct", str(args.frames)], opts.resolved(), {"frames": args.frames}
    )
    _write_manifest(Path(args.output), payload)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, opts: Options) -> int:
    recon = _load_model(args.model, total=args.total)
    accepted, rate = verify(recon, VerifyConfig(accept_threshold=opts.get("accept_threshold")))
    print(f"rate {rate:.3f} {'accept' if accepted else 'reject'}")
    return EXIT_OK if accepted else EXIT_REJECTED


def cmd_convert(args: argparse.Namespace, opts: Options) -> int:
    if args.direction == "colmap-to-json":
        recon = read_colmap_text(args.source, total_frame_count=args.total)
        write_epic_fields_json(recon, args.dest)
    else:
        recon = read_epic_fields_json(args.source, total_frame_count=args.total)
        write_colmap_text(recon, args.dest)
    print(f"wrote {args.dest}")
    return EXIT_OK


def cmd_propagate(args: argparse.Namespace, opts: Options) -> int:
    out_dir = Path(args.output)
    recon = _load_model(args.model)
    ref = recon.frame_by_name(args.ref_frame)
    intr = recon.cameras[ref.camera_id]
    ref_mask = read_mask(args.mask, object_id=args.object_id)
    if args.frames:
        names = [n for n in args.frames.split(",") if n]
        targets = [recon.frame_by_name(n) for n in names]
    else:
        targets = list(recon.frames)
    config = opts.propagation_config()

    rows = []
    if args.mode == "fixed2d":
        masks = fixed_in_2d(ref_mask, len(targets))
        for frame, mask in zip(targets, masks):
            write_mask(mask, out_dir / "masks" / f"{Path(frame.name).stem}.png")
            rows.append((frame.name, True))
    else:
        try:
            lifted = lift_mask(ref_mask, ref, intr, recon.points, config)
        except LiftError as exc:
            raise SystemExit(f"lift failed: {exc}") from exc
        for frame in targets:
            mask, visible = reproject_object(lifted, frame, intr, config)
            write_mask(mask, out_dir / "masks" / f"{Path(frame.name).stem}.png")
            rows.append((frame.name, visible))
    with open(out_dir / "visibility.csv", "w") as fh:
        fh.write("frame,visible\n")
        for name, visible in rows:
            fh.write(f"{name},{int(visible)}\n")
    if args.images:
        image_dir = Path(args.images)
        for frame, (name, _) in zip(targets, rows):
            img_path = image_dir / frame.name
            if img_path.is_file():
                mask = read_mask(out_dir / "masks" / f"{Path(frame.name).stem}.png")
                write_overlay(
                    _load_image(img_path) if img_path.suffix else np.zeros((intr.height, intr.width)),
                    {1: mask},
                    out_dir / "overlays" / f"{Path(frame.name).stem}.png",
                )
    payload = _manifest_payload(
        ["propagate", args.mode, str(args.model)],
        opts.resolved(),
        {"mask": args.mask},
    )
    _write_manifest(out_dir, payload)
    print(f"propagated {len(targets)} frames ({args.mode}) -> {out_dir}")
    return EXIT_OK


def _evaluate_nvs(args: argparse.Namespace, opts: Options, report: MetricReport) -> None:
    pred = _matching_files(Path(args.pred))
    gt = _matching_files(Path(args.gt))
    fg = _matching_files(Path(args.fg_masks)) if args.fg_masks else {}
    common = sorted(set(pred) & set(gt))
    if not common:
        raise SystemExit("no frames shared between --pred and --gt")
    for stem in common:
        p = _load_image(pred[stem])
        g = _load_image(gt[stem])
        if stem in fg:
            mask = read_mask(fg[stem])
            total, bg_v, fg_v = psnr_split(p, g, mask)
            report.add(stem, "psnr", total)
            report.add(stem, "psnr_bg", bg_v)
            report.add(stem, "psnr_fg", fg_v)
        else:
            report.add(stem, "psnr", psnr(p, g))


def _evaluate_udos(args: argparse.Namespace, opts: Options, report: MetricReport) -> None:
    scores = _matching_files(Path(args.scores))
    gt = _matching_files(Path(args.gt))
    common = sorted(set(scores) & set(gt))
    if not common:
        raise SystemExit("no frames shared between --scores and --gt")
    pairs = []
    for stem in common:
        s = _load_scores(scores[stem])
        g = read_mask(gt[stem])
        if g.is_empty:
            report.add(stem, "ap", None)
            continue
        pairs.append((s, g))
        report.add(stem, "ap", average_precision(s, g))
    if args.pooled and pairs:
        report.add("__pooled__", "ap_pooled", pooled_average_precision(pairs))


def _evaluate_vos(args: argparse.Namespace, opts: Options, report: MetricReport) -> None:
    pred = _matching_files(Path(args.pred))
    gt = _matching_files(Path(args.gt))
    common = sorted(set(pred) & set(gt))
    if not common:
        raise SystemExit("no frames shared between --pred and --gt")
    tolerance = opts.get("boundary_tolerance")
    for stem in common:
        p = read_mask(pred[stem])
        g = read_mask(gt[stem])
        j = jaccard(p, g)
        f = boundary_f(p, g, tolerance)
        report.add(stem, "J", j)
        report.add(stem, "F", f)
        report.add(stem, "J&F", jf_mean(j, f))


def cmd_evaluate(args: argparse.Namespace, opts: Options) -> int:
    report = MetricReport()
    if args.task == "nvs":
        _evaluate_nvs(args, opts, report)
    elif args.task == "udos":
        _evaluate_udos(args, opts, report)
    else:
        _evaluate_vos(args, opts, report)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    report.write_csv(out_dir / "report.csv")
    groups = None
    if getattr(args, "split", None):
        from .benchmark import SplitAssignment

        split = SplitAssignment.read_csv(args.split)
        groups = {
            Path(name).stem: label.split("-", 1)[1] if "-" in label else label
            for name, label in split.labels.items()
        }
    report.write_json(out_dir / "report.json", groups=groups)
    for metric, value in report.aggregates().items():
        print(f"{metric}: {value:.6f}")
    inputs = {}
    for key in ("pred", "gt", "scores", "fg_masks"):
        value = getattr(args, key, None)
        if value:
            inputs[key] = value
    payload = _manifest_payload(["evaluate", args.task], opts.resolved(), inputs)
    _write_manifest(out_dir, payload)
    return EXIT_OK


def _read_frames_csv(path: str | Path, fps: float) -> list[RegisteredFrame]:
    import csv as _csv

    frames = []
    with open(path, newline="") as fh:
        for row in _csv.reader(fh):
            if not row or row[0] == "frame_name":
                continue
            name = row[0]
            timestamp = float(row[1]) if len(row) > 1 else 0.0
            frames.append(
                RegisteredFrame(
                    name=name, camera_id=1, timestamp=timestamp, pose=RigidPose.identity()
                )
            )
    return frames


def cmd_split(args: argparse.Namespace, opts: Options) -> int:
    frames = _read_frames_csv(args.frames, opts.get("fps"))
    segments = read_segments_csv(args.segments)
    visor = None
    if args.visor:
        visor = {line.strip() for line in Path(args.visor).read_text().splitlines() if line.strip()}
    config = SplitConfig(
        exclusion_window=opts.get("exclusion_window"),
        easy_fraction=opts.get("easy_fraction"),
        ooa_eval_rate=opts.get("ooa_eval_rate"),
        seed=int(opts.get("seed")),
    )
    assignment = generate_split(frames, segments, visor, config)
    assignment.write_csv(args.output)
    counts = assignment.counts()
    print(", ".join(f"{k}={v}" for k, v in counts.items() if v))
    return EXIT_OK


def cmd_stats(args: argparse.Namespace, opts: Options) -> int:
    recons = []
    names = []
    for model in args.models:
        recons.append(_load_model(model))
        names.append(Path(model).stem or Path(model).name)
    stats = reconstruction_stats(
        recons, names, accept_threshold=opts.get("accept_threshold")
    )
    out_dir = Path(args.output)
    stats.write_csv(out_dir)
    stats.write_json(out_dir / "stats.json")
    if args.plot:
        _plot_stats(stats, out_dir)
    print(
        f"{len(recons)} reconstructions: mean reproj {stats.overall_reproj_mean:.4f} px, "
        f"max {stats.overall_reproj_max:.4f} px, "
        f"{len(stats.below_threshold())} below accept threshold"
    )
    payload = _manifest_payload(
        ["stats", *map(str, args.models)], opts.resolved(), {}
    )
    _write_manifest(out_dir, payload)
    return EXIT_OK


def _plot_stats(stats, out_dir: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    counts, edges = stats.rate_histogram()
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(edges[:-1], counts, width=np.diff(edges), align="edge", color="#4878a8")
    ax.axvline(stats.accept_threshold, color="crimson", linestyle="--",
               label=f"accept threshold {stats.accept_threshold}")
    ax.set_xlabel("registration rate")
    ax.set_ylabel("videos")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_dir / "registration_hist.png", dpi=120)
    plt.close(fig)

    for values, name, label in (
        (stats.reproj_mean, "reprojection_hist.png", "mean reprojection error (px)"),
        (stats.point_counts, "points_hist.png", "number of 3D points"),
    ):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        ax.hist([v for v in values if np.isfinite(v)], bins=20, color="#4878a8")
        ax.set_xlabel(label)
        ax.set_ylabel("videos")
        fig.tight_layout()
        fig.savefig(out_dir / name, dpi=120)
        plt.close(fig)


def cmd_study_filtering(args: argparse.Namespace, opts: Options) -> int:
    source = _frame_source(args.frames, opts.get("fps"))
    tool = _tool_from_args(args)
    workdir = Path(args.output) / "runs"

    def sfm_runner(kept_indices):
        from .recon_io import _run_tool  # shared subprocess plumbing

        run_dir = workdir / f"run_{len(list(workdir.glob('run_*'))):02d}"
        run_dir.mkdir(parents=True, exist_ok=True)
        kept_path = run_dir / "kept.txt"
        kept_path.write_text("\n".join(source.name(i) for i in kept_indices) + "\n")
        model_dir = run_dir / "model"
        model_dir.mkdir(exist_ok=True)
        cmd = tool.sparse_cmd.format(
            image_dir=getattr(source, "root", args.frames),
            image_list=kept_path,
            output_dir=model_dir,
            camera_model=tool.camera_model,
        )
        try:
            _run_tool(cmd, run_dir / "log", tool.timeout)
            recon = read_colmap_text(model_dir)
        except Exception:  # noqa: BLE001 - a failed run is a data point here
            return 0.0, float("inf"), False
        from .benchmark import _point_track_errors

        mean_err, _ = _point_track_errors(recon)
        return float(len(recon.points)), mean_err, True

    result = filtering_study(
        source, opts.filter_config(), sfm_runner, threads=int(opts.get("threads"))
    )
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    result.to_json(out_dir / "study.json")
    print(result.to_table())
    payload = _manifest_payload(
        ["study-filtering", str(args.frames)], opts.resolved(), {"frames": args.frames}
    )
    _write_manifest(out_dir, payload)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="egofields",
        description="Frame filtering, SfM orchestration, mask propagation, and benchmark tooling.",
    )
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker parallelism cap (default: available cores)")
    parser.add_argument("--config", default=None, help="TOML/JSON file with option defaults")
    parser.add_argument("--print-config", action="store_true",
                        help="print resolved option values and exit")
    parser.add_argument("--version", action="version", version=f"egofields {__version__}")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("filter", help="greedy window filtering of a frame sequence")
    p.add_argument("frames", help="image directory or frame-list manifest")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--threshold", type=float, default=None,
                   help="overlap threshold override for this run")
    p.add_argument("--fps", dest="fps", type=float, default=None)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("reconstruct", help="filter + external SfM + verify/restart")
    p.add_argument("frames", help="image directory or frame-list manifest")
    p.add_argument("-o", "--output", required=True, help="working directory")
    p.add_argument("--tool", default=None, help="SfM tool config (TOML/JSON)")
    p.add_argument("--fps", dest="fps", type=float, default=None)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("verify", help="check a model's registration rate")
    p.add_argument("model", help="model directory or JSON file")
    p.add_argument("--total", type=int, required=True, help="total frames in the source video")
    p.add_argument("--threshold", dest="accept_threshold", type=float, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("convert", help="convert between model formats")
    p.add_argument("direction", choices=["colmap-to-json", "json-to-colmap"])
    p.add_argument("source")
    p.add_argument("dest")
    p.add_argument("--total", type=int, default=None)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("propagate", help="propagate a reference mask through a video")
    p.add_argument("mode", choices=["fixed2d", "fixed3d"])
    p.add_argument("--model", required=True, help="model directory or JSON file")
    p.add_argument("--ref-frame", required=True, help="reference frame name")
    p.add_argument("--mask", required=True, help="reference mask raster")
    p.add_argument("--frames", default=None, help="comma-separated target names (default: all)")
    p.add_argument("--images", default=None, help="image directory for overlay rendering")
    p.add_argument("--object-id", type=int, default=1)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("evaluate", help="run a benchmark's metric suite")
    p.add_argument("task", choices=["nvs", "udos", "vos"])
    p.add_argument("--pred", default=None, help="predictions directory (nvs, vos)")
    p.add_argument("--gt", required=True, help="ground-truth directory")
    p.add_argument("--scores", default=None, help="score maps directory (udos)")
    p.add_argument("--fg-masks", default=None, help="foreground masks for PSNR splits (nvs)")
    p.add_argument("--split", default=None, help="split CSV for per-tier aggregation")
    p.add_argument("--pooled", action="store_true", help="also report pooled-pixel AP (udos)")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("split", help="generate the train/val/test split")
    p.add_argument("--frames", required=True, help="CSV of frame_name,timestamp")
    p.add_argument("--segments", required=True, help="CSV of video_id,start_sec,stop_sec,verb")
    p.add_argument("--visor", default=None, help="file listing frames with mask annotations")
    p.add_argument("-o", "--output", required=True, help="output split CSV")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("stats", help="reconstruction statistics and histograms")
    p.add_argument("models", nargs="+", help="model directories or JSON files")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--threshold", dest="accept_threshold", type=float, default=None)
    p.add_argument("--plot", action="store_true", help="also write PNG histograms")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("study-filtering", help="filter vs uniform sampling comparison")
    p.add_argument("frames")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--tool", default=None, help="SfM tool config (TOML/JSON)")
    p.set_defaults(func=cmd_study_filtering)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    opts = Options(args)
    if args.print_config:
        print(json.dumps(opts.resolved(), indent=1, default=str))
        return EXIT_OK
    if not getattr(args, "command", None):
        parser.print_help()
        return EXIT_ERROR
    try:
        return args.func(args, opts)
    except SystemExit:
        raise
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
