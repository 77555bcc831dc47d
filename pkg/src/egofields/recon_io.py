"""Reconstruction file formats and the external-SfM orchestration contract.

The SfM tool itself is an external executable invoked through command
templates; this module owns everything around it: the text model format
it consumes/produces, the light-weight JSON release format, the accept
threshold, and the filter -> sparse -> register -> verify state machine
with its single higher-threshold restart.
"""

from __future__ import annotations

import enum
import json
import logging
import os
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .filtering import FilterConfig, FilterResult, FrameSource, filter_frames
from .geometry import (
    CameraIntrinsics,
    CameraModel,
    Reconstruction,
    RegisteredFrame,
    RigidPose,
    SparsePoint,
)

logger = logging.getLogger(__name__)

__all__ = [
    "FormatError",
    "ExternalToolError",
    "VerifyConfig",
    "PipelineStage",
    "PipelineState",
    "SfmTool",
    "OrchestrateConfig",
    "read_colmap_text",
    "write_colmap_text",
    "read_epic_fields_json",
    "write_epic_fields_json",
    "verify",
    "orchestrate",
]

WORKDIR_ENV = "EGOFIELDS_WORKDIR"


class FormatError(ValueError):
    """A reconstruction file violates its format grammar."""


class ExternalToolError(RuntimeError):
    """An external SfM invocation failed; carries captured stderr."""

    def __init__(self, command: str, returncode: int, stderr: str):
        super().__init__(
            f"external tool exited with {returncode}: {command}\n--- stderr ---\n{stderr}"
        )
        self.command = command
        self.returncode = returncode
        self.stderr = stderr


def _fmt(value: float) -> str:
    """Fixed decimal formatting: 12 significant digits."""
    return f"{value:.12g}"


def _data_lines(path: Path):
    """Yield (line number, stripped content), skipping comments and blanks."""
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line


def _parse_error(path: Path, lineno: int, message: str) -> FormatError:
    return FormatError(f"{path}:{lineno}: {message}")


def read_colmap_text(
    model_dir: str | Path,
    total_frame_count: int | None = None,
    fps: float | None = None,
) -> Reconstruction:
    """Parse a three-file text model (cameras.txt, images.txt, points3D.txt).

    2D observations with point id -1 are valid but not retained (tracks
    are stored on the 3D points).  When ``fps`` is given, frame timestamps
    are derived from trailing digits in the frame name; otherwise they
    default to 0.
    """
    model_dir = Path(model_dir)
    cameras_path = model_dir / "cameras.txt"
    images_path = model_dir / "images.txt"
    points_path = model_dir / "points3D.txt"
    for p in (cameras_path, images_path, points_path):
        if not p.is_file():
            raise FormatError(f"missing model file: {p}")

    cameras: dict[int, CameraIntrinsics] = {}
    for lineno, line in _data_lines(cameras_path):
        parts = line.split()
        if len(parts) < 4:
            raise _parse_error(cameras_path, lineno, "expected CAMERA_ID MODEL W H PARAMS...")
        try:
            cam_id = int(parts[0])
            model = CameraModel(parts[1])
        except ValueError as exc:
            raise _parse_error(cameras_path, lineno, str(exc)) from exc
        try:
            cameras[cam_id] = CameraIntrinsics(
                model, int(parts[2]), int(parts[3]), tuple(float(v) for v in parts[4:])
            )
        except ValueError as exc:
            raise _parse_error(cameras_path, lineno, str(exc)) from exc

    # images.txt: pairs of lines per image.  The observation line may be
    # genuinely empty (a registered frame without 2D points), so blank
    # lines are significant while a header is pending.
    frames: list[RegisteredFrame] = []
    image_names: dict[int, str] = {}
    image_obs: dict[int, list[tuple[float, float, int]]] = {}
    pending: tuple[int, int] | None = None  # (image id, header line number)
    for lineno, raw in enumerate(images_path.read_text().splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            continue
        if not line and pending is None:
            continue
        if pending is None:
            parts = line.split()
            if len(parts) < 10:
                raise _parse_error(
                    images_path, lineno, "expected IMG_ID QW QX QY QZ TX TY TZ CAM_ID NAME"
                )
            try:
                img_id = int(parts[0])
                q = np.array([float(v) for v in parts[1:5]])
                t = np.array([float(v) for v in parts[5:8]])
                cam_id = int(parts[8])
            except ValueError as exc:
                raise _parse_error(images_path, lineno, str(exc)) from exc
            name = " ".join(parts[9:])
            if cam_id not in cameras:
                raise _parse_error(images_path, lineno, f"unknown camera id {cam_id}")
            if img_id in image_names:
                raise _parse_error(images_path, lineno, f"duplicate image id {img_id}")
            norm = np.linalg.norm(q)
            if abs(norm - 1.0) > 1e-6:
                raise _parse_error(images_path, lineno, f"quaternion norm {norm} is not 1")
            timestamp = _timestamp_from_name(name, fps) if fps else 0.0
            frames.append(
                RegisteredFrame(name=name, camera_id=cam_id, pose=RigidPose(q, t),
                                timestamp=timestamp)
            )
            image_names[img_id] = name
            pending = (img_id, lineno)
        else:
            img_id, _ = pending
            parts = line.split() if line else []
            if len(parts) % 3 != 0:
                raise _parse_error(
                    images_path, lineno, "observations must be X Y POINT3D_ID triplets"
                )
            obs = []
            try:
                for k in range(0, len(parts), 3):
                    obs.append((float(parts[k]), float(parts[k + 1]), int(parts[k + 2])))
            except ValueError as exc:
                raise _parse_error(images_path, lineno, str(exc)) from exc
            image_obs[img_id] = obs
            pending = None
    if pending is not None:
        raise _parse_error(images_path, pending[1], "image header without observation line")

    points: list[SparsePoint] = []
    for lineno, line in _data_lines(points_path):
        parts = line.split()
        if len(parts) < 8 or (len(parts) - 8) % 2 != 0:
            raise _parse_error(
                points_path, lineno,
                "expected PT_ID X Y Z R G B ERROR (IMG_ID POINT2D_IDX)...",
            )
        try:
            xyz = np.array([float(v) for v in parts[1:4]])
            rgb = (int(parts[4]), int(parts[5]), int(parts[6]))
            error = float(parts[7])
        except ValueError as exc:
            raise _parse_error(points_path, lineno, str(exc)) from exc
        track = []
        for k in range(8, len(parts), 2):
            img_id = int(parts[k])
            p2d_idx = int(parts[k + 1])
            if img_id not in image_names:
                raise _parse_error(points_path, lineno, f"dangling image id {img_id}")
            obs = image_obs.get(img_id, [])
            if p2d_idx < 0 or p2d_idx >= len(obs):
                raise _parse_error(
                    points_path, lineno,
                    f"point2D index {p2d_idx} out of range for image {img_id}",
                )
            x, y, _ = obs[p2d_idx]
            track.append((image_names[img_id], (x, y)))
        if len(track) < 2:
            raise _parse_error(points_path, lineno, "track must have >= 2 observations")
        points.append(SparsePoint(position=xyz, color=rgb, error=error, track=tuple(track)))

    return Reconstruction(
        cameras=cameras,
        frames=frames,
        points=points,
        total_frame_count=total_frame_count or len(frames),
    )


def _timestamp_from_name(name: str, fps: float) -> float:
    digits = "".join(c for c in Path(name).stem if c.isdigit())
    return int(digits) / fps if digits else 0.0


def write_colmap_text(recon: Reconstruction, model_dir: str | Path) -> Path:
    """Write the three-file text model with deterministic formatting.

    Numeric fields use 12 significant digits, so write -> read round-trips
    within 1e-9 relative.  Image ids are assigned sequentially in frame
    order (the in-memory model does not carry ids); 2D observation lists
    are rebuilt from the point tracks in point order.
    """
    model_dir = Path(model_dir)
    model_dir.mkdir(parents=True, exist_ok=True)

    cam_lines = ["# Camera list: CAMERA_ID MODEL WIDTH HEIGHT PARAMS[]"]
    for cam_id in sorted(recon.cameras):
        cam = recon.cameras[cam_id]
        params = " ".join(_fmt(p) for p in cam.params)
        cam_lines.append(f"{cam_id} {cam.model.value} {cam.width} {cam.height} {params}")

    image_ids = {f.name: i + 1 for i, f in enumerate(recon.frames)}
    obs_per_image: dict[str, list[tuple[float, float, int]]] = {f.name: [] for f in recon.frames}
    tracks_out: list[list[tuple[int, int]]] = []
    for pt_idx, p in enumerate(recon.points, start=1):
        entries = []
        for frame_name, (x, y) in p.track or ():
            obs_list = obs_per_image[frame_name]
            entries.append((image_ids[frame_name], len(obs_list)))
            obs_list.append((x, y, pt_idx))
        tracks_out.append(entries)

    img_lines = [
        "# Image list, two lines per image:",
        "#   IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME",
        "#   POINTS2D[] as (X Y POINT3D_ID)",
    ]
    for f in recon.frames:
        q = f.pose.rotation
        t = f.pose.translation
        img_lines.append(
            f"{image_ids[f.name]} {_fmt(q[0])} {_fmt(q[1])} {_fmt(q[2])} {_fmt(q[3])} "
            f"{_fmt(t[0])} {_fmt(t[1])} {_fmt(t[2])} {f.camera_id} {f.name}"
        )
        img_lines.append(
            " ".join(f"{_fmt(x)} {_fmt(y)} {pid}" for x, y, pid in obs_per_image[f.name])
        )

    pt_lines = ["# 3D point list: POINT3D_ID X Y Z R G B ERROR TRACK[] as (IMAGE_ID POINT2D_IDX)"]
    for pt_idx, (p, entries) in enumerate(zip(recon.points, tracks_out), start=1):
        rgb = p.color or (128, 128, 128)
        track = " ".join(f"{img_id} {p2d}" for img_id, p2d in entries)
        pt_lines.append(
            f"{pt_idx} {_fmt(p.position[0])} {_fmt(p.position[1])} {_fmt(p.position[2])} "
            f"{rgb[0]} {rgb[1]} {rgb[2]} {_fmt(p.error)}" + (f" {track}" if track else "")
        )

    _atomic_write(model_dir / "cameras.txt", "\n".join(cam_lines) + "\n")
    _atomic_write(model_dir / "images.txt", "\n".join(img_lines) + "\n")
    _atomic_write(model_dir / "points3D.txt", "\n".join(pt_lines) + "\n")
    return model_dir


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# Light-weight JSON release format
#
# {
#   "camera": {"model": str, "width": int, "height": int, "params": [float]},
#   "images": {frame_name: [qw, qx, qy, qz, tx, ty, tz], ...},
#   "points": [[x, y, z], ...]
# }
#
# One shared camera per video.  Floats are serialized at full precision,
# so intrinsics, poses, and point positions survive a round trip exactly.


def _schema_error(path: str, message: str) -> FormatError:
    return FormatError(f"{path}: {message}")


def read_epic_fields_json(path: str | Path, total_frame_count: int | None = None) -> Reconstruction:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise _schema_error("$", "top level must be an object")
    for key in ("camera", "images", "points"):
        if key not in data:
            raise _schema_error(f"$.{key}", "missing required key")

    cam = data["camera"]
    if not isinstance(cam, dict):
        raise _schema_error("$.camera", "must be an object")
    for key in ("model", "width", "height", "params"):
        if key not in cam:
            raise _schema_error(f"$.camera.{key}", "missing required key")
    try:
        model = CameraModel(cam["model"])
    except ValueError as exc:
        raise _schema_error("$.camera.model", str(exc)) from exc
    try:
        intr = CameraIntrinsics(model, cam["width"], cam["height"], tuple(cam["params"]))
    except (TypeError, ValueError) as exc:
        raise _schema_error("$.camera", str(exc)) from exc

    images = data["images"]
    if not isinstance(images, dict):
        raise _schema_error("$.images", "must be an object mapping name -> 7 floats")
    frames = []
    for name, vec in images.items():
        loc = f"$.images[{name!r}]"
        if not isinstance(vec, list) or len(vec) != 7:
            raise _schema_error(loc, "must be [qw, qx, qy, qz, tx, ty, tz]")
        q = np.array(vec[:4], dtype=np.float64)
        norm = np.linalg.norm(q)
        if abs(norm - 1.0) > 1e-6:
            raise _schema_error(loc, f"quaternion norm {norm} deviates from 1 by > 1e-6")
        frames.append(
            RegisteredFrame(name=name, camera_id=1,
                            pose=RigidPose(q, np.array(vec[4:7], dtype=np.float64)))
        )

    raw_points = data["points"]
    if not isinstance(raw_points, list):
        raise _schema_error("$.points", "must be a list of [x, y, z]")
    points = []
    for i, xyz in enumerate(raw_points):
        if not isinstance(xyz, list) or len(xyz) != 3:
            raise _schema_error(f"$.points[{i}]", "must be [x, y, z]")
        points.append(SparsePoint(position=np.array(xyz, dtype=np.float64)))

    return Reconstruction(
        cameras={1: intr},
        frames=frames,
        points=points,
        total_frame_count=total_frame_count or len(frames),
    )


def write_epic_fields_json(recon: Reconstruction, path: str | Path) -> Path:
    """Write the single-camera JSON model; frames sorted by name.

    Lossless for intrinsics, per-frame poses, and point positions; tracks,
    colors, and per-point errors are deliberately not part of this format.
    """
    distinct = {(c.model, c.width, c.height, c.params) for c in recon.cameras.values()}
    if len(distinct) != 1:
        raise ValueError(
            f"JSON format stores one shared camera per video, got {len(distinct)} distinct"
        )
    cam = next(iter(recon.cameras.values()))
    images = {
        f.name: [*map(float, f.pose.rotation), *map(float, f.pose.translation)]
        for f in sorted(recon.frames, key=lambda fr: fr.name)
    }
    data = {
        "camera": {
            "model": cam.model.value,
            "width": cam.width,
            "height": cam.height,
            "params": list(cam.params),
        },
        "images": images,
        "points": [p.position.tolist() for p in recon.points],
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(data, indent=1))
    os.replace(tmp, path)
    return path


# ---------------------------------------------------------------------------
# Verification and orchestration


@dataclass(frozen=True)
class VerifyConfig:
    """Acceptance rule for a finished reconstruction."""

    accept_threshold: float = 0.70

    def __post_init__(self):
        if not 0 < self.accept_threshold <= 1:
            raise ValueError("accept_threshold must be in (0, 1]")


def verify(recon: Reconstruction, config: VerifyConfig = VerifyConfig()) -> tuple[bool, float]:
    """Accept iff registered / total >= threshold (boundary inclusive)."""
    if recon.total_frame_count <= 0:
        raise ValueError("reconstruction has no frames to verify against")
    rate = len(recon.frames) / recon.total_frame_count
    return rate >= config.accept_threshold, rate


class PipelineStage(enum.Enum):
    FILTERED = "filtered@0.90"
    SPARSE_DONE = "sparse_done"
    DENSE_DONE = "dense_done"
    ACCEPTED = "accepted"
    REFILTERED = "refiltered@0.95"
    REJECTED = "rejected"


@dataclass(frozen=True)
class PipelineState:
    """Where a video sits in the reconstruct/verify/restart machine."""

    stage: PipelineStage
    registration_rate: float
    attempt: int
    accept_threshold: float = 0.70

    def __post_init__(self):
        if self.attempt not in (1, 2):
            raise ValueError("attempt must be 1 or 2 (never a third)")
        if self.stage is PipelineStage.ACCEPTED and self.registration_rate < self.accept_threshold:
            raise ValueError("accepted state requires registration_rate >= accept_threshold")
        if self.attempt == 2 and self.stage is PipelineStage.FILTERED:
            raise ValueError("attempt 2 starts at the refiltered stage")


@dataclass(frozen=True)
class SfmTool:
    """Subprocess contract for the external SfM executable.

    Templates are formatted with named placeholders and run through the
    shell-free tokenizer:

    - ``sparse_cmd``:   {image_dir} {image_list} {output_dir} {camera_model}
    - ``register_cmd``: {image_dir} {model_dir} {output_dir} {camera_model}

    Each command must leave a text model (cameras/images/points3D.txt) in
    its {output_dir}.
    """

    sparse_cmd: str
    register_cmd: str
    camera_model: str = "SIMPLE_RADIAL"
    timeout: float | None = None

    @classmethod
    def from_config_file(cls, path: str | Path) -> "SfmTool":
        """Load from a TOML or JSON file with the same field names."""
        path = Path(path)
        if path.suffix.lower() == ".toml":
            try:
                import tomllib  # type: ignore[import-not-found]
            except ModuleNotFoundError:
                import tomli as tomllib
            data = tomllib.loads(path.read_text())
        else:
            data = json.loads(path.read_text())
        return cls(
            sparse_cmd=data["sparse_cmd"],
            register_cmd=data["register_cmd"],
            camera_model=data.get("camera_model", "SIMPLE_RADIAL"),
            timeout=data.get("timeout"),
        )


@dataclass
class OrchestrateConfig:
    filter: FilterConfig = field(default_factory=FilterConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    tool: SfmTool | None = None
    workdir: Path | None = None
    threads: int = 1
    fps: float | None = None


def _run_tool(command: str, log_stem: Path, timeout: float | None) -> None:
    argv = shlex.split(command)
    try:
        proc = subprocess.run(
            argv, capture_output=True, text=True, timeout=timeout, check=False
        )
    except subprocess.TimeoutExpired as exc:
        raise ExternalToolError(command, -1, f"timeout after {timeout}s") from exc
    log_stem.parent.mkdir(parents=True, exist_ok=True)
    log_stem.with_suffix(".stdout").write_text(proc.stdout or "")
    log_stem.with_suffix(".stderr").write_text(proc.stderr or "")
    if proc.returncode != 0:
        raise ExternalToolError(command, proc.returncode, proc.stderr or "")


def _save_state(workdir: Path, state: dict) -> None:
    tmp = workdir / "state.json.tmp"
    tmp.write_text(json.dumps(state, indent=1))
    os.replace(tmp, workdir / "state.json")


def _load_state(workdir: Path) -> dict | None:
    path = workdir / "state.json"
    if not path.is_file():
        return None
    return json.loads(path.read_text())


def orchestrate(
    frames: FrameSource,
    config: OrchestrateConfig,
    image_dir: str | Path | None = None,
) -> tuple[PipelineState, Reconstruction | None]:
    """Run filter -> sparse SfM -> dense registration -> verify, with one restart.

    Attempt 1 filters at ``config.filter.overlap_threshold``; if the dense
    registration rate misses the accept threshold, attempt 2 refilters at
    ``config.filter.restart_threshold`` and reruns.  There is never a third
    attempt.  State and logs are persisted to the working directory after
    every stage, so an interrupted run resumes where it stopped.

    Returns the final state plus the last dense reconstruction (None only
    if rejection happened before any dense model was produced).
    """
    if config.tool is None:
        raise ValueError("orchestrate requires an SfmTool")
    if image_dir is None:
        image_dir = getattr(frames, "root", None)
        if image_dir is None:
            raise ValueError("frames are not on disk; pass image_dir explicitly")
    image_dir = Path(image_dir)
    workdir = config.workdir
    if workdir is None:
        env = os.environ.get(WORKDIR_ENV)
        if env is None:
            raise ValueError(f"no workdir configured and {WORKDIR_ENV} is unset")
        workdir = Path(env)
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)

    total = len(frames)
    state = _load_state(workdir) or {"attempt": 1, "completed": [], "history": []}
    thresholds = {1: config.filter.overlap_threshold, 2: config.filter.restart_threshold}
    filter_stages = {1: PipelineStage.FILTERED, 2: PipelineStage.REFILTERED}

    # Terminal states short-circuit: the run already finished.
    for terminal in (PipelineStage.ACCEPTED, PipelineStage.REJECTED):
        for entry in state["completed"]:
            if entry.endswith(terminal.value):
                done_attempt = int(entry.split(":", 1)[0])
                dense = workdir / f"attempt{done_attempt}" / "dense"
                recon = (
                    read_colmap_text(dense, total_frame_count=total, fps=config.fps)
                    if (dense / "images.txt").is_file()
                    else None
                )
                rate = next(
                    (h["rate"] for h in reversed(state["history"])
                     if h["stage"] == terminal.value),
                    recon.registration_rate if recon is not None else 0.0,
                )
                return (
                    PipelineState(terminal, rate, done_attempt, config.verify.accept_threshold),
                    recon,
                )

    last_recon: Reconstruction | None = None
    last_rate = 0.0
    attempt = state["attempt"]
    while attempt <= 2:
        adir = workdir / f"attempt{attempt}"
        adir.mkdir(exist_ok=True)
        kept_path = adir / "kept.txt"
        sparse_dir = adir / "sparse"
        dense_dir = adir / "dense"
        threshold = thresholds[attempt]

        def done(stage: str) -> bool:
            return f"{attempt}:{stage}" in state["completed"]

        def record(stage: PipelineStage, rate: float = 0.0) -> None:
            state["attempt"] = attempt
            state["completed"].append(f"{attempt}:{stage.value}")
            state["history"].append(
                {"attempt": attempt, "stage": stage.value, "rate": rate, "time": time.time()}
            )
            _save_state(workdir, state)

        if not (done(filter_stages[attempt].value) and kept_path.is_file()):
            logger.info("attempt %d: filtering at threshold %.2f", attempt, threshold)
            result: FilterResult = filter_frames(
                frames, config.filter, threshold=threshold, threads=config.threads
            )
            kept_names = [frames.name(i) for i in result.kept]
            _atomic_write(kept_path, "\n".join(kept_names) + "\n")
            record(filter_stages[attempt], 0.0)

        if not (done(PipelineStage.SPARSE_DONE.value) and (sparse_dir / "images.txt").is_file()):
            sparse_dir.mkdir(exist_ok=True)
            cmd = config.tool.sparse_cmd.format(
                image_dir=image_dir, image_list=kept_path, output_dir=sparse_dir,
                camera_model=config.tool.camera_model,
            )
            logger.info("attempt %d: sparse reconstruction: %s", attempt, cmd)
            _run_tool(cmd, workdir / "logs" / f"attempt{attempt}_sparse", config.tool.timeout)
            record(PipelineStage.SPARSE_DONE)

        if not (done(PipelineStage.DENSE_DONE.value) and (dense_dir / "images.txt").is_file()):
            dense_dir.mkdir(exist_ok=True)
            cmd = config.tool.register_cmd.format(
                image_dir=image_dir, model_dir=sparse_dir, output_dir=dense_dir,
                camera_model=config.tool.camera_model,
            )
            logger.info("attempt %d: dense registration: %s", attempt, cmd)
            _run_tool(cmd, workdir / "logs" / f"attempt{attempt}_dense", config.tool.timeout)
            record(PipelineStage.DENSE_DONE)

        last_recon = read_colmap_text(dense_dir, total_frame_count=total, fps=config.fps)
        accepted, last_rate = verify(last_recon, config.verify)
        if accepted:
            record(PipelineStage.ACCEPTED, last_rate)
            return (
                PipelineState(PipelineStage.ACCEPTED, last_rate, attempt,
                              config.verify.accept_threshold),
                last_recon,
            )
        logger.info("attempt %d rejected: rate %.3f", attempt, last_rate)
        attempt += 1
        state["attempt"] = min(attempt, 2)
        _save_state(workdir, state)

    record_state = {"attempt": 2, "stage": PipelineStage.REJECTED.value,
                    "rate": last_rate, "time": time.time()}
    state["history"].append(record_state)
    state["completed"].append(f"2:{PipelineStage.REJECTED.value}")
    _save_state(workdir, state)
    return (
        PipelineState(PipelineStage.REJECTED, last_rate, 2, config.verify.accept_threshold),
        last_recon,
    )
