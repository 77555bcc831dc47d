"""Deterministic synthetic scenes with closed-form ground truth.

Scenes are planar-dominant by construction: a single textured world
plane, a pinhole camera trajectory, and optional planar object patches.
Every quantity the tests need (pairwise homography, per-frame object
mask, sparse points, overlap profile) is derived analytically from the
scene description, never from rendered pixels, so rendered sequences
come with an exact oracle attached.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .filtering import greedy_windows
from .geometry import (
    CameraIntrinsics,
    CameraModel,
    Reconstruction,
    RegisteredFrame,
    RigidPose,
    SparsePoint,
    project_points,
)
from .overlap import Homography, symmetric_overlap

__all__ = [
    "PlaneSpec",
    "ObjectPatch",
    "SyntheticScene",
    "RenderError",
    "look_pose",
    "default_intrinsics",
    "render",
    "analytic_homography",
    "analytic_overlap",
    "analytic_filter",
    "object_mask",
    "visible_points",
    "scene_reconstruction",
    "value_noise",
    "render_to_directory",
    "SceneFrameSource",
    "scene_to_json",
    "scene_from_json",
    "static_scene",
    "panning_scene",
    "hotspot_scene",
    "abrupt_cut_scene",
    "translating_scene",
    "leaving_frustum_scene",
]


class RenderError(RuntimeError):
    """The camera is on (or inside) the scene geometry."""


def _lattice_hash(ix: np.ndarray, iy: np.ndarray, seed: int) -> np.ndarray:
    """Deterministic pseudo-random value in [0,1) per integer lattice point."""
    seed_term = (seed * 0xD6E8FEB86659FD93) & 0xFFFFFFFFFFFFFFFF
    h = ix.astype(np.int64).astype(np.uint64) * np.uint64(0x9E3779B97F4A7C15)
    h ^= iy.astype(np.int64).astype(np.uint64) * np.uint64(0xC2B2AE3D27D4EB4F)
    h ^= np.uint64(seed_term)
    h ^= h >> np.uint64(30)
    h *= np.uint64(0xBF58476D1CE4E5B9)
    h ^= h >> np.uint64(27)
    h *= np.uint64(0x94D049BB133111EB)
    h ^= h >> np.uint64(31)
    return (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)


def value_noise(u: np.ndarray, v: np.ndarray, seed: int, octaves: int = 4) -> np.ndarray:
    """Seeded multi-octave value noise over the infinite plane, in [0,1)."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    total = np.zeros_like(u)
    amplitude = 1.0
    norm = 0.0
    for k in range(octaves):
        uu = u * (1 << k)
        vv = v * (1 << k)
        iu = np.floor(uu)
        iv = np.floor(vv)
        fu = uu - iu
        fv = vv - iv
        fu = fu * fu * (3.0 - 2.0 * fu)
        fv = fv * fv * (3.0 - 2.0 * fv)
        n00 = _lattice_hash(iu, iv, seed + k)
        n10 = _lattice_hash(iu + 1, iv, seed + k)
        n01 = _lattice_hash(iu, iv + 1, seed + k)
        n11 = _lattice_hash(iu + 1, iv + 1, seed + k)
        top = n00 + (n10 - n00) * fu
        bottom = n01 + (n11 - n01) * fu
        total += amplitude * (top + (bottom - top) * fv)
        norm += amplitude
        amplitude *= 0.5
    return total / norm


def _rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=np.float64)


def _rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=np.float64)


def _rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=np.float64)


def look_pose(
    center, yaw: float = 0.0, pitch: float = 0.0, roll: float = 0.0
) -> RigidPose:
    """World-to-camera pose for a camera at ``center``.

    yaw/pitch/roll (radians) rotate the camera body about the world
    y/x/z axes; at zero the camera looks along world +Z.
    """
    r_wc = _rot_y(yaw) @ _rot_x(pitch) @ _rot_z(roll)
    r = r_wc.T
    return RigidPose.from_matrix(r, -r @ np.asarray(center, dtype=np.float64))


def default_intrinsics(width: int = 456, height: int = 256, focal: float = 300.0) -> CameraIntrinsics:
    return CameraIntrinsics(
        CameraModel.SIMPLE_PINHOLE, width, height, (focal, width / 2.0, height / 2.0)
    )


@dataclass(frozen=True)
class PlaneSpec:
    """Infinite textured plane: origin point plus orthonormal in-plane axes."""

    origin: np.ndarray
    u_axis: np.ndarray
    v_axis: np.ndarray
    noise_seed: int = 0
    noise_frequency: float = 3.0  # noise cells per world unit
    octaves: int = 4

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=np.float64).reshape(3)
        u = np.asarray(self.u_axis, dtype=np.float64).reshape(3)
        u = u / np.linalg.norm(u)
        v = np.asarray(self.v_axis, dtype=np.float64).reshape(3)
        v = v - np.dot(v, u) * u
        v = v / np.linalg.norm(v)
        for name, arr in (("origin", o), ("u_axis", u), ("v_axis", v)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def normal(self) -> np.ndarray:
        return np.cross(self.u_axis, self.v_axis)

    @property
    def offset(self) -> float:
        """The plane is {x : normal . x = offset}."""
        return float(np.dot(self.normal, self.origin))

    def to_world(self, uv: np.ndarray) -> np.ndarray:
        """(N,2) plane coordinates -> (N,3) world points."""
        uv = np.asarray(uv, dtype=np.float64).reshape(-1, 2)
        return self.origin + uv[:, :1] * self.u_axis + uv[:, 1:2] * self.v_axis


@dataclass(frozen=True)
class ObjectPatch:
    """Axis-aligned rectangle on the scene plane, in plane coordinates."""

    object_id: int
    u_min: float
    v_min: float
    u_max: float
    v_max: float
    noise_seed: int = 1000

    def __post_init__(self):
        if self.u_min >= self.u_max or self.v_min >= self.v_max:
            raise ValueError("patch rectangle must have positive extent")

    def corners(self, plane: PlaneSpec) -> np.ndarray:
        """(4,3) world corners in counterclockwise plane order."""
        uv = np.array(
            [
                [self.u_min, self.v_min],
                [self.u_max, self.v_min],
                [self.u_max, self.v_max],
                [self.u_min, self.v_max],
            ]
        )
        return plane.to_world(uv)


@dataclass
class SyntheticScene:
    """A renderable scene whose ground truth is available in closed form."""

    width: int
    height: int
    intrinsics: CameraIntrinsics
    poses: list[RigidPose]
    plane: PlaneSpec
    patches: tuple[ObjectPatch, ...] = ()
    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    fps: float = 10.0

    def __post_init__(self):
        if self.intrinsics.model not in (CameraModel.SIMPLE_PINHOLE, CameraModel.PINHOLE):
            raise ValueError("synthetic scenes use distortion-free pinhole cameras")
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)

    @property
    def n_frames(self) -> int:
        return len(self.poses)

    def frame_name(self, index: int) -> str:
        return f"frame_{index:06d}.png"


def _plane_distance(scene: SyntheticScene, pose: RigidPose) -> float:
    """Signed distance factor n . (origin - C); zero means camera on the plane."""
    return float(np.dot(scene.plane.normal, scene.plane.origin - pose.camera_center()))


def render(scene: SyntheticScene, index: int) -> np.ndarray:
    """Rasterize one frame as float32 grayscale in [0,1].

    Plane texture is sampled analytically per pixel (ray/plane
    intersection, bilinear value noise); rays that miss the plane get a
    flat mid-gray.  Deterministic for a fixed scene.
    """
    pose = scene.poses[index]
    d_plane = _plane_distance(scene, pose)
    if abs(d_plane) < 1e-9:
        raise RenderError(f"camera {index} lies on the scene plane")
    w, h = scene.width, scene.height
    intr = scene.intrinsics
    cx, cy = intr.principal_point
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    dirs_cam = np.stack(
        [(xs - cx) / intr.fx, (ys - cy) / intr.fy, np.ones_like(xs)], axis=-1
    )
    r = pose.rotation_matrix()
    dirs_world = dirs_cam @ r  # row-wise R^T @ dir
    center = pose.camera_center()
    n = scene.plane.normal
    denom = dirs_world @ n
    with np.errstate(divide="ignore", invalid="ignore"):
        s = d_plane / denom
    hit = (s > 1e-9) & np.isfinite(s)
    pts = center + s[..., None] * dirs_world
    rel = pts - scene.plane.origin
    pu = rel @ scene.plane.u_axis
    pv = rel @ scene.plane.v_axis

    freq = scene.plane.noise_frequency
    img = 0.1 + 0.8 * value_noise(pu * freq, pv * freq, scene.plane.noise_seed, scene.plane.octaves)
    for patch in scene.patches:
        inside = (
            hit
            & (pu >= patch.u_min)
            & (pu <= patch.u_max)
            & (pv >= patch.v_min)
            & (pv <= patch.v_max)
        )
        if inside.any():
            tex = value_noise(
                pu[inside] * freq * 1.7, pv[inside] * freq * 1.7, patch.noise_seed, scene.plane.octaves
            )
            img[inside] = 0.05 + 0.9 * tex
    img[~hit] = 0.5
    return img.astype(np.float32)


def analytic_homography(scene: SyntheticScene, i: int, j: int) -> Homography:
    """Exact pixel homography from frame i to frame j induced by the plane.

    For pure-rotation pairs this reduces to K R_rel K^-1; in general it is
    the plane-induced homography of the camera pair.
    """
    intr = scene.intrinsics
    k = intr.calibration_matrix()
    pose_i, pose_j = scene.poses[i], scene.poses[j]
    r_i, r_j = pose_i.rotation_matrix(), pose_j.rotation_matrix()
    r_rel = r_j @ r_i.T
    t_rel = pose_j.translation - r_rel @ pose_i.translation
    n_i = r_i @ scene.plane.normal
    d_i = _plane_distance(scene, pose_i)
    if abs(d_i) < 1e-9:
        raise RenderError(f"camera {i} lies on the scene plane")
    h_c = r_rel + np.outer(t_rel, n_i) / d_i
    return Homography(k @ h_c @ np.linalg.inv(k))


def analytic_overlap(scene: SyntheticScene, i: int, j: int) -> float:
    """Ground-truth symmetric visual overlap between two frames."""
    return symmetric_overlap(analytic_homography(scene, i, j), scene.width, scene.height)


def analytic_filter(
    scene: SyntheticScene, threshold: float = 0.9, max_window: int = 3000
) -> tuple[list[int], list[tuple[int, int]]]:
    """Greedy window boundaries computed from analytic overlaps.

    This is the oracle the estimated filter is compared against; it runs
    the same greedy pass but scores pairs in closed form.
    """
    return greedy_windows(
        scene.n_frames, lambda a, b: analytic_overlap(scene, a, b), threshold, max_window
    )


def _clip_near(points_cam: np.ndarray, z_near: float = 1e-6) -> np.ndarray:
    """Sutherland-Hodgman clip of a camera-space polygon against z > z_near."""
    out = []
    m = len(points_cam)
    for k in range(m):
        cur, nxt = points_cam[k], points_cam[(k + 1) % m]
        cur_in, nxt_in = cur[2] > z_near, nxt[2] > z_near
        if cur_in:
            out.append(cur)
        if cur_in != nxt_in:
            t = (z_near - cur[2]) / (nxt[2] - cur[2])
            out.append(cur + t * (nxt - cur))
    return np.array(out) if out else np.empty((0, 3))


def object_mask(scene: SyntheticScene, index: int, patch: ObjectPatch) -> np.ndarray:
    """Exact boolean (h,w) mask of a patch in a frame, from geometry alone.

    Pixel (x, y) is foreground iff its center lies inside the projected
    patch polygon (clipped at the near plane).
    """
    pose = scene.poses[index]
    cam = pose.transform(patch.corners(scene.plane))
    poly_cam = _clip_near(cam)
    if len(poly_cam) < 3:
        return np.zeros((scene.height, scene.width), dtype=bool)
    intr = scene.intrinsics
    cx, cy = intr.principal_point
    poly = np.stack(
        [
            intr.fx * poly_cam[:, 0] / poly_cam[:, 2] + cx,
            intr.fy * poly_cam[:, 1] / poly_cam[:, 2] + cy,
        ],
        axis=1,
    )
    # Ensure counterclockwise orientation for the half-plane tests.
    area2 = np.sum(
        poly[:, 0] * np.roll(poly[:, 1], -1) - np.roll(poly[:, 0], -1) * poly[:, 1]
    )
    if area2 < 0:
        poly = poly[::-1]
    xs, ys = np.meshgrid(np.arange(scene.width), np.arange(scene.height))
    inside = np.ones((scene.height, scene.width), dtype=bool)
    for k in range(len(poly)):
        ax, ay = poly[k]
        bx, by = poly[(k + 1) % len(poly)]
        inside &= (bx - ax) * (ys - ay) - (by - ay) * (xs - ax) >= 0
    return inside


def visible_points(
    scene: SyntheticScene, index: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Indices, pixel projections, and depths of scene points seen by a frame."""
    if len(scene.points) == 0:
        return np.empty(0, dtype=int), np.empty((0, 2)), np.empty(0)
    pixels, depths = project_points(scene.points, scene.poses[index], scene.intrinsics)
    ok = (
        (depths > 0)
        & (pixels[:, 0] >= 0)
        & (pixels[:, 0] < scene.width)
        & (pixels[:, 1] >= 0)
        & (pixels[:, 1] < scene.height)
    )
    idx = np.flatnonzero(ok)
    return idx, pixels[idx], depths[idx]


def scene_reconstruction(scene: SyntheticScene) -> Reconstruction:
    """Exact reconstruction of the scene: true poses, points, and tracks."""
    frames = [
        RegisteredFrame(
            name=scene.frame_name(i),
            camera_id=1,
            pose=scene.poses[i],
            timestamp=i / scene.fps,
        )
        for i in range(scene.n_frames)
    ]
    observations: dict[int, list[tuple[str, tuple[float, float]]]] = {}
    for i in range(scene.n_frames):
        idx, pixels, _ = visible_points(scene, i)
        for point_index, pixel in zip(idx, pixels):
            observations.setdefault(int(point_index), []).append(
                (scene.frame_name(i), (float(pixel[0]), float(pixel[1])))
            )
    points = [
        SparsePoint(position=scene.points[k], error=0.0, track=tuple(obs))
        for k, obs in sorted(observations.items())
        if len(obs) >= 2
    ]
    return Reconstruction(
        cameras={1: scene.intrinsics},
        frames=frames,
        points=points,
        total_frame_count=scene.n_frames,
    )


class SceneFrameSource:
    """FrameSource adapter rendering scene frames on demand."""

    def __init__(self, scene: SyntheticScene):
        self.scene = scene

    def __len__(self) -> int:
        return self.scene.n_frames

    def name(self, index: int) -> str:
        return self.scene.frame_name(index)

    def timestamp(self, index: int) -> float:
        return index / self.scene.fps

    def load(self, index: int) -> np.ndarray:
        return render(self.scene, index)


def render_to_directory(scene: SyntheticScene, out_dir: str | Path) -> Path:
    """Write all frames as 8-bit grayscale PNGs plus a frames.txt manifest.

    The PNGs quantize exactly the way the feature extractor quantizes an
    in-memory float frame, so filtering a rendered directory matches
    filtering the in-memory scene.
    """
    from PIL import Image

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    for i in range(scene.n_frames):
        img = np.clip(np.round(render(scene, i).astype(np.float64) * 255.0), 0, 255).astype(
            np.uint8
        )
        name = scene.frame_name(i)
        Image.fromarray(img, mode="L").save(out_dir / name)
        lines.append(f"{name} {i / scene.fps:.6f}")
    (out_dir / "frames.txt").write_text("\n".join(lines) + "\n")
    return out_dir


def scene_to_json(scene: SyntheticScene, path: str | Path) -> None:
    """Persist a scene preset as JSON."""
    data = {
        "width": scene.width,
        "height": scene.height,
        "fps": scene.fps,
        "camera": {
            "model": scene.intrinsics.model.value,
            "width": scene.intrinsics.width,
            "height": scene.intrinsics.height,
            "params": list(scene.intrinsics.params),
        },
        "plane": {
            "origin": scene.plane.origin.tolist(),
            "u_axis": scene.plane.u_axis.tolist(),
            "v_axis": scene.plane.v_axis.tolist(),
            "noise_seed": scene.plane.noise_seed,
            "noise_frequency": scene.plane.noise_frequency,
            "octaves": scene.plane.octaves,
        },
        "patches": [
            {
                "object_id": p.object_id,
                "u_min": p.u_min,
                "v_min": p.v_min,
                "u_max": p.u_max,
                "v_max": p.v_max,
                "noise_seed": p.noise_seed,
            }
            for p in scene.patches
        ],
        "poses": [
            {"rotation": p.rotation.tolist(), "translation": p.translation.tolist()}
            for p in scene.poses
        ],
        "points": scene.points.tolist(),
    }
    Path(path).write_text(json.dumps(data, indent=1))


def scene_from_json(path: str | Path) -> SyntheticScene:
    data = json.loads(Path(path).read_text())
    cam = data["camera"]
    intr = CameraIntrinsics(
        CameraModel(cam["model"]), cam["width"], cam["height"], tuple(cam["params"])
    )
    plane = PlaneSpec(
        origin=np.array(data["plane"]["origin"]),
        u_axis=np.array(data["plane"]["u_axis"]),
        v_axis=np.array(data["plane"]["v_axis"]),
        noise_seed=data["plane"]["noise_seed"],
        noise_frequency=data["plane"]["noise_frequency"],
        octaves=data["plane"]["octaves"],
    )
    patches = tuple(ObjectPatch(**p) for p in data["patches"])
    poses = [
        RigidPose(np.array(p["rotation"]), np.array(p["translation"])) for p in data["poses"]
    ]
    return SyntheticScene(
        width=data["width"],
        height=data["height"],
        intrinsics=intr,
        poses=poses,
        plane=plane,
        patches=patches,
        points=np.array(data["points"]).reshape(-1, 3),
        fps=data["fps"],
    )


# ---------------------------------------------------------------------------
# Scene presets


def _base_plane(seed: int, depth: float = 4.0) -> PlaneSpec:
    return PlaneSpec(
        origin=np.array([0.0, 0.0, depth]),
        u_axis=np.array([1.0, 0.0, 0.0]),
        v_axis=np.array([0.0, 1.0, 0.0]),
        noise_seed=seed,
    )


def _point_grid(
    seed: int, u_range: tuple[float, float], v_range: tuple[float, float], spacing: float,
    plane: PlaneSpec, jitter: float = 0.03,
) -> np.ndarray:
    us = np.arange(u_range[0], u_range[1] + 1e-9, spacing)
    vs = np.arange(v_range[0], v_range[1] + 1e-9, spacing)
    uu, vv = np.meshgrid(us, vs)
    uv = np.stack([uu.ravel(), vv.ravel()], axis=1)
    rng = np.random.default_rng(seed)
    uv = uv + rng.uniform(-jitter, jitter, size=uv.shape)
    return plane.to_world(uv)


def _dwell_jitter(i: int) -> tuple[float, float]:
    """Deterministic small head wobble (yaw, pitch) in radians."""
    yaw = math.radians(0.4) * math.sin(2 * math.pi * i / 13.0)
    pitch = math.radians(0.3) * math.sin(2 * math.pi * i / 7.0)
    return yaw, pitch


def static_scene(seed: int = 0, n_frames: int = 10) -> SyntheticScene:
    """Fixed camera: every pairwise overlap is exactly 1."""
    plane = _base_plane(seed)
    poses = [look_pose((0.0, 0.0, 0.0)) for _ in range(n_frames)]
    points = _point_grid(seed + 1, (-2.0, 2.0), (-1.3, 1.3), 0.25, plane)
    return SyntheticScene(456, 256, default_intrinsics(), poses, plane, points=points)


def panning_scene(
    seed: int = 0, n_frames: int = 60, yaw_step_deg: float = 1.0
) -> SyntheticScene:
    """Constant-rate pan; window boundaries are evenly spaced."""
    plane = _base_plane(seed)
    poses = [look_pose((0.0, 0.0, 0.0), yaw=math.radians(i * yaw_step_deg)) for i in range(n_frames)]
    u_max = 4.0 * math.tan(math.radians(n_frames * yaw_step_deg)) + 2.5 if n_frames * yaw_step_deg < 80 else 25.0
    points = _point_grid(seed + 1, (-2.5, u_max), (-1.3, 1.3), 0.3, plane)
    return SyntheticScene(456, 256, default_intrinsics(), poses, plane, points=points)


def hotspot_scene(
    seed: int = 0,
    n_dwell: int = 100,
    n_pan: int = 20,
    n_dwell2: int = 100,
    pan_total_deg: float = 50.0,
) -> SyntheticScene:
    """Hot-spot dwell, fast pan to a second hot-spot, dwell again.

    Dwell segments wobble by well under the window threshold; the pan
    sweeps fast enough that windows there span only a few frames, so the
    filter concentrates kept frames in the transition.
    """
    plane = _base_plane(seed)
    poses: list[RigidPose] = []
    for i in range(n_dwell):
        yaw_j, pitch_j = _dwell_jitter(i)
        poses.append(look_pose((0.0, 0.0, 0.0), yaw=yaw_j, pitch=pitch_j))
    pan_total = math.radians(pan_total_deg)
    for k in range(n_pan):
        poses.append(look_pose((0.0, 0.0, 0.0), yaw=pan_total * (k + 1) / (n_pan + 1)))
    for i in range(n_dwell2):
        yaw_j, pitch_j = _dwell_jitter(i)
        poses.append(look_pose((0.0, 0.0, 0.0), yaw=pan_total + yaw_j, pitch=pitch_j))
    u_max = 4.0 * math.tan(pan_total) + 2.5
    points = _point_grid(seed + 1, (-2.5, u_max), (-1.3, 1.3), 0.3, plane)
    return SyntheticScene(456, 256, default_intrinsics(), poses, plane, points=points)


def abrupt_cut_scene(seed: int = 0, n_first: int = 5, n_second: int = 5) -> SyntheticScene:
    """Two static segments joined by a hard cut with zero visual overlap."""
    plane = _base_plane(seed)
    cut_yaw = math.radians(60.0)
    poses = [look_pose((0.0, 0.0, 0.0)) for _ in range(n_first)]
    poses += [look_pose((0.0, 0.0, 0.0), yaw=cut_yaw) for _ in range(n_second)]
    points = _point_grid(seed + 1, (-2.0, 9.5), (-1.3, 1.3), 0.3, plane)
    return SyntheticScene(456, 256, default_intrinsics(), poses, plane, points=points)


def translating_scene(seed: int = 0, n_frames: int = 50, shift_total: float = 2.4) -> SyntheticScene:
    """Camera translating parallel to the plane past one static object patch.

    The patch spans roughly 140 px at the start, so a mask held fixed in
    2D drifts off the object quickly while its 3D lift stays put.
    """
    plane = _base_plane(seed)
    patch = ObjectPatch(object_id=1, u_min=0.27, v_min=-0.93, u_max=2.13, v_max=0.93,
                        noise_seed=seed + 77)
    steps = np.linspace(0.0, shift_total, n_frames)
    poses = [look_pose((float(s), 0.0, 0.0)) for s in steps]
    points = _point_grid(seed + 1, (-1.5, 3.6), (-1.25, 1.25), 0.21, plane)
    return SyntheticScene(
        456, 256, default_intrinsics(), poses, plane, patches=(patch,), points=points
    )


def leaving_frustum_scene(seed: int = 0, n_frames: int = 50) -> SyntheticScene:
    """Static object; the camera pans away until the object leaves the view."""
    plane = _base_plane(seed)
    patch = ObjectPatch(object_id=1, u_min=-0.6, v_min=-0.6, u_max=0.6, v_max=0.6,
                        noise_seed=seed + 77)
    poses = [look_pose((0.0, 0.0, 0.0), yaw=math.radians(4.0 * i)) for i in range(n_frames)]
    points = _point_grid(seed + 1, (-1.0, 1.0), (-1.0, 1.0), 0.15, plane)
    return SyntheticScene(
        456, 256, default_intrinsics(), poses, plane, patches=(patch,), points=points
    )
