"""Camera models, rigid poses, projection, and rotation statistics.

Convention used throughout this package: extrinsics map WORLD coordinates
to CAMERA coordinates, i.e. ``x_cam = R @ x_world + t``.  This matches the
model format emitted by standard SfM tools, and it is the single most
common source of integration bugs, so every pose-consuming function in
this package assumes it without exception.  The camera looks along +Z of
its own frame; +X is right, +Y is down in the image.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CameraModel",
    "CameraIntrinsics",
    "RigidPose",
    "RegisteredFrame",
    "SparsePoint",
    "Reconstruction",
    "PointBehindCameraError",
    "UndistortError",
    "project",
    "project_points",
    "backproject",
    "normalized_coords",
    "pixel_rays",
    "mean_rotation",
    "relative_orientation",
    "mean_reprojection_error",
    "quat_to_matrix",
    "matrix_to_quat",
]

UNDISTORT_MAX_ITER = 50
UNDISTORT_TOL_PX = 1e-10


class PointBehindCameraError(ValueError):
    """Raised when a point has non-positive depth in the camera frame.

    Distinct from an out-of-frame projection, which is not an error
    (callers check pixel bounds themselves).
    """


class UndistortError(RuntimeError):
    """Iterative undistortion failed to converge (malformed intrinsics)."""


class CameraModel(enum.Enum):
    """The supported pinhole-family camera models.

    Parameter vector layout per model (all focal/principal-point values in
    pixels, distortion coefficients dimensionless):

    - SIMPLE_PINHOLE: f, cx, cy
    - PINHOLE:        fx, fy, cx, cy
    - SIMPLE_RADIAL:  f, cx, cy, k
    - OPENCV:         fx, fy, cx, cy, k1, k2, p1, p2
    """

    SIMPLE_PINHOLE = "SIMPLE_PINHOLE"
    PINHOLE = "PINHOLE"
    SIMPLE_RADIAL = "SIMPLE_RADIAL"
    OPENCV = "OPENCV"


MODEL_PARAM_COUNTS = {
    CameraModel.SIMPLE_PINHOLE: 3,
    CameraModel.PINHOLE: 4,
    CameraModel.SIMPLE_RADIAL: 4,
    CameraModel.OPENCV: 8,
}


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole-family intrinsics; immutable after construction."""

    model: CameraModel
    width: int
    height: int
    params: tuple[float, ...]

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"image size must be positive, got {self.width}x{self.height}")
        expected = MODEL_PARAM_COUNTS[self.model]
        if len(self.params) != expected:
            raise ValueError(
                f"{self.model.value} requires {expected} params, got {len(self.params)}"
            )
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        for f in self.focal_lengths:
            if f <= 0:
                raise ValueError(f"focal length must be positive, got {f}")

    @property
    def focal_lengths(self) -> tuple[float, ...]:
        if self.model in (CameraModel.SIMPLE_PINHOLE, CameraModel.SIMPLE_RADIAL):
            return (self.params[0],)
        return (self.params[0], self.params[1])

    @property
    def fx(self) -> float:
        return self.params[0]

    @property
    def fy(self) -> float:
        if self.model in (CameraModel.SIMPLE_PINHOLE, CameraModel.SIMPLE_RADIAL):
            return self.params[0]
        return self.params[1]

    @property
    def principal_point(self) -> tuple[float, float]:
        if self.model in (CameraModel.SIMPLE_PINHOLE, CameraModel.SIMPLE_RADIAL):
            return (self.params[1], self.params[2])
        return (self.params[2], self.params[3])

    @property
    def distortion(self) -> tuple[float, ...]:
        if self.model == CameraModel.SIMPLE_RADIAL:
            return (self.params[3],)
        if self.model == CameraModel.OPENCV:
            return tuple(self.params[4:8])
        return ()

    def calibration_matrix(self) -> np.ndarray:
        """3x3 K matrix (ignores distortion)."""
        cx, cy = self.principal_point
        return np.array(
            [[self.fx, 0.0, cx], [0.0, self.fy, cy], [0.0, 0.0, 1.0]], dtype=np.float64
        )


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix from a (qw, qx, qy, qz) unit quaternion."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ],
        dtype=np.float64,
    )


def matrix_to_quat(r: np.ndarray) -> np.ndarray:
    """Canonical (qw >= 0) unit quaternion from a rotation matrix."""
    m = np.asarray(r, dtype=np.float64)
    trace = m[0, 0] + m[1, 1] + m[2, 2]
    if trace > 0:
        s = math.sqrt(trace + 1.0) * 2
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2
        q = np.array(
            [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
        )
    elif m[1, 1] > m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2
        q = np.array(
            [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
        )
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2
        q = np.array(
            [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
        )
    q /= np.linalg.norm(q)
    return _canonical_quat(q)


def _canonical_quat(q: np.ndarray) -> np.ndarray:
    """Resolve the q/-q ambiguity: qw >= 0; if qw == 0, first nonzero component > 0."""
    for c in q:
        if c > 0:
            return q
        if c < 0:
            return -q
    raise ValueError("zero quaternion")


@dataclass(frozen=True)
class RigidPose:
    """World-to-camera rigid transform: x_cam = R(rotation) @ x_world + translation.

    The quaternion is stored as (qw, qx, qy, qz), unit norm, with the sign
    ambiguity resolved so qw >= 0.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.rotation, dtype=np.float64).reshape(4)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        norm = np.linalg.norm(q)
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"quaternion norm {norm} too far from 1")
        if abs(norm - 1.0) > 1e-12:
            # Renormalize real deviations only; leaving float-level ones
            # alone makes construction idempotent, so components survive
            # serialization round trips bit-exactly.
            q = q / norm
        q = _canonical_quat(q)
        q.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", q)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidPose":
        return cls(np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(3))

    @classmethod
    def from_matrix(cls, r: np.ndarray, t: np.ndarray) -> "RigidPose":
        return cls(matrix_to_quat(r), np.asarray(t, dtype=np.float64))

    @classmethod
    def from_axis_angle(
        cls, axis: np.ndarray, angle: float, translation: np.ndarray | None = None
    ) -> "RigidPose":
        axis = np.asarray(axis, dtype=np.float64)
        axis = axis / np.linalg.norm(axis)
        half = 0.5 * angle
        q = np.concatenate(([math.cos(half)], math.sin(half) * axis))
        return cls(q, np.zeros(3) if translation is None else translation)

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)

    def camera_center(self) -> np.ndarray:
        """Camera center in world coordinates: -R^T t."""
        return -self.rotation_matrix().T @ self.translation

    def transform(self, points: np.ndarray) -> np.ndarray:
        """Apply world->camera to an (N,3) or (3,) array."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation_matrix().T + self.translation

    def inverse(self) -> "RigidPose":
        r = self.rotation_matrix().T
        return RigidPose.from_matrix(r, -r @ self.translation)

    def compose(self, other: "RigidPose") -> "RigidPose":
        """Pose equivalent to applying ``other`` first, then ``self``."""
        r = self.rotation_matrix() @ other.rotation_matrix()
        t = self.rotation_matrix() @ other.translation + self.translation
        return RigidPose.from_matrix(r, t)


@dataclass(frozen=True)
class RegisteredFrame:
    """A video frame registered in a reconstruction."""

    name: str
    camera_id: int
    pose: RigidPose
    timestamp: float = 0.0

    def __post_init__(self):
        if self.timestamp < 0:
            raise ValueError(f"timestamp must be >= 0, got {self.timestamp}")


@dataclass(frozen=True)
class SparsePoint:
    """Triangulated 3D point with optional color and observation track.

    ``track`` holds (frame name, (x, y) observation in pixels) pairs; when
    present it must contain at least two observations.
    """

    position: np.ndarray
    color: tuple[int, int, int] | None = None
    error: float = 0.0
    track: tuple[tuple[str, tuple[float, float]], ...] | None = None

    def __post_init__(self):
        p = np.asarray(self.position, dtype=np.float64).reshape(3)
        p.setflags(write=False)
        object.__setattr__(self, "position", p)
        if self.error < 0:
            raise ValueError(f"reprojection error must be >= 0, got {self.error}")
        if self.track is not None:
            track = tuple((str(n), (float(x), float(y))) for n, (x, y) in self.track)
            if len(track) < 2:
                raise ValueError("track must contain at least 2 observations when present")
            object.__setattr__(self, "track", track)


@dataclass
class Reconstruction:
    """Sparse reconstruction: cameras, registered frames, and 3D points.

    ``total_frame_count`` counts all frames of the source video, registered
    or not; it is what registration rates are measured against.
    """

    cameras: dict[int, CameraIntrinsics]
    frames: list[RegisteredFrame]
    points: list[SparsePoint] = field(default_factory=list)
    total_frame_count: int = 0

    def __post_init__(self):
        if self.total_frame_count < len(self.frames):
            if self.total_frame_count == 0:
                self.total_frame_count = len(self.frames)
            else:
                raise ValueError(
                    f"total_frame_count {self.total_frame_count} < "
                    f"registered count {len(self.frames)}"
                )
        names = [f.name for f in self.frames]
        if len(set(names)) != len(names):
            raise ValueError("frame names must be unique within a reconstruction")
        name_set = set(names)
        for f in self.frames:
            if f.camera_id not in self.cameras:
                raise ValueError(f"frame {f.name!r} references unknown camera {f.camera_id}")
        for i, p in enumerate(self.points):
            if p.track is not None:
                for frame_name, _ in p.track:
                    if frame_name not in name_set:
                        raise ValueError(
                            f"point {i} track references unknown frame {frame_name!r}"
                        )

    @property
    def registration_rate(self) -> float:
        return len(self.frames) / self.total_frame_count

    def frame_by_name(self, name: str) -> RegisteredFrame:
        for f in self.frames:
            if f.name == name:
                return f
        raise KeyError(name)


def _distort_normalized(x: np.ndarray, y: np.ndarray, intr: CameraIntrinsics):
    """Apply the model's distortion to normalized image coordinates."""
    if intr.model in (CameraModel.SIMPLE_PINHOLE, CameraModel.PINHOLE):
        return x, y
    if intr.model == CameraModel.SIMPLE_RADIAL:
        k = intr.distortion[0]
        r2 = x * x + y * y
        factor = 1.0 + k * r2
        return x * factor, y * factor
    k1, k2, p1, p2 = intr.distortion
    r2 = x * x + y * y
    radial = 1.0 + r2 * (k1 + k2 * r2)
    xd = x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x)
    yd = y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y
    return xd, yd


def _undistort_normalized(xd: np.ndarray, yd: np.ndarray, intr: CameraIntrinsics):
    """Invert the distortion by fixed-point iteration (tolerance in pixels).

    Operates elementwise on arrays of any matching shape.
    """
    if intr.model in (CameraModel.SIMPLE_PINHOLE, CameraModel.PINHOLE):
        return xd, yd
    if np.size(xd) == 0:
        return xd, yd
    # Tolerance is specified in pixels; convert to normalized units.
    tol = UNDISTORT_TOL_PX / max(intr.focal_lengths)
    x = np.array(xd, dtype=np.float64)
    y = np.array(yd, dtype=np.float64)
    for _ in range(UNDISTORT_MAX_ITER):
        dx, dy = _distort_normalized(x, y, intr)
        x_new = x - (dx - xd)
        y_new = y - (dy - yd)
        moved = np.max(np.hypot(x_new - x, y_new - y))
        x, y = x_new, y_new
        if moved < tol:
            return x, y
    raise UndistortError(
        f"undistortion did not converge in {UNDISTORT_MAX_ITER} iterations "
        f"for {intr.model.value} params {intr.params}"
    )


def normalized_coords(pixels: np.ndarray, intr: CameraIntrinsics) -> np.ndarray:
    """Undistorted normalized image coordinates for (N,2) pixels."""
    px = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    cx, cy = intr.principal_point
    xd = (px[:, 0] - cx) / intr.fx
    yd = (px[:, 1] - cy) / intr.fy
    x, y = _undistort_normalized(xd, yd, intr)
    return np.stack([x, y], axis=1)


def pixel_rays(
    pixels: np.ndarray, pose: RigidPose, intr: CameraIntrinsics
) -> tuple[np.ndarray, np.ndarray]:
    """World-space viewing rays through pixels.

    Returns (camera center (3,), directions (N,3)); directions have unit
    depth in the camera frame, so center + depth * dir is the world point
    at that camera depth.
    """
    norm = normalized_coords(pixels, intr)
    dirs_cam = np.column_stack([norm, np.ones(len(norm))])
    r = pose.rotation_matrix()
    return pose.camera_center(), dirs_cam @ r


def project(
    point: np.ndarray, pose: RigidPose, intr: CameraIntrinsics
) -> tuple[np.ndarray, float]:
    """Project a world point to a pixel, returning (pixel, camera depth).

    Raises :class:`PointBehindCameraError` when the point has depth <= 0.
    An out-of-frame pixel is returned normally; bounds are the caller's
    concern.
    """
    p_cam = pose.transform(np.asarray(point, dtype=np.float64).reshape(3))
    depth = float(p_cam[2])
    if depth <= 0:
        raise PointBehindCameraError(f"point at camera depth {depth}")
    x, y = p_cam[0] / depth, p_cam[1] / depth
    xd, yd = _distort_normalized(x, y, intr)
    cx, cy = intr.principal_point
    return np.array([intr.fx * xd + cx, intr.fy * yd + cy]), depth


def project_points(
    points: np.ndarray, pose: RigidPose, intr: CameraIntrinsics
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized projection of (N,3) world points.

    Returns (pixels (N,2), depths (N,)); rows with depth <= 0 contain NaN
    pixels and the caller should mask on depth.
    """
    p_cam = pose.transform(np.asarray(points, dtype=np.float64).reshape(-1, 3))
    depths = p_cam[:, 2].copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(depths > 0, p_cam[:, 0] / depths, np.nan)
        y = np.where(depths > 0, p_cam[:, 1] / depths, np.nan)
    xd, yd = _distort_normalized(x, y, intr)
    cx, cy = intr.principal_point
    pixels = np.stack([intr.fx * xd + cx, intr.fy * yd + cy], axis=1)
    return pixels, depths


def backproject(
    pixel: np.ndarray, depth: float, pose: RigidPose, intr: CameraIntrinsics
) -> np.ndarray:
    """Invert :func:`project`: pixel + camera depth -> world point."""
    if depth <= 0:
        raise ValueError(f"depth must be positive, got {depth}")
    px = np.asarray(pixel, dtype=np.float64).reshape(1, 2)
    norm = normalized_coords(px, intr)[0]
    p_cam = np.array([norm[0] * depth, norm[1] * depth, depth])
    return pose.inverse().transform(p_cam)


def mean_rotation(quaternions) -> np.ndarray:
    """Chordal L2 mean of unit quaternions (qw, qx, qy, qz).

    Computed as the principal eigenvector of the sum of quaternion outer
    products, with signs pre-aligned to the first element.  Invariant to
    per-element sign flips and to input order.
    """
    quats = [np.asarray(q, dtype=np.float64).reshape(4) for q in quaternions]
    if not quats:
        raise ValueError("mean_rotation requires at least one quaternion")
    ref = quats[0]
    m = np.zeros((4, 4))
    for q in quats:
        if np.dot(q, ref) < 0:
            q = -q
        m += np.outer(q, q)
    eigvals, eigvecs = np.linalg.eigh(m)
    mean = eigvecs[:, np.argmax(eigvals)]
    return _canonical_quat(mean / np.linalg.norm(mean))


def relative_orientation(pose: RigidPose, reference: np.ndarray) -> tuple[float, float, float]:
    """(pitch, yaw, roll) of the pose's rotation relative to a reference quaternion.

    Decomposes reference^-1 * rotation as intrinsic rotations about the
    camera axes in the order x (pitch), y (yaw), z (roll), i.e.
    R = Rx(pitch) @ Ry(yaw) @ Rz(roll).  At gimbal lock (|yaw| = pi/2) the
    canonical branch roll = 0 is returned.  Angles in radians; intended for
    orientation histograms, not for pose arithmetic.
    """
    ref = np.asarray(reference, dtype=np.float64).reshape(4)
    if np.array_equal(ref, pose.rotation) or np.array_equal(-ref, pose.rotation):
        return 0.0, 0.0, 0.0
    r_ref = quat_to_matrix(ref / np.linalg.norm(ref))
    r = r_ref.T @ pose.rotation_matrix()
    sy = r[0, 2]
    if abs(sy) < 1.0 - 1e-12:
        yaw = math.asin(sy)
        pitch = math.atan2(-r[1, 2], r[2, 2])
        roll = math.atan2(-r[0, 1], r[0, 0])
    else:
        # Gimbal lock: only pitch+roll (or pitch-roll) is determined; pick roll = 0.
        yaw = math.copysign(math.pi / 2.0, sy)
        pitch = math.atan2(r[2, 1], r[1, 1])
        roll = 0.0
    return pitch, yaw, roll


def euler_to_matrix(pitch: float, yaw: float, roll: float) -> np.ndarray:
    """Inverse of :func:`relative_orientation`'s decomposition."""
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    cr, sr = math.cos(roll), math.sin(roll)
    rx = np.array([[1, 0, 0], [0, cp, -sp], [0, sp, cp]])
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rz = np.array([[cr, -sr, 0], [sr, cr, 0], [0, 0, 1]])
    return rx @ ry @ rz


def mean_reprojection_error(recon: Reconstruction, use_stored: bool = False) -> float:
    """Mean reprojection error in pixels over all (point, observation) pairs.

    With ``use_stored=True`` returns the mean of the per-point stored
    errors instead of recomputing from tracks; the two agree on models whose
    stored errors are accurate.
    """
    if use_stored:
        errors = [p.error for p in recon.points]
        if not errors:
            raise ValueError("reconstruction has no points")
        return float(np.mean(errors))
    frames = {f.name: f for f in recon.frames}
    total = 0.0
    count = 0
    for p in recon.points:
        if not p.track:
            continue
        for frame_name, (ox, oy) in p.track:
            frame = frames[frame_name]
            intr = recon.cameras[frame.camera_id]
            pixel, _ = project(p.position, frame.pose, intr)
            total += math.hypot(pixel[0] - ox, pixel[1] - oy)
            count += 1
    if count == 0:
        raise ValueError("reconstruction has no tracked observations")
    return total / count
