"""Projection, pose, and rotation-statistics tests.

Derived expectations come from independent oracles written here: direct
formula evaluation for projection (scipy handles the quaternion), a
high-iteration reference undistorter, axis-angle averaging for coaxial
rotation means, and a brute-force reprojection-error loop.
"""

import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from egofields.geometry import (
    CameraIntrinsics,
    CameraModel,
    PointBehindCameraError,
    Reconstruction,
    RegisteredFrame,
    RigidPose,
    SparsePoint,
    backproject,
    euler_to_matrix,
    mean_reprojection_error,
    mean_rotation,
    project,
    project_points,
    quat_to_matrix,
    relative_orientation,
)

from conftest import random_pose, random_unit_quaternion


def oracle_project(point, quat, translation, intr):
    """Independent projection: scipy rotation + explicit distortion formulas."""
    rot = Rotation.from_quat([quat[1], quat[2], quat[3], quat[0]])  # scipy is xyzw
    p_cam = rot.apply(point) + translation
    x, y = p_cam[0] / p_cam[2], p_cam[1] / p_cam[2]
    if intr.model == CameraModel.SIMPLE_RADIAL:
        f, cx, cy, k = intr.params
        r2 = x * x + y * y
        x, y = x * (1 + k * r2), y * (1 + k * r2)
        return np.array([f * x + cx, f * y + cy]), p_cam[2]
    if intr.model == CameraModel.OPENCV:
        fx, fy, cx, cy, k1, k2, p1, p2 = intr.params
        r2 = x * x + y * y
        radial = 1 + k1 * r2 + k2 * r2 * r2
        xd = x * radial + 2 * p1 * x * y + p2 * (r2 + 2 * x * x)
        yd = y * radial + p1 * (r2 + 2 * y * y) + 2 * p2 * x * y
        return np.array([fx * xd + cx, fy * yd + cy]), p_cam[2]
    fx = intr.fx
    fy = intr.fy
    cx, cy = intr.principal_point
    return np.array([fx * x + cx, fy * y + cy]), p_cam[2]


class TestProject:
    def test_principal_point(self):
        intr = CameraIntrinsics(CameraModel.SIMPLE_PINHOLE, 456, 256, (100.0, 228.0, 128.0))
        pixel, depth = project(np.array([0.0, 0.0, 1.0]), RigidPose.identity(), intr)
        np.testing.assert_allclose(pixel, [228.0, 128.0])
        assert depth == 1.0

    def test_similar_triangles(self):
        intr = CameraIntrinsics(CameraModel.SIMPLE_PINHOLE, 456, 256, (100.0, 0.0, 0.0))
        pixel, depth = project(np.array([1.0, 0.0, 2.0]), RigidPose.identity(), intr)
        np.testing.assert_allclose(pixel, [50.0, 0.0])
        assert depth == 2.0

    def test_matches_symbolic_oracle_simple_radial(self, simple_radial):
        rng = np.random.default_rng(11)
        for _ in range(50):
            pose = random_pose(rng)
            # Points in front of the camera.
            p_cam = np.array([rng.uniform(-0.5, 0.5), rng.uniform(-0.3, 0.3), rng.uniform(1, 5)])
            point = pose.inverse().transform(p_cam)
            pixel, depth = project(point, pose, simple_radial)
            expected, exp_depth = oracle_project(point, pose.rotation, pose.translation, simple_radial)
            np.testing.assert_allclose(pixel, expected, atol=1e-9)
            assert depth == pytest.approx(exp_depth, abs=1e-9)

    def test_behind_camera_is_distinct_error(self, simple_pinhole):
        with pytest.raises(PointBehindCameraError):
            project(np.array([0.0, 0.0, -1.0]), RigidPose.identity(), simple_pinhole)

    def test_out_of_frame_is_not_an_error(self, simple_pinhole):
        pixel, _ = project(np.array([10.0, 0.0, 1.0]), RigidPose.identity(), simple_pinhole)
        assert pixel[0] > simple_pinhole.width  # caller's job to check bounds


class TestBackproject:
    def test_pinhole_round_trip(self, pinhole):
        rng = np.random.default_rng(3)
        pose = random_pose(rng)
        for _ in range(100):
            px = rng.uniform([0, 0], [456, 256])
            world = backproject(px, 3.0, pose, pinhole)
            back, depth = project(world, pose, pinhole)
            np.testing.assert_allclose(back, px, atol=1e-9)
            assert depth == pytest.approx(3.0, abs=1e-9)

    def test_radial_round_trip(self, simple_radial):
        rng = np.random.default_rng(4)
        for _ in range(100):
            px = rng.uniform([0, 0], [456, 256])
            world = backproject(px, 2.0, RigidPose.identity(), simple_radial)
            back, _ = project(world, RigidPose.identity(), simple_radial)
            np.testing.assert_allclose(back, px, atol=1e-4)

    def test_radial_matches_high_iteration_reference(self, simple_radial):
        # Reference undistort: 500 plain fixed-point iterations.
        f, cx, cy, k = simple_radial.params
        rng = np.random.default_rng(5)
        for _ in range(20):
            px = rng.uniform([40, 40], [416, 216])
            xd, yd = (px[0] - cx) / f, (px[1] - cy) / f
            x, y = xd, yd
            for _ in range(500):
                r2 = x * x + y * y
                x = xd / (1 + k * r2)
                y = yd / (1 + k * r2)
            expected = np.array([x * 2.0, y * 2.0, 2.0])
            world = backproject(px, 2.0, RigidPose.identity(), simple_radial)
            np.testing.assert_allclose(world, expected, atol=1e-8)

    def test_principal_point_goes_down_optical_axis(self, simple_pinhole):
        for depth in (0.5, 1.0, 7.3):
            world = backproject(np.array([228.0, 128.0]), depth, RigidPose.identity(), simple_pinhole)
            np.testing.assert_allclose(world, [0.0, 0.0, depth], atol=1e-12)

    def test_rejects_nonpositive_depth(self, simple_pinhole):
        with pytest.raises(ValueError):
            backproject(np.array([10.0, 10.0]), 0.0, RigidPose.identity(), simple_pinhole)


class TestRoundTripSuite:
    """Spec tolerance: < 1e-6 px undistorted, < 1e-4 px radial, 1000 samples."""

    @pytest.mark.parametrize("model", list(CameraModel))
    def test_thousand_samples(self, model, simple_pinhole, pinhole, simple_radial, opencv_cam):
        intr = {
            CameraModel.SIMPLE_PINHOLE: simple_pinhole,
            CameraModel.PINHOLE: pinhole,
            CameraModel.SIMPLE_RADIAL: simple_radial,
            CameraModel.OPENCV: opencv_cam,
        }[model]
        tol = 1e-6 if model in (CameraModel.SIMPLE_PINHOLE, CameraModel.PINHOLE) else 1e-4
        rng = np.random.default_rng(hash(model.value) % 2**32)
        pose = random_pose(rng)
        pixels = rng.uniform([0, 0], [intr.width, intr.height], size=(1000, 2))
        depths = rng.uniform(0.5, 10.0, size=1000)
        for px, d in zip(pixels, depths):
            world = backproject(px, d, pose, intr)
            back, _ = project(world, pose, intr)
            assert np.abs(back - px).max() < tol


class TestRigidPose:
    def test_compose_inverse_is_identity(self):
        rng = np.random.default_rng(7)
        point = rng.uniform(-3, 3, size=3)
        for _ in range(50):
            pose = random_pose(rng)
            round_trip = pose.inverse().transform(pose.transform(point))
            np.testing.assert_allclose(round_trip, point, atol=1e-9)

    def test_canonicalization_flips_sign(self):
        q = np.array([-0.5, 0.5, 0.5, 0.5])
        pose = RigidPose(q, np.zeros(3))
        assert pose.rotation[0] >= 0
        np.testing.assert_allclose(quat_to_matrix(pose.rotation), quat_to_matrix(q))

    def test_rejects_bad_norm(self):
        with pytest.raises(ValueError):
            RigidPose(np.array([1.0, 1.0, 0.0, 0.0]), np.zeros(3))

    def test_camera_center(self):
        rng = np.random.default_rng(8)
        pose = random_pose(rng)
        np.testing.assert_allclose(pose.transform(pose.camera_center()), np.zeros(3), atol=1e-12)

    def test_project_points_matches_scalar(self, pinhole):
        rng = np.random.default_rng(9)
        pose = random_pose(rng)
        cam_pts = rng.uniform([-1, -1, 1], [1, 1, 6], size=(40, 3))
        world = pose.inverse().transform(cam_pts)
        pixels, depths = project_points(world, pose, pinhole)
        for k in range(40):
            px, d = project(world[k], pose, pinhole)
            np.testing.assert_allclose(pixels[k], px, atol=1e-9)
            assert depths[k] == pytest.approx(d)


class TestMeanRotation:
    def test_identity_on_copies(self):
        rng = np.random.default_rng(12)
        q = random_unit_quaternion(rng)
        mean = mean_rotation([q] * 5)
        expected = q if q[0] >= 0 else -q
        np.testing.assert_allclose(mean, expected, atol=1e-12)

    def test_antipodal_equivalence(self):
        rng = np.random.default_rng(13)
        q = random_unit_quaternion(rng)
        mean = mean_rotation([q, -q])
        expected = q if q[0] >= 0 else -q
        np.testing.assert_allclose(np.abs(mean), np.abs(expected), atol=1e-12)

    def test_coaxial_bisection(self):
        # Oracle: rotations about a shared axis average their angles.
        axis = np.array([1.0, 2.0, -1.0])
        axis /= np.linalg.norm(axis)

        def quat(deg):
            half = math.radians(deg) / 2
            return np.concatenate(([math.cos(half)], math.sin(half) * axis))

        mean = mean_rotation([quat(10), quat(30)])
        np.testing.assert_allclose(mean, quat(20), atol=1e-12)

    def test_invariant_to_signs_and_order(self):
        rng = np.random.default_rng(14)
        quats = [random_unit_quaternion(rng) for _ in range(6)]
        base = mean_rotation(quats)
        flipped = [q * (-1) ** i for i, q in enumerate(quats)]
        np.testing.assert_allclose(mean_rotation(flipped), base, atol=1e-9)
        np.testing.assert_allclose(mean_rotation(quats[::-1]), base, atol=1e-9)

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            mean_rotation([])


class TestRelativeOrientation:
    def test_zero_for_reference_equal(self):
        rng = np.random.default_rng(15)
        for _ in range(20):
            pose = random_pose(rng)
            angles = relative_orientation(pose, pose.rotation)
            assert angles == (0.0, 0.0, 0.0)

    def test_pitch_only_rotation(self):
        # Oracle: rotation-matrix Euler extraction via scipy, intrinsic xyz.
        pose = RigidPose.from_axis_angle([1, 0, 0], math.radians(15))
        pitch, yaw, roll = relative_orientation(pose, np.array([1.0, 0.0, 0.0, 0.0]))
        scipy_angles = Rotation.from_matrix(pose.rotation_matrix()).as_euler("XYZ")
        assert pitch == pytest.approx(math.radians(15), abs=1e-12)
        assert yaw == pytest.approx(0.0, abs=1e-12)
        assert roll == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose([pitch, yaw, roll], scipy_angles, atol=1e-12)

    def test_decompose_recompose_round_trip(self):
        rng = np.random.default_rng(16)
        for _ in range(50):
            pose = random_pose(rng)
            reference = random_unit_quaternion(rng)
            pitch, yaw, roll = relative_orientation(pose, reference)
            recomposed = euler_to_matrix(pitch, yaw, roll)
            expected = quat_to_matrix(reference).T @ pose.rotation_matrix()
            np.testing.assert_allclose(recomposed, expected, atol=1e-9)

    def test_gimbal_lock_canonical_branch(self):
        pose = RigidPose.from_axis_angle([0, 1, 0], math.pi / 2)
        pitch, yaw, roll = relative_orientation(pose, np.array([1.0, 0.0, 0.0, 0.0]))
        assert yaw == pytest.approx(math.pi / 2)
        assert roll == 0.0
        recomposed = euler_to_matrix(pitch, yaw, roll)
        np.testing.assert_allclose(recomposed, pose.rotation_matrix(), atol=1e-9)


def _tiny_recon(intr, observations):
    """One-camera recon with two frames and one tracked point."""
    frames = [
        RegisteredFrame("a.png", 1, RigidPose.identity(), 0.0),
        RegisteredFrame("b.png", 1, RigidPose(np.array([1.0, 0, 0, 0]), np.array([0.1, 0, 0])), 0.1),
    ]
    point = SparsePoint(
        position=np.array([0.2, -0.1, 3.0]),
        track=tuple(zip(("a.png", "b.png"), observations)),
    )
    return Reconstruction(cameras={1: intr}, frames=frames, points=[point], total_frame_count=2)


class TestMeanReprojectionError:
    def test_exact_observations_give_zero(self, simple_pinhole):
        pose_b = RigidPose(np.array([1.0, 0, 0, 0]), np.array([0.1, 0, 0]))
        pa, _ = project(np.array([0.2, -0.1, 3.0]), RigidPose.identity(), simple_pinhole)
        pb, _ = project(np.array([0.2, -0.1, 3.0]), pose_b, simple_pinhole)
        recon = _tiny_recon(simple_pinhole, [tuple(pa), tuple(pb)])
        assert mean_reprojection_error(recon) == pytest.approx(0.0, abs=1e-12)

    def test_unit_x_perturbation_gives_one(self, simple_pinhole):
        pose_b = RigidPose(np.array([1.0, 0, 0, 0]), np.array([0.1, 0, 0]))
        pa, _ = project(np.array([0.2, -0.1, 3.0]), RigidPose.identity(), simple_pinhole)
        pb, _ = project(np.array([0.2, -0.1, 3.0]), pose_b, simple_pinhole)
        recon = _tiny_recon(simple_pinhole, [(pa[0] + 1.0, pa[1]), (pb[0] + 1.0, pb[1])])
        assert mean_reprojection_error(recon) == pytest.approx(1.0, abs=1e-12)

    def test_random_perturbations_match_brute_force(self, simple_pinhole):
        rng = np.random.default_rng(17)
        pose_b = RigidPose(np.array([1.0, 0, 0, 0]), np.array([0.1, 0, 0]))
        point = np.array([0.2, -0.1, 3.0])
        pa, _ = project(point, RigidPose.identity(), simple_pinhole)
        pb, _ = project(point, pose_b, simple_pinhole)
        noise = rng.normal(0, 2.0, size=(2, 2))
        recon = _tiny_recon(simple_pinhole, [tuple(pa + noise[0]), tuple(pb + noise[1])])
        brute = np.mean([np.linalg.norm(noise[0]), np.linalg.norm(noise[1])])
        assert mean_reprojection_error(recon) == pytest.approx(brute, abs=1e-9)

    def test_stored_mode_uses_point_errors(self, simple_pinhole):
        recon = _tiny_recon(simple_pinhole, [(0.0, 0.0), (1.0, 1.0)])
        recon.points[0] = SparsePoint(
            position=recon.points[0].position, error=0.42, track=recon.points[0].track
        )
        assert mean_reprojection_error(recon, use_stored=True) == pytest.approx(0.42)

    def test_empty_cloud_rejected(self, simple_pinhole):
        recon = Reconstruction(
            cameras={1: simple_pinhole},
            frames=[RegisteredFrame("a.png", 1, RigidPose.identity())],
        )
        with pytest.raises(ValueError):
            mean_reprojection_error(recon)


class TestValidation:
    def test_param_count_enforced(self):
        with pytest.raises(ValueError):
            CameraIntrinsics(CameraModel.SIMPLE_PINHOLE, 10, 10, (1.0, 2.0))

    def test_focal_positive(self):
        with pytest.raises(ValueError):
            CameraIntrinsics(CameraModel.SIMPLE_PINHOLE, 10, 10, (-1.0, 2.0, 3.0))

    def test_duplicate_frame_names_rejected(self, simple_pinhole):
        frames = [
            RegisteredFrame("a.png", 1, RigidPose.identity()),
            RegisteredFrame("a.png", 1, RigidPose.identity()),
        ]
        with pytest.raises(ValueError):
            Reconstruction(cameras={1: simple_pinhole}, frames=frames)

    def test_track_must_reference_known_frames(self, simple_pinhole):
        frames = [RegisteredFrame("a.png", 1, RigidPose.identity())]
        point = SparsePoint(
            position=np.zeros(3), track=(("a.png", (0.0, 0.0)), ("ghost.png", (1.0, 1.0)))
        )
        with pytest.raises(ValueError):
            Reconstruction(cameras={1: simple_pinhole}, frames=frames, points=[point])

    def test_total_below_registered_rejected(self, simple_pinhole):
        frames = [RegisteredFrame(f"{i}.png", 1, RigidPose.identity()) for i in range(3)]
        with pytest.raises(ValueError):
            Reconstruction(cameras={1: simple_pinhole}, frames=frames, total_frame_count=2)
