import numpy as np
import pytest

from egofields.geometry import CameraIntrinsics, CameraModel, RigidPose


@pytest.fixture
def simple_pinhole():
    return CameraIntrinsics(CameraModel.SIMPLE_PINHOLE, 456, 256, (300.0, 228.0, 128.0))


@pytest.fixture
def pinhole():
    return CameraIntrinsics(CameraModel.PINHOLE, 456, 256, (310.0, 295.0, 228.0, 128.0))


@pytest.fixture
def simple_radial():
    return CameraIntrinsics(CameraModel.SIMPLE_RADIAL, 456, 256, (300.0, 228.0, 128.0, 0.1))


@pytest.fixture
def opencv_cam():
    return CameraIntrinsics(
        CameraModel.OPENCV,
        456,
        256,
        (305.0, 298.0, 228.0, 128.0, 0.05, -0.01, 0.001, -0.0005),
    )


def random_pose(rng: np.random.Generator) -> RigidPose:
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    t = rng.uniform(-2.0, 2.0, size=3)
    return RigidPose(q, t)


def random_unit_quaternion(rng: np.random.Generator) -> np.ndarray:
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)
