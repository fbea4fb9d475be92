import numpy as np
import pytest

from mvglidar.scan.geometry import ScanPattern
from mvglidar.scan.scene import Scene, Plane, Box
from mvglidar.scan.simulator import MisalignmentSpec, NoiseSpec, simulate_frames
from mvglidar.calib.calibrate import SearchSpec

DELTA_T = 1e-6
M_TRUE = 37
K_TRUE = 452


def make_pattern(serpentine=True, rows=64, k_design=450):
    return ScanPattern(rows=rows, k_design=k_design, theta_range=(-0.35, 0.35),
                       phi_range=(-0.25, 0.25), delta_t=DELTA_T, serpentine=serpentine,
                       frame_period_laser=0.0292)


@pytest.fixture(scope='session')
def pattern():
    return make_pattern()


@pytest.fixture(scope='session')
def boxes_scene():
    """Back plane at z=12 with two boxes in front of it."""
    return Scene((
        Plane((0.0, 0.0, 1.0), 12.0),
        Box((-2.5, -1.5, 7.0), (-0.5, 1.0, 8.0)),
        Box((1.0, -0.8, 9.5), (2.6, 2.2, 10.5)),
    ))


@pytest.fixture(scope='session')
def plane_scene():
    return Scene((Plane((0.0, 0.0, 1.0), 10.0),))


@pytest.fixture(scope='session')
def tilted_scene():
    n = np.array([0.3, 0.0, 1.0])
    return Scene((Plane(tuple(n / np.linalg.norm(n)), 10.0),))


@pytest.fixture(scope='session')
def constant_scene():
    return Scene((), background_range=10.0)


@pytest.fixture(scope='session')
def search(pattern):
    return SearchSpec.around(pattern, m_max=49, k_halfwidth=5)


@pytest.fixture(scope='session')
def misaligned():
    return MisalignmentSpec(M_TRUE, 0.0, K_TRUE)


@pytest.fixture(scope='session')
def misaligned_frame(boxes_scene, pattern, misaligned):
    """Noiseless frame of the box scene with m=37, k_true=452."""
    return simulate_frames(boxes_scene, pattern, misaligned, NoiseSpec.none(), 1)[0]
