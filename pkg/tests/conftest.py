import numpy as np
import pytest

from tentpitch import GroundMesh


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def right_triangle():
    """The unit right triangle with the lifted-vertex examples: p=(0,1),
    q=(0,0), r=(1,0)."""
    return GroundMesh(2, [[0.0, 1.0], [0.0, 0.0], [1.0, 0.0]], [[0, 1, 2]])


@pytest.fixture
def equilateral():
    return GroundMesh(
        2,
        [[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3.0) / 2.0]],
        [[0, 1, 2]],
    )


@pytest.fixture
def regular_tet():
    return GroundMesh(
        3,
        [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.5, np.sqrt(3.0) / 2.0, 0.0],
            [0.5, np.sqrt(3.0) / 6.0, np.sqrt(2.0 / 3.0)],
        ],
        [[0, 1, 2, 3]],
    )


@pytest.fixture
def fan_mesh():
    """Interior vertex 0 of degree 6 surrounded by a hexagon."""
    verts = [[0.0, 0.0]]
    for k in range(6):
        a = k * np.pi / 3.0
        verts.append([np.cos(a), np.sin(a)])
    tris = [[0, 1 + k, 1 + (k + 1) % 6] for k in range(6)]
    return GroundMesh(2, verts, tris)


def random_rigid_motion(rng, d):
    """Random rotation + translation in R^d."""
    a = rng.normal(size=(d, d))
    q, r = np.linalg.qr(a)
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    shift = rng.normal(scale=3.0, size=d)
    return q, shift
