import sys

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from fourbody.tetrahedron import build_shape_tetrahedron
from fourbody.transforms import ConfigurationState, CoordinateDecomposition, forward_transform

REFERENCE_MASSES = (4.0, 3.0, 2.0, 1.0)


def random_masses(rng, min_gap=1e-3):
    """Descending, pairwise distinct positive masses spanning a few decades."""
    while True:
        m = np.sort(np.exp(rng.uniform(np.log(0.05), np.log(20.0), 4)))[::-1]
        if np.all(-np.diff(m) > min_gap * m[:-1]):
            return m


def random_rotation(rng):
    return Rotation.random(random_state=rng).as_matrix()


def random_decomposition(rng, min_gap=0.05):
    """Rotations and well separated scales ``R1 > R2 > |R3| > 0``."""
    while True:
        R = np.sort(rng.uniform(0.3, 2.5, 3))[::-1]
        if R[0] - R[1] > min_gap and R[1] - R[2] > min_gap:
            break
    if rng.random() < 0.5:
        R[2] = -R[2]
    return CoordinateDecomposition(random_rotation(rng), R, random_rotation(rng))


def generic_state(masses=REFERENCE_MASSES, seed=1):
    """Non-planar, rotating state with no symmetry (used for convergence runs)."""
    tet = build_shape_tetrahedron(masses)
    dec = CoordinateDecomposition(Rotation.random(random_state=seed).as_matrix(), np.array([1.5, 1.1, 0.7]),
                                  Rotation.random(random_state=seed + 10).as_matrix())
    X0 = forward_transform(tet, dec)
    rng = np.random.default_rng(seed)
    w = rng.normal(size=3)
    w *= 2.0 / np.linalg.norm(w)
    V0 = np.cross(w, X0.T).T + 0.3 * rng.normal(size=(3, 4))
    return tet, ConfigurationState.centered(X0, V0, masses)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def reference_tet():
    return build_shape_tetrahedron(REFERENCE_MASSES)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
