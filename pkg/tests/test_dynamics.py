import numpy as np
import pytest

from fourbody.central_config import (
    ConicParams,
    dziobek_solve,
    homographic_state,
    homographic_trajectory,
    laplace_homothetic_state,
)
from fourbody.dynamics import (
    KinematicRates,
    accelerations,
    cartesian_velocities,
    euler_equation_residual,
    integrate,
    internal_angular_momentum,
    kinetic_energy_new_coords,
    min_distance,
    newton_potential,
    node_elimination_check,
    potential_scale_gradient,
    rates_by_central_difference,
    rates_from_velocities,
    scale_equation_lhs,
    scale_equation_residual,
    shape_potential,
    torque_consistency_check,
    total_energy,
)
from fourbody.errors import CollisionAbort
from fourbody.rotations import euler_zxz, rot_x
from fourbody.tetrahedron import build_shape_tetrahedron
from fourbody.transforms import ConfigurationState, forward_transform

from conftest import generic_state, random_decomposition, random_masses

_CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


def random_rates(rng):
    return KinematicRates(rng.normal(size=3), rng.normal(size=3), rng.normal(size=3))


@pytest.fixture(scope="module")
def generic_runs():
    """Generic trajectory at three step sizes, window of 7 samples around t = 0.15."""
    tet, state = generic_state()
    runs = {}
    for dt in (2e-3, 1e-3, 5e-4):
        s = integrate(state, dt, 0.3, tet=tet)
        n = len(s) // 2
        runs[dt] = s[n - 3:n + 4]
    return tet, runs


def test_potential_and_forces(rng):
    X = rng.normal(size=(3, 4))
    m = np.array([4.0, 3.0, 2.0, 1.0])
    V = newton_potential(X, m)
    expect = -sum(m[i] * m[j] / np.linalg.norm(X[:, i] - X[:, j]) for i in range(4) for j in range(i + 1, 4))
    assert V == pytest.approx(expect, rel=1e-14)
    a = accelerations(X, m)
    h = 1e-6
    for i in range(3):
        for j in range(4):
            Xp, Xm = X.copy(), X.copy()
            Xp[i, j] += h
            Xm[i, j] -= h
            grad = (newton_potential(Xp, m) - newton_potential(Xm, m)) / (2 * h)
            assert -grad / m[j] == pytest.approx(a[i, j], rel=1e-6, abs=1e-8)
    assert np.allclose(a @ m, 0, atol=1e-13)


def test_kinetic_energy_convention(rng):
    for _ in range(200):
        tet = build_shape_tetrahedron(random_masses(rng))
        dec = random_decomposition(rng)
        rates = random_rates(rng)
        V = cartesian_velocities(tet, dec, rates)
        st = ConfigurationState(forward_transform(tet, dec), V, tet.masses)
        K = kinetic_energy_new_coords(dec, rates, tet.mu)
        assert K == pytest.approx(st.kinetic_energy(), rel=1e-10)


def test_rates_inverse_of_velocities(rng, reference_tet):
    for _ in range(100):
        dec = random_decomposition(rng)
        rates = random_rates(rng)
        back = rates_from_velocities(dec, cartesian_velocities(reference_tet, dec, rates), reference_tet)
        assert np.allclose(back.Rdot, rates.Rdot, atol=1e-10)
        assert np.allclose(back.omega, rates.omega, atol=1e-10)
        assert np.allclose(back.Omega, rates.Omega, atol=1e-10)


def test_angular_momentum_convention(rng, reference_tet):
    for _ in range(100):
        dec = random_decomposition(rng)
        rates = random_rates(rng)
        st = ConfigurationState(forward_transform(reference_tet, dec), cartesian_velocities(reference_tet, dec, rates),
                                reference_tet.masses)
        L = dec.G @ internal_angular_momentum(dec, rates, reference_tet.mu)
        assert np.allclose(L, st.angular_momentum(), atol=1e-10)


def test_central_difference_rates_converge(generic_runs):
    _, runs = generic_runs
    errs = []
    for dt in (2e-3, 1e-3):
        s = runs[dt]
        fd = rates_by_central_difference(s, 3)
        ex = s[3].rates
        errs.append(max(np.abs(fd.omega - ex.omega).max(), np.abs(fd.Omega - ex.Omega).max(),
                        np.abs(fd.Rdot - ex.Rdot).max()))
    assert errs[1] < 1e-4
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.1)


def test_energy_and_momentum_conserved():
    cc = dziobek_solve([-3, 4, 6, -15])
    conic = ConicParams(1.0, 0.2)
    period = homographic_trajectory(cc, conic, 2).period
    tet = cc.tet
    s = integrate(homographic_state(cc, conic, 0.0), 1e-3, 2 * period, tet=tet, sample_every=100)
    E = np.array([x.energy for x in s])
    L = np.array([x.L_inertial for x in s])
    assert np.max(np.abs(E - E[0])) < 1e-8 * abs(E[0])
    assert np.max(np.abs(L - L[0])) < 1e-12


def test_shape_energy_and_momentum_along_trajectory():
    tet, state = generic_state()
    s = integrate(state, 1e-3, 0.3, tet=tet, sample_every=10)
    for x in s:
        assert total_energy(x, tet) == pytest.approx(x.energy, rel=1e-10)
        G_L = x.dec.G @ internal_angular_momentum(x.dec, x.rates, tet.mu)
        assert np.allclose(G_L, x.L_inertial, atol=1e-8)


def test_node_elimination(generic_runs):
    tet, runs = generic_runs
    assert node_elimination_check(runs[1e-3], tet.mu) < 1e-10


def test_residuals_converge_second_order(generic_runs):
    tet, runs = generic_runs
    res = {dt: (euler_equation_residual(s, tet.mu).max(), scale_equation_residual(s, tet).max(),
                torque_consistency_check(s, tet)) for dt, s in runs.items()}
    for k in range(3):
        r = [res[dt][k] for dt in (2e-3, 1e-3, 5e-4)]
        assert r[0] / r[1] == pytest.approx(4, rel=0.15)
        assert r[1] / r[2] == pytest.approx(4, rel=0.15)
        assert r[2] < 5e-5


def test_homothetic_residuals_tiny():
    state = laplace_homothetic_state([4, 3, 2, 1])
    tet = build_shape_tetrahedron([4, 3, 2, 1])
    s = integrate(state, 2.5e-4, 0.02, tet=tet)
    assert euler_equation_residual(s, tet.mu).max() < 1e-10
    assert torque_consistency_check(s, tet) < 1e-8
    assert scale_equation_residual(s, tet).max() < 1e-5


def test_potential_scale_gradient_homogeneous(rng, reference_tet):
    dec = random_decomposition(rng)
    g = potential_scale_gradient(dec.R, dec.Gp, reference_tet)
    # V is homogeneous of degree -1 in the scales
    assert g @ dec.R == pytest.approx(-shape_potential(dec.R, dec.Gp, reference_tet), rel=1e-8)


def test_collision_aborts():
    X = np.array([[0, 1e-3, 1, 0], [0, 0, 1, 1], [0, 0, 0, 1.0]])
    st = ConfigurationState.centered(X, None, [4, 3, 2, 1])
    with pytest.raises(CollisionAbort) as info:
        integrate(st, 1e-4, 1.0, abort_distance=1e-2)
    assert info.value.min_distance < 1e-2
    assert min_distance(X) == pytest.approx(1e-3)


def test_integrate_rejects_bad_arguments():
    tet, state = generic_state()
    with pytest.raises(ValueError):
        integrate(state, 0.0, 1.0)
    with pytest.raises(ValueError):
        integrate(state, 1e-3, 1.0, method="euler")


# Negative controls: forms with the index and sign slips that are easy to
# make when writing these equations out by hand do not hold along a
# Newtonian trajectory.


def _slipped_euler_rhs(dec, rates, mu):
    R, w, W = dec.R, rates.omega, rates.Omega
    out = np.empty(3)
    for i, j, k in _CYCLIC:
        out[i] = mu * (R[k] ** 2 - R[i] ** 2) * w[j] * w[k] + 2 * mu * R[i] * (R[j] * w[j] * W[k] - R[k] * w[k] * W[j])
    return out


def test_slipped_euler_form_fails(generic_runs):
    tet, runs = generic_runs
    s = runs[5e-4]
    good = euler_equation_residual(s, tet.mu).max()
    L = [internal_angular_momentum(x.dec, x.rates, tet.mu) for x in s]
    k = 3
    dL = (L[k + 1] - L[k - 1]) / (s[k + 1].t - s[k - 1].t)
    bad = np.abs(dL - _slipped_euler_rhs(s[k].dec, s[k].rates, tet.mu)).max()
    assert bad > 1e3 * good


def test_centrifugal_sign_flip_fails(generic_runs):
    tet, runs = generic_runs
    s = runs[5e-4]
    good = scale_equation_residual(s, tet).max()
    k = 3
    x = s[k]
    Rddot = (s[k + 1].rates.Rdot - s[k - 1].rates.Rdot) / (s[k + 1].t - s[k - 1].t)
    lhs = scale_equation_lhs(x.dec, x.rates, Rddot, tet.mu)
    R, w, W = x.dec.R, x.rates.omega, x.rates.Omega
    flipped = lhs + 2 * tet.mu * np.array([R[i] * (w[j] ** 2 + w[k_] ** 2 + W[j] ** 2 + W[k_] ** 2)
                                           for i, j, k_ in _CYCLIC])
    bad = np.abs(flipped + potential_scale_gradient(R, x.dec.Gp, tet)).max()
    assert bad > 1e3 * good


def test_torque_sign_matters(generic_runs):
    tet, runs = generic_runs
    s = runs[5e-4]
    good = torque_consistency_check(s, tet)
    x = s[3]
    C = x.dec.Gp @ rot_x(np.pi / 2).T
    q = np.array([0.0, np.pi / 2, 0.0])
    h = 1e-6
    dVdq = []
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        dVdq.append((shape_potential(x.dec.R, C @ euler_zxz(q + e), tet)
                     - shape_potential(x.dec.R, C @ euler_zxz(q - e), tet)) / (2 * h))
    # |K.c - dV/dq| >= 2|dV/dq| - |K.c + dV/dq|
    assert 2 * np.max(np.abs(dVdq)) - good > 1e3 * good
