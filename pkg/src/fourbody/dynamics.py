"""
Newtonian four-body dynamics and the equations of motion in shape coordinates.

The Cartesian RK4 integrator is the reference; the shape-coordinate
equations (generalized Euler equations for ``G`` and ``Gp``, the scale
equations, node elimination, energy) are provided as evaluators and as
residual checks along integrated trajectories.

Angular velocities are body-frame: ``hat(omega) = G^T dG/dt`` and
``hat(Omega) = Gp^T dGp/dt``.  Gravitational constant is 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import Collision, CollisionAbort, GimbalNear
from .rotations import euler_zxz, euler_zxz_angles, hat, rot_x, vee, zxz_body_basis
from .tetrahedron import ShapeTetrahedron, as_masses, build_shape_tetrahedron
from .transforms import (
    PAIRS,
    ConfigurationState,
    CoordinateDecomposition,
    decompose_configuration,
)

__all__ = [
    "KinematicRates",
    "TrajectorySample",
    "newton_potential",
    "accelerations",
    "min_distance",
    "rk4_step",
    "integrate",
    "make_sample",
    "rates_from_velocities",
    "rates_by_central_difference",
    "cartesian_velocities",
    "kinetic_energy_new_coords",
    "internal_angular_momentum",
    "shape_momentum",
    "euler_rhs",
    "shape_euler_rhs",
    "scale_equation_lhs",
    "shape_potential",
    "potential_scale_gradient",
    "euler_equation_residual",
    "node_elimination_check",
    "scale_equation_residual",
    "torque_consistency_check",
    "total_energy",
    "COLLISION_DISTANCE",
    "ABORT_DISTANCE",
]

COLLISION_DISTANCE = 1e-12
ABORT_DISTANCE = 1e-6


@dataclass(frozen=True)
class KinematicRates:
    """Scale rates and body-frame angular velocities of ``G`` and ``Gp``."""

    Rdot: np.ndarray
    omega: np.ndarray
    Omega: np.ndarray


@dataclass
class TrajectorySample:
    t: float
    state: ConfigurationState
    dec: CoordinateDecomposition
    rates: KinematicRates
    energy: float
    L_inertial: np.ndarray = field(repr=False)


def _pair_geometry(X):
    D = X[:, None, :] - X[:, :, None]  # D[:, i, j] = r_j - r_i
    r = np.sqrt(np.sum(D * D, axis=0))
    return D, r


def min_distance(positions) -> float:
    _, r = _pair_geometry(np.asarray(positions, dtype=float))
    return float(np.min(r[np.triu_indices(4, 1)]))


def newton_potential(positions, masses=None) -> float:
    """``-sum_{i<j} m_i m_j / r_ij``.

    Raises
    ------
    Collision
        If any distance is below ``COLLISION_DISTANCE``.
    """
    if isinstance(positions, ConfigurationState):
        masses = positions.masses if masses is None else masses
        positions = positions.positions
    m = as_masses(masses).values
    _, r = _pair_geometry(np.asarray(positions, dtype=float))
    V = 0.0
    for i, j in PAIRS:
        if r[i, j] < COLLISION_DISTANCE:
            raise Collision(f"bodies {i + 1} and {j + 1} collide (r={r[i, j]:.3e})")
        V -= m[i] * m[j] / r[i, j]
    return float(V)


def accelerations(positions, masses) -> np.ndarray:
    """``a_i = sum_{j != i} m_j (r_j - r_i) / r_ij^3`` as a 3x4 array."""
    m = as_masses(masses).values
    X = np.asarray(positions, dtype=float)
    D, r = _pair_geometry(X)
    np.fill_diagonal(r, np.inf)
    if np.min(r) < COLLISION_DISTANCE:
        raise Collision(f"collision (r_min={np.min(r):.3e})")
    w = m[None, :] / r ** 3
    return np.einsum("kij,ij->ki", D, w)


def rk4_step(X, V, masses, dt, accel=accelerations):
    a1 = accel(X, masses)
    X2, V2 = X + 0.5 * dt * V, V + 0.5 * dt * a1
    a2 = accel(X2, masses)
    X3, V3 = X + 0.5 * dt * V2, V + 0.5 * dt * a2
    a3 = accel(X3, masses)
    X4, V4 = X + dt * V3, V + dt * a3
    a4 = accel(X4, masses)
    Xn = X + dt / 6.0 * (V + 2 * V2 + 2 * V3 + V4)
    Vn = V + dt / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
    return Xn, Vn


def cartesian_velocities(tet: ShapeTetrahedron, dec: CoordinateDecomposition, rates: KinematicRates) -> np.ndarray:
    """Time derivative of ``G diag(R) Gp^T E`` for the given rates."""
    D = np.diag(dec.R)
    N = hat(rates.omega) @ D + np.diag(rates.Rdot) - D @ hat(rates.Omega)
    return dec.G @ N @ dec.Gp.T @ tet.E


_CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


def rates_from_velocities(dec: CoordinateDecomposition, velocities, tet: ShapeTetrahedron) -> KinematicRates:
    """Exact rates from Cartesian velocities.

    ``G^T (V M E^T / mu) Gp = hat(omega) D + dD/dt - D hat(Omega)``; its
    diagonal is ``dR/dt`` and each off-diagonal pair gives a 2x2 system for
    one component of ``omega`` and ``Omega``.  Singular when two scales have
    equal magnitude.
    """
    Bdot = np.asarray(velocities) @ np.diag(tet.masses.values) @ tet.E.T / tet.mu
    N = dec.G.T @ Bdot @ dec.Gp
    R = dec.R
    omega = np.empty(3)
    Omega = np.empty(3)
    for k, i, j in _CYCLIC:
        # N_ij = -omega_k R_j + R_i Omega_k ;  N_ji = omega_k R_i - R_j Omega_k
        A = np.array([[-R[j], R[i]], [R[i], -R[j]]])
        omega[k], Omega[k] = np.linalg.solve(A, [N[i, j], N[j, i]])
    return KinematicRates(np.diag(N).copy(), omega, Omega)


def rates_by_central_difference(samples, index: int) -> KinematicRates:
    """Rates at ``samples[index]`` from its two neighbours (second order)."""
    prev, cur, nxt = samples[index - 1], samples[index], samples[index + 1]
    h = nxt.t - prev.t
    Rdot = (nxt.dec.R - prev.dec.R) / h
    omega = vee(cur.dec.G.T @ (nxt.dec.G - prev.dec.G)) / h
    Omega = vee(cur.dec.Gp.T @ (nxt.dec.Gp - prev.dec.Gp)) / h
    return KinematicRates(Rdot, omega, Omega)


def _inertia_diag(R):
    R2 = np.asarray(R) ** 2
    return np.array([R2[1] + R2[2], R2[2] + R2[0], R2[0] + R2[1]])


def _cross_scales(R):
    return np.array([R[1] * R[2], R[2] * R[0], R[0] * R[1]])


def kinetic_energy_new_coords(dec: CoordinateDecomposition, rates: KinematicRates, mu: float) -> float:
    R = dec.R
    w, W = rates.omega, rates.Omega
    I = _inertia_diag(R)
    coupling = R[1] * R[2] * w[0] * W[0] + R[2] * R[0] * w[1] * W[1] + R[0] * R[1] * w[2] * W[2]
    return 0.5 * mu * (float(rates.Rdot @ rates.Rdot) - 4.0 * coupling + float(w @ (I * w)) + float(W @ (I * W)))


def internal_angular_momentum(dec: CoordinateDecomposition, rates: KinematicRates, mu: float) -> np.ndarray:
    """``dK/d omega``; rotated by ``G`` it is the inertial angular momentum."""
    return mu * _inertia_diag(dec.R) * rates.omega - 2.0 * mu * _cross_scales(dec.R) * rates.Omega


def shape_momentum(dec: CoordinateDecomposition, rates: KinematicRates, mu: float) -> np.ndarray:
    """``dK/d Omega``, the momentum conjugate to the shape rotation."""
    return mu * _inertia_diag(dec.R) * rates.Omega - 2.0 * mu * _cross_scales(dec.R) * rates.omega


def euler_rhs(dec: CoordinateDecomposition, rates: KinematicRates, mu: float) -> np.ndarray:
    """Right side of ``dL/dt = L x omega`` written out in components."""
    R, w, W = dec.R, rates.omega, rates.Omega
    out = np.empty(3)
    for i, j, k in _CYCLIC:
        out[i] = mu * (R[k] ** 2 - R[j] ** 2) * w[j] * w[k] + 2.0 * mu * R[i] * (R[j] * w[j] * W[k] - R[k] * w[k] * W[j])
    return out


def shape_euler_rhs(dec: CoordinateDecomposition, rates: KinematicRates, mu: float) -> np.ndarray:
    """Velocity-dependent part of ``dPi/dt``: ``Pi x Omega`` in components."""
    R, w, W = dec.R, rates.omega, rates.Omega
    out = np.empty(3)
    for i, j, k in _CYCLIC:
        out[i] = mu * (R[k] ** 2 - R[j] ** 2) * W[j] * W[k] - 2.0 * mu * R[i] * (R[k] * w[j] * W[k] - R[j] * w[k] * W[j])
    return out


def scale_equation_lhs(dec: CoordinateDecomposition, rates: KinematicRates, Rddot, mu: float) -> np.ndarray:
    """Left side of the scale equations; equals ``-dV/dR_i`` on a solution."""
    R, w, W = dec.R, rates.omega, rates.Omega
    out = np.empty(3)
    for i, j, k in _CYCLIC:
        coupling = 2.0 * mu * (R[j] * w[k] * W[k] + R[k] * w[j] * W[j])
        centrifugal = mu * R[i] * (w[j] ** 2 + w[k] ** 2 + W[j] ** 2 + W[k] ** 2)
        out[i] = mu * Rddot[i] + coupling - centrifugal
    return out


def shape_potential(R, Gp, tet: ShapeTetrahedron, potential=None) -> float:
    """Potential of the configuration ``diag(R) Gp^T E`` (independent of ``G``)."""
    potential = newton_potential if potential is None else potential
    return potential(np.diag(R) @ np.asarray(Gp).T @ tet.E, tet.masses)


def potential_scale_gradient(R, Gp, tet: ShapeTetrahedron, potential=None, h: float = 1e-6) -> np.ndarray:
    """``dV/dR_i`` by central differences."""
    R = np.asarray(R, dtype=float)
    step = h * max(1.0, float(np.max(np.abs(R))))
    grad = np.empty(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = step
        grad[i] = (shape_potential(R + e, Gp, tet, potential) - shape_potential(R - e, Gp, tet, potential)) / (2 * step)
    return grad


def make_sample(t, positions, velocities, tet: ShapeTetrahedron, reference=None) -> TrajectorySample:
    """Bundle a Cartesian state with its decomposition, rates and invariants."""
    state = ConfigurationState(positions, velocities, tet.masses)
    dec = decompose_configuration(state.positions, tet, reference=reference)
    rates = rates_from_velocities(dec, state.velocities, tet)
    energy = newton_potential(state.positions, tet.masses) + state.kinetic_energy()
    return TrajectorySample(float(t), state, dec, rates, energy, state.angular_momentum())


def integrate(state0: ConfigurationState, dt: float, t_end: float, method: str = "rk4",
              tet: ShapeTetrahedron | None = None, sample_every: int = 1,
              abort_distance: float = ABORT_DISTANCE) -> list[TrajectorySample]:
    """Fixed-step RK4 integration of the Cartesian equations of motion.

    Returns one :class:`TrajectorySample` every `sample_every` steps
    (including ``t = 0``).  Decompositions are gauge-aligned to the
    previous sample so that they vary continuously.

    Raises
    ------
    CollisionAbort
        When the smallest distance drops below `abort_distance`.
    """
    if method != "rk4":
        raise ValueError(f"unknown method {method!r}")
    if not dt > 0:
        raise ValueError("dt must be positive")
    tet = build_shape_tetrahedron(state0.masses) if tet is None else tet
    masses = state0.masses
    X = np.array(state0.positions, dtype=float)
    V = np.array(state0.velocities, dtype=float)
    n_steps = int(round(t_end / dt))
    rmin = min_distance(X)
    if rmin < abort_distance:
        raise CollisionAbort(0.0, rmin)
    samples = [make_sample(0.0, X, V, tet)]
    for n in range(1, n_steps + 1):
        X, V = rk4_step(X, V, masses, dt)
        rmin = min_distance(X)
        if rmin < abort_distance:
            raise CollisionAbort((n - 1) * dt, rmin)
        if n % sample_every == 0:
            samples.append(make_sample(n * dt, X, V, tet, reference=samples[-1].dec))
    return samples


def _central_derivative(values, times, k):
    return (values[k + 1] - values[k - 1]) / (times[k + 1] - times[k - 1])


def _interior(samples):
    if len(samples) < 3:
        raise ValueError("need at least three consecutive samples")
    return range(1, len(samples) - 1)


def euler_equation_residual(samples, mu: float) -> np.ndarray:
    """Componentwise max over the window of ``dL/dt - euler_rhs``.

    ``dL/dt`` is a central difference of :func:`internal_angular_momentum`
    over neighbouring samples.
    """
    times = [s.t for s in samples]
    L = [internal_angular_momentum(s.dec, s.rates, mu) for s in samples]
    worst = np.zeros(3)
    for k in _interior(samples):
        r = _central_derivative(L, times, k) - euler_rhs(samples[k].dec, samples[k].rates, mu)
        worst = np.maximum(worst, np.abs(r))
    return worst


def node_elimination_check(samples, mu: float) -> float:
    """Max of ``|L - ell G'^T e3|`` in the frame where total angular momentum is ``ell e3``.

    Returns 0 for a trajectory with zero angular momentum when ``L`` vanishes.
    """
    Ltot = samples[0].L_inertial
    ell = float(np.linalg.norm(Ltot))
    if ell > 0:
        n = Ltot / ell
        # rotation Q with Q n = e3
        v = np.cross(n, [0.0, 0.0, 1.0])
        c = n[2]
        if np.linalg.norm(v) < 1e-15:
            Q = np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
        else:
            Q = np.eye(3) + hat(v) + hat(v) @ hat(v) / (1.0 + c)
    else:
        Q = np.eye(3)
    worst = 0.0
    for s in samples:
        L = internal_angular_momentum(s.dec, s.rates, mu)
        G = Q @ s.dec.G
        worst = max(worst, float(np.max(np.abs(L - ell * G.T @ np.array([0.0, 0.0, 1.0])))))
    return worst


def scale_equation_residual(samples, tet: ShapeTetrahedron, potential=None) -> np.ndarray:
    """Componentwise max of ``scale_equation_lhs + dV/dR`` over the window.

    ``d^2R/dt^2`` is a central difference of the sampled ``dR/dt``.
    """
    times = [s.t for s in samples]
    Rdot = [s.rates.Rdot for s in samples]
    worst = np.zeros(3)
    for k in _interior(samples):
        s = samples[k]
        Rddot = _central_derivative(Rdot, times, k)
        lhs = scale_equation_lhs(s.dec, s.rates, Rddot, tet.mu)
        dV = potential_scale_gradient(s.dec.R, s.dec.Gp, tet, potential)
        worst = np.maximum(worst, np.abs(lhs + dV))
    return worst


def _chart(Gp_center):
    # chart C Rz Rx Rz with the centre at q = (0, pi/2, 0), far from sin(q1) = 0
    return Gp_center @ rot_x(np.pi / 2).T


def internal_torque(samples, k: int, mu: float) -> np.ndarray:
    """``K = dPi/dt - Pi x Omega`` at interior sample `k`."""
    times = [s.t for s in samples[k - 1:k + 2]]
    Pi = [shape_momentum(s.dec, s.rates, mu) for s in samples[k - 1:k + 2]]
    s = samples[k]
    return _central_derivative(Pi, times, 1) - shape_euler_rhs(s.dec, s.rates, mu)


def torque_consistency_check(samples, tet: ShapeTetrahedron, potential=None, h: float = 1e-6,
                             gimbal_tol: float = 1e-6) -> float:
    """Max over the window of ``|K . c_j + dV/dq_j|``.

    ``q`` are z-x-z Euler angles of ``C^T Gp`` in a chart ``C`` re-seeded at
    every sample so that ``q = (0, pi/2, 0)`` there; ``c_j`` are the columns
    of :func:`zxz_body_basis` (``Omega = sum c_j dq_j/dt``).  Lagrange's
    equations give ``K . c_j = -dV/dq_j``.

    Raises
    ------
    GimbalNear
        If a neighbouring sample falls within `gimbal_tol` of the chart's
        singular set.
    """
    worst = 0.0
    for k in _interior(samples):
        s = samples[k]
        C = _chart(s.dec.Gp)
        for nb in (samples[k - 1], samples[k + 1]):
            q_nb = euler_zxz_angles(C.T @ nb.dec.Gp)
            if abs(np.sin(q_nb[1])) < gimbal_tol:
                raise GimbalNear(f"Euler chart singular near t={nb.t}")
        q = np.array([0.0, np.pi / 2, 0.0])
        cj = zxz_body_basis(q)
        dVdq = np.empty(3)
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            dVdq[j] = (shape_potential(s.dec.R, C @ euler_zxz(q + e), tet, potential)
                       - shape_potential(s.dec.R, C @ euler_zxz(q - e), tet, potential)) / (2 * h)
        K = internal_torque(samples, k, tet.mu)
        worst = max(worst, float(np.max(np.abs(K @ cj + dVdq))))
    return worst


def total_energy(sample: TrajectorySample, tet: ShapeTetrahedron, potential=None) -> float:
    """``V + K`` with ``K`` evaluated in shape coordinates."""
    V = shape_potential(sample.dec.R, sample.dec.Gp, tet, potential)
    return V + kinetic_energy_new_coords(sample.dec, sample.rates, tet.mu)
