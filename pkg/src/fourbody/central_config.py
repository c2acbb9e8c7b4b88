"""
Central configurations: the equilateral (Laplace) tetrahedron, the planar
Dziobek solver, and homographic elliptic orbits of a planar configuration.

Units: gravitational constant 1 and ``sigma = 1`` in
``r_jk^-3 = sigma + lambda A_j A_k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .dynamics import accelerations, newton_potential, rates_from_velocities
from .errors import ComplexDistance, DegenerateMasses, NegativeMass, NoRoot
from .rotations import rot2
from .tetrahedron import ShapeTetrahedron, as_masses, build_shape_tetrahedron, reduced_mass
from .transforms import (
    PAIRS,
    ConfigurationState,
    PlanarDecomposition,
    cartesian_distances,
    directed_areas,
    planar_decompose,
)

__all__ = [
    "MASS_AREA_FACTOR",
    "GRID_POINTS",
    "PlanarCentralConfig",
    "DziobekRoot",
    "ConicParams",
    "OrbitTable",
    "equilateral_configuration",
    "laplace_homothetic_state",
    "homothetic_scale",
    "acceleration_ratio_spread",
    "cayley_menger",
    "validate_areas",
    "admissible_interval",
    "dziobek_distances",
    "embed_planar",
    "dziobek_roots",
    "dziobek_solve",
    "select_root",
    "solve_kepler",
    "true_to_mean_anomaly",
    "homographic_state",
    "homographic_trajectory",
    "planar_energy_momentum",
]

# Masses are recovered as m_j = MASS_AREA_FACTOR * S_j / A_j, S_j the 3x3
# determinant (twice the triangle area).  Central configurations are
# invariant under a uniform mass rescaling, so this only fixes the mass
# unit; the factor 2 matches the reference solution for A = (-3, 4, 6, -15).
MASS_AREA_FACTOR = 2.0
GRID_POINTS = 10_000


# ---------------------------------------------------------------------------
# equilateral tetrahedron


def equilateral_configuration(masses, tet: ShapeTetrahedron | None = None) -> np.ndarray:
    """Regular tetrahedron of edge sqrt(2): ``diag(sqrt(x/mu)) @ E``."""
    tet = build_shape_tetrahedron(masses) if tet is None else tet
    scales = np.sqrt(tet.roots.as_array() / tet.mu)
    return np.diag(scales) @ tet.E


def homothetic_scale(t, kappa: float, speed: float):
    """Scale ``s(t)`` of a homothetic motion, ``s'' = -kappa / s^2`` with ``s(0) = 1``.

    Closed form only for the parabolic case ``speed = sqrt(2 kappa)``.
    """
    if not np.isclose(speed, np.sqrt(2 * kappa), rtol=1e-14, atol=0):
        raise ValueError("closed form available for parabolic speed only")
    return (1.0 + 1.5 * speed * np.asarray(t)) ** (2.0 / 3.0)


def laplace_homothetic_state(masses, speed: float | None = None, tet: ShapeTetrahedron | None = None) -> ConfigurationState:
    """Equilateral configuration with velocities ``speed * r_i``.

    The shape stays equilateral for all time (homothetic motion); the default
    speed ``sqrt(2 kappa)``, ``kappa = m_total / (2 sqrt 2)``, is the escape
    speed so the motion never collapses.
    """
    mq = as_masses(masses)
    X = equilateral_configuration(mq, tet)
    kappa = mq.total / (2.0 * np.sqrt(2.0))
    speed = np.sqrt(2.0 * kappa) if speed is None else speed
    return ConfigurationState(X, speed * X, mq)


def acceleration_ratio_spread(positions, masses) -> tuple[float, float]:
    """Common factor ``kappa`` in ``a_i = -kappa r_i`` and its relative spread.

    The spread combines the scatter of ``-a_i.r_i / |r_i|^2`` across bodies
    and the component of each ``a_i`` orthogonal to ``r_i``.
    """
    X = np.asarray(positions, dtype=float)
    a = accelerations(X, masses)
    r2 = np.sum(X * X, axis=0)
    k = -np.sum(a * X, axis=0) / r2
    kappa = float(np.mean(k))
    perp = a + kappa * X
    spread = max(float(np.max(np.abs(k - kappa))) / abs(kappa),
                 float(np.max(np.linalg.norm(perp, axis=0) / (abs(kappa) * np.sqrt(r2)))))
    return kappa, spread


# ---------------------------------------------------------------------------
# Dziobek planar solver


def cayley_menger(distances) -> float:
    """5x5 bordered Cayley-Menger determinant (``288 V^2`` for a tetrahedron).

    `distances` is a mapping ``(i, j) -> r_ij`` with ``i < j`` or a sequence
    ordered like :data:`PAIRS`.
    """
    if not hasattr(distances, "items"):
        distances = dict(zip(PAIRS, distances))
    C = np.ones((5, 5))
    C[0, 0] = 0.0
    for i in range(4):
        C[i + 1, i + 1] = 0.0
    for (i, j), r in distances.items():
        C[i + 1, j + 1] = C[j + 1, i + 1] = r * r
    return float(np.linalg.det(C))


def validate_areas(areas) -> np.ndarray:
    """Weighted areas as an array; all nonzero with both signs present."""
    A = np.asarray(areas, dtype=float).reshape(-1)
    if A.shape != (4,):
        raise ValueError(f"expected four weighted areas, got {A.size}")
    if not np.all(np.isfinite(A)) or np.any(A == 0):
        raise ValueError(f"weighted areas must be finite and nonzero: {A}")
    if np.all(A > 0) or np.all(A < 0):
        raise ValueError("weighted areas need both signs (sum of m_j A_j must vanish)")
    return A


def admissible_interval(areas) -> tuple[float, float]:
    """Open interval of ``lambda`` around 0 with every ``1 + lambda A_i A_j > 0``."""
    A = validate_areas(areas)
    prods = [A[i] * A[j] for i, j in PAIRS]
    lo = max((-1.0 / p for p in prods if p > 0), default=-np.inf)
    hi = min((-1.0 / p for p in prods if p < 0), default=np.inf)
    if not lo < hi:
        raise ComplexDistance(f"empty admissible interval ({lo}, {hi})")
    return lo, hi


def dziobek_distances(areas, lam: float) -> dict[tuple[int, int], float]:
    A = np.asarray(areas, dtype=float)
    return {(i, j): float((1.0 + lam * A[i] * A[j]) ** (-1.0 / 3.0)) for i, j in PAIRS}


def embed_planar(distances) -> np.ndarray:
    """Place four points in the plane from their six distances.

    Particle 1 at the origin, particle 2 on the positive x axis, particle 3
    in the upper half plane; particle 4 takes whichever mirror position best
    matches ``r_34``.

    Raises
    ------
    ValueError
        If a face violates the triangle inequality.
    """
    d = distances
    P = np.zeros((2, 4))
    r01 = d[(0, 1)]
    P[0, 1] = r01
    for k in (2, 3):
        x = (d[(0, k)] ** 2 - d[(1, k)] ** 2 + r01 ** 2) / (2 * r01)
        y2 = d[(0, k)] ** 2 - x * x
        if y2 < -1e-12 * d[(0, k)] ** 2:
            raise ValueError(f"triangle (1, 2, {k + 1}) is not realizable")
        P[:, k] = (x, np.sqrt(max(y2, 0.0)))
    up = np.linalg.norm(P[:, 3] - P[:, 2])
    down = np.linalg.norm(P[:, 3] * [1, -1] - P[:, 2])
    if abs(down - d[(2, 3)]) < abs(up - d[(2, 3)]):
        P[1, 3] = -P[1, 3]
    return P


@dataclass
class PlanarCentralConfig:
    """A planar central configuration recovered from four weighted areas.

    Attributes
    ----------
    areas : ndarray (4,)
        Weighted areas ``A_j = S_j / m_j`` as given (per particle).
    lam : float
        Multiplier in ``r_jk^-3 = 1 + lam A_j A_k``.
    distances : dict
        ``(i, j) -> r_ij`` for ``i < j`` (zero-based).
    masses : MassQuadruple
    embedding : ndarray (2, 4)
        Deterministic embedding (see :func:`embed_planar`), oriented so that
        ``sign(S_1) == sign(A_1)``.
    S : ndarray (4,)
        Directed areas of the embedding.
    shape : PlanarDecomposition or None
        ``psi, R1, R2, Gp`` of the center-of-mass positions; None when two
        recovered masses coincide.
    tet : ShapeTetrahedron or None
    residuals : dict
    """

    areas: np.ndarray
    lam: float
    distances: dict
    masses: object
    embedding: np.ndarray
    S: np.ndarray
    shape: PlanarDecomposition | None
    tet: ShapeTetrahedron | None
    residuals: dict = field(default_factory=dict)
    sigma: float = 1.0

    @property
    def positions(self) -> np.ndarray:
        """Embedding shifted to the center of mass."""
        m = self.masses.values
        return self.embedding - (self.embedding @ m / m.sum())[:, None]

    @property
    def mu(self) -> float:
        return reduced_mass(self.masses.values)

    @property
    def scale(self) -> float:
        """``R`` with ``sum m_j |r_j|^2 = mu R^2``."""
        m = self.masses.values
        return float(np.sqrt(np.sum(m * np.sum(self.positions ** 2, axis=0)) / self.mu))

    @property
    def theta(self) -> float:
        return self._require_shape().theta

    @property
    def Gp(self) -> np.ndarray:
        return self._require_shape().Gp

    def _require_shape(self) -> PlanarDecomposition:
        if self.shape is None:
            raise DegenerateMasses(f"masses {self.masses.values} are not pairwise distinct; no shape coordinates")
        return self.shape

    def unit_configuration(self) -> np.ndarray:
        """Center-of-mass positions at ``R = 1``, rotated so that ``psi = 0``.

        Equals ``planar_forward_transform(0, cos(theta), sin(theta), Gp)``
        when the shape coordinates exist.
        """
        psi = 0.0 if self.shape is None else self.shape.psi
        return rot2(-psi) @ self.positions / self.scale

    def shape_areas(self) -> np.ndarray:
        """``E^T Gp e3``; proportional to the weighted areas."""
        return self.tet.E.T @ self.Gp[:, 2]


@dataclass
class DziobekRoot:
    lam: float
    distances: dict
    status: str
    config: PlanarCentralConfig | None = None
    detail: str = ""


def _cm_of_lambda(A):
    return lambda lam: cayley_menger(dziobek_distances(A, lam))


def _bracket_roots(f, lo, hi, n):
    grid = np.linspace(lo, hi, n + 2)[1:-1]
    vals = np.array([f(x) for x in grid])
    out = []
    for k in range(n - 1):
        if vals[k] == 0.0:
            out.append((grid[k], grid[k]))
        elif vals[k] * vals[k + 1] < 0:
            out.append((grid[k], grid[k + 1]))
    return out


def _build_config(A, lam, dist) -> PlanarCentralConfig:
    P = embed_planar(dist)
    S = directed_areas(P)
    if np.sign(S[0]) != np.sign(A[0]):
        P = P * np.array([[1.0], [-1.0]])
        S = directed_areas(P)
    m = MASS_AREA_FACTOR * S / A
    if np.any(m <= 0):
        raise NegativeMass(f"recovered masses {m} at lambda={lam!r}")
    mq = as_masses(m)
    Xc = P - (P @ m / m.sum())[:, None]
    try:
        tet = build_shape_tetrahedron(mq)
        shape = planar_decompose(Xc, tet)
    except DegenerateMasses:
        # a genuine configuration; only the shape coordinates are undefined
        tet = shape = None
    cc = PlanarCentralConfig(A, float(lam), dist, mq, P, S, shape, tet)
    cc.residuals = central_config_residuals(cc)
    return cc


def central_config_residuals(cc: PlanarCentralConfig) -> dict[str, float]:
    A = cc.areas
    m = cc.masses.values
    d_embed = cartesian_distances(cc.embedding)
    X3 = np.vstack([cc.positions, np.zeros(4)])
    _, spread = acceleration_ratio_spread(X3, cc.masses)
    out = {
        "dziobek": max(abs(r ** -3 - 1.0 - cc.lam * A[i] * A[j]) for (i, j), r in cc.distances.items()),
        "embedding": max(abs(d_embed[p] - cc.distances[p]) for p in PAIRS),
        "cayley_menger": abs(cayley_menger(cc.distances)),
        "sum_S": abs(float(np.sum(cc.S))),
        "sum_mA": abs(float(np.sum(m * A))),
        "acceleration_spread": spread,
    }
    if cc.shape is not None:
        ratio = A / cc.shape_areas()
        out["area_ratio_spread"] = float(np.ptp(ratio) / np.max(np.abs(ratio)))
    return out


def dziobek_roots(areas, n_grid: int = GRID_POINTS) -> list[DziobekRoot]:
    """All planar roots on the admissible interval, each classified.

    Status is ``"valid"``, ``"negative-mass"`` or ``"non-embeddable"``.
    """
    A = validate_areas(areas)
    lo, hi = admissible_interval(A)
    f = _cm_of_lambda(A)
    roots = []
    for a, b in _bracket_roots(f, lo, hi, n_grid):
        lam = a if a == b else brentq(f, a, b, xtol=1e-18, rtol=4 * np.finfo(float).eps, maxiter=500)
        dist = dziobek_distances(A, lam)
        try:
            cfg = _build_config(A, lam, dist)
            roots.append(DziobekRoot(lam, dist, "valid", cfg))
        except NegativeMass as exc:
            roots.append(DziobekRoot(lam, dist, "negative-mass", detail=str(exc)))
        except ValueError as exc:
            roots.append(DziobekRoot(lam, dist, "non-embeddable", detail=str(exc)))
    return roots


def dziobek_solve(areas, n_grid: int = GRID_POINTS) -> PlanarCentralConfig:
    """Planar central configuration with the given weighted areas.

    Scans ``lambda`` for sign changes of the Cayley-Menger determinant of
    ``r_jk(lambda) = (1 + lambda A_j A_k)^(-1/3)``, refines each bracket,
    embeds the points, recovers masses from the directed areas and the
    shape coordinates from the embedding.  If several roots are physical,
    the one of smallest ``|lambda|`` is returned; see :func:`dziobek_roots`.

    Raises
    ------
    NoRoot
        No sign change on the admissible interval.
    NegativeMass
        Every root recovers a non-positive mass or is not embeddable.
    ComplexDistance
        The admissible interval is empty.
    """
    return select_root(dziobek_roots(areas, n_grid), areas)


def select_root(roots: list[DziobekRoot], areas=None) -> PlanarCentralConfig:
    """Physical root of smallest ``|lambda|`` from :func:`dziobek_roots` output."""
    if not roots:
        raise NoRoot(f"no coplanar root for areas {areas}")
    valid = [r for r in roots if r.status == "valid"]
    if not valid:
        detail = "; ".join(f"lambda={r.lam:.17g}: {r.status}" for r in roots)
        raise NegativeMass(f"no physical root ({detail})")
    return min(valid, key=lambda r: abs(r.lam)).config


# ---------------------------------------------------------------------------
# homographic orbits


@dataclass(frozen=True)
class ConicParams:
    p: float
    e: float
    psi0: float = 0.0

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError("latus rectum must be positive")
        if not 0 <= self.e < 1:
            raise ValueError("eccentricity must be in [0, 1)")

    def radius(self, psi):
        return self.p / (1.0 + self.e * np.cos(np.asarray(psi) - self.psi0))

    @property
    def semi_major(self) -> float:
        return self.p / (1.0 - self.e ** 2)


def solve_kepler(M, e: float, tol: float = 1e-13, maxiter: int = 50):
    """Eccentric anomaly from mean anomaly by Newton iteration."""
    M = np.asarray(M, dtype=float)
    E = M + e * np.sin(M) if e < 0.8 else M + 0.5 * np.pi * np.sign(np.sin(M))
    for _ in range(maxiter):
        dE = (E - e * np.sin(E) - M) / (1.0 - e * np.cos(E))
        E = E - dE
        if np.all(np.abs(dE) <= tol):
            break
    return E


def true_to_mean_anomaly(f, e: float):
    """Mean anomaly for true anomaly `f`, continuous in `f` (no wrapping)."""
    f = np.asarray(f, dtype=float)
    beta = e / (1.0 + np.sqrt(1.0 - e * e))
    E = f - 2.0 * np.arctan2(beta * np.sin(f), 1.0 + beta * np.cos(f))
    return E - e * np.sin(E)


def _mean_anomaly_to_true(M, e):
    E = solve_kepler(M, e)
    beta = e / (1.0 + np.sqrt(1.0 - e * e))
    return E + 2.0 * np.arctan2(beta * np.sin(E), 1.0 - beta * np.cos(E))


def _kepler_constants(cc: PlanarCentralConfig):
    """``k`` with ``V(R) = -k / R`` along the similarity class, and ``mu``."""
    k = -newton_potential(np.vstack([cc.unit_configuration(), np.zeros(4)]), cc.masses)
    return k, cc.mu


def homographic_state(cc: PlanarCentralConfig, conic: ConicParams, psi: float) -> ConfigurationState:
    """Planar state (embedded with z = 0) on the homographic orbit at angle `psi`."""
    k, mu = _kepler_constants(cc)
    P = np.sqrt(conic.p * mu * k)
    R = float(conic.radius(psi))
    psidot = P / (mu * R * R)
    dR_dpsi = conic.p * conic.e * np.sin(psi - conic.psi0) / (1.0 + conic.e * np.cos(psi - conic.psi0)) ** 2
    U = cc.unit_configuration()
    Rot = rot2(psi)
    dRot = np.array([[-np.sin(psi), -np.cos(psi)], [np.cos(psi), -np.sin(psi)]])
    X2 = R * Rot @ U
    V2 = psidot * (dR_dpsi * Rot @ U + R * dRot @ U)
    return ConfigurationState(np.vstack([X2, np.zeros(4)]), np.vstack([V2, np.zeros(4)]), cc.masses)


@dataclass
class OrbitTable:
    psi: np.ndarray
    t: np.ndarray
    positions: np.ndarray  # (n, 2, 4)
    conic: ConicParams
    period: float
    momentum: float


def homographic_trajectory(cc: PlanarCentralConfig, conic: ConicParams, n_samples: int,
                           uniform_time: bool = False, revolutions: float = 1.0) -> OrbitTable:
    """Sample the homographic orbit of `cc` along the conic ``R(psi)``.

    Parameters
    ----------
    uniform_time : bool
        Sample uniformly in time (solving Kepler's equation) instead of
        uniformly in ``psi``.

    Returns
    -------
    OrbitTable
        ``t`` is measured from pericentre passage.
    """
    k, mu = _kepler_constants(cc)
    a = conic.semi_major
    n_mean = np.sqrt(k / mu / a ** 3)
    period = 2 * np.pi / n_mean
    if uniform_time:
        M0 = float(true_to_mean_anomaly(0.0 - conic.psi0, conic.e))
        t = M0 / n_mean + np.linspace(0.0, revolutions * period, n_samples)
        psi = conic.psi0 + _mean_anomaly_to_true(n_mean * t, conic.e)
    else:
        psi = np.linspace(0.0, revolutions * 2 * np.pi, n_samples)
        t = true_to_mean_anomaly(psi - conic.psi0, conic.e) / n_mean
    U = cc.unit_configuration()
    pos = np.array([r * rot2(s) @ U for s, r in zip(psi, conic.radius(psi))])
    return OrbitTable(np.asarray(psi), np.asarray(t), pos, conic, period, float(np.sqrt(conic.p * mu * k)))


def planar_energy_momentum(cc: PlanarCentralConfig, state: ConfigurationState) -> tuple[float, float]:
    """Angular momentum ``P_psi`` and energy of a planar state in polar shape form.

    ``P_psi = mu (psidot (R1^2 + R2^2) - 2 R1 R2 Omega_3)`` and
    ``E = mu/2 [Rdot^2 + R^2 (thetadot^2 + Omega_3^2 cos^2 2theta
    + Omega_1^2 sin^2 theta + Omega_2^2 cos^2 theta)] + P_psi^2 / (2 mu R^2) + V``.
    """
    cc._require_shape()
    tet = cc.tet
    mu = tet.mu
    ref = cc.shape
    pd = planar_decompose(state.positions[:2], tet, reference=ref)
    dec = pd.as_decomposition()
    rates = rates_from_velocities(dec, state.velocities, tet)
    R1, R2 = pd.R1, pd.R2
    psidot = rates.omega[2]
    W = rates.Omega
    P = mu * (psidot * (R1 ** 2 + R2 ** 2) - 2.0 * R1 * R2 * W[2])
    R = pd.R
    th = pd.theta
    Rdot = (R1 * rates.Rdot[0] + R2 * rates.Rdot[1]) / R
    thdot = (R1 * rates.Rdot[1] - R2 * rates.Rdot[0]) / R ** 2
    V = newton_potential(state.positions, tet.masses)
    E = (0.5 * mu * (Rdot ** 2 + R ** 2 * (thdot ** 2 + W[2] ** 2 * np.cos(2 * th) ** 2
                                          + W[0] ** 2 * np.sin(th) ** 2 + W[1] ** 2 * np.cos(th) ** 2))
         + P ** 2 / (2 * mu * R ** 2) + V)
    return float(P), float(E)
