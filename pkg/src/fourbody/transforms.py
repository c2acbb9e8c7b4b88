"""
Maps between Cartesian four-body configurations and shape coordinates.

A center-of-mass configuration ``X`` (3x4) is written as

    X = G @ diag(R1, R2, R3) @ Gp.T @ E

with ``G`` and ``Gp`` proper rotations and ``E`` the shape tetrahedron.
Because ``E M E^T = mu I`` the 3x3 matrix ``B = X M E^T / mu`` equals
``G diag(R) Gp^T``, so the inverse map is a singular-value factorization.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import InconsistentAreas
from .rotations import rot2
from .tetrahedron import ShapeTetrahedron, as_masses

__all__ = [
    "PAIRS",
    "CoordinateDecomposition",
    "ConfigurationState",
    "PlanarDecomposition",
    "forward_transform",
    "decompose_configuration",
    "align_decomposition",
    "gram_matrix",
    "pairwise_distances",
    "cartesian_distances",
    "inertia_tensor",
    "principal_moments",
    "scales_from_moments",
    "planar_forward_transform",
    "planar_decompose",
    "directed_areas",
    "areas_from_shape",
    "area_constant",
]

PAIRS = tuple(itertools.combinations(range(4), 2))
DEGENERATE_RTOL = 1e-10


@dataclass(frozen=True)
class CoordinateDecomposition:
    """Rotations ``G``, ``Gp`` and scales ``R`` of one configuration.

    ``R[0] >= R[1] >= |R[2]|``.  The sign of ``R[2]`` records the handedness
    of the configuration relative to ``E``; it changes when the motion
    passes through a planar configuration.
    """

    G: np.ndarray
    R: np.ndarray
    Gp: np.ndarray
    rank_deficient: bool = False
    gauge_ambiguous: bool = False

    @property
    def B(self) -> np.ndarray:
        return self.G @ np.diag(self.R) @ self.Gp.T


@dataclass
class ConfigurationState:
    """Positions and velocities (3x4) of the four bodies in the center-of-mass frame."""

    positions: np.ndarray
    velocities: np.ndarray
    masses: object

    def __post_init__(self):
        self.masses = as_masses(self.masses)
        self.positions = np.array(self.positions, dtype=float).reshape(3, 4)
        if self.velocities is None:
            self.velocities = np.zeros((3, 4))
        self.velocities = np.array(self.velocities, dtype=float).reshape(3, 4)

    @classmethod
    def centered(cls, positions, velocities, masses):
        """Shift positions and velocities into the center-of-mass frame."""
        mq = as_masses(masses)
        m = mq.values
        X = np.array(positions, dtype=float).reshape(3, 4)
        V = np.zeros((3, 4)) if velocities is None else np.array(velocities, dtype=float).reshape(3, 4)
        X = X - (X @ m / m.sum())[:, None]
        V = V - (V @ m / m.sum())[:, None]
        return cls(X, V, mq)

    def center_of_mass_residual(self) -> tuple[float, float]:
        m = self.masses.values
        scale_x = max(np.max(np.abs(self.positions)), 1e-300) * m.sum()
        scale_v = max(np.max(np.abs(self.velocities)), 1e-300) * m.sum()
        return (float(np.max(np.abs(self.positions @ m)) / scale_x),
                float(np.max(np.abs(self.velocities @ m)) / scale_v))

    def kinetic_energy(self) -> float:
        m = self.masses.values
        return 0.5 * float(np.sum(m * np.sum(self.velocities ** 2, axis=0)))

    def angular_momentum(self) -> np.ndarray:
        m = self.masses.values
        return np.sum(m * np.cross(self.positions.T, self.velocities.T).T, axis=1)

    def linear_momentum(self) -> np.ndarray:
        return self.velocities @ self.masses.values


def forward_transform(tet: ShapeTetrahedron, dec: CoordinateDecomposition) -> np.ndarray:
    """Positions ``G diag(R) Gp^T E``; automatically center-of-mass."""
    return dec.G @ np.diag(dec.R) @ dec.Gp.T @ tet.E


def _shape_matrix(positions, tet):
    X = np.asarray(positions, dtype=float)
    return X @ np.diag(tet.masses.values) @ tet.E.T / tet.mu


def _largest_entry_sign(col):
    s = np.sign(col[np.argmax(np.abs(col))])
    return 1.0 if s == 0 else float(s)


def decompose_configuration(positions, tet: ShapeTetrahedron, reference=None,
                            rtol: float = DEGENERATE_RTOL) -> CoordinateDecomposition:
    """Invert :func:`forward_transform`.

    Parameters
    ----------
    positions : array_like (3, 4) or ConfigurationState
        Center-of-mass positions.
    tet : ShapeTetrahedron
    reference : CoordinateDecomposition, optional
        When given, the discrete sign gauge is chosen to be closest to it
        (used to keep a trajectory's decomposition continuous).
    rtol : float
        Relative threshold below which ``|R3|`` counts as zero, and two
        scales count as equal.

    Returns
    -------
    CoordinateDecomposition
        Singular values sorted descending, both factors proper.  Without a
        reference, the largest-magnitude entries of the first two columns of
        ``Gp`` are made positive (the third follows from ``det = +1``).
        When ``R3 ~ 0`` the third columns are rebuilt as cross products and
        the result is flagged ``rank_deficient``.
    """
    if isinstance(positions, ConfigurationState):
        positions = positions.positions
    B = _shape_matrix(positions, tet)
    U, s, Vt = np.linalg.svd(B)
    W = Vt.T.copy()
    U = U.copy()
    if np.linalg.det(U) < 0:
        U[:, 2] *= -1
        s[2] = -s[2]
    if np.linalg.det(W) < 0:
        W[:, 2] *= -1
        s[2] = -s[2]

    scale = max(abs(s[0]), 1e-300)
    rank_deficient = abs(s[2]) <= rtol * scale
    ambiguous = rank_deficient or (s[0] - s[1] <= rtol * scale) or (s[1] - abs(s[2]) <= rtol * scale)

    dec = CoordinateDecomposition(U, s, W, rank_deficient, ambiguous)
    if reference is not None:
        dec = align_decomposition(dec, reference)
    else:
        s1 = _largest_entry_sign(W[:, 0])
        s2 = _largest_entry_sign(W[:, 1])
        sig = np.array([s1, s2, s1 * s2])
        dec = CoordinateDecomposition(U * sig, s, W * sig, rank_deficient, ambiguous)
    if rank_deficient:
        G = dec.G.copy()
        Gp = dec.Gp.copy()
        G[:, 2] = np.cross(G[:, 0], G[:, 1])
        Gp[:, 2] = np.cross(Gp[:, 0], Gp[:, 1])
        R = dec.R.copy()
        R[2] = G[:, 2] @ B @ Gp[:, 2]
        dec = CoordinateDecomposition(G, R, Gp, True, True)
    return dec


_SIGN_GAUGE = [np.array(v, dtype=float) for v in ((1, 1, 1), (-1, -1, 1), (-1, 1, -1), (1, -1, -1))]


def align_decomposition(dec: CoordinateDecomposition, reference: CoordinateDecomposition) -> CoordinateDecomposition:
    """Apply the column-sign flip (of the four that keep ``B`` and ``det``) nearest to `reference`."""
    best = None
    for sig in _SIGN_GAUGE:
        G, Gp = dec.G * sig, dec.Gp * sig
        d = np.sum((G - reference.G) ** 2) + np.sum((Gp - reference.Gp) ** 2)
        if best is None or d < best[0]:
            best = (d, G, Gp)
    return CoordinateDecomposition(best[1], dec.R.copy(), best[2], dec.rank_deficient, dec.gauge_ambiguous)


def gram_matrix(dec: CoordinateDecomposition) -> np.ndarray:
    """Symmetric matrix ``Gp diag(R^2) Gp^T``; interparticle distances depend only on it."""
    A = dec.Gp @ np.diag(np.asarray(dec.R) ** 2) @ dec.Gp.T
    return 0.5 * (A + A.T)


def pairwise_distances(A, tet: ShapeTetrahedron) -> dict[tuple[int, int], float]:
    """Distances ``sqrt(dE^T A dE)`` for the six pairs, ``dE`` a difference of columns of ``E``."""
    A = np.asarray(A)
    out = {}
    for i, j in PAIRS:
        d = tet.E[:, j] - tet.E[:, i]
        out[(i, j)] = float(np.sqrt(d @ A @ d))
    return out


def cartesian_distances(positions) -> dict[tuple[int, int], float]:
    X = np.asarray(positions)
    return {(i, j): float(np.linalg.norm(X[:, j] - X[:, i])) for i, j in PAIRS}


def inertia_tensor(positions, masses) -> np.ndarray:
    """``sum_i m_i (|r_i|^2 I - r_i r_i^T)`` about the origin."""
    X = np.asarray(positions)
    m = as_masses(masses).values
    return np.sum(m * np.sum(X * X, axis=0)) * np.eye(X.shape[0]) - (X * m) @ X.T


def principal_moments(dec: CoordinateDecomposition, mu: float) -> np.ndarray:
    R2 = np.asarray(dec.R) ** 2
    return mu * np.array([R2[1] + R2[2], R2[2] + R2[0], R2[0] + R2[1]])


def scales_from_moments(moments, mu: float) -> np.ndarray:
    """Unsigned scales from principal moments ``(I1, I2, I3)``."""
    I1, I2, I3 = moments
    sq = np.array([I2 + I3 - I1, I3 + I1 - I2, I1 + I2 - I3]) / (2.0 * mu)
    return np.sqrt(np.clip(sq, 0.0, None))


def planar_forward_transform(psi, R1, R2, Gp, tet: ShapeTetrahedron) -> np.ndarray:
    """2x4 planar positions ``rot(psi) @ [[R1, 0, 0], [0, R2, 0]] @ Gp^T @ E``."""
    D = np.array([[R1, 0.0, 0.0], [0.0, R2, 0.0]])
    return rot2(psi) @ D @ np.asarray(Gp).T @ tet.E


@dataclass(frozen=True)
class PlanarDecomposition:
    """Coordinates of a planar configuration: in-plane angle, two scales, ``Gp``."""

    psi: float
    R1: float
    R2: float
    Gp: np.ndarray

    @property
    def R(self) -> float:
        return float(np.hypot(self.R1, self.R2))

    @property
    def theta(self) -> float:
        return float(np.arctan2(self.R2, self.R1))

    def as_decomposition(self) -> CoordinateDecomposition:
        G = np.eye(3)
        G[:2, :2] = rot2(self.psi)
        return CoordinateDecomposition(G, np.array([self.R1, self.R2, 0.0]), np.array(self.Gp), True, True)


def planar_decompose(positions, tet: ShapeTetrahedron, reference: PlanarDecomposition | None = None) -> PlanarDecomposition:
    """Invert :func:`planar_forward_transform` for a 2x4 center-of-mass configuration.

    The remaining sign gauge (``psi -> psi + pi`` with the first two columns
    of ``Gp`` negated) is fixed by making the largest entry of ``Gp[:, 0]``
    positive, or by proximity to `reference` when given.
    """
    X = np.asarray(positions, dtype=float)
    if X.shape == (3, 4):
        X = X[:2]
    B = _shape_matrix(X, tet)
    U, s, Vt = np.linalg.svd(B, full_matrices=False)
    U = U.copy()
    Vt = Vt.copy()
    if np.linalg.det(U) < 0:
        U[:, 1] *= -1
        Vt[1] *= -1
    if reference is not None:
        flip = np.sum((Vt[0] - reference.Gp[:, 0]) ** 2) > np.sum((Vt[0] + reference.Gp[:, 0]) ** 2)
    else:
        flip = _largest_entry_sign(Vt[0]) < 0
    if flip:
        U = -U
        Vt = -Vt
    Gp = np.column_stack([Vt[0], Vt[1], np.cross(Vt[0], Vt[1])])
    psi = float(np.arctan2(U[1, 0], U[0, 0]))
    return PlanarDecomposition(psi, float(s[0]), float(s[1]), Gp)


def directed_areas(positions) -> np.ndarray:
    """Twice the signed areas of the triangles opposite each particle.

    ``S_i`` is the determinant of ``[[1, 1, 1], [x], [y]]`` over the other
    three particles, taken in the orders (2,3,4), (1,4,3), (1,2,4), (1,3,2).
    """
    X = np.asarray(positions, dtype=float)[:2]
    P = np.vstack([np.ones(4), X])
    orders = ((1, 2, 3), (0, 3, 2), (0, 1, 3), (0, 2, 1))
    return np.array([np.linalg.det(P[:, list(o)]) for o in orders])


def areas_from_shape(tet: ShapeTetrahedron, Gp) -> np.ndarray:
    """``M E^T Gp e3``, proportional to the directed areas of any planar
    configuration whose shape rotation is ``Gp`` (with ``R3 = 0``)."""
    return tet.masses.values * (tet.E.T @ np.asarray(Gp)[:, 2])


def area_constant(S, tet: ShapeTetrahedron, Gp, rtol: float = 1e-8) -> float:
    """Least-squares constant ``C`` with ``S = C * areas_from_shape(tet, Gp)``.

    Raises
    ------
    InconsistentAreas
        If the componentwise ratios disagree beyond `rtol` of ``|S|``.
    """
    S = np.asarray(S, dtype=float)
    w = areas_from_shape(tet, Gp)
    C = float(w @ S / (w @ w))
    resid = np.max(np.abs(S - C * w)) / max(np.max(np.abs(S)), 1e-300)
    if resid > rtol:
        raise InconsistentAreas(f"directed areas not proportional to M E^T Gp e3 (residual {resid:.3e})")
    return C
