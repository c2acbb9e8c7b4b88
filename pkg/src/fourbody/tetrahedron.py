"""
Mass-dependent rigid orthogonal tetrahedron.

For four pairwise-distinct masses the three rows ``a, b, c`` of the 3x4
matrix ``E`` are fixed by orthogonality to the mass vector, mutual M- and
M^2-orthogonality, and the normalization ``a M a^T = mu``.  Placing the
masses at the columns of ``E`` gives a body whose inertia tensor is
``2 mu`` times the identity and whose center of mass is the origin.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMasses

__all__ = [
    "MassQuadruple",
    "CubicRoots",
    "ShapeTetrahedron",
    "IdentityReport",
    "reduced_mass",
    "cubic_coefficients",
    "characteristic_cubic_roots",
    "build_shape_tetrahedron",
    "validate_shape_identities",
    "tetrahedron_volume",
    "EQUAL_MASS_RTOL",
    "IDENTITY_TOL",
]

EQUAL_MASS_RTOL = 1e-9
IDENTITY_TOL = 1e-12


@dataclass(frozen=True)
class MassQuadruple:
    """Four positive masses in user order.

    ``order[k]`` is the user index of the k-th largest mass, so
    ``values[order]`` is the canonical descending sequence.
    """

    values: np.ndarray
    order: np.ndarray = field(repr=False)

    def __init__(self, masses):
        m = np.asarray(masses, dtype=float).reshape(-1)
        if m.shape != (4,):
            raise ValueError(f"expected four masses, got {m.size}")
        if not np.all(np.isfinite(m)) or np.any(m <= 0.0):
            raise ValueError(f"masses must be finite and positive: {m}")
        m = m.copy()
        m.setflags(write=False)
        order = np.argsort(-m, kind="stable")
        order.setflags(write=False)
        object.__setattr__(self, "values", m)
        object.__setattr__(self, "order", order)

    @property
    def canonical(self) -> np.ndarray:
        """Masses sorted so that m1 > m2 > m3 > m4."""
        return self.values[self.order]

    @property
    def total(self) -> float:
        return float(self.values.sum())

    @property
    def is_canonical(self) -> bool:
        return bool(np.all(self.order == np.arange(4)))

    def check_distinct(self, rtol: float = EQUAL_MASS_RTOL) -> None:
        """Raise :class:`DegenerateMasses` if two masses coincide within `rtol`."""
        c = self.canonical
        for k in range(3):
            if c[k] - c[k + 1] <= rtol * c[k]:
                i, j = self.order[k], self.order[k + 1]
                raise DegenerateMasses(
                    f"masses m{i + 1}={float(c[k])!r} and m{j + 1}={float(c[k + 1])!r} are equal "
                    f"within relative tolerance {rtol:g}"
                )

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return 4


def as_masses(masses) -> MassQuadruple:
    if isinstance(masses, MassQuadruple):
        return masses
    return MassQuadruple(masses)


@dataclass(frozen=True)
class CubicRoots:
    """Roots of the characteristic cubic, ``m1 > x_a > m2 > x_b > m3 > x_c > m4``."""

    x_a: float
    x_b: float
    x_c: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x_a, self.x_b, self.x_c])


@dataclass(frozen=True)
class ShapeTetrahedron:
    """The constant vertex matrix and the data it was built from.

    Attributes
    ----------
    E : ndarray, shape (3, 4)
        Rows ``a, b, c``; column ``j`` is the vertex carrying user mass ``j``.
    mu : float
        Reduced mass, cube root of ``prod(m) / sum(m)``.
    roots : CubicRoots
    d_vector : ndarray, shape (4,)
        ``sqrt(mu / m_total) * (1, 1, 1, 1)``, completes ``E`` to a basis.
    y : ndarray, shape (3,)
        Positive normalizers ``y_a, y_b, y_c``.
    masses : MassQuadruple
    """

    E: np.ndarray
    mu: float
    roots: CubicRoots
    d_vector: np.ndarray
    y: np.ndarray
    masses: MassQuadruple

    @property
    def M(self) -> np.ndarray:
        return np.diag(self.masses.values)

    @property
    def E_canonical(self) -> np.ndarray:
        """``E`` with columns in descending-mass order."""
        return self.E[:, self.masses.order]

    @property
    def y_a(self) -> float:
        return float(self.y[0])

    @property
    def y_b(self) -> float:
        return float(self.y[1])

    @property
    def y_c(self) -> float:
        return float(self.y[2])

    def edge_lengths(self) -> dict[tuple[int, int], float]:
        return {
            (i, j): float(np.linalg.norm(self.E[:, i] - self.E[:, j]))
            for i, j in itertools.combinations(range(4), 2)
        }


def reduced_mass(masses) -> float:
    """Cube root of ``m1 m2 m3 m4 / (m1 + m2 + m3 + m4)``."""
    m = as_masses(masses).values
    return float(np.cbrt(np.prod(m) / np.sum(m)))


def cubic_coefficients(masses) -> np.ndarray:
    """Coefficients (highest power first) of the characteristic cubic.

    The cubic is ``sum_i m_i prod_{j != i} (m_j - x)``, i.e. the numerator of
    ``sum_i m_i / (m_i - x)``; it is symmetric in the masses.
    """
    m = as_masses(masses).values
    e1 = m.sum()
    e2 = sum(p * q for p, q in itertools.combinations(m, 2))
    e3 = sum(p * q * r for p, q, r in itertools.combinations(m, 3))
    e4 = np.prod(m)
    return np.array([-e1, 2.0 * e2, -3.0 * e3, 4.0 * e4])


def _root_differences(m):
    """Roots and the matrix ``m_i - x_k`` (canonical order), to full relative accuracy.

    Between consecutive masses ``sum_i m_i / (m_i - x)`` increases strictly
    from -inf to +inf, so each interval holds exactly one root.  The root is
    found as an offset ``t`` from the nearer bracketing mass by safeguarded
    Newton/bisection; the differences ``m_i - x`` are then formed from the
    offset and stay accurate when two masses are close.
    """
    eps = np.finfo(float).eps
    xs = np.empty(3)
    diffs = np.empty((3, 4))
    for k in range(3):
        lo, hi = m[k + 1], m[k]
        mid = lo + 0.5 * (hi - lo)
        g_mid = np.sum(m / (m - mid))
        anchor = lo if g_mid > 0 else hi
        d = m - anchor
        a, b = lo - anchor, hi - anchor
        if g_mid > 0:
            b = mid - anchor
        else:
            a = mid - anchor
        t = 0.5 * (a + b)
        for _ in range(200):
            q = d - t
            g = np.sum(m / q)
            if g > 0:
                b = t
            elif g < 0:
                a = t
            else:
                break
            gp = np.sum(m / (q * q))
            t_new = t - g / gp
            if not (a < t_new < b):
                t_new = 0.5 * (a + b)
            if abs(t_new - t) <= 2 * eps * abs(t_new) or b - a <= 2 * eps * max(abs(a), abs(b)):
                t = t_new
                break
            t = t_new
        xs[k] = anchor + t
        diffs[k] = d - t
    return xs, diffs


def characteristic_cubic_roots(masses) -> CubicRoots:
    """Three interlacing real roots of the characteristic cubic.

    Each root is bracketed by consecutive canonical masses and refined by
    safeguarded Newton iteration on the equivalent rational equation.

    Raises
    ------
    DegenerateMasses
        If two masses coincide within ``EQUAL_MASS_RTOL``.
    """
    mq = as_masses(masses)
    mq.check_distinct()
    xs, _ = _root_differences(mq.canonical)
    return CubicRoots(*map(float, xs))


def build_shape_tetrahedron(masses) -> ShapeTetrahedron:
    """Construct ``E`` for four pairwise-distinct masses.

    Rows are ``mu * y_k / (m_i - x_k)`` with ``y_k > 0`` fixed by
    ``row M row^T = mu``.  The result is expressed in user order; the sign
    pattern of the rows holds in canonical (descending) order.
    """
    mq = as_masses(masses)
    mq.check_distinct()
    m = mq.canonical
    xs, diffs = _root_differences(m)
    roots = CubicRoots(*map(float, xs))
    mu = reduced_mass(mq)
    rows = []
    ys = []
    for q in diffs:
        v = 1.0 / q
        y = 1.0 / np.sqrt(mu * np.sum(m * v * v))
        rows.append(mu * y * v)
        ys.append(y)
    E_can = np.array(rows)
    E = np.empty_like(E_can)
    E[:, mq.order] = E_can
    d = np.full(4, np.sqrt(mu / mq.total))
    for arr in (E, d):
        arr.setflags(write=False)
    return ShapeTetrahedron(E=E, mu=mu, roots=roots, d_vector=d, y=np.array(ys), masses=mq)


def tetrahedron_volume(vertices) -> float:
    """Unsigned volume of the tetrahedron spanned by four 3D columns."""
    v = np.asarray(vertices, dtype=float)
    return abs(float(np.linalg.det(v[:, 1:] - v[:, :1]))) / 6.0


@dataclass
class IdentityReport:
    """Maximum residual of each algebraic identity and its verdict."""

    residuals: dict[str, float]
    tol: float = IDENTITY_TOL

    @property
    def passed(self) -> dict[str, bool]:
        return {k: bool(v <= self.tol) for k, v in self.residuals.items()}

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def lines(self) -> list[str]:
        return [
            f"{name:<22s} {res:.3e}  {'PASS' if res <= self.tol else 'FAIL'}"
            for name, res in self.residuals.items()
        ]


def validate_shape_identities(tet: ShapeTetrahedron, masses=None, tol: float = IDENTITY_TOL) -> IdentityReport:
    """Residuals of the algebraic identities satisfied by ``E``.

    Residuals are made dimensionless: entries of size ``mu / m_j`` are
    divided by that size, the rest by ``mu``; edge lengths are relative.
    """
    mq = tet.masses if masses is None else as_masses(masses)
    m = mq.values
    M = np.diag(m)
    E = np.asarray(tet.E, dtype=float)
    mu = tet.mu
    mt = m.sum()
    r = np.sqrt(mu / mt)
    res: dict[str, float] = {}

    res["mass_orthogonality"] = float(np.max(np.abs(E @ m)) / mt)

    G = E @ M @ E.T / mu
    res["M_gram"] = float(np.max(np.abs(G - np.eye(3))))
    G2 = E @ M @ M @ E.T / mu
    off = G2 - np.diag(np.diag(G2))
    res["M2_orthogonality"] = float(np.max(np.abs(off)) / mt)

    P = np.vstack([E, np.full((1, 4), r)])
    left = P @ M @ P.T / mu
    right = P.T @ P
    res["product_left"] = float(np.max(np.abs(left - np.eye(4))))
    scale = np.sqrt(np.outer(mu / m, mu / m))
    res["product_right"] = float(np.max(np.abs(right - np.diag(mu / m)) / scale))

    col2 = np.sum(E * E, axis=0)
    res["column_norms"] = float(np.max(np.abs(col2 - mu * (1.0 / m - 1.0 / mt)) / (mu / m)))

    cross = E.T @ E
    worst = 0.0
    for i, j in itertools.combinations(range(4), 2):
        worst = max(worst, abs(cross[i, j] + mu / mt))
    res["cross_products"] = worst / mu

    worst = 0.0
    for i in range(4):
        for j, k in itertools.permutations([q for q in range(4) if q != i], 2):
            worst = max(worst, abs(E[:, i] @ (E[:, j] - E[:, k])))
    res["orthocentric"] = worst / mu

    worst = 0.0
    for i, j in itertools.combinations(range(4), 2):
        edge = np.linalg.norm(E[:, i] - E[:, j])
        expect = np.sqrt(mu * (1.0 / m[i] + 1.0 / m[j]))
        worst = max(worst, abs(edge - expect) / expect)
    res["edge_lengths"] = worst

    res["volume"] = abs(tetrahedron_volume(E) - 1.0 / 6.0)

    Ec = E[:, mq.order]
    signs = np.array([[1, -1, -1, -1], [1, 1, -1, -1], [1, 1, 1, -1]])
    res["sign_pattern"] = 0.0 if np.array_equal(np.sign(Ec), signs) else 1.0

    return IdentityReport(residuals=res, tol=tol)
