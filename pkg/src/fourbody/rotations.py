"""Small SO(3) helpers: hat map, z-x-z Euler chart, plane rotations."""

import numpy as np

__all__ = [
    "hat",
    "vee",
    "rot_x",
    "rot_z",
    "rot2",
    "euler_zxz",
    "euler_zxz_angles",
    "zxz_body_basis",
    "is_rotation",
]


def hat(v):
    """Skew matrix with ``hat(v) @ u == cross(v, u)``."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(S):
    """Inverse of :func:`hat`, using the skew part of `S`."""
    S = 0.5 * (np.asarray(S) - np.asarray(S).T)
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def rot_z(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_x(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot2(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s], [s, c]])


def euler_zxz(q):
    """``Rz(q0) @ Rx(q1) @ Rz(q2)``."""
    return rot_z(q[0]) @ rot_x(q[1]) @ rot_z(q[2])


def euler_zxz_angles(Rm):
    """Angles ``q`` with ``euler_zxz(q) == Rm``; ``q1`` in ``[0, pi]``.

    Singular (not unique) when ``sin(q1) == 0``.
    """
    Rm = np.asarray(Rm)
    q1 = np.arccos(np.clip(Rm[2, 2], -1.0, 1.0))
    q0 = np.arctan2(Rm[0, 2], -Rm[1, 2])
    q2 = np.arctan2(Rm[2, 0], Rm[2, 1])
    return np.array([q0, q1, q2])


def zxz_body_basis(q):
    """Columns ``c_j`` with body angular velocity ``sum_j c_j dq_j/dt``.

    For ``R = Rz(q0) Rx(q1) Rz(q2)`` and ``hat(Omega) = R^T dR/dt``.
    """
    _, th, ps = q
    c0 = np.array([np.sin(th) * np.sin(ps), np.sin(th) * np.cos(ps), np.cos(th)])
    c1 = np.array([np.cos(ps), -np.sin(ps), 0.0])
    c2 = np.array([0.0, 0.0, 1.0])
    return np.column_stack([c0, c1, c2])


def is_rotation(Rm, tol=1e-12):
    Rm = np.asarray(Rm)
    return bool(np.max(np.abs(Rm.T @ Rm - np.eye(3))) <= tol and abs(np.linalg.det(Rm) - 1.0) <= tol)
