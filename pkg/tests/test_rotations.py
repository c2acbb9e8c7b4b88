import numpy as np

from fourbody.rotations import euler_zxz, euler_zxz_angles, hat, is_rotation, vee, zxz_body_basis


def test_hat_vee(rng):
    v, u = rng.normal(size=3), rng.normal(size=3)
    assert np.allclose(hat(v) @ u, np.cross(v, u))
    assert np.allclose(vee(hat(v)), v)


def test_euler_angles_round_trip(rng):
    for _ in range(50):
        q = np.array([rng.uniform(-np.pi, np.pi), rng.uniform(0.1, np.pi - 0.1), rng.uniform(-np.pi, np.pi)])
        Rm = euler_zxz(q)
        assert is_rotation(Rm)
        assert np.allclose(euler_zxz_angles(Rm), q, atol=1e-12)


def test_body_basis_matches_finite_difference(rng):
    q = np.array([0.4, 1.1, -0.7])
    qdot = rng.normal(size=3)
    h = 1e-6
    dR = (euler_zxz(q + h * qdot) - euler_zxz(q - h * qdot)) / (2 * h)
    Omega = vee(euler_zxz(q).T @ dR)
    assert np.allclose(zxz_body_basis(q) @ qdot, Omega, atol=1e-8)
