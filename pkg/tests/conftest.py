import numpy as np
import pytest


def random_spd(rng, d, spread=1.0):
    A = rng.standard_normal((d, d))
    Q, _ = np.linalg.qr(A)
    ev = np.exp(spread * rng.uniform(-1, 1, d))
    return (Q * ev) @ Q.T


def random_rotation(rng, d):
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] *= -1
    return Q


def sphere_quadrature(n_theta=200, n_phi=400):
    """Product rule on S^2: Gauss-Legendre in cos(theta), trapezoid in phi."""
    z, wz = np.polynomial.legendre.leggauss(n_theta)
    phi = np.arange(n_phi) * 2 * np.pi / n_phi
    Z, P = np.meshgrid(z, phi, indexing="ij")
    r = np.sqrt(1 - Z ** 2)
    X = np.stack([r * np.cos(P), r * np.sin(P), Z], -1).reshape(-1, 3)
    W = (wz[:, None] * np.full(n_phi, 2 * np.pi / n_phi)[None, :]).ravel()
    return X, W


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
