"""Hot inner loops: the weighted Tyler fixed point and the ESAG log-likelihood.

Each kernel exists twice: a numba ``@njit`` loop (``*_numba``) and a
vectorised numpy version (``*_numpy``). The public names ``tyler_fixed_point``
and ``esag_negloglik`` resolve to one of them according to
:data:`kle._accel.USE_NUMBA`. Both implementations follow the same algorithm
and stopping rule; only the floating-point summation order differs.

Tyler status codes: 0 converged, 1 iteration limit reached, 2 iterate lost
positive definiteness.
"""
import math

import numpy as np
from scipy.special import erfc

from ._accel import HAVE_NUMBA, USE_NUMBA, njit

TYLER_OK = 0
TYLER_MAX_ITER = 1
TYLER_SINGULAR = 2

_PD_FLOOR = 1e-12
_LOG_2PI = math.log(2.0 * math.pi)
_SERIES_CUT = -12.0
_SERIES_TERMS = 12


# ----------------------------------------------------------------------------
# numpy implementations
# ----------------------------------------------------------------------------

def _tyler_numpy(X, w, lam0, tol, max_iter):
    d = X.shape[1]
    lam = lam0.copy()
    residual = np.inf
    for k in range(max_iter):
        ev, V = np.linalg.eigh(lam)
        if ev[0] <= _PD_FLOOR * ev[-1]:
            return lam, k, TYLER_SINGULAR, residual
        inv = (V / ev) @ V.T
        q = np.einsum("ij,jk,ik->i", X, inv, X)
        c = w / q
        s = c.sum()
        new = d * ((X * (c / s)[:, None]).T @ X)
        new = 0.5 * (new + new.T)
        residual = np.linalg.norm(lam - s * new) / np.linalg.norm(lam)
        P = (V / np.sqrt(ev)) @ V.T
        g = np.linalg.eigvalsh(P @ new @ P)
        if g[0] <= _PD_FLOOR * g[-1]:
            return new, k + 1, TYLER_SINGULAR, residual
        rf = math.sqrt(float(np.sum(np.log(g) ** 2)))
        if rf <= tol and residual <= tol:
            return lam, k, TYLER_OK, residual
        lam = new
    return lam, max_iter, TYLER_MAX_ITER, residual


def _log_m2_numpy(a):
    a = np.asarray(a, dtype=float)
    out = np.empty_like(a)
    direct = a >= _SERIES_CUT
    ad = a[direct]
    Phi = 0.5 * erfc(-ad / math.sqrt(2.0))
    phi = np.exp(-0.5 * ad * ad) / math.sqrt(2.0 * math.pi)
    out[direct] = np.log((1.0 + ad * ad) * Phi + ad * phi)
    b = -a[~direct]
    if b.size:
        s = np.zeros_like(b)
        c = 2.0
        for k in range(_SERIES_TERMS):
            s += c / b ** (2 * k + 3)
            c *= -(2 * k + 4) * (2 * k + 3) / (2.0 * (k + 1))
        out[~direct] = -0.5 * _LOG_2PI - 0.5 * b * b + np.log(s)
    return out


def esag_frame(theta):
    """Eigenframe of the ESAG shape matrix.

    Returns ``(xi1, xi2, xi3, rho)`` with V = rho xi1 xi1^T + xi2 xi2^T / rho
    + xi3 xi3^T and xi3 the mean direction. The reference axis used to build
    the frame is (0, 0, 1), or (1, 0, 0) when mu is within 1e-10 of the pole.
    """
    mu = np.asarray(theta[:3], dtype=float)
    g1, g2 = float(theta[3]), float(theta[4])
    kappa = math.sqrt(float(mu @ mu))
    xi3 = mu / kappa if kappa > 0 else np.array([0.0, 0.0, 1.0])
    cross = np.cross(np.array([0.0, 0.0, 1.0]), xi3)
    if np.linalg.norm(cross) < 1e-10:
        cross = np.cross(np.array([1.0, 0.0, 0.0]), xi3)
    xi2t = cross / np.linalg.norm(cross)
    xi1t = np.cross(xi2t, xi3)
    r = math.hypot(g1, g2)
    rho = math.sqrt(r * r + 1.0) - r
    psi = 0.5 * math.atan2(g2, g1)
    cp, sp = math.cos(psi), math.sin(psi)
    return cp * xi1t + sp * xi2t, -sp * xi1t + cp * xi2t, xi3, rho


def esag_inverse_shape(theta):
    """Inverse shape matrix V^{-1} (3x3) for parameters (mu1, mu2, mu3, gamma1, gamma2)."""
    xi1, xi2, xi3, rho = esag_frame(theta)
    return np.outer(xi1, xi1) / rho + rho * np.outer(xi2, xi2) + np.outer(xi3, xi3)


def esag_logpdf_numpy(X, theta):
    """Vectorised ESAG log-density at the rows of ``X`` (n x 3)."""
    X = np.asarray(X, dtype=float)
    mu = np.asarray(theta[:3], dtype=float)
    vinv = esag_inverse_shape(theta)
    q = np.einsum("ij,jk,ik->i", X, vinv, X)
    a = (X @ mu) / np.sqrt(q)
    return (-_LOG_2PI - 1.5 * np.log(q) + 0.5 * a * a - 0.5 * float(mu @ mu)
            + _log_m2_numpy(a))


def _esag_negloglik_numpy(theta, X, w):
    return -float(w @ esag_logpdf_numpy(X, theta))


# ----------------------------------------------------------------------------
# numba implementations
# ----------------------------------------------------------------------------

@njit
def _log_m2_scalar(a):
    if a >= _SERIES_CUT:
        Phi = 0.5 * math.erfc(-a / math.sqrt(2.0))
        phi = math.exp(-0.5 * a * a) / math.sqrt(2.0 * math.pi)
        return math.log((1.0 + a * a) * Phi + a * phi)
    b = -a
    s = 0.0
    c = 2.0
    for k in range(_SERIES_TERMS):
        s += c / b ** (2 * k + 3)
        c *= -(2 * k + 4) * (2 * k + 3) / (2.0 * (k + 1))
    return -0.5 * _LOG_2PI - 0.5 * b * b + math.log(s)


@njit
def _cross(a, b):
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


@njit
def _esag_vinv_numba(theta):
    mu = theta[:3].copy()
    kappa = math.sqrt(mu[0] * mu[0] + mu[1] * mu[1] + mu[2] * mu[2])
    if kappa > 0:
        xi3 = mu / kappa
    else:
        xi3 = np.array([0.0, 0.0, 1.0])
    cross = _cross(np.array([0.0, 0.0, 1.0]), xi3)
    if math.sqrt(np.sum(cross * cross)) < 1e-10:
        cross = _cross(np.array([1.0, 0.0, 0.0]), xi3)
    xi2t = cross / math.sqrt(np.sum(cross * cross))
    xi1t = _cross(xi2t, xi3)
    g1 = theta[3]
    g2 = theta[4]
    r = math.sqrt(g1 * g1 + g2 * g2)
    rho = math.sqrt(r * r + 1.0) - r
    psi = 0.5 * math.atan2(g2, g1)
    cp = math.cos(psi)
    sp = math.sin(psi)
    xi1 = cp * xi1t + sp * xi2t
    xi2 = -sp * xi1t + cp * xi2t
    vinv = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            vinv[i, j] = xi1[i] * xi1[j] / rho + rho * xi2[i] * xi2[j] + xi3[i] * xi3[j]
    return vinv


@njit
def _esag_negloglik_numba(theta, X, w):
    vinv = _esag_vinv_numba(theta)
    m0, m1, m2 = theta[0], theta[1], theta[2]
    half_k2 = 0.5 * (m0 * m0 + m1 * m1 + m2 * m2)
    total = 0.0
    for i in range(X.shape[0]):
        x0, x1, x2 = X[i, 0], X[i, 1], X[i, 2]
        q = (x0 * (vinv[0, 0] * x0 + vinv[0, 1] * x1 + vinv[0, 2] * x2)
             + x1 * (vinv[1, 0] * x0 + vinv[1, 1] * x1 + vinv[1, 2] * x2)
             + x2 * (vinv[2, 0] * x0 + vinv[2, 1] * x1 + vinv[2, 2] * x2))
        a = (x0 * m0 + x1 * m1 + x2 * m2) / math.sqrt(q)
        lf = -_LOG_2PI - 1.5 * math.log(q) + 0.5 * a * a - half_k2 + _log_m2_scalar(a)
        total += w[i] * lf
    return -total


@njit
def _tyler_numba(X, w, lam0, tol, max_iter):
    n, d = X.shape
    lam = lam0.copy()
    residual = np.inf
    c = np.empty(n)
    for k in range(max_iter):
        ev, V = np.linalg.eigh(lam)
        if ev[0] <= _PD_FLOOR * ev[-1]:
            return lam, k, TYLER_SINGULAR, residual
        inv = (V / ev) @ V.T
        s = 0.0
        for i in range(n):
            q = 0.0
            for a in range(d):
                acc = 0.0
                for b in range(d):
                    acc += inv[a, b] * X[i, b]
                q += X[i, a] * acc
            c[i] = w[i] / q
            s += c[i]
        new = np.zeros((d, d))
        for i in range(n):
            ci = d * c[i] / s
            for a in range(d):
                for b in range(a, d):
                    new[a, b] += ci * X[i, a] * X[i, b]
        for a in range(d):
            for b in range(a + 1, d):
                new[b, a] = new[a, b]
        diff = 0.0
        norm = 0.0
        for a in range(d):
            for b in range(d):
                r = lam[a, b] - s * new[a, b]
                diff += r * r
                norm += lam[a, b] * lam[a, b]
        residual = math.sqrt(diff / norm)
        P = (V / np.sqrt(ev)) @ V.T
        g = np.linalg.eigvalsh(P @ new @ P)
        if g[0] <= _PD_FLOOR * g[-1]:
            return new, k + 1, TYLER_SINGULAR, residual
        rf = 0.0
        for a in range(d):
            lg = math.log(g[a])
            rf += lg * lg
        rf = math.sqrt(rf)
        if rf <= tol and residual <= tol:
            return lam, k, TYLER_OK, residual
        lam = new
    return lam, max_iter, TYLER_MAX_ITER, residual


if USE_NUMBA:
    tyler_fixed_point = _tyler_numba
    esag_negloglik = _esag_negloglik_numba
else:
    tyler_fixed_point = _tyler_numpy
    esag_negloglik = _esag_negloglik_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"

__all__ = [
    "BACKEND", "HAVE_NUMBA", "tyler_fixed_point", "esag_negloglik",
    "esag_logpdf_numpy", "esag_inverse_shape", "esag_frame",
    "TYLER_OK", "TYLER_MAX_ITER", "TYLER_SINGULAR",
]
