"""Elliptically symmetric angular Gaussian (ESAG) on the sphere S^2.

Parameterised by mu in R^3 (direction = mean, norm = concentration) and
gamma in R^2, which encodes the anisotropy rho and the rotation psi of the
elliptical contours about the mean direction. Only d = 3 is supported.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy.optimize import brentq, minimize

from .. import kernels
from ..errors import ConvergenceError, DimensionError
from ._common import as_rng, normalize_weights

MAX_ITER = 2000
FATOL = 1e-9
XATOL = 1e-7
KAPPA_CAP = 1e6


@dataclass(frozen=True, eq=False)
class EsagParams:
    mu: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).reshape(-1)
        gamma = np.asarray(self.gamma, dtype=float).reshape(-1)
        if mu.size != 3 or gamma.size != 2:
            raise DimensionError("ESAG needs mu in R^3 and gamma in R^2")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "gamma", gamma)

    @property
    def theta(self):
        return np.concatenate([self.mu, self.gamma])

    @classmethod
    def from_theta(cls, theta):
        theta = np.asarray(theta, dtype=float)
        return cls(theta[:3], theta[3:5])

    @property
    def kappa(self):
        return float(np.linalg.norm(self.mu))

    @property
    def mean_direction(self):
        return self.mu / self.kappa

    @property
    def rho(self):
        r = float(np.hypot(*self.gamma))
        return math.sqrt(r * r + 1.0) - r

    @property
    def psi(self):
        return 0.5 * math.atan2(self.gamma[1], self.gamma[0])


def esag_build_V(params):
    """Shape matrix V with eigenvalues (rho, 1/rho, 1); V mu = mu and det V = 1."""
    xi1, xi2, xi3, rho = kernels.esag_frame(params.theta)
    return rho * np.outer(xi1, xi1) + np.outer(xi2, xi2) / rho + np.outer(xi3, xi3)


def _as_points(x):
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = X.reshape(-1, 3) if X.size % 3 == 0 else X
    if X.ndim != 2 or X.shape[1] != 3:
        raise DimensionError("ESAG is defined on S^2 (3-vectors)")
    return X, single


def esag_log_density(x, params):
    """Log-density w.r.t. surface measure on S^2, at one point or at rows of (n, 3)."""
    X, single = _as_points(x)
    out = kernels.esag_logpdf_numpy(X, params.theta)
    return float(out[0]) if single else out


def esag_sample(params, n, rng=None):
    """Directions y/|y| with y ~ N(mu, V); shape (n, 3)."""
    rng = as_rng(rng)
    V = esag_build_V(params)
    w, B = np.linalg.eigh(V)
    y = params.mu + (rng.standard_normal((n, 3)) * np.sqrt(w)) @ B.T
    return y / np.linalg.norm(y, axis=1, keepdims=True)


_GL_T, _GL_W = np.polynomial.legendre.leggauss(96)


def _isotropic_resultant(kappa):
    """E[x . mean] for ESAG with V = I and concentration ``kappa``."""
    a = kappa * _GL_T
    dens = np.exp(0.5 * a * a - 0.5 * kappa * kappa + kernels._log_m2_numpy(a))
    return float(np.sum(_GL_W * _GL_T * dens))


def moment_init(X, w):
    """Starting 5-vector: mean resultant direction, gamma = 0.

    The norm is chosen so the isotropic ESAG has the observed mean resultant
    length.
    """
    m = w @ X
    R = float(np.linalg.norm(m))
    direction = m / R if R > 1e-12 else np.array([0.0, 0.0, 1.0])
    lo, hi = 1e-6, 1e3
    if R <= _isotropic_resultant(lo):
        kappa = lo
    elif R >= _isotropic_resultant(hi):
        kappa = 1.0 / math.sqrt(max(1.0 - R, 1e-12))
    else:
        kappa = brentq(lambda k: _isotropic_resultant(k) - R, lo, hi, xtol=1e-10)
    return np.concatenate([kappa * direction, [0.0, 0.0]])


def _initial_simplex(theta0):
    step_mu = 0.2 * max(np.linalg.norm(theta0[:3]), 0.5)
    steps = np.array([step_mu, step_mu, step_mu, 0.25, 0.25])
    return np.vstack([theta0, theta0 + np.diag(steps)])


def fit_esag(X, w, init=None, max_iter=MAX_ITER, fatol=FATOL, xatol=XATOL):
    """Weighted ESAG MLE on prepared arrays; returns ``(params, info)``.

    ``w`` must already be normalised. Raises ConvergenceError (with the best
    iterate attached) when Nelder-Mead hits ``max_iter`` or the concentration
    diverges.
    """
    X = np.ascontiguousarray(X, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    theta0 = moment_init(X, w) if init is None else np.asarray(init, dtype=float)
    f0 = kernels.esag_negloglik(theta0, X, w)
    res = minimize(
        kernels.esag_negloglik, theta0, args=(X, w), method="Nelder-Mead",
        options={"maxiter": max_iter, "maxfev": 4 * max_iter, "fatol": fatol,
                 "xatol": xatol, "initial_simplex": _initial_simplex(theta0)},
    )
    params = EsagParams.from_theta(res.x)
    info = {"n_iter": int(res.nit), "objective": float(-res.fun), "initial_objective": float(-f0)}
    if params.kappa > KAPPA_CAP:
        raise ConvergenceError("ESAG concentration diverging (degenerate data)", params, res.nit)
    if not res.success:
        raise ConvergenceError(f"Nelder-Mead did not converge: {res.message}", params, res.nit)
    return params, info


def esag_mle(data, weights=None, init=None, max_iter=MAX_ITER):
    """Maximiser of sum_i w_i log f_ESAG(x_i; mu, gamma) by Nelder-Mead."""
    X, _ = _as_points(data)
    w = normalize_weights(weights, X.shape[0])
    return fit_esag(X, w, init=init, max_iter=max_iter)[0]
