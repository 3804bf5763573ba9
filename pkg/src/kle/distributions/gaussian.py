"""Multivariate normal: weighted MLE, density and sampler."""
from dataclasses import dataclass

import numpy as np

from ._common import (add_ridge, as_rng, effective_sample_size, is_singular,
                      normalize_weights, psd_sqrt)


@dataclass(frozen=True, eq=False)
class GaussianParams:
    mu: np.ndarray
    sigma: np.ndarray
    ridged: bool = False

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        sigma = np.asarray(self.sigma, dtype=float).reshape(mu.size, mu.size)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", 0.5 * (sigma + sigma.T))

    @property
    def dim(self):
        return self.mu.size


def _as_matrix(data):
    X = np.asarray(data, dtype=float)
    return X[:, None] if X.ndim == 1 else X


def fit_gaussian(X, w):
    """Weighted MLE on an (n, d) array with normalised weights."""
    mu = w @ X
    R = X - mu
    S = (R * w[:, None]).T @ R
    S = 0.5 * (S + S.T)
    d = X.shape[1]
    ridged = effective_sample_size(w) <= d + 1 or is_singular(S)
    if ridged:
        S = add_ridge(S)
    return GaussianParams(mu, S, ridged)


def gaussian_mle(data, weights=None):
    """Weighted mean and weighted scatter about it (divisor: the weight sum).

    A ridge is added, and ``ridged`` set, when the effective sample size is
    at most d + 1 or the scatter matrix is singular.
    """
    X = _as_matrix(data)
    return fit_gaussian(X, normalize_weights(weights, X.shape[0]))


def gaussian_log_density(x, params):
    """Log-density at one point (shape (d,)) or at the rows of an (n, d) array."""
    d = params.dim
    x = np.asarray(x, dtype=float)
    X = x.reshape(-1, d)
    L = np.linalg.cholesky(params.sigma)
    z = np.linalg.solve(L, (X - params.mu).T)
    out = -0.5 * np.sum(z * z, axis=0) - np.log(np.diag(L)).sum() - 0.5 * d * np.log(2 * np.pi)
    return float(out[0]) if x.ndim <= 1 and x.size == d else out


def gaussian_sample(params, n, rng=None):
    """``n`` draws of N(mu, sigma), shape (n, d). Sigma may be PSD."""
    rng = as_rng(rng)
    z = rng.standard_normal((n, params.dim))
    return params.mu + z @ psd_sqrt(params.sigma)
