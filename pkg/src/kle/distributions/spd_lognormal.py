"""Lognormal distribution on Sym+(d): vecd(log X) ~ N(vecd(log M), Sigma)."""
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError
from ..manifolds import spd_exp, spd_log, vecd, vecd_inv, vecd_size
from ._common import (add_ridge, as_rng, effective_sample_size, is_singular,
                      normalize_weights, psd_sqrt)


@dataclass(frozen=True, eq=False)
class SpdLognormalParams:
    m: np.ndarray
    sigma: np.ndarray
    ridged: bool = False

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        if m.ndim != 2 or sigma.shape != (vecd_size(m.shape[0]),) * 2:
            raise DimensionError("sigma must be d(d+1)/2 square for a d x d mode")
        object.__setattr__(self, "m", 0.5 * (m + m.T))
        object.__setattr__(self, "sigma", 0.5 * (sigma + sigma.T))

    @property
    def dim(self):
        return self.m.shape[0]


def log_jacobian(X):
    """log J(X) for the change of variables X -> vecd(log X).

    J(X) = prod_i 1/l_i * prod_{i<j} (log l_i - log l_j)/(l_i - l_j), with the
    pairwise factor replaced by its limit 1/l_i when eigenvalues coincide.
    """
    lam = np.linalg.eigvalsh(np.asarray(X, dtype=float))
    out = -np.sum(np.log(lam), axis=-1)
    d = lam.shape[-1]
    for i in range(d):
        for j in range(i + 1, d):
            li, lj = lam[..., i], lam[..., j]
            close = np.abs(li - lj) <= 1e-10 * np.maximum(li, lj)
            ratio = np.where(close, 1.0 / li,
                             (np.log(li) - np.log(lj)) / np.where(close, 1.0, li - lj))
            out = out + np.log(ratio)
    return out


def spd_lognormal_log_density(X, params, include_jacobian=False):
    """Log-density of X (single matrix or stack).

    By default this is the density of vecd(log X) in tangent coordinates.
    With ``include_jacobian`` the parameter-free term log J(X) is added,
    giving the density w.r.t. Lebesgue measure on vecd(X).
    """
    X = np.asarray(X, dtype=float)
    V = vecd(spd_log(X)) - vecd(spd_log(params.m))
    m = params.sigma.shape[0]
    L = np.linalg.cholesky(params.sigma)
    z = np.linalg.solve(L, V.reshape(-1, m).T)
    quad = np.sum(z * z, axis=0).reshape(V.shape[:-1])
    log_n = 0.5 * m * np.log(2 * np.pi) + np.log(np.diag(L)).sum()
    out = -0.5 * quad - log_n
    if include_jacobian:
        out = out + log_jacobian(X)
    return float(out) if np.ndim(out) == 0 else out


def spd_lognormal_sample(params, n, rng=None):
    """spd_exp(vecd_inv(z)) with z ~ N(vecd(log M), Sigma); shape (n, d, d)."""
    rng = as_rng(rng)
    m = params.sigma.shape[0]
    z = vecd(spd_log(params.m)) + rng.standard_normal((n, m)) @ psd_sqrt(params.sigma)
    return spd_exp(vecd_inv(z))


def fit_spd_from_logs(V, w):
    """Weighted MLE given precomputed vecd(log X_i) rows and normalised weights."""
    d = int(round((np.sqrt(8 * V.shape[1] + 1) - 1) / 2))
    center = w @ V
    R = V - center
    S = (R * w[:, None]).T @ R
    S = 0.5 * (S + S.T)
    ridged = effective_sample_size(w) <= vecd_size(d) or is_singular(S)
    if ridged:
        S = add_ridge(S)
    return SpdLognormalParams(spd_exp(vecd_inv(center)), S, ridged)


def spd_lognormal_mle(data, weights=None):
    """M = exp(sum w_i log X_i); Sigma = weighted scatter of vecd(log X_i - log M)."""
    X = np.asarray(data, dtype=float)
    if X.ndim == 2:
        X = X[None]
    w = normalize_weights(weights, X.shape[0])
    return fit_spd_from_logs(vecd(spd_log(X)), w)
