"""Angular central Gaussian on the projective space S^{d-1}/Z2."""
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .. import kernels
from ..errors import ConvergenceError, DimensionError, NotSPDError, SingularIterateError
from ..manifolds import SpdMatrix
from ._common import as_rng, normalize_weights

TOL = 1e-4
MAX_ITER = 1000


@dataclass(frozen=True, eq=False)
class AcgParams:
    """ACG parameter Lambda, rescaled on construction so that trace = d."""

    lam: np.ndarray

    def __post_init__(self):
        L = np.asarray(SpdMatrix(self.lam).entries)
        d = L.shape[0]
        # leave already-normalised input bit-for-bit alone (serialisation round trips)
        if abs(np.trace(L) - d) > 1e-13 * d:
            L = L * (d / np.trace(L))
        object.__setattr__(self, "lam", L)

    @property
    def dim(self):
        return self.lam.shape[0]

    @property
    def eigenvalues(self):
        """Descending eigenvalues a_1 >= ... >= a_d."""
        return np.linalg.eigvalsh(self.lam)[::-1]

    @property
    def eigenvectors(self):
        """Columns ordered like :attr:`eigenvalues`."""
        return np.linalg.eigh(self.lam)[1][:, ::-1]

    @property
    def mean_axis(self):
        return self.eigenvectors[:, 0]


def acg_log_density(x, params):
    """log[Gamma(d/2) / (2 sqrt(pi^d |Lambda|))] - d/2 log(x^T Lambda^{-1} x)."""
    d = params.dim
    x = np.asarray(x, dtype=float)
    X = x.reshape(-1, d)
    _, logdet = np.linalg.slogdet(params.lam)
    q = np.einsum("ij,jk,ik->i", X, np.linalg.inv(params.lam), X)
    const = gammaln(d / 2) - np.log(2.0) - 0.5 * d * np.log(np.pi) - 0.5 * logdet
    out = const - 0.5 * d * np.log(q)
    return float(out[0]) if x.ndim <= 1 else out


def acg_sample(params, n, rng=None):
    """Axes y/|y| with y ~ N(0, Lambda); shape (n, d)."""
    rng = as_rng(rng)
    w, B = np.linalg.eigh(params.lam)
    y = (rng.standard_normal((n, params.dim)) * np.sqrt(w)) @ B.T
    return y / np.linalg.norm(y, axis=1, keepdims=True)


def acg_fixed_point_residual(lam, X, w):
    """Relative Frobenius residual of Lambda = d sum_i w_i x_i x_i^T / (x_i^T Lambda^{-1} x_i)."""
    X = np.asarray(X, dtype=float)
    w = normalize_weights(w, X.shape[0])
    d = X.shape[1]
    q = np.einsum("ij,jk,ik->i", X, np.linalg.inv(lam), X)
    rhs = d * (X * (w / q)[:, None]).T @ X
    return float(np.linalg.norm(lam - rhs) / np.linalg.norm(lam))


def fit_acg(X, w, init=None, tol=TOL, max_iter=MAX_ITER):
    """Weighted Tyler iteration on prepared arrays; returns ``(params, info)``.

    Iterates from ``init`` (identity by default) until the Rao-Fisher distance
    between successive iterates and the relative fixed-point residual are
    both at most ``tol``.
    """
    X = np.ascontiguousarray(X, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    d = X.shape[1]
    lam0 = np.eye(d) if init is None else np.ascontiguousarray(init, dtype=float)
    lam, n_iter, status, residual = kernels.tyler_fixed_point(X, w, lam0, float(tol), int(max_iter))
    info = {"n_iter": int(n_iter), "residual": float(residual)}
    if status == kernels.TYLER_SINGULAR:
        raise SingularIterateError(
            "Tyler iterate lost positive definiteness (data on a proper subspace?)", None, n_iter)
    try:
        params = AcgParams(lam)
    except NotSPDError as exc:
        raise SingularIterateError(str(exc), None, n_iter) from exc
    if status == kernels.TYLER_MAX_ITER:
        raise ConvergenceError(f"Tyler iteration did not converge in {max_iter} steps",
                               params, n_iter)
    return params, info


def acg_mle(data, weights=None, tol=TOL, max_iter=MAX_ITER, init=None):
    """ACG maximum-likelihood estimate, normalised to trace d."""
    X = np.asarray(data, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        raise DimensionError("axial data must be an (n, d) array with d >= 2")
    X = X / np.linalg.norm(X, axis=1, keepdims=True)
    w = normalize_weights(weights, X.shape[0])
    return fit_acg(X, w, init=init, tol=tol, max_iter=max_iter)[0]
