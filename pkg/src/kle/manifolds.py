"""Geometric types, spectral calculus on symmetric matrices, and metrics.

All functions accept plain arrays as well as the small wrapper types defined
here (they implement ``__array__``). Matrix functions broadcast over leading
axes, so a stack of shape ``(n, d, d)`` is handled in one call.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DegenerateError, DimensionError, NotSPDError, SingularEllipsoidError

SYM_RTOL = 1e-10
EIG_FLOOR = 1e-12
TWO_PI = 2.0 * np.pi


def _check_square(X):
    if X.ndim < 2 or X.shape[-1] != X.shape[-2]:
        raise DimensionError(f"expected square matrices, got shape {X.shape}")


def symmetrize(X):
    X = np.asarray(X, dtype=float)
    _check_square(X)
    return 0.5 * (X + np.swapaxes(X, -1, -2))


def is_symmetric(X, rtol=SYM_RTOL):
    X = np.asarray(X, dtype=float)
    scale = max(np.max(np.abs(X), initial=0.0), 1.0)
    return bool(np.all(np.abs(X - np.swapaxes(X, -1, -2)) <= rtol * scale))


def _spd_eigh(X):
    """Eigendecomposition of SPD matrices, rejecting near-singular input."""
    w, B = np.linalg.eigh(symmetrize(X))
    top = w[..., -1:]
    if np.any(top <= 0) or np.any(w[..., :1] <= EIG_FLOOR * top):
        raise NotSPDError(
            f"matrix is not positive definite (min/max eigenvalue {w.min():.3e}/{w.max():.3e})"
        )
    return w, B


def _spectral(B, f_w):
    return (B * f_w[..., None, :]) @ np.swapaxes(B, -1, -2)


# ----------------------------------------------------------------------------
# Types
# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class UnitVector:
    """A point on the sphere S^{d-1}; normalised on construction."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float).reshape(-1)
        if c.size < 2:
            raise DimensionError("unit vectors need d >= 2")
        n = np.linalg.norm(c)
        if not np.isfinite(n) or n == 0:
            raise DegenerateError("cannot normalise a zero or non-finite vector")
        object.__setattr__(self, "coords", c / n)

    @property
    def dim(self):
        return self.coords.size

    def __array__(self, dtype=None, copy=None):
        return self.coords.astype(dtype) if dtype else self.coords

    def __eq__(self, other):
        if not isinstance(other, UnitVector):
            return NotImplemented
        return other.dim == self.dim and np.allclose(self.coords, other.coords, rtol=0, atol=1e-12)


def canonical_axis(x):
    """Flip the sign of ``x`` (last axis) so its first nonzero entry is positive."""
    x = np.array(x, dtype=float)
    flat = x.reshape(-1, x.shape[-1])
    for row in flat:
        nz = np.flatnonzero(np.abs(row) > 1e-15)
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    return flat.reshape(x.shape)


@dataclass(frozen=True, eq=False)
class AxialVector:
    """A point of S^{d-1}/Z2, i.e. a unit vector up to sign.

    The stored sign is canonical (first nonzero coordinate positive). This is
    only for display and equality; the ACG code only ever uses x x^T.
    """

    coords: np.ndarray

    def __post_init__(self):
        u = UnitVector(self.coords).coords
        object.__setattr__(self, "coords", canonical_axis(u))

    @property
    def dim(self):
        return self.coords.size

    def __array__(self, dtype=None, copy=None):
        return self.coords.astype(dtype) if dtype else self.coords

    def __eq__(self, other):
        if not isinstance(other, AxialVector):
            return NotImplemented
        if other.dim != self.dim:
            return False
        return bool(
            np.allclose(self.coords, other.coords, rtol=0, atol=1e-12)
            or np.allclose(self.coords, -other.coords, rtol=0, atol=1e-12)
        )


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """A symmetric matrix, i.e. a tangent vector of Sym+(d)."""

    entries: np.ndarray

    def __post_init__(self):
        X = np.array(self.entries, dtype=float)
        if X.ndim != 2:
            raise DimensionError("SymMatrix expects a 2-D array")
        _check_square(X)
        if not is_symmetric(X):
            raise DimensionError("matrix is not symmetric")
        object.__setattr__(self, "entries", symmetrize(X))

    @property
    def dim(self):
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries.astype(dtype) if dtype else self.entries


@dataclass(frozen=True, eq=False)
class SpdMatrix:
    """A symmetric positive-definite matrix with cached spectrum.

    Construction rejects matrices whose smallest eigenvalue is at most
    ``1e-12`` times the largest; add an explicit ridge upstream if needed.
    """

    entries: np.ndarray
    _eig: tuple = field(default=None, repr=False)

    def __post_init__(self):
        X = np.array(self.entries, dtype=float)
        if X.ndim != 2:
            raise DimensionError("SpdMatrix expects a 2-D array")
        _check_square(X)
        if not is_symmetric(X):
            raise NotSPDError("matrix is not symmetric")
        X = symmetrize(X)
        w, B = _spd_eigh(X)
        object.__setattr__(self, "entries", X)
        object.__setattr__(self, "_eig", (w, B))

    @property
    def dim(self):
        return self.entries.shape[0]

    @property
    def eigenvalues(self):
        """Eigenvalues in ascending order."""
        return self._eig[0]

    @property
    def eigenvectors(self):
        return self._eig[1]

    def __array__(self, dtype=None, copy=None):
        return self.entries.astype(dtype) if dtype else self.entries


@dataclass(frozen=True, eq=False)
class PlanarPose:
    """A planar displacement (p, phi) in R^2 x S^1; phi is reduced mod 2 pi."""

    p: np.ndarray
    phi: float

    def __post_init__(self):
        p = np.array(self.p, dtype=float).reshape(-1)
        if p.size != 2:
            raise DimensionError("planar position must have 2 coordinates")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "phi", float(np.mod(self.phi, TWO_PI)))


# ----------------------------------------------------------------------------
# Spectral calculus
# ----------------------------------------------------------------------------

def spd_log(X):
    """Matrix logarithm of SPD matrix (or stack) via the eigendecomposition."""
    w, B = _spd_eigh(X)
    return _spectral(B, np.log(w))


def spd_exp(Y):
    """Matrix exponential of a symmetric matrix (or stack); always SPD."""
    w, B = np.linalg.eigh(symmetrize(Y))
    return _spectral(B, np.exp(w))


def spd_sqrt(X):
    w, B = _spd_eigh(X)
    return _spectral(B, np.sqrt(w))


def spd_invsqrt(X):
    w, B = _spd_eigh(X)
    return _spectral(B, 1.0 / np.sqrt(w))


def _vecd_index(d):
    rows, cols = np.triu_indices(d, k=1)
    return rows, cols


def vecd_size(d):
    return d * (d + 1) // 2


def vecd_dim(m):
    """Matrix size d with d(d+1)/2 == m, or DimensionError."""
    d = int(round((np.sqrt(8 * m + 1) - 1) / 2))
    if d < 1 or vecd_size(d) != m:
        raise DimensionError(f"length {m} is not a triangular number")
    return d


def vecd(Y):
    """Isometric vectorisation: diagonal, then sqrt(2) times the upper off-diagonal."""
    Y = np.asarray(Y, dtype=float)
    _check_square(Y)
    d = Y.shape[-1]
    rows, cols = _vecd_index(d)
    diag = np.diagonal(Y, axis1=-2, axis2=-1)
    off = 0.5 * (Y[..., rows, cols] + Y[..., cols, rows])
    return np.concatenate([diag, np.sqrt(2.0) * off], axis=-1)


def vecd_inv(v):
    v = np.asarray(v, dtype=float)
    d = vecd_dim(v.shape[-1])
    rows, cols = _vecd_index(d)
    Y = np.zeros(v.shape[:-1] + (d, d))
    idx = np.arange(d)
    Y[..., idx, idx] = v[..., :d]
    off = v[..., d:] / np.sqrt(2.0)
    Y[..., rows, cols] = off
    Y[..., cols, rows] = off
    return Y


# ----------------------------------------------------------------------------
# Metrics
# ----------------------------------------------------------------------------

def _pair(X, Y):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape[-2:] != Y.shape[-2:]:
        raise DimensionError(f"dimension mismatch: {X.shape} vs {Y.shape}")
    return X, Y


def spd_distance_log_euclidean(X, Y):
    """Frobenius norm of log X - log Y (unsquared)."""
    X, Y = _pair(X, Y)
    D = spd_log(X) - spd_log(Y)
    return np.sqrt(np.sum(D * D, axis=(-2, -1)))


def spd_distance_rao_fisher(X, Y):
    """Affine-invariant distance ||log(X^{-1/2} Y X^{-1/2})||_F.

    Computed from the generalised eigenvalues of (Y, X), which are the
    eigenvalues of X^{-1/2} Y X^{-1/2}.
    """
    X, Y = _pair(X, Y)
    _spd_eigh(X)
    _spd_eigh(Y)
    lam = scipy.linalg.eigh(symmetrize(Y), symmetrize(X), eigvals_only=True)
    return float(np.sqrt(np.sum(np.log(lam) ** 2)))


def circular_distance(a, b):
    """Smallest absolute angle between ``a`` and ``b``, in [0, pi]."""
    d = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), TWO_PI)
    return np.minimum(d, TWO_PI - d)


def circular_mean(angles):
    """Direction of the resultant of unit vectors (cos phi, sin phi)."""
    angles = np.asarray(angles, dtype=float)
    C, S = np.cos(angles).sum(), np.sin(angles).sum()
    if np.hypot(C, S) <= 1e-12 * max(angles.size, 1):
        raise DegenerateError("circular resultant is zero; mean direction undefined")
    return float(np.mod(np.arctan2(S, C), TWO_PI))


def planar_pose_distance(a, b, w_p, w_phi):
    """Weighted distance w_phi * d_phi + w_p * ||p_a - p_b|| on R^2 x S^1."""
    if w_p < 0 or w_phi < 0 or (w_p == 0 and w_phi == 0):
        raise ValueError("weights must be nonnegative and not both zero")
    return float(w_phi * circular_distance(a.phi, b.phi) + w_p * np.linalg.norm(a.p - b.p))


def planar_metric_weights(poses):
    """Inverse mean distances of positions and angles to their means.

    Returns ``(w_p, w_phi)``; the angular mean is the circular mean.
    """
    if len(poses) == 0:
        raise DegenerateError("empty dataset")
    P = np.array([pose.p for pose in poses])
    phi = np.array([pose.phi for pose in poses])
    mean_p = np.linalg.norm(P - P.mean(axis=0), axis=1).mean()
    mean_phi = circular_distance(phi, circular_mean(phi)).mean()
    if mean_p <= 0 or mean_phi <= 0:
        raise DegenerateError("zero mean distance: translational or rotational spread is zero")
    return 1.0 / mean_p, 1.0 / mean_phi


def manipulability_ellipsoid(J):
    """Velocity manipulability ellipsoid M = J J^T of a d x r Jacobian."""
    J = np.asarray(J, dtype=float)
    if J.ndim != 2:
        raise DimensionError("Jacobian must be a 2-D array")
    d, r = J.shape
    if r < d:
        raise SingularEllipsoidError(f"Jacobian {d}x{r} cannot have full row rank")
    s = np.linalg.svd(J, compute_uv=False)
    if s[0] == 0 or s[-1] ** 2 <= EIG_FLOOR * s[0] ** 2:
        raise SingularEllipsoidError("Jacobian is row-rank deficient")
    return symmetrize(J @ J.T)
