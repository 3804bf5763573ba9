import numpy as np

from ..errors import DegenerateError, DimensionError

RIDGE_REL = 1e-9
RIDGE_ABS = 1e-12
SINGULAR_FLOOR = 1e-12


def as_rng(seed):
    """Accept an int, a SeedSequence, a Generator or None."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def normalize_weights(weights, n):
    if n == 0:
        raise DegenerateError("empty data")
    if weights is None:
        return np.full(n, 1.0 / n)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size != n:
        raise DimensionError(f"{w.size} weights for {n} data points")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError("weights must be finite and nonnegative")
    total = w.sum()
    if total <= 0:
        raise DegenerateError("weights sum to zero")
    return w / total


def effective_sample_size(w):
    w = np.asarray(w, dtype=float)
    s2 = float(np.sum(w * w))
    return float(w.sum() ** 2 / s2) if s2 > 0 else 0.0


def is_singular(S):
    ev = np.linalg.eigvalsh(S)
    return bool(ev[-1] <= 0 or ev[0] <= SINGULAR_FLOOR * ev[-1])


def add_ridge(S):
    """Ridge 1e-9 * trace/dim on the diagonal, or 1e-12 when the trace is zero."""
    dim = S.shape[0]
    tr = float(np.trace(S))
    r = RIDGE_REL * tr / dim if tr > 0 else RIDGE_ABS
    return S + r * np.eye(dim)


def psd_sqrt(S):
    """Symmetric square root of a PSD matrix; tiny negative eigenvalues clip to 0."""
    w, B = np.linalg.eigh(0.5 * (S + S.T))
    return (B * np.sqrt(np.clip(w, 0.0, None))) @ B.T
