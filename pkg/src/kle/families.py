"""Per-manifold glue between datasets and the distribution families.

A family knows how to validate a point, turn a stack of points into the array
its weighted estimator consumes (``prepare``), fit, sample, report the mean
point of a fitted distribution, and (de)serialise parameters. The regression
engine only ever talks to this interface.
"""
import numpy as np

from .distributions.acg import AcgParams, acg_sample, fit_acg
from .distributions.esag import EsagParams, esag_sample, fit_esag
from .distributions.gaussian import GaussianParams, fit_gaussian, gaussian_sample
from .distributions.spd_lognormal import (SpdLognormalParams, fit_spd_from_logs,
                                          spd_lognormal_sample)
from .errors import DimensionError, DegenerateError, NotSPDError
from .manifolds import SpdMatrix, canonical_axis, is_symmetric, spd_log, vecd, vecd_size

MANIFOLDS = ("euclidean", "sphere", "axial", "spd")
UNIT_ATOL = 1e-6
AMBIGUOUS_RTOL = 1e-9


class Family:
    """Base class; subclasses fill in the family-specific pieces."""

    tag = None
    name = None

    def __init__(self, dim):
        self.dim = int(dim)
        if self.dim < 1:
            raise DimensionError("dimension must be positive")

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"

    @property
    def point_shape(self):
        return (self.dim,)

    @property
    def flat_size(self):
        return int(np.prod(self.point_shape))

    def validate(self, x):
        """Return ``x`` as a canonical point array, or raise."""
        x = np.asarray(x, dtype=float)
        if x.size != self.flat_size:
            raise DimensionError(f"expected {self.flat_size} coordinates, got {x.size}")
        x = x.reshape(self.point_shape)
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite coordinates")
        return x

    def prepare(self, points):
        return np.ascontiguousarray(points, dtype=float).reshape(-1, self.dim)

    def init_from(self, params):
        """Warm-start value derived from a fitted parameter set (or None)."""
        return None

    def fit(self, prepared, w, init=None, tol=None, max_iter=None):
        raise NotImplementedError

    def mean(self, params):
        """``(point, ambiguous)`` for a fitted parameter set."""
        raise NotImplementedError

    def sample(self, params, n, rng):
        raise NotImplementedError

    def distance(self, point, points):
        """Family distance from one point to each of a stack of points."""
        raise NotImplementedError

    def params_to_dict(self, params):
        raise NotImplementedError

    def params_from_dict(self, doc):
        raise NotImplementedError

    def param_vector(self, params):
        """Flat vector of all real parameters (for comparisons)."""
        return np.concatenate([np.ravel(np.asarray(v, dtype=float))
                               for v in self.params_to_dict(params).values()
                               if not isinstance(v, bool)])


class EuclideanFamily(Family):
    tag = "euclidean"
    name = "gaussian"

    @property
    def ess_threshold(self):
        return self.dim + 1

    def fit(self, prepared, w, init=None, tol=None, max_iter=None):
        p = fit_gaussian(prepared, w)
        return p, {"ridged": p.ridged, "n_iter": 0}

    def mean(self, params):
        return params.mu.copy(), False

    def sample(self, params, n, rng):
        return gaussian_sample(params, n, rng)

    def distance(self, point, points):
        return np.linalg.norm(np.reshape(points, (-1, self.dim)) - point, axis=1)

    def params_to_dict(self, params):
        return {"mu": params.mu.tolist(), "sigma": params.sigma.ravel().tolist(),
                "ridged": bool(params.ridged)}

    def params_from_dict(self, doc):
        return GaussianParams(doc["mu"], np.reshape(doc["sigma"], (self.dim, self.dim)),
                              bool(doc.get("ridged", False)))


class _UnitFamily(Family):
    def validate(self, x):
        x = super().validate(x)
        n = np.linalg.norm(x)
        if abs(n - 1.0) > UNIT_ATOL:
            raise DegenerateError(f"point is not unit norm (|x| = {n:.9g})")
        return x / n


class SphereFamily(_UnitFamily):
    tag = "sphere"
    name = "esag"
    ess_threshold = 5

    def __init__(self, dim=3):
        super().__init__(dim)
        if self.dim != 3:
            raise DimensionError("ESAG is only available on S^2 (dim = 3)")

    def init_from(self, params):
        return params.theta

    def fit(self, prepared, w, init=None, tol=None, max_iter=None):
        kw = {} if max_iter is None else {"max_iter": max_iter}
        p, info = fit_esag(prepared, w, init=init, **kw)
        info["ridged"] = False
        return p, info

    def mean(self, params):
        return params.mean_direction, False

    def sample(self, params, n, rng):
        return esag_sample(params, n, rng)

    def distance(self, point, points):
        c = np.reshape(points, (-1, 3)) @ point
        return np.arccos(np.clip(c, -1.0, 1.0))

    def params_to_dict(self, params):
        return {"mu": params.mu.tolist(), "gamma": params.gamma.tolist()}

    def params_from_dict(self, doc):
        return EsagParams(doc["mu"], doc["gamma"])


class AxialFamily(_UnitFamily):
    tag = "axial"
    name = "acg"

    def __init__(self, dim):
        super().__init__(dim)
        if self.dim < 2:
            raise DimensionError("axial data needs dim >= 2")

    @property
    def ess_threshold(self):
        return self.dim

    def init_from(self, params):
        return params.lam

    def fit(self, prepared, w, init=None, tol=None, max_iter=None):
        kw = {}
        if tol is not None:
            kw["tol"] = tol
        if max_iter is not None:
            kw["max_iter"] = max_iter
        p, info = fit_acg(prepared, w, init=init, **kw)
        info["ridged"] = False
        return p, info

    def mean(self, params):
        a = params.eigenvalues
        ambiguous = bool(a[0] - a[1] <= AMBIGUOUS_RTOL * a[0])
        return canonical_axis(params.mean_axis), ambiguous

    def sample(self, params, n, rng):
        return acg_sample(params, n, rng)

    def distance(self, point, points):
        c = np.abs(np.reshape(points, (-1, self.dim)) @ point)
        return np.arccos(np.clip(c, 0.0, 1.0))

    def params_to_dict(self, params):
        return {"lambda": params.lam.ravel().tolist()}

    def params_from_dict(self, doc):
        return AcgParams(np.reshape(doc["lambda"], (self.dim, self.dim)))


class SpdFamily(Family):
    tag = "spd"
    name = "spd_lognormal"

    @property
    def point_shape(self):
        return (self.dim, self.dim)

    @property
    def ess_threshold(self):
        return vecd_size(self.dim)

    def validate(self, x):
        x = super().validate(x)
        if not is_symmetric(x):
            raise NotSPDError("matrix is not symmetric")
        return SpdMatrix(x).entries

    def prepare(self, points):
        P = np.asarray(points, dtype=float).reshape((-1,) + self.point_shape)
        return np.ascontiguousarray(vecd(spd_log(P)))

    def fit(self, prepared, w, init=None, tol=None, max_iter=None):
        p = fit_spd_from_logs(prepared, w)
        return p, {"ridged": p.ridged, "n_iter": 0}

    def mean(self, params):
        return params.m.copy(), False

    def sample(self, params, n, rng):
        return spd_lognormal_sample(params, n, rng)

    def distance(self, point, points):
        V = self.prepare(points)
        return np.linalg.norm(V - vecd(spd_log(point)), axis=1)

    def params_to_dict(self, params):
        return {"m": params.m.ravel().tolist(), "sigma": params.sigma.ravel().tolist(),
                "ridged": bool(params.ridged)}

    def params_from_dict(self, doc):
        m = vecd_size(self.dim)
        return SpdLognormalParams(np.reshape(doc["m"], self.point_shape),
                                  np.reshape(doc["sigma"], (m, m)),
                                  bool(doc.get("ridged", False)))


_FAMILIES = {"euclidean": EuclideanFamily, "sphere": SphereFamily,
             "axial": AxialFamily, "spd": SpdFamily}


def get_family(manifold, dim):
    """Family object for a manifold tag and dimension."""
    try:
        cls = _FAMILIES[manifold]
    except KeyError:
        raise ValueError(f"unknown manifold {manifold!r}; expected one of {MANIFOLDS}") from None
    return cls(dim)
