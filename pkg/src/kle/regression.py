"""Kernel weights and the kernelised-likelihood regression engine.

For every query time t the engine computes normalised kernel weights over all
demonstration points and hands them to the weighted MLE of the family that
matches the dataset's manifold. Query points are independent, so they can be
fitted in any order and on any number of worker threads.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import os

import numpy as np

from .distributions._common import effective_sample_size
from .errors import (ConvergenceError, DegenerateError, DimensionError,
                     EmptyNeighborhoodError, FitFailedError, KLEError)
from .families import get_family

UNDERFLOW = 1e-300
DEFAULT_GRID = 100
CV_TIE_RTOL = 1e-12
# scores below this are rounding noise and count as exact ties
CV_TIE_ATOL = 1e-12


@dataclass(frozen=True)
class Kernel:
    """Gaussian kernel K_h(u) = exp(-u^2 / 2h^2)."""

    h: float

    def __post_init__(self):
        h = float(self.h)
        if not np.isfinite(h) or h <= 0:
            raise ValueError(f"bandwidth must be positive and finite, got {self.h!r}")
        object.__setattr__(self, "h", h)

    def __call__(self, u):
        u = np.asarray(u, dtype=float) / self.h
        return np.exp(-0.5 * u * u)


class TrajectoryDataset:
    """Time-stamped demonstrations on one manifold.

    Parameters
    ----------
    manifold : {"euclidean", "sphere", "axial", "spd"}
    dim : int
        Ambient dimension (matrix size for ``spd``).
    trajectories : sequence of (times, points)
        ``times`` has shape (M_i,) with values in [0, 1]; ``points`` has shape
        (M_i, dim) or (M_i, dim, dim).

    Notes
    -----
    Points are also stored flattened and sorted by (t, coordinates), which
    makes every fit independent of the order of trajectories and of points
    within them.
    """

    def __init__(self, manifold, dim, trajectories):
        self.family = get_family(manifold, dim)
        self.manifold = self.family.tag
        self.dim = self.family.dim
        shape = self.family.point_shape
        trajs = []
        for k, (t, x) in enumerate(trajectories):
            t = np.asarray(t, dtype=float).reshape(-1)
            x = np.asarray(x, dtype=float)
            if x.size != t.size * self.family.flat_size:
                raise DimensionError(f"trajectory {k}: {t.size} times but points of shape {x.shape}")
            if np.any(~np.isfinite(t)) or np.any(t < 0) or np.any(t > 1):
                raise ValueError(f"trajectory {k}: times must lie in [0, 1]")
            x = x.reshape((t.size,) + shape)
            x = np.array([self.family.validate(p) for p in x]).reshape((t.size,) + shape)
            trajs.append((t, x))
        self.trajectories = trajs
        if not trajs or sum(t.size for t, _ in trajs) == 0:
            raise DegenerateError("dataset has no points")
        T = np.concatenate([t for t, _ in trajs])
        X = np.concatenate([x for _, x in trajs])
        ids = np.concatenate([np.full(t.size, k) for k, (t, _) in enumerate(trajs)])
        flat = X.reshape(X.shape[0], -1)
        order = np.lexsort(tuple(flat[:, j] for j in range(flat.shape[1] - 1, -1, -1)) + (T,))
        self.times = T[order]
        self.points = X[order]
        self.traj_ids = ids[order]
        self.prepared = self.family.prepare(self.points)

    @property
    def n_trajectories(self):
        return len(self.trajectories)

    def __len__(self):
        return self.times.size

    def subset(self, keep):
        """New dataset with only the trajectories whose indices are in ``keep``."""
        keep = set(int(k) for k in keep)
        return TrajectoryDataset(self.manifold, self.dim,
                                 [tr for k, tr in enumerate(self.trajectories) if k in keep])


@dataclass(frozen=True)
class QueryGrid:
    """Strictly increasing query times in [0, 1]."""

    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        if t.size == 0:
            raise ValueError("query grid is empty")
        if np.any(~np.isfinite(t)) or t[0] < 0 or t[-1] > 1 or np.any(np.diff(t) <= 0):
            raise ValueError("query times must be strictly increasing within [0, 1]")
        object.__setattr__(self, "times", t)

    @classmethod
    def equidistant(cls, T=DEFAULT_GRID):
        if T < 1:
            raise ValueError("grid needs at least one point")
        return cls(np.linspace(0.0, 1.0, T) if T > 1 else np.zeros(1))

    def __len__(self):
        return self.times.size


@dataclass(frozen=True)
class SolverOptions:
    """Knobs for the iterative solvers and the scheduler.

    ``workers`` of None reads ``KLE_THREADS`` (unset means 1, 0 means one per
    CPU). Warm starts chain solutions across neighbouring query times and are
    only used on the single-worker path.
    """

    tol: float = 1e-4
    max_iter: int = None
    warm_start: bool = False
    workers: int = None

    def n_workers(self):
        n = self.workers
        if n is None:
            env = os.environ.get("KLE_THREADS", "").strip()
            n = int(env) if env else 1
        if n == 0:
            n = os.cpu_count() or 1
        return max(int(n), 1)


@dataclass
class FittedCurve:
    """Per-query-time parameters of a fitted model.

    ``params[k]`` is None when the fit at ``times[k]`` failed; the reason is in
    ``diagnostics[k]``.
    """

    family: object
    times: np.ndarray
    params: list
    ess: np.ndarray
    diagnostics: list
    config: dict = field(default_factory=dict)

    def __len__(self):
        return self.times.size

    @property
    def n_failed(self):
        return sum(d["status"] == "failed" for d in self.diagnostics)

    @property
    def n_degraded(self):
        return sum(d["status"] == "degraded" for d in self.diagnostics)

    def param_matrix(self):
        """Stack of :meth:`Family.param_vector` over successful points (NaN rows otherwise)."""
        vecs = [None if p is None else self.family.param_vector(p) for p in self.params]
        size = next(v.size for v in vecs if v is not None)
        return np.array([np.full(size, np.nan) if v is None else v for v in vecs])


def normalise_raw(raw):
    """Normalise raw kernel values; raise when they all underflow."""
    raw = np.asarray(raw, dtype=float)
    if raw.size == 0 or not np.any(raw >= UNDERFLOW):
        raise EmptyNeighborhoodError("all kernel weights underflow at this query")
    s = float(raw.sum())
    return raw / s, s


def kernel_weights(t, dataset, kernel):
    """W_ij(t) over the flattened (sorted) dataset and the raw kernel sum."""
    return normalise_raw(kernel(t - dataset.times))


def kernel_weights_manifold(q, points, kernel, metric):
    """Normalised K_h(metric(q, p)) over ``points`` and the raw kernel sum."""
    d = np.array([metric(q, p) for p in points], dtype=float)
    return normalise_raw(kernel(d))


def _fit_one(family, prepared, raw_fn, t, init, options):
    diag = {"t": float(t), "status": "ok", "ess": 0.0, "n_iter": 0,
            "ridged": False, "ambiguous_mean": False, "message": None}
    try:
        w, _ = normalise_raw(raw_fn(t))
        ess = effective_sample_size(w)
        diag["ess"] = ess
        try:
            params, info = family.fit(prepared, w, init=init, tol=options.tol,
                                      max_iter=options.max_iter)
        except ConvergenceError as exc:
            diag["n_iter"] = exc.n_iter or 0
            diag["message"] = str(exc)
            if exc.best is None:
                raise
            params = exc.best
            diag["status"] = "degraded"
        else:
            diag["n_iter"] = int(info.get("n_iter", 0))
            diag["ridged"] = bool(info.get("ridged", False))
        if ess <= family.ess_threshold:
            diag["status"] = "degraded"
            diag["message"] = diag["message"] or (
                f"effective sample size {ess:.3g} <= {family.ess_threshold}")
        if diag["ridged"]:
            diag["status"] = "degraded"
            diag["message"] = diag["message"] or "covariance ridge added"
        diag["ambiguous_mean"] = family.mean(params)[1]
        return params, diag
    except (KLEError, np.linalg.LinAlgError, ValueError) as exc:
        diag["status"] = "failed"
        diag["message"] = f"{type(exc).__name__}: {exc}"
        return None, diag


def fit_curve(family, prepared, raw_fn, grid, options=None, config=None):
    """Weighted MLE at every grid time with weights ``raw_fn(t)`` (unnormalised).

    Raises FitFailedError only when every grid point fails.
    """
    options = options or SolverOptions()
    times = grid.times if isinstance(grid, QueryGrid) else QueryGrid(grid).times
    workers = options.n_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda t: _fit_one(family, prepared, raw_fn, t, None, options), times))
    else:
        results = []
        init = None
        for t in times:
            params, diag = _fit_one(family, prepared, raw_fn, t, init, options)
            results.append((params, diag))
            if options.warm_start and params is not None and diag["status"] == "ok":
                init = family.init_from(params)
    params = [r[0] for r in results]
    diags = [r[1] for r in results]
    if all(p is None for p in params):
        raise FitFailedError("every grid point failed: " + (diags[0]["message"] or ""), diags)
    return FittedCurve(family, times.copy(), params, np.array([d["ess"] for d in diags]),
                       diags, dict(config or {}))


def kle_fit(dataset, grid=None, kernel=None, options=None):
    """Kernelised likelihood estimate of the family parameters along ``grid``."""
    if kernel is None:
        raise ValueError("a Kernel is required")
    grid = QueryGrid.equidistant() if grid is None else grid
    config = {"bandwidth": kernel.h, "manifold": dataset.manifold, "dim": dataset.dim}
    return fit_curve(dataset.family, dataset.prepared,
                     lambda t: kernel(t - dataset.times), grid, options, config)


def curve_mean(curve):
    """Mean point per query time (None where the fit failed)."""
    return [None if p is None else curve.family.mean(p)[0] for p in curve.params]


@dataclass
class CVResult:
    best: float
    table: list


def bandwidth_cv(dataset, candidates, options=None):
    """Leave-one-trajectory-out choice of the bandwidth.

    The score of h is the mean family distance between each held-out point and
    the fitted mean at its time. Ties go to the largest h.
    """
    candidates = [float(h) for h in candidates]
    if not candidates:
        raise ValueError("no candidate bandwidths")
    if len(candidates) == 1:
        return CVResult(candidates[0], [{"h": candidates[0], "error": None,
                                         "n_points": 0, "n_skipped": 0}])
    if dataset.n_trajectories < 2:
        raise ValueError("cross-validation needs at least two trajectories")
    fam = dataset.family
    table = []
    for h in candidates:
        total, count, skipped = 0.0, 0, 0
        for k in range(dataset.n_trajectories):
            train = dataset.subset(i for i in range(dataset.n_trajectories) if i != k)
            t_held, x_held = dataset.trajectories[k]
            uniq = np.unique(t_held)
            try:
                curve = kle_fit(train, QueryGrid(uniq), Kernel(h), options)
            except FitFailedError:
                skipped += t_held.size
                continue
            means = dict(zip(uniq.tolist(), curve_mean(curve)))
            for t, x in zip(t_held.tolist(), x_held):
                m = means[t]
                if m is None:
                    skipped += 1
                    continue
                total += float(fam.distance(m, x[None])[0])
                count += 1
        err = total / count if count else np.inf
        table.append({"h": h, "error": err, "n_points": count, "n_skipped": skipped})
    best_err = min(row["error"] for row in table)
    tied = [row["h"] for row in table
            if row["error"] <= best_err + CV_TIE_RTOL * abs(best_err) + CV_TIE_ATOL]
    return CVResult(max(tied), table)
