"""New trajectories from a fitted model by resampling and smoothing.

One point is drawn from the fitted distribution at each resample time, and
the resulting set is smoothed by a KLE fit of the same family. For Euclidean
families the smoother is linear, which the function :func:`smoother_matrix`
makes explicit.
"""
from dataclasses import dataclass

import numpy as np

from .distributions._common import as_rng
from .errors import DegenerateError
from .regression import (Kernel, QueryGrid, TrajectoryDataset, curve_mean, kle_fit,
                         normalise_raw)

DEFAULT_RESAMPLE = 120


@dataclass(frozen=True)
class GenerationSpec:
    """Resample count and layout, smoothing kernel and output grid.

    ``kernel`` defaults to the bandwidth stored in the fitted curve and
    ``output_times`` to the curve's own grid; ``resample_times`` defaults to
    ``n_resample`` equidistant times.
    """

    n_resample: int = DEFAULT_RESAMPLE
    resample_times: np.ndarray = None
    kernel: Kernel = None
    output_times: np.ndarray = None
    seed: int = 0

    def __post_init__(self):
        if self.resample_times is not None:
            t = QueryGrid(self.resample_times).times
            object.__setattr__(self, "resample_times", t)
            object.__setattr__(self, "n_resample", t.size)
        if self.n_resample < 2:
            raise ValueError("n_resample must be at least 2")

    def times(self):
        if self.resample_times is not None:
            return self.resample_times
        return np.linspace(0.0, 1.0, self.n_resample)


def smoother_matrix(resample_times, output_times, kernel):
    """Row-stochastic S with S_ij proportional to K_h(t_i - t_rj)."""
    tr = np.asarray(resample_times, dtype=float).reshape(-1)
    to = np.asarray(output_times, dtype=float).reshape(-1)
    if tr.size == 0 or to.size == 0:
        raise ValueError("empty time list")
    return np.array([normalise_raw(kernel(t - tr))[0] for t in to])


def nearest_index(grid_times, t):
    """Index of the grid time closest to ``t`` (lower index on ties)."""
    return int(np.argmin(np.abs(np.asarray(grid_times) - t)))


def _resample(curve, times, rng):
    fam = curve.family
    pts = []
    for t in times:
        p = curve.params[nearest_index(curve.times, t)]
        if p is None:
            raise DegenerateError(f"no fitted parameters near t = {t:.6g}")
        pts.append(np.asarray(fam.sample(p, 1, rng), dtype=float).reshape(fam.point_shape))
    return np.array(pts)


def generate_trajectory(curve, spec=None, return_samples=False, options=None):
    """One smooth trajectory drawn from ``curve``.

    Returns ``(times, points)``, plus the resampled ``(t_r, x_r)`` when
    ``return_samples`` is set.
    """
    spec = spec or GenerationSpec()
    rng = as_rng(spec.seed)
    tr = spec.times()
    samples = _resample(curve, tr, rng)
    kernel = spec.kernel or Kernel(curve.config["bandwidth"])
    out_times = curve.times if spec.output_times is None else spec.output_times
    grid = QueryGrid(out_times)
    fam = curve.family
    ds = TrajectoryDataset(fam.tag, fam.dim, [(tr, samples)])
    smooth = kle_fit(ds, grid, kernel, options)
    means = curve_mean(smooth)
    if any(m is None for m in means):
        raise DegenerateError("smoothing failed at some output times")
    result = (grid.times.copy(), np.array(means))
    if return_samples:
        return result + ((tr.copy(), samples),)
    return result


def generate_trajectories(curve, spec=None, count=1, options=None):
    """``count`` trajectories with independent seeds spawned from ``spec.seed``."""
    spec = spec or GenerationSpec()
    children = np.random.SeedSequence(spec.seed).spawn(count)
    out = []
    for child in children:
        sub = GenerationSpec(spec.n_resample, spec.resample_times, spec.kernel,
                             spec.output_times, np.random.default_rng(child))
        out.append(generate_trajectory(curve, sub, options=options))
    return out
