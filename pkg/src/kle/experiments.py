"""Synthetic ground-truth generators, evaluation metrics and reference data.

The SPD generator interpolates eigenvalues and eigenvector rotations of the
mode M(t) in Sym+(2) and of the covariance Sigma(t) on vecd coordinates, then
draws lognormal samples at M equidistant times.
"""
from dataclasses import dataclass
import os
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

from .distributions._common import as_rng
from .distributions.acg import AcgParams, acg_sample
from .distributions.spd_lognormal import SpdLognormalParams, spd_lognormal_sample
from .errors import DegenerateError, DimensionError
from .manifolds import spd_log
from .regression import TrajectoryDataset

# Reference numbers, printed next to our own for context.
REFERENCE_VALUES = {
    "letter_b": {"KLE": {"e1": 4.8668, "e2": 1.7390},
                 "GMR": {"e1": 5.5534, "e2": 7.6633},
                 "KMP": {"e1": 5.4985, "e2": 6.4726}},
    "spd2": {"KLE": {"espd": 0.53822}, "GMR": {"espd": 1.08549}},
}

TIME_ATOL = 1e-9
LETTER_B_ENV = "KLE_LETTER_B_PATH"
LETTER_B_DEFAULT = Path(__file__).resolve().parents[2] / "data" / "letter_B.json"


# ----------------------------------------------------------------------------
# SPD ground truth
# ----------------------------------------------------------------------------

def a1(t):
    return (1.0 + 9.0 * t) ** 2


def a2(t):
    return (2.0 - t) ** 2


def beta(t):
    return 6.6322 * t - 6.2831 * t ** 2


def b_values(t):
    t = np.asarray(t, dtype=float)
    return np.stack([0.2 + 1.8 * t, 0.15 + 0.85 * t, np.full(t.shape, 0.1)], axis=-1)


C_END_EULER_DEG = (15.0, 5.0, 10.0)


def _c_slerp():
    # intrinsic Z, Y, X: the matrix product R_Z R_Y R_X
    end = Rotation.from_euler("ZYX", C_END_EULER_DEG, degrees=True)
    return Slerp([0.0, 1.0], Rotation.concatenate([Rotation.identity(), end]))


def c_rotation(t):
    """C(t): geodesic interpolation from I_3 to R_Z(15 deg) R_Y(5 deg) R_X(10 deg)."""
    return _c_slerp()(np.atleast_1d(np.asarray(t, dtype=float))).as_matrix()


def spd_mean_at(t):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    c, s = np.cos(beta(t)), np.sin(beta(t))
    B = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    A = np.stack([a1(t), a2(t)], -1)
    return (B * A[:, None, :]) @ np.swapaxes(B, -1, -2)


def spd_cov_at(t):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    C = c_rotation(t)
    return (C * b_values(t)[:, None, :]) @ np.swapaxes(C, -1, -2)


@dataclass
class SpdGroundTruth:
    times: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    samples: np.ndarray

    def to_dict(self):
        return {"times": self.times.tolist(),
                "means": [m.ravel().tolist() for m in self.means],
                "covariances": [c.ravel().tolist() for c in self.covariances]}


def synth_spd_dataset(m_steps=15, n_per_step=30, seed=0):
    """Ground truth and a dataset of ``n_per_step`` trajectories over ``m_steps`` times.

    Trajectory i collects the i-th draw at every time.
    """
    if m_steps < 2 or n_per_step < 1:
        raise ValueError("need m_steps >= 2 and n_per_step >= 1")
    rng = as_rng(seed)
    times = np.linspace(0.0, 1.0, m_steps)
    means = spd_mean_at(times)
    covs = spd_cov_at(times)
    samples = np.array([spd_lognormal_sample(SpdLognormalParams(M, S), n_per_step, rng)
                        for M, S in zip(means, covs)])
    trajs = [(times, samples[:, i]) for i in range(n_per_step)]
    truth = SpdGroundTruth(times, means, covs, samples)
    return truth, TrajectoryDataset("spd", 2, trajs)


# ----------------------------------------------------------------------------
# Other synthetic sets
# ----------------------------------------------------------------------------

def synth_scalar_demos(n_traj=10, m_points=100, seed=0, noise=0.02):
    """Scalar demonstrations rising from about 0 to about 1 on [0, 1].

    x_i(t) = (1 + 0.05 u_i) sin(pi t / 2) + 0.1 v_i sin(pi t) + noise, with
    u_i, v_i standard normal per trajectory.
    """
    rng = as_rng(seed)
    t = np.linspace(0.0, 1.0, m_points)
    trajs = []
    for _ in range(n_traj):
        u, v = rng.standard_normal(2)
        x = ((1.0 + 0.05 * u) * np.sin(0.5 * np.pi * t) + 0.1 * v * np.sin(np.pi * t)
             + noise * rng.standard_normal(m_points))
        trajs.append((t, x[:, None]))
    return TrajectoryDataset("euclidean", 1, trajs)


def rotating_axis_lambda(t, dim=4, conc=20.0, sweep=np.pi / 3):
    """Lambda(t) whose top eigenvector turns by ``sweep`` in the (e1, e2) plane."""
    th = sweep * float(t)
    B = np.eye(dim)
    B[:2, :2] = [[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]]
    diag = np.ones(dim)
    diag[0] = conc
    return (B * diag) @ B.T


def synth_axial_dataset(n_traj=20, m_points=50, dim=4, seed=0, conc=20.0):
    """Axial trajectories drawn from ACG(Lambda(t)) with a slowly rotating axis."""
    rng = as_rng(seed)
    t = np.linspace(0.0, 1.0, m_points)
    lams = [AcgParams(rotating_axis_lambda(tj, dim, conc)) for tj in t]
    trajs = []
    for _ in range(n_traj):
        x = np.array([acg_sample(p, 1, rng)[0] for p in lams])
        trajs.append((t, x))
    return TrajectoryDataset("axial", dim, trajs)


# ----------------------------------------------------------------------------
# Metrics
# ----------------------------------------------------------------------------

def _match_times(curve_times, query_times):
    curve_times = np.asarray(curve_times, dtype=float)
    idx = []
    for t in np.asarray(query_times, dtype=float):
        k = int(np.argmin(np.abs(curve_times - t)))
        if abs(curve_times[k] - t) > TIME_ATOL:
            raise DimensionError(f"no fitted estimate at t = {t:.12g} (grid mismatch)")
        idx.append(k)
    return np.array(idx, dtype=int)


def _grouped(dataset):
    uniq = np.unique(dataset.times)
    return uniq, [dataset.points[dataset.times == t] for t in uniq]


def _mean_at(means, k):
    m = means[k]
    if m is None:
        raise DegenerateError("fitted estimate missing at an evaluation time")
    return np.asarray(m, dtype=float)


def error_mse_sphere(curve_times, means, dataset, axial=False):
    """e1 = sum_j (1/N_j) sum_i arccos(mu_j . x_ij)^2 (|.| inside for axes)."""
    uniq, groups = _grouped(dataset)
    idx = _match_times(curve_times, uniq)
    contrib = []
    for k, X in zip(idx, groups):
        c = X @ _mean_at(means, k)
        c = np.abs(c) if axial else c
        contrib.append(float(np.mean(np.arccos(np.clip(c, -1.0, 1.0)) ** 2)))
    return float(np.sum(contrib)), uniq, np.array(contrib)


def error_extrinsic_mean_sphere(curve_times, means, dataset):
    """e2 = sum_j arccos(mu_j . nu_j), nu_j the normalised resultant at t_j."""
    uniq, groups = _grouped(dataset)
    idx = _match_times(curve_times, uniq)
    contrib = []
    for k, X in zip(idx, groups):
        r = X.sum(axis=0)
        n = np.linalg.norm(r)
        if n <= 1e-12 * X.shape[0]:
            raise DegenerateError("zero resultant; extrinsic mean undefined")
        contrib.append(float(np.arccos(np.clip(_mean_at(means, k) @ (r / n), -1.0, 1.0))))
    return float(np.sum(contrib)), uniq, np.array(contrib)


def error_spd(curve_times, means, truth_times, truth_means):
    """e = sum_j tr[(log M_hat(t_j) - log M_j)^2]."""
    idx = _match_times(curve_times, truth_times)
    contrib = []
    for k, M in zip(idx, np.asarray(truth_means, dtype=float)):
        D = spd_log(_mean_at(means, k)) - spd_log(M)
        contrib.append(float(np.sum(D * D)))
    return float(np.sum(contrib)), np.asarray(truth_times, dtype=float), np.array(contrib)


# ----------------------------------------------------------------------------
# Letter-B data
# ----------------------------------------------------------------------------

def letter_b_path():
    """Location of the letter-B S^2 dataset, or None if it is not present."""
    env = os.environ.get(LETTER_B_ENV)
    p = Path(env) if env else LETTER_B_DEFAULT
    return p if p.is_file() else None


def load_letter_b(path=None):
    from .io import load_dataset
    path = path or letter_b_path()
    if path is None:
        raise FileNotFoundError(
            f"letter-B dataset not found (set {LETTER_B_ENV} or add {LETTER_B_DEFAULT})")
    return load_dataset(path)


def convert_letter_b_mat(mat_path, out_path, key="demos"):
    """Convert a MATLAB file of S^2 demonstrations to the dataset JSON format.

    Expected layout: variable ``key`` is a numeric array of shape (N, M, 3)
    holding N demonstrations of M unit vectors each, already mapped onto the
    sphere. Times are taken equidistant on [0, 1]. Other layouts (for example
    planar letters before projection) must be converted to this one first.
    """
    from scipy.io import loadmat
    from .io import save_dataset
    raw = np.asarray(loadmat(mat_path)[key], dtype=float)
    if raw.ndim != 3 or raw.shape[2] != 3:
        raise DimensionError(f"expected an (N, M, 3) array under {key!r}, got {raw.shape}")
    raw = raw / np.linalg.norm(raw, axis=2, keepdims=True)
    t = np.linspace(0.0, 1.0, raw.shape[1])
    ds = TrajectoryDataset("sphere", 3, [(t, x) for x in raw])
    save_dataset(ds, out_path)
    return ds
