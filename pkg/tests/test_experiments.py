import numpy as np
import pytest
from scipy.stats import spearmanr

from kle.errors import DegenerateError, DimensionError
from kle.experiments import (REFERENCE_VALUES, a1, a2, b_values, beta, c_rotation,
                             convert_letter_b_mat, error_extrinsic_mean_sphere, error_mse_sphere,
                             error_spd, letter_b_path, load_letter_b, spd_cov_at, spd_mean_at,
                             synth_spd_dataset)
from kle.regression import Kernel, QueryGrid, TrajectoryDataset, curve_mean, kle_fit


def is_spd(X):
    return np.allclose(X, X.T) and np.linalg.eigvalsh(X).min() > 0


def rz(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def ry(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])


def rx(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])


class TestInterpolants:
    def test_values(self):
        assert a1(0.5) == 30.25 and a2(0.5) == 2.25
        assert beta(0.0) == 0.0 and abs(beta(1.0) - 20 * np.pi / 180) < 1e-3
        assert np.allclose(b_values(0.0), [0.2, 0.15, 0.1])
        assert np.allclose(np.sort(np.linalg.eigvalsh(spd_cov_at(0.0)[0]))[::-1], [0.2, 0.15, 0.1])

    def test_rotation_endpoints(self):
        end = rz(np.radians(15)) @ ry(np.radians(5)) @ rx(np.radians(10))
        C0, C1 = c_rotation([0.0, 1.0])
        assert np.allclose(C0, np.eye(3), atol=1e-15)
        assert np.allclose(C1, end, atol=1e-13)

    def test_rotation_is_geodesic(self):
        # C(t) = exp(t log C(1)) about a fixed axis at uniform angular speed
        C = c_rotation(np.linspace(0, 1, 11))
        ang = np.arccos(np.clip((np.trace(C, axis1=1, axis2=2) - 1) / 2, -1, 1))
        assert np.allclose(np.diff(ang), ang[-1] / 10, atol=1e-12)
        for R in C:
            assert np.allclose(R @ R.T, np.eye(3), atol=1e-13) and np.linalg.det(R) > 0
        half = C[5]
        assert np.allclose(half @ half, C[-1], atol=1e-12)

    def test_mean_spectrum(self):
        for t in (0.0, 0.3, 1.0):
            M = spd_mean_at(t)[0]
            assert np.allclose(np.sort(np.linalg.eigvalsh(M)), sorted([a1(t), a2(t)]))
            u = np.array([np.cos(beta(t)), np.sin(beta(t))])
            assert np.allclose(M @ u, a1(t) * u, rtol=0, atol=1e-12)


class TestSynthSpd:
    def test_shapes_and_spd(self):
        truth, ds = synth_spd_dataset(15, 30, seed=0)
        assert truth.times.shape == (15,) and truth.samples.shape == (15, 30, 2, 2)
        assert ds.n_trajectories == 30 and len(ds) == 450
        assert all(is_spd(m) for m in truth.means) and all(is_spd(c) for c in truth.covariances)
        assert all(is_spd(x) for x in ds.points)

    def test_seed_determinism(self):
        a, _ = synth_spd_dataset(5, 4, seed=11)
        b, _ = synth_spd_dataset(5, 4, seed=11)
        c, _ = synth_spd_dataset(5, 4, seed=12)
        assert np.array_equal(a.samples, b.samples) and not np.array_equal(a.samples, c.samples)

    def test_bad_args(self):
        with pytest.raises(ValueError):
            synth_spd_dataset(1, 5)

    def test_eigenvalue_trend(self):
        truth, ds = synth_spd_dataset(15, 30, seed=2)
        grid = QueryGrid.equidistant(30)
        curve = kle_fit(ds, grid, Kernel(0.06))
        fitted = [np.linalg.eigvalsh(p.sigma)[-1] for p in curve.params]
        true = [np.linalg.eigvalsh(S)[-1] for S in spd_cov_at(grid.times)]
        assert spearmanr(fitted, true)[0] > 0.8


def sphere_ds(groups):
    return TrajectoryDataset("sphere", 3, [(np.array([t] * len(x)), np.array(x, dtype=float))
                                          for t, x in groups])


class TestMetrics:
    def test_e1_examples(self):
        ds = sphere_ds([(0.0, [[0, 0, 1]]), (1.0, [[1, 0, 0]])])
        assert error_mse_sphere([0.0, 1.0], [[0, 0, 1], [1, 0, 0]], ds)[0] == 0
        th = 0.3
        ds = sphere_ds([(0.5, [[np.sin(th), 0, np.cos(th)], [-np.sin(th), 0, np.cos(th)]])])
        assert abs(error_mse_sphere([0.5], [[0, 0, 1]], ds)[0] - th ** 2) < 1e-14

    def test_e1_axial(self):
        ds = TrajectoryDataset("axial", 3, [([0.5], [[0, 0, -1.0]])])
        assert error_mse_sphere([0.5], [[0, 0, 1.0]], ds, axial=True)[0] == 0

    def test_e2_examples(self):
        ds = sphere_ds([(0.5, [[1, 0, 0], [0, 1, 0]])])
        val, times, contrib = error_extrinsic_mean_sphere([0.5], [[1, 0, 0]], ds)
        assert abs(val - np.pi / 4) < 1e-14 and contrib.shape == (1,)
        assert error_extrinsic_mean_sphere([0.5], [[np.sqrt(0.5), np.sqrt(0.5), 0]], ds)[0] < 1e-7
        with pytest.raises(DegenerateError):
            error_extrinsic_mean_sphere([0.5], [[1, 0, 0]], sphere_ds([(0.5, [[1, 0, 0], [-1, 0, 0]])]))

    def test_espd_examples(self):
        M = spd_mean_at([0.0, 0.5])
        assert error_spd([0.0, 0.5], M, [0.0, 0.5], M)[0] == 0
        val = error_spd([0.5], [np.e * M[1]], [0.5], [M[1]])[0]
        assert abs(val - 2) < 1e-12
        assert error_spd([0.5], [1.01 * M[1]], [0.5], [M[1]])[0] > 0

    def test_grid_mismatch(self):
        M = spd_mean_at([0.0, 0.5])
        with pytest.raises(DimensionError):
            error_spd([0.0, 0.4], M, [0.0, 0.5], M)
        ds = sphere_ds([(0.5, [[1, 0, 0]])])
        with pytest.raises(DimensionError):
            error_mse_sphere([0.4], [[1, 0, 0]], ds)

    def test_references(self):
        assert REFERENCE_VALUES["spd2"]["KLE"]["espd"] == 0.53822
        assert REFERENCE_VALUES["letter_b"]["KLE"] == {"e1": 4.8668, "e2": 1.7390}


class TestLetterB:
    def test_converter(self, tmp_path):
        from scipy.io import savemat
        rng = np.random.default_rng(0)
        raw = rng.standard_normal((3, 20, 3))
        savemat(tmp_path / "b.mat", {"demos": raw})
        ds = convert_letter_b_mat(tmp_path / "b.mat", tmp_path / "b.json")
        again = load_letter_b(tmp_path / "b.json")
        assert ds.n_trajectories == 3 and np.array_equal(ds.points, again.points)
        savemat(tmp_path / "bad.mat", {"demos": raw[:, :, :2]})
        with pytest.raises(DimensionError):
            convert_letter_b_mat(tmp_path / "bad.mat", tmp_path / "x.json")

    def test_missing_file(self, monkeypatch, tmp_path):
        monkeypatch.setenv("KLE_LETTER_B_PATH", str(tmp_path / "absent.json"))
        assert letter_b_path() is None
        with pytest.raises(FileNotFoundError):
            load_letter_b()

    @pytest.mark.skipif(letter_b_path() is None, reason="letter-B dataset not provided")
    def test_table_values(self):
        ds = load_letter_b()
        uniq = np.unique(ds.times)
        curve = kle_fit(ds, QueryGrid(uniq), Kernel(0.01))
        means = curve_mean(curve)
        e1 = error_mse_sphere(curve.times, means, ds)[0]
        e2 = error_extrinsic_mean_sphere(curve.times, means, ds)[0]
        assert abs(e1 - 4.8668) <= 0.05 * 4.8668
        assert abs(e2 - 1.7390) <= 0.05 * 1.7390
