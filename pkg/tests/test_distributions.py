import numpy as np
import pytest
from scipy.special import gammaln
from scipy.stats import multivariate_normal, norm

from kle.distributions import (AcgParams, EsagParams, GaussianParams, SpdLognormalParams,
                               acg_fixed_point_residual, acg_log_density, acg_mle, acg_sample,
                               esag_build_V, esag_log_density, esag_mle, esag_sample,
                               gaussian_log_density, gaussian_mle, gaussian_sample, log_jacobian,
                               spd_lognormal_log_density, spd_lognormal_mle, spd_lognormal_sample)
from kle.distributions.esag import fit_esag, moment_init
from kle.errors import ConvergenceError, DegenerateError, DimensionError
from kle.manifolds import spd_exp, spd_log, vecd, vecd_inv

from conftest import random_spd, sphere_quadrature
from oracles.brute_mle import brute_gaussian, brute_spd_lognormal


def random_esag(rng, kappa_range=(0.5, 6.0), gamma_scale=1.0):
    u = rng.standard_normal(3)
    u /= np.linalg.norm(u)
    return EsagParams(u * rng.uniform(*kappa_range), rng.standard_normal(2) * gamma_scale)


class TestGaussian:
    def test_uniform_weights_are_sample_moments(self, rng):
        X = rng.standard_normal((40, 3))
        p = gaussian_mle(X)
        assert np.allclose(p.mu, X.mean(0))
        assert np.allclose(p.sigma, np.cov(X.T, bias=True))
        assert not p.ridged

    def test_concentrated_weights(self, rng):
        X = rng.standard_normal((10, 2))
        w = np.zeros(10)
        w[3] = 1.0
        p = gaussian_mle(X, w)
        assert np.array_equal(p.mu, X[3])
        assert p.ridged
        assert np.allclose(p.sigma, 1e-12 * np.eye(2))

    def test_matches_brute_force(self, rng):
        for d in (1, 2, 3):
            X = rng.standard_normal((30, d)) * rng.uniform(0.5, 2, d)
            w = rng.uniform(0, 1, 30)
            mu, S = brute_gaussian(X, w / w.sum())
            p = gaussian_mle(X, w)
            assert np.abs(mu - p.mu).max() < 1e-5
            assert np.abs(S - p.sigma).max() < 1e-5

    def test_weight_scale_invariance(self, rng):
        X = rng.standard_normal((20, 2))
        w = rng.uniform(0, 1, 20)
        a, b = gaussian_mle(X, w), gaussian_mle(X, 7.5 * w)
        assert np.allclose(a.mu, b.mu, rtol=1e-14) and np.allclose(a.sigma, b.sigma, rtol=1e-13)

    def test_density_matches_scipy(self, rng):
        S = random_spd(rng, 3)
        p = GaussianParams(rng.standard_normal(3), S)
        X = rng.standard_normal((5, 3))
        assert np.allclose(gaussian_log_density(X, p), multivariate_normal(p.mu, S).logpdf(X))
        assert isinstance(gaussian_log_density(X[0], p), float)

    def test_sampler(self, rng):
        p = GaussianParams([1.0, -2.0], [[2.0, 0.5], [0.5, 1.0]])
        a = gaussian_sample(p, 10, 7)
        assert np.array_equal(a, gaussian_sample(p, 10, 7))
        big = gaussian_sample(p, 40000, 1)
        assert np.allclose(big.mean(0), p.mu, atol=0.05)
        assert np.allclose(np.cov(big.T), p.sigma, atol=0.08)

    def test_errors(self):
        with pytest.raises(DegenerateError):
            gaussian_mle(np.zeros((0, 2)))
        with pytest.raises(DegenerateError):
            gaussian_mle(np.ones((3, 2)), np.zeros(3))
        with pytest.raises(ValueError):
            gaussian_mle(np.ones((3, 2)), [1, -1, 1])
        with pytest.raises(DimensionError):
            gaussian_mle(np.ones((3, 2)), [1, 1])


class TestEsag:
    def test_gamma_zero_gives_identity(self):
        V = esag_build_V(EsagParams([0.3, -1.0, 2.0], [0.0, 0.0]))
        assert np.allclose(V, np.eye(3), atol=1e-12)

    def test_shape_constraints(self, rng):
        for _ in range(50):
            p = random_esag(rng, gamma_scale=2.0)
            V = esag_build_V(p)
            assert np.allclose(V @ p.mu, p.mu, atol=1e-9)
            assert abs(np.linalg.det(V) - 1) < 1e-9

    def test_shape_eigenvalues(self):
        for g in (0.2, 1.0, 3.0):
            V = esag_build_V(EsagParams([1.0, 0.0, 0.0], [g, 0.0]))
            # (1/rho - rho)/2 = g  =>  rho = sqrt(g^2 + 1) - g
            rho = np.sqrt(g * g + 1) - g
            assert abs((1 / rho - rho) / 2 - g) < 1e-12
            ev = np.sort(np.linalg.eigvalsh(V))
            assert np.allclose(ev, np.sort([rho, 1 / rho, 1.0]), atol=1e-10)
            w, B = np.linalg.eigh(V)
            k = np.argmin(np.abs(w - 1.0))
            assert abs(abs(B[:, k] @ [1, 0, 0]) - 1) < 1e-10

    def test_rho_psi_recovered(self, rng):
        for _ in range(20):
            p = random_esag(rng)
            r = (1 / p.rho - p.rho) / 2
            assert np.allclose([r * np.cos(2 * p.psi), r * np.sin(2 * p.psi)], p.gamma)

    def test_pole_fallback(self):
        V = esag_build_V(EsagParams([0.0, 0.0, 3.0], [0.5, 0.2]))
        assert np.allclose(V @ [0, 0, 3.0], [0, 0, 3.0]) and abs(np.linalg.det(V) - 1) < 1e-9

    def test_uniform_limit(self, rng):
        p = EsagParams([0.0, 0.0, 1e-9], [0.0, 0.0])
        X = rng.standard_normal((20, 3))
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        assert np.allclose(np.exp(esag_log_density(X, p)), 1 / (4 * np.pi), rtol=1e-8)

    def test_density_at_mean_direction(self):
        for kappa in (0.5, 2.0, 7.0):
            p = EsagParams([0.0, 0.0, kappa], [0.0, 0.0])
            ref = ((1 + kappa ** 2) * norm.cdf(kappa) + kappa * norm.pdf(kappa)) / (2 * np.pi)
            assert abs(np.exp(esag_log_density([0, 0, 1.0], p)) - ref) < 1e-12 * ref

    def test_normalisation(self, rng):
        X, W = sphere_quadrature()
        for _ in range(10):
            p = random_esag(rng)
            assert abs(W @ np.exp(esag_log_density(X, p)) - 1) < 1e-3

    def test_sampler(self):
        p = EsagParams([0.0, 0.0, 5.0], [0.0, 0.0])
        X = esag_sample(p, 10000, 3)
        assert np.allclose(np.linalg.norm(X, axis=1), 1, atol=1e-12)
        m = X.mean(0)
        assert np.linalg.norm(m / np.linalg.norm(m) - [0, 0, 1]) < 0.05
        assert np.array_equal(X[:5], esag_sample(p, 5, 3))

    def test_sampler_matches_density(self, rng):
        # fraction of draws in the cap x3 > 0.8 against the quadrature of the density
        p = EsagParams([0.5, -0.2, 2.0], [0.7, -0.3])
        X, W = sphere_quadrature()
        u = p.mean_direction
        mass = W @ (np.exp(esag_log_density(X, p)) * (X @ u > 0.8))
        S = esag_sample(p, 40000, 11)
        assert abs(np.mean(S @ u > 0.8) - mass) < 0.012

    def test_mle_recovery(self):
        truth = EsagParams([1.0, 2.0, 5.0], [0.6, -0.4])
        X = esag_sample(truth, 3000, 5)
        est = esag_mle(X)
        ang = np.degrees(np.arccos(min(1.0, est.mean_direction @ truth.mean_direction)))
        assert ang < 2
        assert abs(est.kappa / truth.kappa - 1) < 0.1
        assert abs(est.rho / truth.rho - 1) < 0.1

    def test_mle_beats_initialiser(self, rng):
        X = esag_sample(random_esag(rng), 500, 2)
        w = np.full(500, 1 / 500)
        p, info = fit_esag(X, w)
        assert info["objective"] >= info["initial_objective"]
        init = moment_init(X, w)
        assert np.allclose(init[3:], 0)

    def test_uniform_weights_equal_unweighted(self, rng):
        X = esag_sample(random_esag(rng), 400, 4)
        a = esag_mle(X)
        b = esag_mle(X, np.ones(400) / 400)
        c = esag_mle(X, np.full(400, 3.0))
        assert np.allclose(a.theta, b.theta, atol=1e-12)
        assert np.allclose(a.theta, c.theta, atol=1e-12)

    def test_degenerate_cluster(self):
        X = np.tile([[0.0, 0.6, 0.8]], (50, 1))
        X[::2] += 1e-9 * np.array([1.0, 0, 0])
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        try:
            p = esag_mle(X)
        except ConvergenceError:
            return
        assert p.kappa > 1e3

    def test_dim_check(self):
        with pytest.raises(DimensionError):
            esag_mle(np.eye(4))


class TestAcg:
    def test_uniform_density(self, rng):
        p = AcgParams(np.eye(3))
        X = rng.standard_normal((10, 3))
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        assert np.allclose(acg_log_density(X, p), np.log(1 / (4 * np.pi)))
        assert abs(np.exp(gammaln(1.5)) / (2 * np.pi ** 1.5) - 1 / (4 * np.pi)) < 1e-15

    def test_symmetries(self, rng):
        L = random_spd(rng, 3)
        X = rng.standard_normal((10, 3))
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        a = acg_log_density(X, AcgParams(L))
        assert np.allclose(a, acg_log_density(-X, AcgParams(L)), rtol=0, atol=1e-12)
        assert np.allclose(a, acg_log_density(X, AcgParams(3.7 * L)), rtol=0, atol=1e-12)

    def test_trace_normalisation(self, rng):
        p = AcgParams(random_spd(rng, 4) * 9)
        assert abs(np.trace(p.lam) - 4) < 1e-12
        assert np.all(np.diff(p.eigenvalues) <= 0)

    @pytest.mark.parametrize("d", [2, 3])
    def test_normalisation(self, rng, d):
        L = random_spd(rng, d, 1.0)
        if d == 3:
            X, W = sphere_quadrature()
        else:
            phi = np.arange(4000) * 2 * np.pi / 4000
            X, W = np.stack([np.cos(phi), np.sin(phi)], 1), np.full(4000, 2 * np.pi / 4000)
        assert abs(W @ np.exp(acg_log_density(X, AcgParams(L))) - 1) < 1e-3

    def test_sampler(self):
        X = acg_sample(AcgParams(np.eye(3)), 100000, 0)
        assert np.allclose(np.linalg.norm(X, axis=1), 1)
        assert np.allclose(X.T @ X / len(X), np.eye(3) / 3, atol=0.02)
        assert np.array_equal(acg_sample(AcgParams(np.eye(3)), 4, 9), acg_sample(AcgParams(np.eye(3)), 4, 9))

    def test_toy_fixed_point(self):
        p = acg_mle(np.eye(2))
        assert np.allclose(p.lam, np.eye(2), rtol=0, atol=1e-10)

    def test_weighted_fixed_point(self, rng):
        for d in (2, 3, 4):
            X = acg_sample(AcgParams(random_spd(rng, d)), 200, rng)
            w = rng.uniform(0, 1, 200)
            p = acg_mle(X, w, tol=1e-8)
            assert acg_fixed_point_residual(p.lam, X, w) < 1e-6
            assert abs(np.trace(p.lam) - d) < 1e-9

    def test_recovery(self, rng):
        L = random_spd(rng, 4, 1.2)
        truth = AcgParams(L)
        X = acg_sample(truth, 5000, 3)
        est = acg_mle(X)
        dist = np.linalg.norm(spd_log(est.lam) - spd_log(truth.lam))
        assert dist < 0.1

    def test_matches_plain_tyler_iteration(self, rng):
        # uniform weights: the unweighted scheme Lambda <- d sum x x^T/(x^T L^-1 x) / sum 1/(..)
        X = acg_sample(AcgParams(random_spd(rng, 3)), 300, 5)
        L = np.eye(3)
        for _ in range(2000):
            q = np.einsum("ij,jk,ik->i", X, np.linalg.inv(L), X)
            new = 3 * (X / q[:, None]).T @ X / np.sum(1 / q)
            if np.linalg.norm(new - L) < 1e-14:
                break
            L = new
        assert np.allclose(acg_mle(X, tol=1e-12).lam, L * 3 / np.trace(L), atol=1e-10)

    def test_antipodal_data_invariance(self, rng):
        X = acg_sample(AcgParams(random_spd(rng, 3)), 200, 1)
        flip = X * np.where(rng.uniform(size=(200, 1)) < 0.5, -1, 1)
        assert np.allclose(acg_mle(X, tol=1e-10).lam, acg_mle(flip, tol=1e-10).lam, atol=1e-12)

    def test_convergence_error(self, rng):
        X = acg_sample(AcgParams(random_spd(rng, 3)), 100, 1)
        with pytest.raises(ConvergenceError) as exc:
            acg_mle(X, tol=1e-12, max_iter=2)
        assert exc.value.best is not None

    def test_subspace_data(self):
        X = np.array([[1.0, 0, 0], [0, 1.0, 0], [np.sqrt(0.5), np.sqrt(0.5), 0]])
        with pytest.raises(ConvergenceError):
            acg_mle(X, tol=1e-8, max_iter=5000)


class TestSpdLognormal:
    def test_density_at_mode(self, rng):
        M, S = random_spd(rng, 2), random_spd(rng, 3)
        p = SpdLognormalParams(M, S)
        ref = -0.5 * 3 * np.log(2 * np.pi) - 0.5 * np.linalg.slogdet(S)[1]
        assert abs(spd_lognormal_log_density(M, p) - ref) < 1e-10

    def test_density_is_mvn_of_vecd_log(self, rng):
        M, S = random_spd(rng, 3), random_spd(rng, 6)
        p = SpdLognormalParams(M, S)
        Xs = np.array([random_spd(rng, 3) for _ in range(5)])
        ref = multivariate_normal(vecd(spd_log(M)), S).logpdf(vecd(spd_log(Xs)))
        assert np.allclose(spd_lognormal_log_density(Xs, p), ref)

    def test_jacobian_is_parameter_free(self, rng):
        X1, X2 = random_spd(rng, 2), random_spd(rng, 2)
        for _ in range(3):
            p = SpdLognormalParams(random_spd(rng, 2), random_spd(rng, 3))
            a = spd_lognormal_log_density(X1, p) - spd_lognormal_log_density(X2, p)
            b = (spd_lognormal_log_density(X1, p, True) - spd_lognormal_log_density(X2, p, True))
            assert abs((b - a) - (log_jacobian(X1) - log_jacobian(X2))) < 1e-10

    def test_jacobian_finite_difference(self, rng):
        # |d vecd(log X) / d vecd(X)| by central differences
        for d in (2, 3):
            X = random_spd(rng, d)
            v0, m = vecd(X), d * (d + 1) // 2
            J = np.empty((m, m))
            eps = 1e-6
            for k in range(m):
                e = np.zeros(m)
                e[k] = eps
                J[:, k] = (vecd(spd_log(vecd_inv(v0 + e))) - vecd(spd_log(vecd_inv(v0 - e)))) / (2 * eps)
            assert abs(np.log(abs(np.linalg.det(J))) - log_jacobian(X)) < 1e-6

    def test_jacobian_repeated_eigenvalues(self):
        assert abs(log_jacobian(2.0 * np.eye(3)) - (-6 * np.log(2.0))) < 1e-12

    def test_sampler(self, rng):
        M = random_spd(rng, 2)
        p = SpdLognormalParams(M, 1e-12 * np.eye(3))
        assert np.allclose(spd_lognormal_sample(p, 5, 0), M, atol=1e-5)
        p = SpdLognormalParams(M, random_spd(rng, 3) * 0.3)
        Xs = spd_lognormal_sample(p, 10000, 1)
        assert np.all(np.linalg.eigvalsh(Xs) > 0)
        assert np.allclose(vecd(spd_log(Xs)).mean(0), vecd(spd_log(M)), atol=0.05)

    def test_single_sample(self, rng):
        X = random_spd(rng, 2)
        p = spd_lognormal_mle(X[None])
        assert np.allclose(p.m, X)
        assert p.ridged and np.allclose(p.sigma, 1e-12 * np.eye(3))

    def test_geometric_mean(self):
        p = spd_lognormal_mle([np.diag([1.0, 4.0]), np.diag([9.0, 1.0])])
        assert np.allclose(p.m, np.diag([3.0, 2.0]))

    def test_matches_brute_force(self, rng):
        for d in (1, 2):
            Xs = np.array([random_spd(rng, d) for _ in range(25)])
            w = rng.uniform(0, 1, 25)
            M, S = brute_spd_lognormal(Xs, w / w.sum())
            p = spd_lognormal_mle(Xs, w)
            assert np.abs(M - p.m).max() < 1e-5 and np.abs(S - p.sigma).max() < 1e-5

    def test_uniform_and_scaled_weights(self, rng):
        Xs = np.array([random_spd(rng, 2) for _ in range(12)])
        a, b = spd_lognormal_mle(Xs), spd_lognormal_mle(Xs, np.full(12, 4.0))
        assert np.allclose(a.m, b.m, rtol=1e-13) and np.allclose(a.sigma, b.sigma, rtol=1e-12)
        assert np.allclose(a.m, spd_exp(spd_log(Xs).mean(0)))

    def test_empty(self):
        with pytest.raises(DegenerateError):
            spd_lognormal_mle(np.zeros((0, 2, 2)))
