import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rcar.asymptotics import kappa_squared, limits, omega_squared
from rcar.errors import DegenerateDataError, PathologicalParamsError
from rcar.estimate import (correlation_test, f_jacobian, f_map,
                           nicholls_quinn, residual_variance, sample_mean,
                           theta_hat, vartheta_hat)
from rcar.fourth_order import build_fourth_order
from rcar.model import ModelParams, NoiseFamily, NoiseSpec
from rcar.second_order import build_second_order
from rcar.simulate import Trajectory, simulate, simulate_block

GAUSS1 = NoiseSpec(NoiseFamily.GAUSSIAN, 1.0)


def traj_of(values):
    return Trajectory(x=np.asarray(values, dtype=float), n=len(values) - 1)


def gamma_zero_series(n=60):
    """Period-3 impulses: both lag products vanish, so gamma_tilde = 0."""
    x = np.zeros(n + 1)
    x[::3] = np.linspace(1.0, 2.0, len(x[::3]))
    return traj_of(x)


class TestBasicEstimators:
    def test_sample_mean_excludes_x0(self):
        assert sample_mean(traj_of([5, 1, 2, 3])) == 2.0
        assert sample_mean(traj_of([0, 0, 0, 0])) == 0.0

    def test_theta_hat_constant_series(self):
        assert theta_hat(traj_of([1, 1, 1, 1])) == 1.0

    def test_theta_hat_alternating(self):
        assert theta_hat(traj_of([1, 0, 1, 0])) == 0.0

    def test_degenerate_window(self):
        with pytest.raises(DegenerateDataError):
            theta_hat(traj_of([0, 0, 0, 1]))

    def test_vartheta_indexing(self):
        # lag-2 sums start at t = 2
        x = [1.0, 2.0, 3.0, 4.0]
        expected = (1 * 3 + 2 * 4) / (1 + 4)
        assert vartheta_hat(traj_of(x)) == pytest.approx(expected)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-100, 100).filter(lambda c: abs(c) > 1e-6),
           st.integers(0, 1000))
    def test_scale_equivariance(self, c, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=40)
        a, b = traj_of(x), traj_of(c * x)
        assert theta_hat(b) == pytest.approx(theta_hat(a), rel=1e-9)
        assert vartheta_hat(b) == pytest.approx(vartheta_hat(a), rel=1e-9)
        s_a, _ = residual_variance(a, 0.4)
        s_b, _ = residual_variance(b, 0.4)
        assert s_b == pytest.approx(c * c * s_a, rel=1e-9)

    def test_mean_clt_band(self):
        params = ModelParams(0.3, 0.5, GAUSS1, NoiseSpec(NoiseFamily.GAUSSIAN, 0.1))
        so = build_second_order(params)
        kappa2 = kappa_squared(params, so)
        traj = simulate(params, 100_000, seed=4)
        assert abs(sample_mean(traj)) <= 4 * math.sqrt(kappa2 / traj.n)

    def test_theta_hat_converges_to_ratio_limit(self):
        # demonstrates the inconsistency: the limit is 1/3, not theta = 0.3
        params = ModelParams(0.3, 0.5, GAUSS1, NoiseSpec(NoiseFamily.GAUSSIAN, 0.1))
        so = build_second_order(params)
        fo = build_fourth_order(params, so)
        omega2 = omega_squared(params, so, fo)
        traj = simulate(params, 100_000, seed=8)
        assert abs(theta_hat(traj) - 1 / 3) <= 4 * math.sqrt(omega2 / traj.n)

    def test_ar1_consistency_rate(self):
        # |theta_hat - theta| < 4 sqrt((1-theta^2)/n) in >= 95% of replicates
        theta, n, reps = 0.5, 1000, 1000
        params = ModelParams(theta, 0.0, GAUSS1, None)
        block = simulate_block(params, n, master_seed=21, replicates=range(reps))
        num = np.einsum("ij,ij->i", block[:, :-1], block[:, 1:])
        den = np.einsum("ij,ij->i", block[:, :-1], block[:, :-1])
        hits = np.abs(num / den - theta) < 4 * math.sqrt((1 - theta**2) / n)
        assert hits.mean() >= 0.95


class TestCorrectionMap:
    def test_y_equals_x_squared(self):
        assert f_map(0.5, 0.25) == (0.5, 0.0)

    def test_x_zero(self):
        assert f_map(0.0, 0.3) == (0.0, 0.3)

    def test_inverts_limits(self):
        # f(theta_star, vartheta_star) = (theta, alpha tau2)
        params = ModelParams(0.3, 0.5, GAUSS1, NoiseSpec(NoiseFamily.GAUSSIAN, 0.1))
        lim = limits(params, build_second_order(params))
        out = f_map(lim.theta_star, lim.vartheta_star)
        assert out[0] == pytest.approx(0.3, rel=1e-12)
        assert out[1] == pytest.approx(0.05, rel=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-0.69, 0.69))
    def test_second_coordinate_annihilated(self, x):
        tilde_theta, tilde_gamma = f_map(x, x * x)
        assert tilde_gamma == 0.0
        assert tilde_theta == pytest.approx(x, rel=1e-9, abs=1e-12)

    def test_pathological(self):
        with pytest.raises(PathologicalParamsError):
            f_map(1 / math.sqrt(2), 0.2)

    def test_jacobian_against_finite_differences(self):
        x, y, h = 0.4, 0.3, 1e-6
        jac = f_jacobian(x, y)
        for i in range(2):
            fd_x = (np.array(f_map(x + h, y)) - np.array(f_map(x - h, y))) / (2 * h)
            fd_y = (np.array(f_map(x, y + h)) - np.array(f_map(x, y - h))) / (2 * h)
            assert jac[i, 0] == pytest.approx(fd_x[i], rel=1e-6)
            assert jac[i, 1] == pytest.approx(fd_y[i], rel=1e-6)


class TestResidualsAndVarianceEstimators:
    def test_perfect_fit(self):
        x = 2.0 * 0.5 ** np.arange(6)
        s2, resid = residual_variance(traj_of(x), 0.5)
        assert s2 == 0.0
        assert np.array_equal(resid, np.zeros(5))

    def test_residuals_are_series_when_theta_zero(self):
        # residuals for t = 1..n are the values themselves
        s2, resid = residual_variance(traj_of([1, 0, 1, 0]), 0.0)
        assert np.array_equal(resid, [0.0, 1.0, 0.0])
        assert s2 == pytest.approx(1 / 3)

    def test_sigma2_hat_limit_uncorrelated(self):
        # converges to sigma2 (1 - theta^2) / (1 - theta^2 - tau2)
        params = ModelParams(0.3, 0.0, GAUSS1, NoiseSpec(NoiseFamily.GAUSSIAN, 0.2))
        traj = simulate(params, 200_000, seed=31)
        s2, _ = residual_variance(traj, theta_hat(traj))
        ref = (1 - 0.09) / (1 - 0.09 - 0.2)
        assert s2 == pytest.approx(ref, rel=0.03)

    def test_constant_residuals(self):
        traj = traj_of([1.0, 2.0, -1.0, 3.0])
        tau2_bar, sigma2_bar = nicholls_quinn(traj, np.full(3, 1.5))
        assert tau2_bar == 0.0
        assert sigma2_bar == pytest.approx(1.5**2)

    def test_constant_regressor_rejected(self):
        traj = traj_of([1.0, 1.0, 1.0, 1.0])
        with pytest.raises(DegenerateDataError):
            nicholls_quinn(traj, np.array([0.1, 0.2, 0.3]))

    def test_consistency_uncorrelated(self):
        # mean over replicates within 3 replicate standard errors of truth
        params = ModelParams(0.3, 0.0, GAUSS1, NoiseSpec(NoiseFamily.GAUSSIAN, 0.1))
        reps, n = 32, 100_000
        block = simulate_block(params, n, master_seed=77, replicates=range(reps))
        tau2s, sigma2s = np.empty(reps), np.empty(reps)
        for i in range(reps):
            traj = Trajectory(x=block[i], n=n)
            _, resid = residual_variance(traj, theta_hat(traj))
            tau2s[i], sigma2s[i] = nicholls_quinn(traj, resid)
        assert abs(tau2s.mean() - 0.1) <= 3 * tau2s.std(ddof=1) / math.sqrt(reps)
        assert abs(sigma2s.mean() - 1.0) <= 3 * sigma2s.std(ddof=1) / math.sqrt(reps)


class TestCorrelationTest:
    def test_gamma_zero_gives_unit_pvalue(self):
        report = correlation_test(gamma_zero_series())
        assert report.gamma_tilde == 0.0
        assert report.statistic == 0.0
        assert report.p_value == 1.0
        assert not report.reject

    def test_report_consistency(self, params_accept):
        traj = simulate(params_accept, 2000, seed=12)
        report = correlation_test(traj, level=0.05)
        tt, gg = f_map(report.theta_hat, report.vartheta_hat)
        assert (report.theta_tilde, report.gamma_tilde) == (tt, gg)
        assert report.statistic >= 0
        assert 0 <= report.p_value <= 1
        assert report.reject == (report.p_value < 0.05)
        assert report.theta_hat_source == "tilde"
        assert report.sigma4_bar == pytest.approx(3 * report.sigma2_bar**2)

    def test_source_switch(self, params_accept):
        traj = simulate(params_accept, 2000, seed=12)
        hat = correlation_test(traj, source="hat")
        tilde = correlation_test(traj, source="tilde")
        assert hat.theta_hat_source == "hat"
        assert hat.psi0_hat != tilde.psi0_hat

    def test_short_series_rejected(self):
        with pytest.raises(DegenerateDataError):
            correlation_test(traj_of(np.random.default_rng(0).normal(size=30)))

    def test_level_validation(self, params_accept):
        traj = simulate(params_accept, 200, seed=12)
        with pytest.raises(ValueError):
            correlation_test(traj, level=0.0)
        with pytest.raises(ValueError):
            correlation_test(traj, source="other")

    def test_family_plugin_changes_psi0(self, params_accept):
        traj = simulate(params_accept, 2000, seed=12)
        a = correlation_test(traj, eta_family=NoiseFamily.GAUSSIAN)
        b = correlation_test(traj, eta_family=NoiseFamily.RADEMACHER)
        assert a.psi0_hat != b.psi0_hat
