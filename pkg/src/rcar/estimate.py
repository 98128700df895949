"""Estimators operating on an observed trajectory and the correlation test.

The lag-1 and lag-2 ratio estimators converge to the autocorrelations
rho_X(1), rho_X(2) rather than to theta as soon as the coefficient noise is
correlated; the map f below turns them into consistent estimates of
(theta, gamma) with gamma = alpha*tau2, and the test statistic

    n * gamma_tilde^2 / psi0_hat

is asymptotically chi-square(1) under the null of uncorrelated coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, PathologicalParamsError
from .model import BOUNDARY_TOL, KURTOSIS_FACTOR, NoiseFamily
from .numerics import chisq1_tail
from .simulate import Trajectory

MIN_TEST_LENGTH = 50


def sample_mean(traj: Trajectory) -> float:
    """Mean of X_1..X_n (X_0 is excluded)."""
    return float(traj.x[1:].mean())


def theta_hat(traj: Trajectory) -> float:
    """Lag-1 ratio sum X_{t-1} X_t / sum X_{t-1}^2, t = 1..n."""
    x = traj.x
    den = float(x[:-1] @ x[:-1])
    if den <= 0.0:
        raise DegenerateDataError("theta_hat: all-zero lag window")
    return float(x[:-1] @ x[1:]) / den


def vartheta_hat(traj: Trajectory) -> float:
    """Lag-2 ratio sum X_{t-2} X_t / sum X_{t-2}^2, t = 2..n."""
    x = traj.x
    if traj.n < 2:
        raise DegenerateDataError("vartheta_hat needs n >= 2")
    den = float(x[:-2] @ x[:-2])
    if den <= 0.0:
        raise DegenerateDataError("vartheta_hat: all-zero lag window")
    return float(x[:-2] @ x[2:]) / den


def f_map(x: float, y: float) -> tuple[float, float]:
    """Correction map (x, y) -> ((1-2y)x, y-x^2) / (1-2x^2)."""
    den = 1.0 - 2.0 * x * x
    if abs(den) < BOUNDARY_TOL:
        raise PathologicalParamsError(
            f"correction map undefined: first ratio {x:.6g} is within 1e-9 "
            "of +/-1/sqrt(2)"
        )
    return (1.0 - 2.0 * y) * x / den, (y - x * x) / den


def f_jacobian(x: float, y: float) -> np.ndarray:
    """Jacobian of the correction map (rows differentiate its components)."""
    den = 1.0 - 2.0 * x * x
    if abs(den) < BOUNDARY_TOL:
        raise PathologicalParamsError(
            f"correction-map Jacobian undefined at x = {x:.6g}"
        )
    return np.array([
        [(1.0 - 2.0 * y) * (1.0 + 2.0 * x * x) / den**2, -2.0 * x / den],
        [-2.0 * x * (1.0 - 2.0 * y) / den**2, 1.0 / den],
    ])


def residual_variance(traj: Trajectory, theta_used: float):
    """Residuals e_t = X_t - theta_used X_{t-1} and their mean square."""
    x = traj.x
    residuals = x[1:] - theta_used * x[:-1]
    return float(residuals @ residuals) / traj.n, residuals


def nicholls_quinn(traj: Trajectory, residuals: np.ndarray):
    """Regression of squared residuals on the lagged squared series.

    The conditional variance of X_t given the past is sigma2 + tau2 X_{t-1}^2,
    so residual t is paired with the regressor Z = X_{t-1}^2. Returns
    (tau2_bar, sigma2_bar): the slope estimates the coefficient-noise
    variance, and sigma2_bar = sigma2_hat - Zbar * tau2_bar removes the
    inflation the raw residual variance inherits from the random coefficient.
    """
    z = traj.x[:-1] ** 2
    zc = z - z.mean()
    den = float(zc @ zc)
    if den <= 0.0:
        raise DegenerateDataError("nicholls_quinn: constant squared series")
    tau2_bar = float(zc @ (residuals**2)) / den
    sigma2_hat = float(residuals @ residuals) / traj.n
    return tau2_bar, sigma2_hat - float(z.mean()) * tau2_bar


@dataclass(frozen=True)
class EstimationReport:
    """Every estimator plus the correlation test outcome for one series."""

    n: int
    xbar: float
    theta_hat: float
    vartheta_hat: float
    theta_tilde: float
    gamma_tilde: float
    sigma2_hat: float
    tau2_bar: float
    sigma2_bar: float
    sigma4_bar: float
    tau4_bar: float
    psi0_hat: float
    statistic: float
    p_value: float
    theta_hat_source: str
    level: float
    reject: bool

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "xbar": self.xbar,
            "theta_hat": self.theta_hat,
            "vartheta_hat": self.vartheta_hat,
            "theta_tilde": self.theta_tilde,
            "gamma_tilde": self.gamma_tilde,
            "sigma2_hat": self.sigma2_hat,
            "tau2_bar": self.tau2_bar,
            "sigma2_bar": self.sigma2_bar,
            "sigma4_bar": self.sigma4_bar,
            "tau4_bar": self.tau4_bar,
            "psi0_hat": self.psi0_hat,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "theta_hat_source": self.theta_hat_source,
            "level": self.level,
            "reject": self.reject,
        }


def correlation_test(traj: Trajectory, level: float = 0.05,
                     source: str = "tilde",
                     eps_family: NoiseFamily = NoiseFamily.GAUSSIAN,
                     eta_family: NoiseFamily = NoiseFamily.GAUSSIAN
                     ) -> EstimationReport:
    """Run the full estimation pipeline and the correlation test.

    source selects which theta estimate feeds the variance plug-in ("tilde",
    the consistent default, or "hat"); the family arguments supply the
    fourth-moment maps sigma4 = g(sigma2), tau4 = h(tau2) the plug-in needs.

    A non-positive plug-in psi0_hat (possible at small n) is an error, never
    silently clamped.
    """
    from .asymptotics import psi0_closed_form

    if not 0.0 < level <= 1.0:
        raise ValueError(f"level must be in (0, 1], got {level}")
    if source not in ("tilde", "hat"):
        raise ValueError(f"theta source must be 'tilde' or 'hat', got {source!r}")
    if traj.n < MIN_TEST_LENGTH:
        raise DegenerateDataError(
            f"correlation test needs n >= {MIN_TEST_LENGTH}, got {traj.n}"
        )

    th_hat = theta_hat(traj)
    vt_hat = vartheta_hat(traj)
    th_tilde, gamma_tilde = f_map(th_hat, vt_hat)
    sigma2_hat, residuals = residual_variance(traj, th_hat)
    tau2_bar, sigma2_bar = nicholls_quinn(traj, residuals)
    sigma4_bar = KURTOSIS_FACTOR[NoiseFamily(eps_family)] * sigma2_bar**2
    tau4_bar = KURTOSIS_FACTOR[NoiseFamily(eta_family)] * tau2_bar**2

    theta_bar = th_tilde if source == "tilde" else th_hat
    psi0_hat, _ = psi0_closed_form(theta_bar, tau2_bar, tau4_bar,
                                   sigma2_bar, sigma4_bar)
    if not psi0_hat > 0.0:
        raise DegenerateDataError(
            f"invalid variance plug-in: psi0_hat = {psi0_hat:.6g} <= 0"
        )

    statistic = traj.n * gamma_tilde**2 / psi0_hat
    p_value = chisq1_tail(statistic)
    return EstimationReport(
        n=traj.n,
        xbar=sample_mean(traj),
        theta_hat=th_hat,
        vartheta_hat=vt_hat,
        theta_tilde=th_tilde,
        gamma_tilde=gamma_tilde,
        sigma2_hat=sigma2_hat,
        tau2_bar=tau2_bar,
        sigma2_bar=sigma2_bar,
        sigma4_bar=sigma4_bar,
        tau4_bar=tau4_bar,
        psi0_hat=psi0_hat,
        statistic=statistic,
        p_value=p_value,
        theta_hat_source=source,
        level=level,
        reject=p_value < level,
    )
