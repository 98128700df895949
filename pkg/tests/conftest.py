import numpy as np
import pytest

from rcar.model import ModelParams, NoiseFamily, NoiseSpec
from rcar.numerics import spectral_radius
from rcar.second_order import m_matrix
from rcar.fourth_order import h_matrix

FAMILIES = (NoiseFamily.GAUSSIAN, NoiseFamily.UNIFORM,
            NoiseFamily.LAPLACE, NoiseFamily.RADEMACHER)


def random_admissible(rng: np.random.Generator, max_rho: float = 0.95,
                      families=FAMILIES) -> ModelParams:
    """Draw parameters with rho(M), rho(H) < max_rho and guards satisfied."""
    while True:
        theta = rng.uniform(-0.8, 0.8)
        alpha = rng.uniform(-0.9, 0.9)
        eps = NoiseSpec(families[rng.integers(len(families))],
                        rng.uniform(0.2, 1.5))
        eta = NoiseSpec(families[rng.integers(len(families))],
                        rng.uniform(0.02, 0.3))
        try:
            params = ModelParams(theta, alpha, eps, eta)
        except Exception:
            continue
        if abs(1 - 2 * alpha * params.tau(2)) < 1e-3:
            continue
        if spectral_radius(m_matrix(params)) < max_rho \
                and spectral_radius(h_matrix(params)) < max_rho:
            return params


def batch_se(values: np.ndarray, batches: int = 100) -> float:
    """Batch-means standard error of the mean of a serially correlated sample."""
    means = np.array([b.mean() for b in np.array_split(values, batches)])
    return float(means.std(ddof=1) / np.sqrt(len(means)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def params_accept():
    """The alpha != 0 reference setting used across the acceptance suite."""
    return ModelParams(0.3, 0.5, NoiseSpec(NoiseFamily.GAUSSIAN, 1.0),
                       NoiseSpec(NoiseFamily.GAUSSIAN, 0.1))
