"""Shared fixtures: canonical schemes and random stable model generation."""

import numpy as np
import pytest

from dsi_lab import MarkovCovarianceModel, SamplingScheme, validate_scheme


@pytest.fixture
def canonical_scheme() -> SamplingScheme:
    """Two offsets per doubling cycle; the worked reference configuration."""
    return validate_scheme(H=1.0, alpha=2.0, T=1, s=(1.0, 1.5))


def make_scheme(H: float = 1.0, alpha: float = 2.0, T: int = 1, s=(1.0, 1.5)):
    return validate_scheme(H=H, alpha=alpha, T=T, s=s)


def random_scheme(rng: np.random.Generator, q: int) -> SamplingScheme:
    """Random valid geometry with comfortably separated offsets."""
    alpha = float(rng.uniform(1.3, 3.0))
    T = int(rng.integers(1, 3))
    H = float(rng.uniform(0.3, 1.5))
    L = alpha ** T
    gaps = rng.uniform(0.4, 1.0, size=q)
    pos = np.concatenate([[0.0], np.cumsum(gaps)[:-1]])
    frac = pos / (pos[-1] + gaps[-1])  # in [0, 1) with strict gaps
    s = 1.0 + frac * (L - 1.0) * 0.98
    return validate_scheme(H=H, alpha=alpha, T=T, s=s)


def random_stable_model(
    rng: np.random.Generator, q: int | None = None
) -> MarkovCovarianceModel:
    """Random admissible, strictly stable covariance summary.

    One-step products are parameterized by correlations rho in (-1, 1),
    which makes Cauchy-Schwarz automatic and gives
    |ftilde(q-1)| = prod|rho| * alpha**(T*H) strictly inside the
    stability bound.
    """
    if q is None:
        q = int(rng.integers(1, 6))
    scheme = random_scheme(rng, q)
    R0 = rng.uniform(0.5, 3.0, size=q)
    rho = rng.uniform(0.15, 0.9, size=q) * rng.choice([-1.0, 1.0], size=q)
    scale_var = scheme.alpha ** (2 * scheme.T * scheme.H)
    next_var = np.concatenate([R0[1:], [scale_var * R0[0]]])
    R1 = rho * np.sqrt(R0 * next_var)
    return MarkovCovarianceModel(scheme=scheme, R0=R0, R1=R1)


@pytest.fixture
def stable_model_factory():
    return random_stable_model
