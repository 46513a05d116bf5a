"""Shared fixtures: the reference parameter point and reusable simulations."""

import time

import numpy as np
import pytest

from jumpvol.ajm import AjmParams, simulate
from jumpvol.fit import FitOptions, fit

# Reference unrestricted coefficient values used for recovery exercises.
TRUTH = AjmParams(
    omega=0.1173, alpha1=0.2589, alpha2=-0.2045, beta=0.8926, gamma=0.0105,
    delta1=0.0081, delta2=-0.0304, phi=0.3509, psi=0.2622, error_shape=5.6748,
)

# A more persistent parameterisation whose simulated panels show
# real-data-like adjacent-bin autocorrelations.
PERSISTENT = AjmParams(
    omega=0.05, alpha1=0.2589, alpha2=-0.2045, beta=0.8926, gamma=0.0105,
    delta1=0.0081, delta2=-0.0304, phi=0.44, psi=0.30, error_shape=10.0,
)


def truth_params() -> AjmParams:
    return AjmParams(**TRUTH.as_dict())


@pytest.fixture(scope="session")
def truth():
    return truth_params()


@pytest.fixture(scope="session")
def recovery_sim():
    """2000-day panel simulated at the reference values."""
    start = time.perf_counter()
    sim = simulate(truth_params(), days=2000, seed=2024,
                   jump_intensity=0.3, jump_scale=1.0, overnight_sigma=1.0)
    sim.elapsed_seconds = time.perf_counter() - start
    return sim


@pytest.fixture(scope="session")
def recovery_fit(recovery_sim):
    start = time.perf_counter()
    result = fit(recovery_sim.panel, recovery_sim.overnight,
                 spec="unrestricted", options=FitOptions(seed=7))
    result.elapsed_seconds = time.perf_counter() - start
    return result


@pytest.fixture(scope="session")
def recovery_fit_restricted(recovery_sim):
    return fit(recovery_sim.panel, recovery_sim.overnight,
               spec="restricted", options=FitOptions(seed=7))


@pytest.fixture(scope="session")
def small_sim():
    """300-day panel for cheap module-level checks."""
    return simulate(truth_params(), days=300, seed=42,
                    jump_intensity=0.3, jump_scale=1.0, overnight_sigma=1.0)
