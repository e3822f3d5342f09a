import time

import numpy as np
import pytest

from vortexflow.ansatz import ModelParams, Regime
from vortexflow.profile import solve_profile
from vortexflow.solver import solve_balanced


@pytest.fixture(scope="session")
def profile_with_timing():
    t0 = time.time()
    prof = solve_profile()
    return prof, time.time() - t0


@pytest.fixture(scope="session")
def profile(profile_with_timing):
    return profile_with_timing[0]


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)


# -- balanced solutions shared across acceptance criteria -------------------

@pytest.fixture(scope="session")
def balanced_pair_wm(profile):
    """Wave-map pair, eps = 0.1, on the fine grid used by the space-time
    residual study."""
    params = ModelParams(Regime.PAIR_WM, eps=0.1, kappa=0.0, d_hat=1.0)
    res, d_star = solve_balanced(params, (9.0, 12.0), profile, h=0.0625)
    return params, res, d_star


@pytest.fixture(scope="session")
def balanced_pair_sch(profile):
    """Schrodinger pair, eps = 0.2, kappa = 0.25, fine grid."""
    params = ModelParams(Regime.PAIR_SCH, eps=0.2, kappa=0.25, d_hat=2.0)
    res, d_star = solve_balanced(params, (8.5, 12.0), profile, h=0.0625)
    return params, res, d_star


@pytest.fixture(scope="session")
def balanced_ring(profile):
    """Schrodinger ring, eps = 0.1, at its numerically balanced separation."""
    params = ModelParams(Regime.RING_SCH, eps=0.1, kappa=0.0, d_hat=2.4)
    res, d_star = solve_balanced(params, (16.0, 34.0), profile, h=0.125)
    return params, res, d_star


@pytest.fixture(scope="session")
def balanced_pair_eps005(profile):
    """Criterion-6 pair at eps = 0.05: kappa in {0, 0.25} at h = 0.25."""
    out = {}
    p0 = ModelParams(Regime.PAIR_WM, eps=0.05, kappa=0.0, d_hat=1.0)
    out[0.0] = solve_balanced(p0, (16.0, 26.0), profile, h=0.25) + (p0,)
    p1 = ModelParams(Regime.PAIR_SCH, eps=0.05, kappa=0.25, d_hat=2.0)
    out[0.25] = solve_balanced(p1, (34.0, 47.0), profile, h=0.25) + (p1,)
    return out
