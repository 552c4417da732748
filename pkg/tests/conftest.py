import numpy as np
import pytest
from scipy.linalg import expm

from tcforge.fluctuations import SIGMA_CANONICAL


def random_physical_covariance(rng, pure=False, max_squeeze=1.0, max_thermal=3.0):
    """Random two-mode covariance sigma2 = S diag(a,a,b,b) S^T with S a
    random symplectic; a = b = 1 gives a random pure Gaussian state."""
    lam = rng.normal(size=(4, 4), scale=max_squeeze / 2.0)
    lam = 0.5 * (lam + lam.T)
    s = expm(SIGMA_CANONICAL @ lam)
    if pure:
        d = np.ones(4)
    else:
        a, b = rng.uniform(1.0, max_thermal, size=2)
        d = np.array([a, a, b, b])
    return s @ np.diag(d) @ s.T


def two_mode_squeezed(r):
    """Standard two-mode squeezed covariance (vacuum = identity units)."""
    ch, sh = np.cosh(2 * r), np.sinh(2 * r)
    g = np.diag([ch, ch, ch, ch]).astype(float)
    g[0, 2] = g[2, 0] = sh
    g[1, 3] = g[3, 1] = -sh
    return g


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session", autouse=False)
def fast_warm():
    from tcforge._fast import warmup
    warmup()
