import numpy as np
import pytest

from minimax2 import problems


@pytest.fixture
def bilinear_1d():
    """f = x*y - y^2/2, so P(x) = x^2/2 and y*(x) = x."""
    return problems.quadratic_problem(
        np.array([[0.0]]), np.array([[1.0]]), np.array([[1.0]])
    )


@pytest.fixture(scope="session")
def saddle_params():
    return problems.SaddleChainParams(n=10, m=5, L=1.0, gamma=1.0)


@pytest.fixture(scope="session")
def saddle_problem(saddle_params):
    return problems.saddle_chain_problem(saddle_params)


def make_tr_instance(rng, n=None):
    """Random symmetric H with spectrum in [-5, 5] and g of norm in [0, 10]."""
    if n is None:
        n = int(rng.integers(2, 11))
    evals = rng.uniform(-5.0, 5.0, n)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    H = Q @ np.diag(evals) @ Q.T
    H = 0.5 * (H + H.T)
    g = rng.standard_normal(n)
    norm = np.linalg.norm(g)
    if norm > 0:
        g = g / norm * rng.uniform(0.0, 10.0)
    return H, g
