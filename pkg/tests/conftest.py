import numpy as np
import pytest

from liemarkov import REFERENCE_HKY_PARAMS, config, hky


@pytest.fixture(autouse=True)
def column_convention():
    # Tests that flip the convention must not leak it into the others.
    config.set_convention("column")
    yield
    config.set_convention("column")


@pytest.fixture
def reference_pair_q():
    p1, p2 = REFERENCE_HKY_PARAMS
    return hky(*p1), hky(*p2)


def make_rate_matrix(rng, n=4, max_norm=1.0):
    """Random stochastic rate matrix with Frobenius norm at most max_norm."""
    off = rng.uniform(0.0, 1.0, size=(n, n))
    np.fill_diagonal(off, 0.0)
    q = off.copy()
    np.fill_diagonal(q, -off.sum(axis=0))
    nrm = np.linalg.norm(q, "fro")
    return q * (rng.uniform(0.05, 1.0) * max_norm / nrm)
