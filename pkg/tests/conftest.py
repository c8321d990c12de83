import numpy as np
import pytest


def low_rank(rows, cols, rank, seed):
    """Exactly rank-``rank`` matrix from explicit orthonormal factors."""
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.standard_normal((rows, rank)))
    V, _ = np.linalg.qr(rng.standard_normal((cols, rank)))
    s = np.linspace(10.0, 4.0, rank)
    return (U * s) @ V.T


@pytest.fixture
def rank3():
    return low_rank(20, 12, 3, seed=11)


def rel_err(X, T):
    return np.linalg.norm(X - T) / np.linalg.norm(T)
