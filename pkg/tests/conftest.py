import numpy as np
import pytest

from ilpcm import Multiplex


def batch_se(x, n_batches=30):
    """Batch-means standard error of the mean of a (possibly autocorrelated)
    scalar series."""
    x = np.asarray(x, dtype=float)
    n = x.size // n_batches
    if n < 1:
        return x.std(ddof=1) / np.sqrt(max(x.size, 2))
    means = x[: n * n_batches].reshape(n_batches, n).mean(axis=1)
    return means.std(ddof=1) / np.sqrt(n_batches)


def random_multiplex(rng, n=6, K=2, directed=(True, False), p_edge=0.4):
    views = np.zeros((K, n, n), dtype=np.int8)
    for k in range(K):
        A = (rng.random((n, n)) < p_edge).astype(np.int8)
        np.fill_diagonal(A, 0)
        if not directed[k]:
            A = np.maximum(A, A.T)
        views[k] = A
    return Multiplex(views=views, directed=tuple(directed), ref_view=1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
