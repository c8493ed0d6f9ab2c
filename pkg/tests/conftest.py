import numpy as np
import pytest

from concord.corpus import (
    FeatureMatrix,
    build_vocabulary,
    gen_synthetic_corpus,
    vectorize,
)

TABLE_SHAPE = [7, 1, 3, 2, 1, 11]
BALANCED_SHAPE = [5, 4, 4, 4, 4, 4]


@pytest.fixture(scope="session")
def table_corpus():
    """25 docs, 6 classes sized like the canonical fixture, disjoint pools."""
    return gen_synthetic_corpus(6, TABLE_SHAPE, 20, 0.0, rng_seed=1)


@pytest.fixture(scope="session")
def table_matrix(table_corpus):
    corpus, _ = table_corpus
    return vectorize(corpus, build_vocabulary(corpus))


@pytest.fixture(scope="session")
def balanced_corpus():
    """25 docs, 6 roughly equal well-separated classes."""
    return gen_synthetic_corpus(6, BALANCED_SHAPE, 20, 0.0, rng_seed=7)


@pytest.fixture(scope="session")
def balanced_matrix(balanced_corpus):
    corpus, _ = balanced_corpus
    return vectorize(corpus, build_vocabulary(corpus))


def random_matrix(n, d, seed, nonneg=False):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    if nonneg:
        X = np.abs(X) + 0.05
    return FeatureMatrix.from_dense(X)
