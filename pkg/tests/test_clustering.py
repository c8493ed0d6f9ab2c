import numpy as np
import pytest

from concord.clustering import (
    Clustering,
    SeedSet,
    distance,
    kmeans,
    pairwise_distances,
    potential,
    read_clustering,
    seeded_init,
    write_clustering,
)
from concord.corpus import FeatureMatrix
from concord.errors import (
    DimensionMismatchError,
    InvalidParameterError,
    MissingClusterError,
    ZeroVectorError,
)
from concord.evaluation import contingency, nmi
from concord.corpus import LabelAssignment

from conftest import random_matrix


# --- distance ---------------------------------------------------------------


def test_cosine_identity_and_orthogonal():
    assert distance([1, 0], [1, 0], "cosine") == pytest.approx(0.0, abs=1e-12)
    assert distance([1, 0], [0, 1], "cosine") == pytest.approx(1.0, abs=1e-12)


def test_squared_euclidean_example():
    assert distance([1, 2], [4, 6], "squared_euclidean") == pytest.approx(25.0)


def test_distance_symmetry_and_zero():
    rng = np.random.default_rng(0)
    for _ in range(20):
        x, y = rng.normal(size=5), rng.normal(size=5)
        for metric in ("cosine", "squared_euclidean"):
            assert distance(x, y, metric) == pytest.approx(distance(y, x, metric))
            assert distance(x, x, metric) == pytest.approx(0.0, abs=1e-12)


def test_cosine_zero_vector_error():
    with pytest.raises(ZeroVectorError):
        distance([0, 0], [1, 0], "cosine")


def test_distance_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        distance([1, 0], [1, 0, 0], "cosine")


def test_unknown_metric_rejected():
    with pytest.raises(InvalidParameterError):
        distance([1], [1], "manhattan")


# --- kmeans -----------------------------------------------------------------


def two_far_pairs():
    return FeatureMatrix.from_dense(
        np.array([[0.0, 0.0], [1.0, 0.0], [100.0, 100.0], [101.0, 100.0]])
    )


def test_kmeans_separable_pairs():
    matrix = two_far_pairs()
    result = kmeans(matrix, 2, metric="squared_euclidean", rng_seed=0)
    assert result.converged
    assert result.assignment[0] == result.assignment[1]
    assert result.assignment[2] == result.assignment[3]
    assert result.assignment[0] != result.assignment[2]
    # each pair's centroid is the midpoint: 2 * (0.5)^2 per pair
    assert result.potential == pytest.approx(1.0)


def test_kmeans_k_equals_n_zero_potential():
    matrix = random_matrix(6, 3, seed=1)
    result = kmeans(matrix, 6, metric="squared_euclidean", rng_seed=2)
    assert result.potential == pytest.approx(0.0, abs=1e-12)
    assert sorted(result.assignment) == list(range(6))


def test_kmeans_invalid_k():
    matrix = random_matrix(4, 2, seed=0)
    with pytest.raises(InvalidParameterError):
        kmeans(matrix, 0)
    with pytest.raises(InvalidParameterError):
        kmeans(matrix, 5)


def test_kmeans_explicit_init_shape_checked():
    matrix = random_matrix(4, 2, seed=0)
    with pytest.raises(DimensionMismatchError):
        kmeans(matrix, 2, init=np.zeros((2, 3)), metric="squared_euclidean")


def test_kmeans_monotone_descent_squared_euclidean():
    for seed in range(10):
        matrix = random_matrix(30, 4, seed=seed)
        result = kmeans(matrix, 4, metric="squared_euclidean", rng_seed=seed)
        hist = result.potential_history
        assert all(a >= b - 1e-9 for a, b in zip(hist, hist[1:]))


def test_kmeans_fixed_point_rerun():
    matrix = random_matrix(40, 5, seed=3)
    first = kmeans(matrix, 3, metric="squared_euclidean", rng_seed=3)
    again = kmeans(matrix, 3, init=first.centroids, metric="squared_euclidean")
    assert np.array_equal(again.assignment, first.assignment)
    assert again.converged


def test_kmeans_deterministic():
    matrix = random_matrix(30, 4, seed=5)
    a = kmeans(matrix, 3, metric="cosine", rng_seed=11)
    b = kmeans(matrix, 3, metric="cosine", rng_seed=11)
    assert np.array_equal(a.assignment, b.assignment)
    assert a.potential == b.potential


def test_kmeans_permutation_equivariance():
    matrix = random_matrix(20, 4, seed=9)
    rng = np.random.default_rng(0)
    perm = rng.permutation(20)
    permuted = FeatureMatrix.from_dense(matrix.to_dense()[perm])
    base = kmeans(matrix, 3, metric="squared_euclidean", rng_seed=4)
    moved = kmeans(permuted, 3, init=base.centroids[:, :], metric="squared_euclidean")
    # same partition after undoing the permutation, up to cluster relabeling
    a = base.assignment
    b = np.empty_like(a)
    b[perm] = moved.assignment
    table = np.zeros((3, 3), dtype=int)
    for i, j in zip(a, b):
        table[i, j] += 1
    assert (table > 0).sum() <= 3  # one-to-one correspondence


def test_kmeans_potential_recomputable(table_matrix):
    result = kmeans(table_matrix, 6, metric="cosine", rng_seed=1)
    assert potential(table_matrix, result, "cosine") == pytest.approx(
        result.potential, abs=1e-9
    )


def test_kmeans_truth_partition_recovered_with_restarts(balanced_corpus, balanced_matrix):
    corpus, truth = balanced_corpus
    index_of = corpus.index_of
    # truth partition is a fixed point: start from the class means and nothing moves
    X = balanced_matrix.to_dense()
    truth_assign = np.array([truth.labels[d] for d in corpus.doc_ids])
    class_means = np.vstack([X[truth_assign == c].mean(axis=0) for c in range(6)])
    fixed = kmeans(balanced_matrix, 6, init=class_means, metric="cosine")
    assert fixed.converged and fixed.iterations <= 2
    assert nmi(contingency(truth, fixed, index_of)) == pytest.approx(1.0)
    # best of 10 random restarts reaches it, and no restart beats its potential
    runs = [kmeans(balanced_matrix, 6, metric="cosine", rng_seed=s) for s in range(10)]
    best = min(runs, key=lambda r: r.potential)
    assert best.potential >= fixed.potential - 1e-9
    assert nmi(contingency(truth, best, index_of)) == pytest.approx(1.0)


def test_kmeans_empty_cluster_reseeded():
    X = np.array([[0.0, 0.0], [0.1, 0.0], [0.2, 0.0], [50.0, 50.0]])
    # one init centroid far from everything: its cluster starts empty
    init = np.array([[0.0, 0.0], [-1000.0, -1000.0]])
    result = kmeans(FeatureMatrix.from_dense(X), 2, init=init, metric="squared_euclidean")
    assert set(result.assignment) == {0, 1}


# --- seeded init ------------------------------------------------------------


def test_seeded_init_singleton_modes(balanced_matrix):
    seed_set = SeedSet([(0, 0), (5, 1)], k=2)
    for mode in ("representative", "seed_mean"):
        centroids = seeded_init(seed_set, balanced_matrix, mode=mode, rng_seed=0)
        assert np.allclose(centroids[0], balanced_matrix.row(0))
        assert np.allclose(centroids[1], balanced_matrix.row(5))


def test_seeded_init_seed_mean():
    matrix = FeatureMatrix.from_dense(np.array([[0.0, 0.0], [2.0, 2.0], [9.0, 9.0]]))
    seed_set = SeedSet([(0, 0), (1, 0), (2, 1)], k=2)
    centroids = seeded_init(seed_set, matrix, mode="seed_mean")
    assert np.allclose(centroids[0], [1.0, 1.0])


def test_seeded_init_representative_deterministic(balanced_matrix):
    seed_set = SeedSet([(0, 0), (1, 0), (5, 1), (6, 1)], k=2)
    a = seeded_init(seed_set, balanced_matrix, mode="representative", rng_seed=42)
    b = seeded_init(seed_set, balanced_matrix, mode="representative", rng_seed=42)
    assert np.array_equal(a, b)


def test_seed_set_missing_cluster():
    with pytest.raises(MissingClusterError):
        SeedSet([(0, 0)], k=2)


def test_seed_set_duplicate_doc():
    with pytest.raises(InvalidParameterError):
        SeedSet([(0, 0), (0, 1)], k=2)


def test_seed_set_from_labels():
    labels = LabelAssignment("ann", {"a": "politics", "b": "arts", "c": "politics"})
    seed_set = SeedSet.from_labels(labels, {"a": 0, "b": 1, "c": 2})
    assert seed_set.k == 2
    assert sorted(seed_set.entries) == [(0, 1), (1, 0), (2, 1)]  # arts sorts first


# --- potential --------------------------------------------------------------


def test_potential_zero_when_points_equal_centroids():
    X = np.array([[1.0, 0.0], [0.0, 1.0]])
    clustering = Clustering(np.array([0, 1]), X.copy(), 2, 0.0, 1, True)
    assert potential(FeatureMatrix.from_dense(X), clustering, "squared_euclidean") == 0.0


def test_potential_single_cluster_example():
    X = np.array([[0.0, 0.0], [2.0, 0.0]])
    clustering = Clustering(np.array([0, 0]), np.array([[1.0, 0.0]]), 1, 2.0, 1, True)
    assert potential(FeatureMatrix.from_dense(X), clustering, "squared_euclidean") == pytest.approx(2.0)


def brute_force_potential(X, centroids, metric):
    total = 0.0
    for x in X:
        total += min(distance(x, c, metric) for c in centroids)
    return total


def test_potential_matches_brute_force():
    matrix = random_matrix(20, 5, seed=13)
    result = kmeans(matrix, 3, metric="squared_euclidean", rng_seed=13)
    expected = brute_force_potential(matrix.to_dense(), result.centroids, "squared_euclidean")
    assert result.potential == pytest.approx(expected, abs=1e-9)
    assert potential(matrix, result, "squared_euclidean") == pytest.approx(expected, abs=1e-9)


# --- export -----------------------------------------------------------------


def test_clustering_export_round_trip(tmp_path, table_matrix, table_corpus):
    corpus, _ = table_corpus
    result = kmeans(table_matrix, 6, metric="cosine", rng_seed=0)
    path = tmp_path / "clust.tsv"
    write_clustering(str(path), result, corpus.doc_ids)
    mapping, meta = read_clustering(str(path))
    assert len(mapping) == 25
    assert meta["k"] == 6
    assert meta["converged"] == result.converged
    assert mapping[corpus.doc_ids[3]] == int(result.assignment[3])
