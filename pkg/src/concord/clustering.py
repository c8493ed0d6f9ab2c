"""Distance functions, Lloyd-style K-Means, and seeded initialization.

Assignment ties break toward the lowest cluster index, empty clusters are
reseeded with the point farthest from its own centroid, and all randomness
flows from an explicit seed, so runs are reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .corpus import FeatureMatrix, LabelAssignment, sort_labels
from .common import rng_from
from .errors import (
    DimensionMismatchError,
    InvalidParameterError,
    MissingClusterError,
    ZeroVectorError,
)

METRICS = ("cosine", "squared_euclidean")


def _check_metric(metric: str) -> str:
    if metric not in METRICS:
        raise InvalidParameterError(f"unknown metric {metric!r}; expected one of {METRICS}")
    return metric


def _as_dense(v) -> np.ndarray:
    if sp.issparse(v):
        return np.asarray(v.todense()).ravel()
    return np.asarray(v, dtype=float).ravel()


def distance(x, y, metric: str = "cosine") -> float:
    """Pointwise distance: cosine = 1 - x.y/(|x||y|), or squared euclidean."""
    _check_metric(metric)
    xd, yd = _as_dense(x), _as_dense(y)
    if xd.shape != yd.shape:
        raise DimensionMismatchError(f"vector lengths differ: {xd.shape} vs {yd.shape}")
    if metric == "squared_euclidean":
        diff = xd - yd
        return float(diff @ diff)
    nx, ny = np.linalg.norm(xd), np.linalg.norm(yd)
    if nx == 0.0 or ny == 0.0:
        raise ZeroVectorError("cosine distance undefined for a zero-norm vector")
    return float(1.0 - (xd @ yd) / (nx * ny))


def pairwise_distances(X: np.ndarray, C: np.ndarray, metric: str) -> np.ndarray:
    """n x k distance matrix between rows of X and rows of C."""
    _check_metric(metric)
    if X.shape[1] != C.shape[1]:
        raise DimensionMismatchError(f"dimension mismatch: {X.shape[1]} vs {C.shape[1]}")
    if metric == "squared_euclidean":
        # |x-c|^2 = |x|^2 - 2 x.c + |c|^2
        x2 = (X * X).sum(axis=1)[:, None]
        c2 = (C * C).sum(axis=1)[None, :]
        d = x2 - 2.0 * (X @ C.T) + c2
        return np.maximum(d, 0.0)
    xn = np.linalg.norm(X, axis=1)
    cn = np.linalg.norm(C, axis=1)
    if np.any(xn == 0.0) or np.any(cn == 0.0):
        raise ZeroVectorError("cosine distance undefined for a zero-norm row")
    return 1.0 - (X / xn[:, None]) @ (C / cn[:, None]).T


@dataclass
class SeedSet:
    """Labeled representatives: (doc_index, cluster_id) pairs covering [0, k)."""

    entries: list[tuple[int, int]]
    k: int

    def __post_init__(self):
        seen_docs = set()
        covered = set()
        for doc, cluster in self.entries:
            if doc in seen_docs:
                raise InvalidParameterError(f"document {doc} seeded twice")
            seen_docs.add(doc)
            if not 0 <= cluster < self.k:
                raise InvalidParameterError(f"cluster id {cluster} outside [0, {self.k})")
            covered.add(cluster)
        missing = sorted(set(range(self.k)) - covered)
        if missing:
            raise MissingClusterError(f"no seed for cluster(s) {missing}")

    @classmethod
    def from_labels(cls, labels: LabelAssignment, index_of: dict[str, int]) -> "SeedSet":
        """Map category labels to cluster ids by sorted category order."""
        cats = sort_labels(set(labels.labels.values()))
        cat_rank = {c: i for i, c in enumerate(cats)}
        entries = []
        for doc_id in sorted(labels.labels):
            if doc_id not in index_of:
                raise InvalidParameterError(f"labeled doc {doc_id!r} not in corpus")
            entries.append((index_of[doc_id], cat_rank[labels.labels[doc_id]]))
        return cls(entries, len(cats))


@dataclass
class Clustering:
    """K-Means output: assignment per row, centroids, and the potential."""

    assignment: np.ndarray
    centroids: np.ndarray
    k: int
    potential: float
    iterations: int
    converged: bool
    potential_history: list[float] = field(default_factory=list)

    @property
    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k)


def _forgy_init(rng: np.random.Generator, X: np.ndarray, k: int) -> np.ndarray:
    picks = rng.choice(X.shape[0], size=k, replace=False)
    return X[picks].copy()


def _means(X: np.ndarray, assign: np.ndarray, k: int) -> np.ndarray:
    C = np.zeros((k, X.shape[1]))
    for h in range(k):
        members = assign == h
        if members.any():
            C[h] = X[members].mean(axis=0)
    return C


def _reseed_empty(
    X: np.ndarray, assign: np.ndarray, centroids: np.ndarray, D: np.ndarray, k: int
) -> None:
    """Move the farthest point (from its own centroid) into each empty cluster.

    Only points whose current cluster keeps at least two members are
    eligible, so the fix never empties another cluster. Mutates assign and
    centroids in place.
    """
    sizes = np.bincount(assign, minlength=k)
    for h in range(k):
        if sizes[h] > 0:
            continue
        own = D[np.arange(len(assign)), assign].copy()
        own[sizes[assign] < 2] = -np.inf
        x = int(np.argmax(own))
        sizes[assign[x]] -= 1
        assign[x] = h
        sizes[h] = 1
        centroids[h] = X[x]


def kmeans(
    matrix: FeatureMatrix,
    k: int,
    init=None,
    metric: str = "cosine",
    rng_seed: int = 0,
    max_iters: int = 100,
) -> Clustering:
    """Lloyd iteration until no assignment changes or max_iters is reached.

    ``init`` is either None (sample k distinct documents as starting
    centroids) or an explicit k x d array. The reported potential is the
    sum over documents of the distance to the nearest final centroid.
    """
    _check_metric(metric)
    X = matrix.to_dense()
    n, d = X.shape
    if not 1 <= k <= n:
        raise InvalidParameterError(f"k={k} outside [1, {n}]")
    if max_iters < 1:
        raise InvalidParameterError("max_iters must be >= 1")

    rng = rng_from(rng_seed)
    if init is None:
        centroids = _forgy_init(rng, X, k)
    else:
        centroids = np.asarray(init, dtype=float).copy()
        if centroids.shape != (k, d):
            raise DimensionMismatchError(
                f"init shape {centroids.shape} does not match (k={k}, d={d})"
            )

    assign: np.ndarray | None = None
    history: list[float] = []
    converged = False
    iterations = 0
    for _ in range(max_iters):
        D = pairwise_distances(X, centroids, metric)
        new_assign = np.argmin(D, axis=1)  # argmin takes the lowest index on ties
        if assign is not None and np.array_equal(new_assign, assign):
            converged = True
            break
        assign = new_assign
        _reseed_empty(X, assign, centroids, D, k)
        centroids = _means(X, assign, k)
        iterations += 1
        D_new = pairwise_distances(X, centroids, metric)
        history.append(float(D_new[np.arange(n), assign].sum()))

    D_final = pairwise_distances(X, centroids, metric)
    phi = float(D_final.min(axis=1).sum())
    return Clustering(assign, centroids, k, phi, iterations, converged, history)


def seeded_init(
    seed_set: SeedSet,
    matrix: FeatureMatrix,
    mode: str = "representative",
    rng_seed: int = 0,
) -> np.ndarray:
    """Build k starting centroids from labeled seed documents.

    representative: one uniformly chosen seed document's vector per cluster.
    seed_mean: the mean of each cluster's seed vectors.
    """
    if mode not in ("representative", "seed_mean"):
        raise InvalidParameterError(f"unknown seeding mode {mode!r}")
    n = matrix.n
    for doc, _ in seed_set.entries:
        if not 0 <= doc < n:
            raise InvalidParameterError(f"seed document index {doc} outside matrix")
    rng = rng_from(rng_seed)
    X = matrix.to_dense()
    centroids = np.zeros((seed_set.k, matrix.d))
    for h in range(seed_set.k):
        members = [doc for doc, cluster in seed_set.entries if cluster == h]
        if mode == "representative":
            centroids[h] = X[members[int(rng.integers(len(members)))]]
        else:
            centroids[h] = X[members].mean(axis=0)
    return centroids


def potential(matrix: FeatureMatrix, clustering: Clustering, metric: str) -> float:
    """Sum over documents of the distance to the nearest centroid."""
    X = matrix.to_dense()
    D = pairwise_distances(X, clustering.centroids, metric)
    return float(D.min(axis=1).sum())


def write_clustering(path: str, clustering: Clustering, doc_ids: list[str]) -> None:
    """Line-delimited (doc_id, cluster_id) plus a '#' footer record."""
    if len(doc_ids) != len(clustering.assignment):
        raise DimensionMismatchError("doc_ids length does not match assignment")
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id, cluster in zip(doc_ids, clustering.assignment):
            fh.write(f"{doc_id}\t{int(cluster)}\n")
        meta = {
            "k": clustering.k,
            "potential": clustering.potential,
            "iterations": clustering.iterations,
            "converged": clustering.converged,
        }
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")


def read_clustering(path: str) -> tuple[dict[str, int], dict]:
    """Inverse of write_clustering: (doc_id -> cluster, footer metadata)."""
    mapping: dict[str, int] = {}
    meta: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                meta = json.loads(line[1:].strip())
                continue
            try:
                doc_id, cluster = line.split("\t")
                mapping[doc_id] = int(cluster)
            except ValueError:
                raise InvalidParameterError(
                    f"{path}:{line_no}: expected 'doc_id<TAB>cluster'"
                ) from None
    return mapping, meta
