"""Pairwise-constrained K-Means with soft penalties.

Initialization seeds centroids from must-link neighborhoods (largest
first); when there are fewer neighborhoods than clusters, a point
cannot-linked to every neighborhood claims the next centroid and the rest
are random documents. Assignment is greedy and sequential in ascending
document order, each point minimizing its distance term plus w times the
constraints it would break against the labels as they stand right now.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clustering import Clustering, _check_metric, _means, pairwise_distances
from .constraints import (
    CANNOT_LINK,
    MUST_LINK,
    Constraint,
    ConstraintSet,
    NeighborhoodSet,
    build_neighborhoods,
    transitive_closure,
    violations,
)
from .corpus import FeatureMatrix
from .common import rng_from
from .errors import InvalidParameterError

PROV_NEIGHBORHOOD = "neighborhood_centroid"
PROV_CANNOT_LINKED = "cannot_linked_point"
PROV_RANDOM = "random"


@dataclass
class PckConfig:
    k: int
    w: float = 1.0
    metric: str = "cosine"
    max_iters: int = 100
    rng_seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise InvalidParameterError("k must be >= 1")
        if self.w < 0:
            raise InvalidParameterError("constraint weight w must be >= 0")
        if self.max_iters < 1:
            raise InvalidParameterError("max_iters must be >= 1")
        _check_metric(self.metric)


@dataclass
class PckResult:
    clustering: Clustering
    objective: float
    distance_term: float
    violated: list[Constraint]
    init_provenance: tuple[str, ...]
    objective_history: list[float]
    lam: int
    config: PckConfig

    def manifest(self) -> dict:
        return {
            "algorithm": "pckmeans",
            "k": self.config.k,
            "w": self.config.w,
            "metric": self.config.metric,
            "seed": self.config.rng_seed,
            "lambda": self.lam,
            "iterations": self.clustering.iterations,
            "converged": self.clustering.converged,
            "objective": self.objective,
            "violations": len(self.violated),
        }


def _distance_terms(X: np.ndarray, C: np.ndarray, metric: str) -> np.ndarray:
    """Per-point per-cluster distance term of the assignment cost.

    Half the squared euclidean distance, or the cosine distance as-is.
    """
    D = pairwise_distances(X, C, metric)
    if metric == "squared_euclidean":
        return 0.5 * D
    return D


def _partner_lists(cset: ConstraintSet, n: int) -> tuple[list[list[int]], list[list[int]]]:
    ml: list[list[int]] = [[] for _ in range(n)]
    cl: list[list[int]] = [[] for _ in range(n)]
    for c in cset.must:
        ml[c.a].append(c.b)
        ml[c.b].append(c.a)
    for c in cset.cannot:
        cl[c.a].append(c.b)
        cl[c.b].append(c.a)
    return ml, cl


def pck_init(
    neighborhoods: NeighborhoodSet,
    cset: ConstraintSet,
    matrix: FeatureMatrix,
    config: PckConfig,
) -> tuple[np.ndarray, tuple[str, ...]]:
    """Starting centroids plus a provenance tag for each.

    With at least k neighborhoods, the k largest provide their centroids.
    Otherwise every neighborhood contributes, then one point cannot-linked
    to all neighborhoods (smallest index if several), then distinct random
    documents fill the remainder.
    """
    X = matrix.to_dense()
    n = X.shape[0]
    k = config.k
    if k > n:
        raise InvalidParameterError(f"k={k} exceeds document count {n}")
    rng = rng_from(config.rng_seed)

    centroids = np.zeros((k, X.shape[1]))
    provenance: list[str] = []
    for nb in neighborhoods.neighborhoods[:k]:
        centroids[len(provenance)] = X[sorted(nb)].mean(axis=0)
        provenance.append(PROV_NEIGHBORHOOD)
    if len(provenance) == k:
        return centroids, tuple(provenance)

    used_points: set[int] = set()
    in_neighborhood = set().union(*neighborhoods.neighborhoods) if neighborhoods.neighborhoods else set()
    cl_partners: dict[int, set[int]] = {}
    for c in cset.cannot:
        cl_partners.setdefault(c.a, set()).add(c.b)
        cl_partners.setdefault(c.b, set()).add(c.a)
    candidate = None
    for x in sorted(cl_partners):
        if x in in_neighborhood:
            continue
        if all(cl_partners[x] & nb for nb in neighborhoods.neighborhoods):
            candidate = x
            break
    if candidate is not None and len(provenance) < k:
        centroids[len(provenance)] = X[candidate]
        provenance.append(PROV_CANNOT_LINKED)
        used_points.add(candidate)

    free = np.array([x for x in range(n) if x not in used_points])
    remaining = k - len(provenance)
    if remaining > 0:
        if remaining > len(free):
            raise InvalidParameterError("not enough documents to fill all clusters")
        # One draw for all remaining picks: with no constraints this consumes
        # the rng exactly like the plain K-Means Forgy init.
        picks = rng.choice(len(free), size=remaining, replace=False)
        for p in picks:
            centroids[len(provenance)] = X[int(free[int(p)])]
            provenance.append(PROV_RANDOM)
    return centroids, tuple(provenance)


def assignment_cost(
    matrix: FeatureMatrix,
    x: int,
    h: int,
    current_assignment,
    centroids: np.ndarray,
    cset: ConstraintSet,
    config: PckConfig,
) -> float:
    """Cost of placing document x into cluster h right now.

    Distance term plus w per must-link partner already assigned elsewhere
    and w per cannot-link partner already assigned to h. Partners that have
    no label yet contribute nothing.
    """
    assign = np.asarray(getattr(current_assignment, "assignment", current_assignment))
    xv = matrix.row(x)[None, :]
    term = float(_distance_terms(xv, centroids[h][None, :], config.metric)[0, 0])
    cost = term
    for c in cset.must:
        if c.a == x or c.b == x:
            j = c.b if c.a == x else c.a
            if assign[j] >= 0 and assign[j] != h:
                cost += config.w
    for c in cset.cannot:
        if c.a == x or c.b == x:
            j = c.b if c.a == x else c.a
            if assign[j] >= 0 and assign[j] == h:
                cost += config.w
    return cost


def _penalized_argmin(
    dist_row: np.ndarray, x: int, assign: np.ndarray, ml, cl, w: float
) -> int:
    cost = dist_row.copy()
    for j in ml[x]:
        if assign[j] >= 0:
            cost += w
            cost[assign[j]] -= w
    for j in cl[x]:
        if assign[j] >= 0:
            cost[assign[j]] += w
    return int(np.argmin(cost))


def _violation_count(assign: np.ndarray, must_pairs, cannot_pairs) -> int:
    count = 0
    if len(must_pairs):
        count += int((assign[must_pairs[:, 0]] != assign[must_pairs[:, 1]]).sum())
    if len(cannot_pairs):
        count += int((assign[cannot_pairs[:, 0]] == assign[cannot_pairs[:, 1]]).sum())
    return count


def _reseed_empty_penalized(
    X: np.ndarray,
    assign: np.ndarray,
    centroids: np.ndarray,
    D: np.ndarray,
    k: int,
    ml,
    cl,
    w: float,
) -> None:
    """Fill empty clusters without hurting the objective when avoidable.

    The moved point is the one with the largest distance-to-own-centroid
    after discounting the constraint penalty its move would add; with w=0
    this is exactly the plain farthest-point rule.
    """
    sizes = np.bincount(assign, minlength=k)
    for h in range(k):
        if sizes[h] > 0:
            continue
        n = len(assign)
        score = D[np.arange(n), assign].copy()
        for x in range(n):
            for j in ml[x]:
                if assign[j] == assign[x]:
                    score[x] -= w
            for j in cl[x]:
                if assign[j] == assign[x]:
                    score[x] += w
        score[sizes[assign] < 2] = -np.inf
        x = int(np.argmax(score))
        sizes[assign[x]] -= 1
        assign[x] = h
        sizes[h] = 1
        centroids[h] = X[x]


PROV_WARM_START = "warm_start"


def pckmeans(
    matrix: FeatureMatrix,
    cset: ConstraintSet,
    config: PckConfig,
    init_centroids=None,
) -> PckResult:
    """Run constrained K-Means to a local minimum of the penalized objective.

    The constraint set is closed first if needed. The reported objective is
    the summed distance term of each document to its own centroid plus w
    times the number of violated constraints. ``init_centroids`` bypasses
    the neighborhood initialization (warm starts).
    """
    if not cset.closed:
        cset = transitive_closure(cset)
    neighborhoods = build_neighborhoods(cset)
    if init_centroids is None:
        centroids, provenance = pck_init(neighborhoods, cset, matrix, config)
    else:
        centroids = np.asarray(init_centroids, dtype=float).copy()
        if centroids.shape != (config.k, matrix.d):
            raise InvalidParameterError(
                f"warm-start centroids shape {centroids.shape} != ({config.k}, {matrix.d})"
            )
        provenance = (PROV_WARM_START,) * config.k

    X = matrix.to_dense()
    n = X.shape[0]
    k = config.k
    w = config.w
    ml, cl = _partner_lists(cset, n)
    must_pairs = np.array([(c.a, c.b) for c in cset.sorted_must], dtype=int).reshape(-1, 2)
    cannot_pairs = np.array([(c.a, c.b) for c in cset.sorted_cannot], dtype=int).reshape(-1, 2)
    for c in cset.all_constraints():
        if c.b >= n:
            raise InvalidParameterError(f"constraint references document {c.b} >= n={n}")

    assign = np.full(n, -1, dtype=int)
    prev: np.ndarray | None = None
    history: list[float] = []
    converged = False
    iterations = 0
    for _ in range(config.max_iters):
        D = _distance_terms(X, centroids, config.metric)
        for x in range(n):
            assign[x] = _penalized_argmin(D[x], x, assign, ml, cl, w)
        if prev is not None and np.array_equal(assign, prev):
            converged = True
            break
        _reseed_empty_penalized(X, assign, centroids, D, k, ml, cl, w)
        centroids = _means(X, assign, k)
        iterations += 1
        D_new = _distance_terms(X, centroids, config.metric)
        dist_part = float(D_new[np.arange(n), assign].sum())
        tau = dist_part + w * _violation_count(assign, must_pairs, cannot_pairs)
        history.append(tau)
        prev = assign.copy()

    D_final = _distance_terms(X, centroids, config.metric)
    dist_part = float(D_final[np.arange(n), assign].sum())
    violated = violations(assign, cset)
    tau = dist_part + w * len(violated)

    full_D = pairwise_distances(X, centroids, config.metric)
    phi = float(full_D.min(axis=1).sum())
    clustering = Clustering(assign, centroids, k, phi, iterations, converged, history)
    return PckResult(
        clustering=clustering,
        objective=tau,
        distance_term=dist_part,
        violated=violated,
        init_provenance=provenance,
        objective_history=history,
        lam=neighborhoods.lam,
        config=config,
    )
