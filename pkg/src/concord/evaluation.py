"""Cluster-validity and constraint-quality measures.

Covers the class-vs-cluster contingency table, empirical mutual information
in nats, a normalized variant, constraint-set informativeness and projected
-overlap coherence, nominal-scale Krippendorff alpha, and run-vs-run
confusion matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .common import stable_json
from .constraints import CANNOT_LINK, MUST_LINK, ConstraintSet, violations
from .corpus import FeatureMatrix, LabelAssignment, sort_labels
from .errors import (
    DegenerateSegmentError,
    EmptyConstraintSetError,
    EmptyTableError,
    IdSpaceMismatchError,
    InsufficientDataError,
    InvalidParameterError,
    UnknownDocumentError,
)


@dataclass
class ContingencyTable:
    """Counts h(c, k): documents of class c landing in cluster k."""

    counts: np.ndarray
    row_labels: tuple
    col_labels: tuple

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def row_marginals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_marginals(self) -> np.ndarray:
        return self.counts.sum(axis=0)


def contingency(labels: LabelAssignment, clustering, index_of: dict | None = None) -> ContingencyTable:
    """Cross-tabulate a labeling against a clustering.

    Rows are the distinct labels in sorted order, columns the cluster ids
    0..k-1. ``index_of`` maps doc_ids to matrix rows; without it integer-like
    ids are used directly.
    """
    assign = np.asarray(getattr(clustering, "assignment", clustering))
    k = getattr(clustering, "k", int(assign.max()) + 1 if len(assign) else 0)
    cats = sort_labels(set(labels.labels.values()))
    cat_rank = {c: i for i, c in enumerate(cats)}
    counts = np.zeros((len(cats), k), dtype=int)
    for doc_id, label in labels.labels.items():
        if index_of is not None:
            if doc_id not in index_of:
                raise UnknownDocumentError(f"labeled doc {doc_id!r} not in index")
            row = index_of[doc_id]
        else:
            try:
                row = int(doc_id)
            except (TypeError, ValueError):
                raise UnknownDocumentError(
                    f"doc_id {doc_id!r} is not an index; pass index_of"
                ) from None
        if not 0 <= row < len(assign):
            raise UnknownDocumentError(f"doc {doc_id!r} maps outside the clustering")
        counts[cat_rank[label], int(assign[row])] += 1
    return ContingencyTable(counts, tuple(cats), tuple(range(k)))


def _entropies(counts: np.ndarray) -> tuple[float, float, float]:
    """(H(C), H(K), H(C|K)) in nats with the 0 log 0 = 0 convention."""
    n = counts.sum()
    h_c = 0.0
    for hc in counts.sum(axis=1):
        if hc > 0:
            h_c -= (hc / n) * math.log(hc / n)
    h_k = 0.0
    col = counts.sum(axis=0)
    for hk in col:
        if hk > 0:
            h_k -= (hk / n) * math.log(hk / n)
    h_c_given_k = 0.0
    for i in range(counts.shape[0]):
        for j in range(counts.shape[1]):
            hck = counts[i, j]
            if hck > 0:
                h_c_given_k -= (hck / n) * math.log(hck / col[j])
    return float(h_c), float(h_k), float(h_c_given_k)


def mutual_information(table: ContingencyTable) -> tuple[float, float, float]:
    """Empirical MI in nats: (mi, H(C), H(C|K)) with mi = H(C) - H(C|K)."""
    if table.n < 1:
        raise EmptyTableError("contingency table has no mass")
    h_c, _, h_c_given_k = _entropies(table.counts)
    return h_c - h_c_given_k, h_c, h_c_given_k


def nmi(table: ContingencyTable) -> float:
    """MI normalized by max(H(C), H(K)); 1 exactly for a permutation structure.

    A table with a single class and a single cluster has no entropy on
    either side; the partitions are identical, so that degenerate case is 1.
    """
    if table.n < 1:
        raise EmptyTableError("contingency table has no mass")
    h_c, h_k, h_c_given_k = _entropies(table.counts)
    denom = max(h_c, h_k)
    if denom == 0.0:
        return 1.0
    value = (h_c - h_c_given_k) / denom
    return float(min(1.0, max(0.0, value)))


def informativeness(cset: ConstraintSet, reference) -> float:
    """Fraction of the constraint set the reference partition violates.

    The reference must be the *unconstrained* algorithm's partition run
    with the same initial parameters as the constrained one, or the number
    does not mean anything.
    """
    total = len(cset)
    if total == 0:
        raise EmptyConstraintSetError("informativeness needs at least one constraint")
    return len(violations(reference, cset)) / total


def projected_overlap(a: tuple, b: tuple, mode: str = "interval") -> float:
    """Length of the projection of segment a onto segment b that lands inside b.

    ``interval`` (default) parametrizes b's line by t in [0, 1], projects
    a's endpoints to t-coordinates, and measures the clipped interval
    intersection times |b|. ``unsigned`` evaluates the older unsigned
    three-case rule instead (kept for study; it cannot distinguish the two
    sides of b and misreads far-side projections).
    """
    if mode not in ("interval", "unsigned"):
        raise InvalidParameterError(f"unknown overlap mode {mode!r}")
    a1, a2 = (np.asarray(p, dtype=float).ravel() for p in a)
    b1, b2 = (np.asarray(p, dtype=float).ravel() for p in b)
    if a1.shape != b1.shape or a2.shape != b1.shape or b2.shape != b1.shape:
        raise InvalidParameterError("all endpoints must share one dimensionality")
    direction = b2 - b1
    blen2 = float(direction @ direction)
    if blen2 == 0.0:
        raise DegenerateSegmentError("segment b has zero length")
    blen = math.sqrt(blen2)
    t1 = float((a1 - b1) @ direction) / blen2
    t2 = float((a2 - b1) @ direction) / blen2

    if mode == "interval":
        lo, hi = min(t1, t2), max(t1, t2)
        return blen * max(0.0, min(1.0, hi) - max(0.0, lo))

    # unsigned rule: distances from b's endpoints to the projections
    p1 = b1 + t1 * direction
    p2 = b1 + t2 * direction
    d_b2_b1 = blen
    d_b2_p1 = float(np.linalg.norm(b2 - p1))
    d_b2_p2 = float(np.linalg.norm(b2 - p2))
    if d_b2_b1 <= d_b2_p2 and d_b2_b1 <= d_b2_p1:
        return 0.0
    if d_b2_p2 < d_b2_b1 and d_b2_p1 >= d_b2_b1:
        return float(np.linalg.norm(b1 - p2))
    if d_b2_p2 < d_b2_b1 and d_b2_p1 < d_b2_b1:
        return float(np.linalg.norm(p1 - p2))
    # mirrored partial case the published rule leaves out
    return float(np.linalg.norm(b1 - p1))


def _segment(matrix_rows: np.ndarray, c) -> tuple[np.ndarray, np.ndarray]:
    return matrix_rows[c.a], matrix_rows[c.b]


def _overlap_or_zero(a_seg, b_seg) -> float:
    b1, b2 = b_seg
    if float((b2 - b1) @ (b2 - b1)) == 0.0:
        return 0.0  # a zero-length target segment cannot be overlapped
    return projected_overlap(a_seg, b_seg)


def coherence(cset: ConstraintSet, matrix: FeatureMatrix) -> float:
    """Fraction of ML x CL pairs whose segments have zero overlap both ways.

    Only mixed-type pairs enter the sum. If either side of the product is
    empty the set cannot contradict itself, so the value is 1 by convention.
    Geometry is euclidean over the feature embedding.
    """
    must = cset.sorted_must
    cannot = cset.sorted_cannot
    if not must or not cannot:
        return 1.0
    rows = matrix.to_dense()
    zero_pairs = 0
    for m in must:
        m_seg = _segment(rows, m)
        for c in cannot:
            c_seg = _segment(rows, c)
            if _overlap_or_zero(c_seg, m_seg) == 0.0 and _overlap_or_zero(m_seg, c_seg) == 0.0:
                zero_pairs += 1
    return zero_pairs / (len(must) * len(cannot))


def krippendorff_alpha(labelings: list[LabelAssignment]) -> float:
    """Nominal-scale agreement over the documents labeled by >= 2 annotators.

    Built from the coincidence matrix: alpha = 1 - D_o / D_e. Labelings
    with a single shared category have no expected disagreement; identical
    constant labelings count as perfect agreement.
    """
    if len(labelings) < 2:
        raise InsufficientDataError("need at least two labelings")
    units: dict[object, list[object]] = {}
    for labeling in labelings:
        for doc_id, label in labeling.labels.items():
            units.setdefault(doc_id, []).append(label)
    units = {u: vals for u, vals in units.items() if len(vals) >= 2}
    if not units:
        raise InsufficientDataError("no document is labeled by two or more annotators")

    categories = sort_labels({v for vals in units.values() for v in vals})
    rank = {c: i for i, c in enumerate(categories)}
    m = len(categories)
    coincidence = np.zeros((m, m))
    for vals in units.values():
        mu = len(vals)
        for i, vi in enumerate(vals):
            for j, vj in enumerate(vals):
                if i != j:
                    coincidence[rank[vi], rank[vj]] += 1.0 / (mu - 1)
    n = coincidence.sum()
    marginals = coincidence.sum(axis=1)
    d_o = (coincidence.sum() - np.trace(coincidence)) / n
    d_e = (marginals.sum() ** 2 - (marginals**2).sum()) / (n * (n - 1))
    if d_e == 0.0:
        return 1.0 if d_o == 0.0 else 0.0
    return float(1.0 - d_o / d_e)


@dataclass
class ConfusionMatrix:
    counts: np.ndarray
    category_names: tuple[str, ...]

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def row_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def agreement_rate(self) -> float:
        return float(np.trace(self.counts)) / self.n if self.n else 0.0


def confusion_matrix(run_a, run_b, category_names: list[str]) -> ConfusionMatrix:
    """Seed-aligned run-vs-run counts: entry (i, j) = docs a->i and b->j."""
    assign_a = np.asarray(getattr(run_a, "assignment", run_a))
    assign_b = np.asarray(getattr(run_b, "assignment", run_b))
    if len(assign_a) != len(assign_b):
        raise IdSpaceMismatchError("the two runs cover different document sets")
    k_a = getattr(run_a, "k", int(assign_a.max()) + 1)
    k_b = getattr(run_b, "k", int(assign_b.max()) + 1)
    k = len(category_names)
    if k_a != k or k_b != k:
        raise IdSpaceMismatchError(
            f"cluster-id spaces differ: {k_a} vs {k_b} vs {k} categories"
        )
    counts = np.zeros((k, k), dtype=int)
    for ca, cb in zip(assign_a, assign_b):
        counts[int(ca), int(cb)] += 1
    return ConfusionMatrix(counts, tuple(category_names))


@dataclass
class MetricsReport:
    """Bundle of whichever measures a run produced, plus its provenance."""

    mi: float | None = None
    nmi: float | None = None
    informativeness: float | None = None
    coherence: float | None = None
    alpha: float | None = None
    provenance: tuple = ()

    def to_record(self) -> dict:
        rec: dict = {}
        for name in ("mi", "nmi", "informativeness", "coherence", "alpha"):
            value = getattr(self, name)
            if value is not None:
                rec[name] = value
        rec["provenance"] = list(self.provenance)
        return rec

    def to_json_line(self) -> str:
        return stable_json(self.to_record())


def write_reports(reports: list[MetricsReport], path: str) -> None:
    """One structured record per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for report in reports:
            fh.write(report.to_json_line() + "\n")


def write_xy(path: str, xs, ys) -> None:
    """Two-column plot-data export."""
    if len(xs) != len(ys):
        raise InvalidParameterError("x and y lengths differ")
    with open(path, "w", encoding="utf-8") as fh:
        for x, y in zip(xs, ys):
            fh.write(f"{x}\t{repr(float(y))}\n")
