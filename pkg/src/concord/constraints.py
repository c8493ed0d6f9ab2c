"""Must-link / cannot-link constraints: generation, closure, neighborhoods.

Must-link is an equivalence relation; its transitive closure partitions the
constrained documents into classes, and cannot-links propagate across whole
classes. A pair forced into both relations is an inconsistency.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .corpus import LabelAssignment
from .common import rng_from
from .errors import (
    InconsistencyError,
    InvalidParameterError,
    TooManyPairsError,
    UnknownDocumentError,
)

MUST_LINK = "must_link"
CANNOT_LINK = "cannot_link"

_KIND_CODE = {MUST_LINK: "ML", CANNOT_LINK: "CL"}
_CODE_KIND = {"ML": MUST_LINK, "CL": CANNOT_LINK}


@dataclass(frozen=True, order=True)
class Constraint:
    """A symmetric pairwise constraint, stored with a < b."""

    kind: str
    a: int
    b: int

    def __post_init__(self):
        if self.kind not in (MUST_LINK, CANNOT_LINK):
            raise InvalidParameterError(f"unknown constraint kind {self.kind!r}")
        if self.a == self.b:
            raise InvalidParameterError(f"constraint on identical documents ({self.a})")
        if self.a > self.b:
            lo, hi = self.b, self.a
            object.__setattr__(self, "a", lo)
            object.__setattr__(self, "b", hi)


def must_link(a: int, b: int) -> Constraint:
    return Constraint(MUST_LINK, a, b)


def cannot_link(a: int, b: int) -> Constraint:
    return Constraint(CANNOT_LINK, a, b)


@dataclass
class ConstraintSet:
    """Canonical must/cannot pair sets, plus a closure flag."""

    must: set[Constraint] = field(default_factory=set)
    cannot: set[Constraint] = field(default_factory=set)
    closed: bool = False
    dropped: tuple[Constraint, ...] = ()

    def __post_init__(self):
        for c in self.must:
            if c.kind != MUST_LINK:
                raise InvalidParameterError("non-must constraint in must set")
        for c in self.cannot:
            if c.kind != CANNOT_LINK:
                raise InvalidParameterError("non-cannot constraint in cannot set")
        overlap = {(c.a, c.b) for c in self.must} & {(c.a, c.b) for c in self.cannot}
        if overlap:
            raise InconsistencyError(
                f"pair(s) {sorted(overlap)[:5]} appear as both must-link and cannot-link"
            )

    def __len__(self) -> int:
        return len(self.must) + len(self.cannot)

    @property
    def sorted_must(self) -> list[Constraint]:
        return sorted(self.must)

    @property
    def sorted_cannot(self) -> list[Constraint]:
        return sorted(self.cannot)

    def all_constraints(self) -> list[Constraint]:
        return self.sorted_must + self.sorted_cannot

    def documents(self) -> set[int]:
        docs = set()
        for c in self.must | self.cannot:
            docs.add(c.a)
            docs.add(c.b)
        return docs


@dataclass
class NeighborhoodSet:
    """Must-link closure classes, sorted by decreasing size."""

    neighborhoods: list[frozenset[int]]

    def __post_init__(self):
        seen: set[int] = set()
        for nb in self.neighborhoods:
            if seen & nb:
                raise InvalidParameterError("neighborhoods must be pairwise disjoint")
            seen |= nb

    @property
    def lam(self) -> int:
        return len(self.neighborhoods)


def _resolve_indices(labels: LabelAssignment, index_of: dict | None) -> dict:
    """Map labeled doc_ids to matrix row indices.

    Without an explicit mapping, integer-like document ids are used
    directly as indices (handy for toy fixtures).
    """
    if index_of is not None:
        out = {}
        for doc_id in labels.labels:
            if doc_id not in index_of:
                raise UnknownDocumentError(f"labeled doc {doc_id!r} not in index")
            out[doc_id] = index_of[doc_id]
        return out
    out = {}
    for doc_id in labels.labels:
        if isinstance(doc_id, int):
            out[doc_id] = doc_id
        elif isinstance(doc_id, str) and doc_id.lstrip("-").isdigit():
            out[doc_id] = int(doc_id)
        else:
            raise InvalidParameterError(
                f"doc_id {doc_id!r} is not an index; pass index_of to resolve ids"
            )
    return out


def constraints_from_labels(
    labels: LabelAssignment,
    n_pairs: int,
    rng_seed: int,
    index_of: dict | None = None,
) -> ConstraintSet:
    """Sample distinct document pairs and type them from the labels.

    Pairs are drawn uniformly without replacement; a pair with equal labels
    becomes a must-link, otherwise a cannot-link.
    """
    idx = _resolve_indices(labels, index_of)
    docs = sorted(idx[d] for d in labels.labels)
    if len(docs) != len(set(docs)):
        raise InvalidParameterError("two labeled doc_ids resolve to one index")
    label_of = {idx[d]: v for d, v in labels.labels.items()}
    all_pairs = list(combinations(docs, 2))
    if n_pairs < 1:
        raise InvalidParameterError("n_pairs must be >= 1")
    if n_pairs > len(all_pairs):
        raise TooManyPairsError(
            f"n_pairs={n_pairs} exceeds C({len(docs)},2)={len(all_pairs)}"
        )
    rng = rng_from(rng_seed)
    picks = rng.choice(len(all_pairs), size=n_pairs, replace=False)
    must, cannot = set(), set()
    for p in picks:
        a, b = all_pairs[int(p)]
        if label_of[a] == label_of[b]:
            must.add(must_link(a, b))
        else:
            cannot.add(cannot_link(a, b))
    return ConstraintSet(must=must, cannot=cannot, closed=False)


def _components(must: set[Constraint]) -> tuple[dict[int, int], list[set[int]]]:
    adjacency: dict[int, set[int]] = {}
    for c in must:
        adjacency.setdefault(c.a, set()).add(c.b)
        adjacency.setdefault(c.b, set()).add(c.a)
    comp_of: dict[int, int] = {}
    members: list[set[int]] = []
    for start in sorted(adjacency):
        if start in comp_of:
            continue
        comp_id = len(members)
        queue = deque([start])
        comp = set()
        comp_of[start] = comp_id
        while queue:
            node = queue.popleft()
            comp.add(node)
            for nxt in adjacency[node]:
                if nxt not in comp_of:
                    comp_of[nxt] = comp_id
                    queue.append(nxt)
        members.append(comp)
    return comp_of, members


def _ml_path(must: set[Constraint], a: int, b: int) -> list[int]:
    """Shortest must-link chain from a to b, for inconsistency reporting."""
    adjacency: dict[int, set[int]] = {}
    for c in must:
        adjacency.setdefault(c.a, set()).add(c.b)
        adjacency.setdefault(c.b, set()).add(c.a)
    prev = {a: None}
    queue = deque([a])
    while queue:
        node = queue.popleft()
        if node == b:
            path = []
            while node is not None:
                path.append(node)
                node = prev[node]
            return path[::-1]
        for nxt in sorted(adjacency.get(node, ())):
            if nxt not in prev:
                prev[nxt] = node
                queue.append(nxt)
    return [a, b]


def transitive_closure(cset: ConstraintSet, on_conflict: str = "error") -> ConstraintSet:
    """Close must-links under transitivity and propagate cannot-links.

    Every pair inside a must-link class becomes an explicit must-link; a
    cannot-link between two classes is expanded to all cross pairs. When a
    cannot-link lands inside one class the set is inconsistent: by default
    that raises, with on_conflict="drop" the offending cannot-links are
    removed and reported via the ``dropped`` field.
    """
    if on_conflict not in ("error", "drop"):
        raise InvalidParameterError(f"unknown conflict mode {on_conflict!r}")
    comp_of, members = _components(cset.must)

    must_closed: set[Constraint] = set()
    for comp in members:
        for a, b in combinations(sorted(comp), 2):
            must_closed.add(must_link(a, b))

    cannot_closed: set[Constraint] = set()
    dropped: list[Constraint] = []
    for c in sorted(cset.cannot):
        ca, cb = comp_of.get(c.a), comp_of.get(c.b)
        if ca is not None and ca == cb:
            if on_conflict == "drop":
                dropped.append(c)
                continue
            chain = _ml_path(cset.must, c.a, c.b)
            raise InconsistencyError(
                f"cannot-link ({c.a}, {c.b}) contradicts must-link chain "
                + "-".join(str(x) for x in chain),
                chain=chain,
                pair=(c.a, c.b),
            )
        side_a = members[ca] if ca is not None else {c.a}
        side_b = members[cb] if cb is not None else {c.b}
        for a in side_a:
            for b in side_b:
                cannot_closed.add(cannot_link(a, b))

    return ConstraintSet(
        must=must_closed, cannot=cannot_closed, closed=True, dropped=tuple(dropped)
    )


def build_neighborhoods(cset: ConstraintSet) -> NeighborhoodSet:
    """Group documents by must-link class, largest first.

    Documents touched only by cannot-links form no neighborhood. Ties in
    size break toward the smallest member index.
    """
    if not cset.closed:
        raise InvalidParameterError("constraint set must be closed first")
    _, members = _components(cset.must)
    ordered = sorted(members, key=lambda s: (-len(s), min(s)))
    return NeighborhoodSet([frozenset(s) for s in ordered])


def violations(clustering, cset: ConstraintSet) -> list[Constraint]:
    """Constraints the given assignment breaks.

    Accepts a Clustering or a plain integer assignment array. A must-link
    is violated when its documents land in different clusters, a
    cannot-link when they share one.
    """
    assign = getattr(clustering, "assignment", clustering)
    assign = np.asarray(assign)
    n = len(assign)
    out = []
    for c in cset.all_constraints():
        if c.a >= n or c.b >= n:
            raise UnknownDocumentError(f"constraint references document {max(c.a, c.b)} >= n={n}")
        same = assign[c.a] == assign[c.b]
        if (c.kind == MUST_LINK and not same) or (c.kind == CANNOT_LINK and same):
            out.append(c)
    return out


# --- file formats ---------------------------------------------------------


def write_constraints(cset: ConstraintSet, path: str, ids: list[str] | None = None) -> None:
    """Line-delimited (ML|CL, doc_a, doc_b); ids map indices to names."""
    with open(path, "w", encoding="utf-8") as fh:
        for c in cset.all_constraints():
            a = ids[c.a] if ids is not None else c.a
            b = ids[c.b] if ids is not None else c.b
            fh.write(f"{_KIND_CODE[c.kind]}\t{a}\t{b}\n")


def read_constraints(path: str, index_of: dict | None = None) -> ConstraintSet:
    must, cannot = set(), set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t") if "\t" in line else line.split()
            if len(parts) != 3:
                raise InvalidParameterError(f"{path}:{line_no}: expected 'kind a b'")
            code, a_raw, b_raw = parts
            if code not in _CODE_KIND:
                raise InvalidParameterError(f"{path}:{line_no}: unknown kind {code!r}")
            if index_of is not None:
                try:
                    a, b = index_of[a_raw], index_of[b_raw]
                except KeyError as exc:
                    raise UnknownDocumentError(f"{path}:{line_no}: unknown doc {exc}") from exc
            else:
                try:
                    a, b = int(a_raw), int(b_raw)
                except ValueError:
                    raise InvalidParameterError(
                        f"{path}:{line_no}: ids {a_raw!r}, {b_raw!r} are not indices; "
                        "pass a corpus to resolve names"
                    ) from None
            if _CODE_KIND[code] == MUST_LINK:
                must.add(must_link(a, b))
            else:
                cannot.add(cannot_link(a, b))
    return ConstraintSet(must=must, cannot=cannot, closed=False)


def write_labels(labelings: list[LabelAssignment], path: str) -> None:
    """Line-delimited (annotator_id, doc_id, label)."""
    with open(path, "w", encoding="utf-8") as fh:
        for labeling in labelings:
            for doc_id in sorted(labeling.labels):
                fh.write(f"{labeling.annotator_id}\t{doc_id}\t{labeling.labels[doc_id]}\n")


def read_labels(path: str) -> dict[str, LabelAssignment]:
    per_annotator: dict[str, dict[str, object]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t") if "\t" in line else line.split()
            if len(parts) != 3:
                raise InvalidParameterError(f"{path}:{line_no}: expected 'annotator doc label'")
            ann, doc_id, label = parts
            value: object = int(label) if label.lstrip("-").isdigit() else label
            per_annotator.setdefault(ann, {})[doc_id] = value
    return {ann: LabelAssignment(ann, labels) for ann, labels in sorted(per_annotator.items())}
