"""Corpus ingestion, noise filtering, and sparse tf-idf vectorization.

A corpus is an ordered list of documents; document order defines the row
order of the feature matrix. Tokenization applies four noise filters:
length <= 3, any digit in the raw word, any character repeated three or
more times in a row, and stopwords. Weights are raw term frequency times
ln(n / df), so a term present in every document drops out on its own.
"""

from __future__ import annotations

import json
import math
import os
import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .common import rng_from
from .errors import (
    DimensionMismatchError,
    EmptyVocabularyError,
    InvalidParameterError,
    UnknownDocumentError,
)

_NON_ALPHA = re.compile(r"[^a-z]+")
_HAS_DIGIT = re.compile(r"\d")
_TRIPLE_CHAR = re.compile(r"(.)\1\1")

STOPWORDS_ENV_VAR = "CONCORD_STOPWORDS"


def load_stopwords(path: str | None = None) -> frozenset[str]:
    """Load the stopword list; defaults to the packaged file.

    A path given explicitly wins, then the CONCORD_STOPWORDS env var,
    then the versioned list shipped with the package.
    """
    if path is None:
        path = os.environ.get(STOPWORDS_ENV_VAR)
    if path is None:
        path = os.path.join(os.path.dirname(__file__), "stopwords.txt")
    words = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                words.append(line.lower())
    return frozenset(words)


_DEFAULT_STOPWORDS: frozenset[str] | None = None


def default_stopwords() -> frozenset[str]:
    global _DEFAULT_STOPWORDS
    if _DEFAULT_STOPWORDS is None:
        _DEFAULT_STOPWORDS = load_stopwords()
    return _DEFAULT_STOPWORDS


def tokenize(raw_text: str, stopwords: frozenset[str] | None = None) -> list[str]:
    """Split text into filtered lowercase terms.

    Words are whitespace-split first; a word containing any digit is dropped
    whole (splitting on non-letters would otherwise make the digit rule
    unreachable). Surviving words are lowercased and split on non-alphabetic
    characters, then each term must pass: length > 3, no character repeated
    3+ times consecutively, not a stopword.
    """
    if stopwords is None:
        stopwords = default_stopwords()
    terms = []
    for word in raw_text.split():
        if _HAS_DIGIT.search(word):
            continue
        for term in _NON_ALPHA.split(word.lower()):
            if len(term) <= 3:
                continue
            if _TRIPLE_CHAR.search(term):
                continue
            if term in stopwords:
                continue
            terms.append(term)
    return terms


@dataclass
class Document:
    """One article: stable id, raw text, and filtered tokens."""

    doc_id: str
    raw_text: str
    tokens: list[str] = field(default_factory=list)
    labels: dict[str, object] = field(default_factory=dict)


@dataclass
class Corpus:
    """Ordered documents; order is load-bearing (matrix row i = documents[i])."""

    documents: list[Document]
    name: str = "corpus"

    def __post_init__(self):
        seen = set()
        for doc in self.documents:
            if doc.doc_id in seen:
                raise InvalidParameterError(f"duplicate doc_id {doc.doc_id!r}")
            seen.add(doc.doc_id)

    def __len__(self) -> int:
        return len(self.documents)

    @property
    def index_of(self) -> dict[str, int]:
        return {doc.doc_id: i for i, doc in enumerate(self.documents)}

    @property
    def doc_ids(self) -> list[str]:
        return [doc.doc_id for doc in self.documents]

    def tokenize_all(self, stopwords: frozenset[str] | None = None) -> None:
        for doc in self.documents:
            doc.tokens = tokenize(doc.raw_text, stopwords)

    def label_assignments(self) -> dict[str, "LabelAssignment"]:
        """Collect per-annotator labelings attached to the documents."""
        per_annotator: dict[str, dict[str, object]] = {}
        for doc in self.documents:
            for annotator, label in doc.labels.items():
                per_annotator.setdefault(annotator, {})[doc.doc_id] = label
        return {
            ann: LabelAssignment(ann, labels) for ann, labels in sorted(per_annotator.items())
        }

    @classmethod
    def from_jsonl(
        cls,
        path: str,
        name: str | None = None,
        stopwords: frozenset[str] | None = None,
        multilabel_seed: int = 0,
    ) -> "Corpus":
        """Read a line-delimited corpus: {"id", "text", optional "labels"}.

        A label given as a list is resolved to one value by a uniform draw
        seeded with ``multilabel_seed`` (recorded choice, reproducible).
        """
        rng = rng_from(multilabel_seed)
        docs = []
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise InvalidParameterError(f"{path}:{line_no}: bad record: {exc}") from exc
                if "id" not in rec or "text" not in rec:
                    raise InvalidParameterError(f"{path}:{line_no}: record needs id and text")
                labels = {}
                for ann, label in (rec.get("labels") or {}).items():
                    if isinstance(label, list):
                        if not label:
                            continue
                        label = label[int(rng.integers(len(label)))]
                    labels[ann] = label
                docs.append(Document(str(rec["id"]), str(rec["text"]), labels=labels))
        corpus = cls(docs, name=name or os.path.basename(path))
        corpus.tokenize_all(stopwords)
        return corpus

    def to_jsonl(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for doc in self.documents:
                rec: dict[str, object] = {"id": doc.doc_id, "text": doc.raw_text}
                if doc.labels:
                    rec["labels"] = dict(sorted(doc.labels.items()))
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


@dataclass
class LabelAssignment:
    """One annotator's labeling: doc_id -> category label."""

    annotator_id: str
    labels: dict[str, object]

    @property
    def k_declared(self) -> int:
        return len(set(self.labels.values()))

    @property
    def categories(self) -> list[object]:
        return sort_labels(set(self.labels.values()))

    def validate_against(self, corpus: Corpus) -> None:
        known = set(corpus.index_of)
        missing = [d for d in self.labels if d not in known]
        if missing:
            raise UnknownDocumentError(
                f"annotator {self.annotator_id!r} labels unknown documents: {missing[:5]}"
            )


def sort_labels(values) -> list:
    """Deterministic label ordering: numeric labels first, then strings."""
    return sorted(values, key=lambda v: (isinstance(v, str), v))


@dataclass
class Vocabulary:
    """Bijective term -> column index map plus document frequencies."""

    term_to_index: dict[str, int]
    document_frequency: dict[str, int]

    @property
    def size(self) -> int:
        return len(self.term_to_index)

    @property
    def terms(self) -> list[str]:
        return sorted(self.term_to_index, key=self.term_to_index.get)


def build_vocabulary(corpus: Corpus) -> Vocabulary:
    """Index every surviving term lexicographically and count df."""
    df: Counter[str] = Counter()
    for doc in corpus.documents:
        df.update(set(doc.tokens))
    if not df:
        raise EmptyVocabularyError(f"no term survives filtering in corpus {corpus.name!r}")
    terms = sorted(df)
    return Vocabulary({t: i for i, t in enumerate(terms)}, dict(df))


@dataclass
class FeatureMatrix:
    """Sparse row-major tf-idf weights; row i belongs to documents[i]."""

    weights: sp.csr_matrix

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def d(self) -> int:
        return self.weights.shape[1]

    @property
    def nnz(self) -> int:
        return self.weights.nnz

    def row(self, i: int) -> np.ndarray:
        return np.asarray(self.weights.getrow(i).todense()).ravel()

    def to_dense(self) -> np.ndarray:
        return np.asarray(self.weights.todense(), dtype=float)

    @classmethod
    def from_dense(cls, array) -> "FeatureMatrix":
        mat = sp.csr_matrix(np.asarray(array, dtype=float))
        mat.eliminate_zeros()
        return cls(mat)


def vectorize(corpus: Corpus, vocab: Vocabulary) -> FeatureMatrix:
    """tf-idf weights: raw count times ln(n / df); zero weights unstored."""
    n = len(corpus)
    if n == 0:
        raise InvalidParameterError("empty corpus")
    rows, cols, data = [], [], []
    for i, doc in enumerate(corpus.documents):
        for term, count in sorted(Counter(doc.tokens).items()):
            if term not in vocab.term_to_index:
                raise DimensionMismatchError(
                    f"term {term!r} in document {doc.doc_id!r} missing from vocabulary"
                )
            idf = math.log(n / vocab.document_frequency[term])
            weight = count * idf
            if weight != 0.0:
                rows.append(i)
                cols.append(vocab.term_to_index[term])
                data.append(weight)
    mat = sp.csr_matrix((data, (rows, cols)), shape=(n, vocab.size))
    mat.eliminate_zeros()
    return FeatureMatrix(mat)


_CONSONANTS = "bcdfghjklmnpqrstvwz"
_VOWELS = "aeiou"


def _coin_term(rng: np.random.Generator, taken: set[str], stopwords: frozenset[str]) -> str:
    # Alternating consonant/vowel keeps every filter satisfied by construction.
    while True:
        length = int(rng.integers(5, 9))
        chars = []
        for pos in range(length):
            pool = _CONSONANTS if pos % 2 == 0 else _VOWELS
            chars.append(pool[int(rng.integers(len(pool)))])
        term = "".join(chars)
        if term not in taken and term not in stopwords:
            taken.add(term)
            return term


def gen_synthetic_corpus(
    k_classes: int,
    docs_per_class: list[int],
    terms_per_class: int,
    overlap_fraction: float,
    rng_seed: int,
    noisy_last_class: bool = False,
    name: str = "synthetic",
    annotator_id: str = "truth",
) -> tuple[Corpus, LabelAssignment]:
    """Generate a labeled corpus from class-specific term pools.

    Each class owns ``terms_per_class`` terms, of which a fraction
    ``overlap_fraction`` is shared across all classes. Documents sample
    30..60 tokens from their class pool. With ``noisy_last_class`` the final
    class samples from the union of all pools instead, which makes it a
    catch-all of mixed-topic documents.
    """
    if k_classes < 2:
        raise InvalidParameterError("k_classes must be >= 2")
    if len(docs_per_class) != k_classes:
        raise InvalidParameterError("docs_per_class length must equal k_classes")
    if any(c <= 0 for c in docs_per_class):
        raise InvalidParameterError("docs_per_class entries must be positive")
    if terms_per_class <= 0:
        raise InvalidParameterError("terms_per_class must be positive")
    if not 0.0 <= overlap_fraction <= 1.0:
        raise InvalidParameterError("overlap_fraction must be in [0, 1]")

    rng = rng_from(rng_seed)
    stopwords = default_stopwords()
    taken: set[str] = set()

    n_shared = round(overlap_fraction * terms_per_class)
    shared = [_coin_term(rng, taken, stopwords) for _ in range(n_shared)]
    pools = []
    for _ in range(k_classes):
        own = [_coin_term(rng, taken, stopwords) for _ in range(terms_per_class - n_shared)]
        pools.append(own + shared)
    union_pool = sorted(set(t for pool in pools for t in pool))

    n_total = sum(docs_per_class)
    width = max(4, len(str(n_total)))
    docs, labels = [], {}
    doc_no = 0
    for cls in range(k_classes):
        pool = pools[cls]
        if noisy_last_class and cls == k_classes - 1:
            pool = union_pool
        for _ in range(docs_per_class[cls]):
            doc_id = f"d{doc_no:0{width}d}"
            length = int(rng.integers(30, 61))
            words = [pool[int(rng.integers(len(pool)))] for _ in range(length)]
            docs.append(Document(doc_id, " ".join(words), labels={annotator_id: cls}))
            labels[doc_id] = cls
            doc_no += 1

    corpus = Corpus(docs, name=name)
    corpus.tokenize_all(stopwords)
    return corpus, LabelAssignment(annotator_id, labels)


# --- file formats ---------------------------------------------------------


def write_vocabulary(vocab: Vocabulary, path: str) -> None:
    """Two-column export: term, index."""
    with open(path, "w", encoding="utf-8") as fh:
        for term in vocab.terms:
            fh.write(f"{term}\t{vocab.term_to_index[term]}\n")


def read_vocabulary(path: str) -> dict[str, int]:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            term, idx = line.split("\t")
            out[term] = int(idx)
    return out


def write_matrix(matrix: FeatureMatrix, path: str) -> None:
    """Coordinate-triplet export with a 'rows cols nnz' header line."""
    coo = matrix.weights.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{matrix.n} {matrix.d} {matrix.nnz}\n")
        for i in order:
            fh.write(f"{coo.row[i]} {coo.col[i]} {repr(float(coo.data[i]))}\n")


def read_matrix(path: str) -> FeatureMatrix:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise InvalidParameterError(f"{path}: expected 'rows cols nnz' header")
        try:
            n, d, nnz = (int(x) for x in header)
        except ValueError:
            raise InvalidParameterError(f"{path}: non-integer header {header}") from None
        rows, cols, data = [], [], []
        for line_no, line in enumerate(fh, 2):
            if not line.strip():
                continue
            try:
                r, c, w = line.split()
                rows.append(int(r))
                cols.append(int(c))
                data.append(float(w))
            except ValueError:
                raise InvalidParameterError(
                    f"{path}:{line_no}: expected 'row col weight'"
                ) from None
    if len(data) != nnz:
        raise InvalidParameterError(f"{path}: header promises {nnz} entries, found {len(data)}")
    if any(r >= n for r in rows) or any(c >= d for c in cols):
        raise InvalidParameterError(f"{path}: entry outside declared shape")
    return FeatureMatrix(sp.csr_matrix((data, (rows, cols)), shape=(n, d)))
