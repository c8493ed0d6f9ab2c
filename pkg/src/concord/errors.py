"""Domain exceptions shared across the toolkit.

Everything that is a *user-facing* failure (bad inputs, degenerate data,
conflicting constraints) derives from :class:`ConcordError` so the CLI can
map it to exit code 1, and the service to a 4xx payload.
"""

from __future__ import annotations


class ConcordError(Exception):
    """Base class for all domain errors."""

    code = "domain_error"


class InvalidParameterError(ConcordError):
    code = "invalid_parameter"


class EmptyVocabularyError(ConcordError):
    code = "empty_vocabulary"


class DimensionMismatchError(ConcordError):
    code = "dimension_mismatch"


class ZeroVectorError(ConcordError):
    code = "zero_vector"


class MissingClusterError(ConcordError):
    code = "missing_cluster"


class TooManyPairsError(ConcordError):
    code = "too_many_pairs"


class InconsistencyError(ConcordError):
    """A must-link chain forces a pair that is also cannot-linked.

    ``chain`` is the offending closure chain (document indices along the
    must-link path); ``pair`` is the cannot-link it collides with.
    """

    code = "inconsistent_constraints"

    def __init__(self, message, chain=(), pair=None):
        super().__init__(message)
        self.chain = list(chain)
        self.pair = pair


class UnknownDocumentError(ConcordError):
    code = "unknown_document"


class EmptyTableError(ConcordError):
    code = "empty_table"


class EmptyConstraintSetError(ConcordError):
    code = "empty_constraint_set"


class DegenerateSegmentError(ConcordError):
    code = "degenerate_segment"


class InsufficientDataError(ConcordError):
    code = "insufficient_data"


class IdSpaceMismatchError(ConcordError):
    code = "id_space_mismatch"


class SeedCoverageError(ConcordError):
    code = "seed_coverage"


class CorpusNotFoundError(ConcordError):
    code = "corpus_not_found"


class UnknownSessionError(ConcordError):
    code = "unknown_session"


class DuplicateConstraintError(ConcordError):
    code = "duplicate_pair"
