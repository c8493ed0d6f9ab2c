"""concord: semi-supervised document clustering with pairwise constraints.

Pipeline: ingest a line-delimited corpus, filter and tf-idf vectorize it,
cluster with K-Means / Seeded K-Means / constrained K-Means, and score runs
and constraint sets with mutual information, informativeness, coherence,
and inter-annotator agreement. A CLI and a session service expose the same
operations for scripting and interactive steering.
"""

from .corpus import (
    Corpus,
    Document,
    FeatureMatrix,
    LabelAssignment,
    Vocabulary,
    build_vocabulary,
    gen_synthetic_corpus,
    tokenize,
    vectorize,
)
from .clustering import Clustering, SeedSet, distance, kmeans, potential, seeded_init
from .constraints import (
    Constraint,
    ConstraintSet,
    NeighborhoodSet,
    build_neighborhoods,
    cannot_link,
    constraints_from_labels,
    must_link,
    transitive_closure,
    violations,
)
from .pckmeans import PckConfig, PckResult, assignment_cost, pck_init, pckmeans
from .evaluation import (
    ContingencyTable,
    MetricsReport,
    coherence,
    confusion_matrix,
    contingency,
    informativeness,
    krippendorff_alpha,
    mutual_information,
    nmi,
    projected_overlap,
)
from .errors import ConcordError

__version__ = "0.1.0"
