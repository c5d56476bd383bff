"""Topic mining for short free-text survey responses.

Pipeline: corpus preprocessing -> LDA topic counting -> C_v coherence model
selection -> embedding-based sentence-to-topic assignment -> cohort
difference statistics, plus an HTTP curation service and a batch CLI.
"""

from .assignment import (
    AssignmentError,
    DocTopics,
    SentenceAssignment,
    assign_corpus,
    assign_document,
    assign_sentence,
    mean_topic_count,
    topic_frequencies,
)
from .coherence import CoherenceCurve, CoherenceError, cv_score, k_sweep
from .cohorts import (
    LEGEND,
    CohortError,
    CohortRecord,
    DiffTable,
    chi_square_independence,
    difference_table,
    income_groups,
    join_census,
    kmeans_education,
    two_proportion_test,
    welch_t_test,
)
from .corpus import (
    CorpusError,
    PreprocessedDoc,
    RawRecord,
    TokenizedDoc,
    Vocabulary,
    load_corpus,
    preprocess_corpus,
)
from .embedding import (
    TopicCenterError,
    TopicSpec,
    VectorFormatError,
    VectorStore,
    compute_centers,
    cosine_similarity,
    load_topic_specs,
    load_vectors,
    project_centers_2d,
    sentence_vector,
    topic_center,
)
from .lda import LdaConfig, LdaError, LdaModel, fit, top_word_ids
from .service import create_app

__version__ = "0.1.0"

__all__ = [
    "AssignmentError",
    "CohortError",
    "CohortRecord",
    "CoherenceCurve",
    "CoherenceError",
    "CorpusError",
    "DiffTable",
    "DocTopics",
    "TopicCenterError",
    "VectorFormatError",
    "LEGEND",
    "LdaConfig",
    "LdaError",
    "LdaModel",
    "PreprocessedDoc",
    "RawRecord",
    "SentenceAssignment",
    "TokenizedDoc",
    "TopicSpec",
    "VectorStore",
    "Vocabulary",
    "assign_corpus",
    "assign_document",
    "assign_sentence",
    "chi_square_independence",
    "compute_centers",
    "cosine_similarity",
    "create_app",
    "cv_score",
    "difference_table",
    "fit",
    "income_groups",
    "join_census",
    "k_sweep",
    "kmeans_education",
    "load_corpus",
    "load_topic_specs",
    "load_vectors",
    "mean_topic_count",
    "preprocess_corpus",
    "project_centers_2d",
    "sentence_vector",
    "topic_center",
    "top_word_ids",
    "topic_frequencies",
    "two_proportion_test",
    "welch_t_test",
]
