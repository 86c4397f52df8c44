"""Deep-sets embeddings of table columns for variable matching."""

from ._varlens import (
    Dataset,
    GroundTruth,
    Index,
    Model,
    ValueSpace,
    VarlensError,
    WordVectors,
    auc,
    baseline_score,
    distance,
    jaro_winkler,
    ks_test,
    load_table,
    load_word_vectors,
    meansd,
    mmd_linear,
    numeric_dataset,
    scf_test,
    schema_match,
    similarity_matrix,
    string_dataset,
    synthetic_corpus,
    train,
    union_search,
)

__all__ = [
    "Dataset",
    "GroundTruth",
    "Index",
    "Model",
    "ValueSpace",
    "VarlensError",
    "WordVectors",
    "auc",
    "baseline_score",
    "distance",
    "jaro_winkler",
    "ks_test",
    "load_table",
    "load_word_vectors",
    "meansd",
    "mmd_linear",
    "numeric_dataset",
    "scf_test",
    "schema_match",
    "similarity_matrix",
    "string_dataset",
    "synthetic_corpus",
    "train",
    "union_search",
]
