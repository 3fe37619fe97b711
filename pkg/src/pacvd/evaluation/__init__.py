from .context import (
    BASELINES, CONTEXTS, LEVELS, Context, api_bearing, build_context, parse_context, raw_code,
    sample_hierarchy, sample_random, sample_similar,
)
from .dataset import CalleeRecord, SampleRecord, SchemaError, depth_buckets, dump_dataset, load_dataset, parse_record
from .grid import CellResult, EmptyGrid, EvalRun, build_exemplar_store, cache_key, metrics_table, run_grid
from .metrics import ConfusionMatrix, EmptyInput, MetricsReport, confusion, metrics, score
from .similarity import (
    Similarity, bm25_scores, called_names, edit_similarity, jaccard, levenshtein, min_max,
    similarity_components, similarity_score, tokens,
)

__all__ = [
    "BASELINES", "CONTEXTS", "LEVELS", "Context", "api_bearing", "build_context", "parse_context", "raw_code",
    "sample_hierarchy", "sample_random", "sample_similar",
    "CalleeRecord", "SampleRecord", "SchemaError", "depth_buckets", "dump_dataset", "load_dataset", "parse_record",
    "CellResult", "EmptyGrid", "EvalRun", "build_exemplar_store", "cache_key", "metrics_table", "run_grid",
    "ConfusionMatrix", "EmptyInput", "MetricsReport", "confusion", "metrics", "score",
    "Similarity", "bm25_scores", "called_names", "edit_similarity", "jaccard", "levenshtein", "min_max",
    "similarity_components", "similarity_score", "tokens",
]
