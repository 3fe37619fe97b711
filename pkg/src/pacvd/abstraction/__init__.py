from .engine import (
    AbstractionReport, Analysis, ApiUsageFacts, ConcreteCondition, FuzzyClass, Level,
    abstract, classify_fuzzy, collect_conditions, compute_facts, count_calls,
    derive_fuzzy_from_conditions, extract_key_variables,
)
from .render import normalize, render

__all__ = [
    "AbstractionReport", "Analysis", "ApiUsageFacts", "ConcreteCondition", "FuzzyClass", "Level",
    "abstract", "classify_fuzzy", "collect_conditions", "compute_facts", "count_calls",
    "derive_fuzzy_from_conditions", "extract_key_variables", "normalize", "render",
]
