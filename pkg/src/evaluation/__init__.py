from .metrics import HITS_AT, Metrics, format_metrics
from .ranking import FilterIndex, Scorer, evaluate, evaluation_queries, rank_query
from .scorers import DrumScorer, RuleScorer, apply_compiled, apply_rules
from .control import DistMultControl
from .protocols import (
    entity_overlap,
    evaluate_inductive,
    evaluate_split,
    graph_operators,
    inductive_graph,
    validation_hook,
)

__all__ = [
    "HITS_AT",
    "Metrics",
    "format_metrics",
    "FilterIndex",
    "Scorer",
    "evaluate",
    "evaluation_queries",
    "rank_query",
    "DrumScorer",
    "RuleScorer",
    "apply_compiled",
    "apply_rules",
    "DistMultControl",
    "entity_overlap",
    "evaluate_inductive",
    "evaluate_split",
    "graph_operators",
    "inductive_graph",
    "validation_hook",
]
