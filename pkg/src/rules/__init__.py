from .rule import Rule, RuleList, format_rule, read_rules, sort_rules, write_rules
from .extract import (
    ScoredPath,
    collapse_identity,
    construct_coefficients,
    default_min_confidence,
    expand_rank,
    extract_rules,
    path_confidence,
    top_path_confidence,
)
from .chain import best_path, confidence_chain, hamming, walk_to_best
from .mining import mine_rules, mined_heads

__all__ = [
    "Rule",
    "RuleList",
    "format_rule",
    "read_rules",
    "sort_rules",
    "write_rules",
    "ScoredPath",
    "collapse_identity",
    "construct_coefficients",
    "default_min_confidence",
    "expand_rank",
    "extract_rules",
    "path_confidence",
    "top_path_confidence",
    "best_path",
    "confidence_chain",
    "hamming",
    "walk_to_best",
    "mine_rules",
    "mined_heads",
]
