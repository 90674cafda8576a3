"""Mining a RuleList from a trained model."""

from typing import Iterable, Optional

import structlog

from ..kg.store import Vocabulary
from ..model import DrumModel
from .extract import default_min_confidence, extract_rules
from .rule import RuleList


logger = structlog.get_logger()


def mined_heads(vocab: Vocabulary) -> list[int]:
    """Every relation except the identity, inverses included."""
    return [r for r in range(vocab.relation_count) if r != vocab.identity_relation]


def mine_rules(
    model: DrumModel,
    vocab: Vocabulary,
    heads: Optional[Iterable[int]] = None,
    min_confidence: Optional[float] = None,
) -> RuleList:
    """Extract rules for each head (all non-identity relations by default).

    Without min_confidence each head uses its own default threshold.
    """
    identity = vocab.identity_relation if vocab.identity_relation is not None else 0
    rules = RuleList(tuple(vocab.relations))
    for head in (mined_heads(vocab) if heads is None else heads):
        coefficients = model.coefficients(head)
        threshold = default_min_confidence(coefficients) if min_confidence is None else min_confidence
        rules.set_head(head, extract_rules(coefficients, head, threshold, identity=identity))
    logger.info("rules_mined", heads=len(rules.heads()), rules=len(rules))
    return rules
