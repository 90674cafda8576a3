"""Scorers mapping a query (x, head, y) to a score vector over all entities."""

import threading
from typing import Optional

import numpy as np
import structlog

from ..errors import ArgumentError
from ..kg.adjacency import MaskedOperatorSet, OperatorSet
from ..model import CoefficientTensor, DrumModel, one_hot, propagate_batch
from ..rules import RuleList


logger = structlog.get_logger()

Operators = OperatorSet | MaskedOperatorSet


class DrumScorer:
    """Scores with a trained model; coefficients are computed once per head.

    With mask_query the evaluated edge and its inverse are hidden, for
    graphs that contain the test triples.
    """

    def __init__(self, model: DrumModel, operators: OperatorSet, mask_query: bool = False):
        self.model = model
        self.operators = operators
        self.mask_query = mask_query
        self._coefficients: dict[int, CoefficientTensor] = {}
        self._lock = threading.Lock()

    def coefficients(self, head: int) -> CoefficientTensor:
        with self._lock:
            if head not in self._coefficients:
                self._coefficients[head] = self.model.coefficients(head)
            return self._coefficients[head]

    def __call__(self, x: int, head: int, y: int) -> np.ndarray:
        operators = self.operators.mask_query(x, head, y) if self.mask_query else self.operators
        return propagate_batch(self.coefficients(head), [x], operators)[0]


class RuleScorer:
    """Applies a rule list to any graph by relation name.

    Rules whose atoms are missing from the graph's vocabulary contribute
    nothing; each missing relation is warned about once.
    """

    def __init__(self, rules: RuleList, operators: OperatorSet, mask_query: bool = False):
        if operators.vocab is None:
            raise ArgumentError("rule scoring needs operators built with a vocabulary")
        self.rules = rules
        self.operators = operators
        self.mask_query = mask_query
        self._compiled: dict[int, list[tuple[float, tuple[int, ...]]]] = {}
        self._warned: set[str] = set()
        self._lock = threading.Lock()

    def _warn_missing(self, name: str) -> None:
        if name not in self._warned:
            self._warned.add(name)
            logger.warning("rule_relation_missing", relation=name)

    def _rules_named(self, name: str) -> list:
        rule_index = {relation: i for i, relation in enumerate(self.rules.relations)}
        return self.rules.for_head(rule_index[name]) if name in rule_index else []

    def _resolve(self, rule) -> tuple[int, ...] | None:
        vocab = self.operators.vocab
        names = [self.rules.name(r) for r in rule.body]
        missing = [name for name in names if not vocab.has_relation(name)]
        for name in missing:
            self._warn_missing(name)
        if missing:
            return None
        return tuple(vocab.relation_id(name) for name in names)

    def compiled(self, head: int) -> list[tuple[float, tuple[int, ...]]]:
        """(confidence, body ids in the graph vocabulary) for a graph head id.

        A head without rules of its own borrows the rules of its inverse:
        H(A, B) <- B1, ..., Bm answers inv_H(B, A) through inv_Bm, ..., inv_B1.
        """
        with self._lock:
            if head in self._compiled:
                return self._compiled[head]
            vocab = self.operators.vocab
            compiled = []
            own = self._rules_named(vocab.relations[head])
            if own:
                for rule in own:
                    body = self._resolve(rule)
                    if body is not None:
                        compiled.append((rule.confidence, body))
            elif vocab.inverse_of(head) != head:
                for rule in self._rules_named(vocab.relations[vocab.inverse_of(head)]):
                    body = self._resolve(rule)
                    if body is not None:
                        compiled.append((rule.confidence, tuple(vocab.inverse_of(r) for r in reversed(body))))
            self._compiled[head] = compiled
            return compiled

    def __call__(self, x: int, head: int, y: Optional[int] = None) -> np.ndarray:
        operators = self.operators
        if self.mask_query and y is not None:
            operators = operators.mask_query(x, head, y)
        return apply_compiled(self.compiled(head), operators, x)


def apply_compiled(compiled: list[tuple[float, tuple[int, ...]]], operators: Operators, x: int) -> np.ndarray:
    start = one_hot(operators.n, x)
    scores = np.zeros(operators.n)
    for confidence, body in compiled:
        u = start
        for relation in body:
            u = operators.apply_transpose(relation, u)
        scores += confidence * u
    return scores


def apply_rules(rules: RuleList, operators: OperatorSet, x: int, head: int) -> np.ndarray:
    """Σ_rules α · v_xᵀ Π_body A over the given graph for the query head(x, ?)."""
    return RuleScorer(rules, operators)(x, head)
