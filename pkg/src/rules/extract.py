"""Rule extraction from coefficient tensors and the inverse construction."""

from typing import NamedTuple, Sequence

import numpy as np
import structlog

from ..errors import ArgumentError, DimensionError
from ..model.coefficients import CoefficientTensor
from .rule import Rule, sort_rules


logger = structlog.get_logger()

IDENTITY = 0
EXHAUSTIVE_LIMIT = 1_000_000
MIN_CONFIDENCE_FLOOR = 1e-4
MIN_CONFIDENCE_FRACTION = 0.01


class ScoredPath(NamedTuple):
    """Raw operator path of length T (identity included) and its confidence."""
    path: tuple[int, ...]
    confidence: float


def path_confidence(rank: np.ndarray, path: Sequence[int]) -> float:
    """Π_i a[i][path_i] for one rank slice of shape (T, K)."""
    confidence = 1.0
    for i, k in enumerate(path):
        confidence *= float(rank[i, k])
    return confidence


def expand_rank(rank: np.ndarray, min_confidence: float, allow_exhaustive: bool = False) -> list[ScoredPath]:
    """All raw paths of one rank whose confidence reaches min_confidence.

    Depth-first over steps; a partial product below the threshold is
    abandoned, which is exact because coefficients never exceed 1.

    Raises:
        ArgumentError: min_confidence <= 0 over more than EXHAUSTIVE_LIMIT
            paths, unless allow_exhaustive is set.
    """
    rank = np.asarray(rank, dtype=np.float64)
    if rank.ndim != 2:
        raise DimensionError("expand_rank", rank.shape, ("T", "K"))
    T, K = rank.shape
    if min_confidence <= 0 and float(K) ** T > EXHAUSTIVE_LIMIT and not allow_exhaustive:
        raise ArgumentError(
            f"min_confidence {min_confidence} would enumerate {K}^{T} paths; raise it or allow exhaustive expansion"
        )

    found: list[ScoredPath] = []
    stack: list[tuple[tuple[int, ...], float]] = [((), 1.0)]
    while stack:
        prefix, confidence = stack.pop()
        if len(prefix) == T:
            found.append(ScoredPath(prefix, confidence))
            continue
        step = rank[len(prefix)]
        # reversed so paths pop in ascending operator order
        for k in range(K - 1, -1, -1):
            extended = confidence * float(step[k])
            if extended >= min_confidence:
                stack.append((prefix + (k,), extended))
    return found


def collapse_identity(path: Sequence[int], identity: int = IDENTITY) -> tuple[int, ...]:
    return tuple(k for k in path if k != identity)


def top_path_confidence(coefficients: CoefficientTensor) -> float:
    if coefficients.L == 0:
        return 0.0
    return float(np.max(np.prod(coefficients.values.max(axis=2), axis=1)))


def default_min_confidence(coefficients: CoefficientTensor) -> float:
    """max(1e-4, 1% of the best raw path confidence)."""
    return max(MIN_CONFIDENCE_FLOOR, MIN_CONFIDENCE_FRACTION * top_path_confidence(coefficients))


def extract_rules(
    coefficients: CoefficientTensor,
    head: int,
    min_confidence: float | None = None,
    identity: int = IDENTITY,
    allow_exhaustive: bool = False,
) -> list[Rule]:
    """Rules for one head, merged across raw paths and ranks.

    Raw paths collapsing to the same body add their confidences; the
    all-identity path is discarded.
    """
    if min_confidence is None:
        min_confidence = default_min_confidence(coefficients)
    merged: dict[tuple[int, ...], float] = {}
    for j in range(coefficients.L):
        for path, confidence in expand_rank(coefficients.rank(j), min_confidence, allow_exhaustive):
            body = collapse_identity(path, identity)
            if body:
                merged[body] = merged.get(body, 0.0) + confidence
    rules = sort_rules(Rule(head, body, confidence) for body, confidence in merged.items())
    logger.debug("rules_extracted", head=head, rules=len(rules), min_confidence=min_confidence)
    return rules


def construct_coefficients(
    rules: Sequence[Rule],
    T: int,
    operator_count: int,
    identity: int = IDENTITY,
) -> CoefficientTensor:
    """One rank per rule: step 1 carries α on the first atom, later steps are
    one-hot on the remaining atoms and then on the identity.

    Raises:
        ArgumentError: empty body, body longer than T, identity in the body,
            or confidence outside [0, 1].
    """
    values = np.zeros((len(rules), T, operator_count))
    for j, rule in enumerate(rules):
        if not rule.body:
            raise ArgumentError(f"rule {j} has an empty body")
        if len(rule.body) > T:
            raise ArgumentError(f"rule {j} has body length {len(rule.body)} > T={T}")
        if identity in rule.body:
            raise ArgumentError(f"rule {j} mentions the identity relation in its body")
        if not 0.0 <= rule.confidence <= 1.0:
            raise ArgumentError(f"rule {j} confidence {rule.confidence} outside [0, 1]")
        for i in range(T):
            k = rule.body[i] if i < len(rule.body) else identity
            values[j, i, k] = rule.confidence if i == 0 else 1.0
    return CoefficientTensor(values)
