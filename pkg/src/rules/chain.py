"""Chains of single-atom replacements between two rules of a rank-1 tensor.

Walking from any rule towards the best rule S* by setting one position at a
time to its best operator never lowers the confidence. Joining the walk from
rule_o with the reversed walk from rule_s gives a chain whose links all stay
at or above min(α_o, α_s).
"""

from typing import Sequence

import numpy as np

from ..errors import ArgumentError, ContractError
from ..model.coefficients import CoefficientTensor
from .extract import ScoredPath, path_confidence


def best_path(rank: np.ndarray) -> tuple[int, ...]:
    """argmax per step; ties go to the lowest operator id."""
    return tuple(int(k) for k in np.argmax(rank, axis=1))


def walk_to_best(rank: np.ndarray, start: Sequence[int]) -> list[tuple[int, ...]]:
    """start, ..., S*: each step fixes the position whose replacement gives
    the largest confidence (ties to the lowest position)."""
    target = best_path(rank)
    current = tuple(start)
    walk = [current]
    while current != target:
        candidates = []
        for i, (have, want) in enumerate(zip(current, target)):
            if have != want:
                replaced = current[:i] + (want,) + current[i + 1:]
                candidates.append((-path_confidence(rank, replaced), i, replaced))
        current = min(candidates)[2]
        walk.append(current)
    return walk


def hamming(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(x != y for x, y in zip(a, b))


def confidence_chain(
    coefficients: CoefficientTensor,
    rule_o: Sequence[int],
    rule_s: Sequence[int],
) -> list[ScoredPath]:
    """Intermediate paths R_1..R_ℓ linking rule_o to rule_s (endpoints excluded).

    Raises:
        ContractError: the tensor is not rank 1.
        ArgumentError: a path is not of length T or names an unknown operator.
    """
    if coefficients.L != 1:
        raise ContractError(f"replacement chains need a rank-1 tensor, got L={coefficients.L}")
    rank = coefficients.rank(0)
    for path in (rule_o, rule_s):
        if len(path) != coefficients.T:
            raise ArgumentError(f"path {tuple(path)} does not have length T={coefficients.T}")
        if any(not 0 <= k < coefficients.K for k in path):
            raise ArgumentError(f"path {tuple(path)} names an operator outside 0..{coefficients.K - 1}")

    rule_o, rule_s = tuple(rule_o), tuple(rule_s)
    if rule_o == rule_s:
        return []
    full = walk_to_best(rank, rule_o) + walk_to_best(rank, rule_s)[::-1][1:]
    return [ScoredPath(path, path_confidence(rank, path)) for path in full[1:-1]]
