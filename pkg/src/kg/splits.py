"""Facts/train partitioning and the inductive split."""

import math

import numpy as np
import structlog

from ..errors import ArgumentError
from .store import TripleStore


logger = structlog.get_logger()


def split_facts_train(store: TripleStore, ratio: float = 3.0, seed: int = 0) -> tuple[TripleStore, TripleStore]:
    """Partition triples into graph facts and supervision queries.

    Args:
        store: Store to split; must not be augmented yet so that a triple and
            its inverse always land on the same side.
        ratio: facts:train ratio, e.g. 3.0 for 3:1.
        seed: Shuffle seed.

    Returns:
        (facts, train), disjoint and covering the store.
    """
    if not (math.isfinite(ratio) and ratio > 0):
        raise ArgumentError(f"ratio must be a positive finite number, got {ratio}")
    if len(store) == 0:
        raise ArgumentError("cannot split an empty store")
    if store.identity_relation is not None:
        raise ArgumentError("split the store before augmenting it with inverse relations")

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(store))
    facts_count = int(round(len(store) * ratio / (ratio + 1.0)))
    facts = store.with_triples(store.triples[np.sort(order[:facts_count])])
    train = store.with_triples(store.triples[np.sort(order[facts_count:])])

    logger.info("facts_train_split", ratio=ratio, seed=seed, facts=len(facts), train=len(train))
    return facts, train


def make_inductive_split(train: TripleStore, test: TripleStore) -> TripleStore:
    """Drop every training triple that touches an entity of the test store."""
    test_entities = np.fromiter(test.entities(), dtype=np.int64)
    touches = np.isin(train.triples[:, 0], test_entities) | np.isin(train.triples[:, 2], test_entities)
    kept = train.select(~touches)
    logger.info(
        "inductive_split",
        train_before=len(train),
        train_after=len(kept),
        test_entities=len(test_entities),
    )
    return kept


def sample_test_subset(test: TripleStore, size: int, seed: int = 0) -> TripleStore:
    """Seeded random subset of test triples, kept in file order."""
    if size < 0:
        raise ArgumentError(f"sample size must be nonnegative, got {size}")
    if size >= len(test):
        return test
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(len(test), size=size, replace=False))
    return test.with_triples(test.triples[chosen])
