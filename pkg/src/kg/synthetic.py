"""Small random graphs for gradient checks and tests."""

import numpy as np

from .store import TripleStore, Vocabulary, augment_relations


def named_vocabulary(entity_count: int, relation_count: int) -> Vocabulary:
    """Raw vocabulary with entities e0.. and relations r1.."""
    return Vocabulary().extend(
        entities=(f"e{i}" for i in range(entity_count)),
        relations=(f"r{i}" for i in range(1, relation_count + 1)),
    )


def store_from_triples(triples, vocab: Vocabulary) -> tuple[TripleStore, Vocabulary]:
    """Augmented store from raw (subject, relation, object) id triples."""
    raw = TripleStore(np.asarray(triples, dtype=np.int64).reshape(-1, 3), vocab.entity_count, vocab.relation_count)
    return augment_relations(raw, vocab)


def random_store(
    entity_count: int,
    relation_count: int,
    edge_count: int,
    rng: np.random.Generator,
) -> tuple[TripleStore, Vocabulary]:
    """Augmented store of up to edge_count random raw triples."""
    vocab = named_vocabulary(entity_count, relation_count)
    triples = np.stack(
        [
            rng.integers(0, entity_count, size=edge_count),
            rng.integers(0, relation_count, size=edge_count),
            rng.integers(0, entity_count, size=edge_count),
        ],
        axis=1,
    )
    return store_from_triples(triples, vocab)
