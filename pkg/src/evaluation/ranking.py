"""Filtered ranking of link-prediction queries."""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional

import numpy as np
import structlog

from ..errors import ArgumentError
from ..kg.store import RelationKind, TripleStore, Vocabulary
from .metrics import Metrics


logger = structlog.get_logger()

Scorer = Callable[[int, int, int], np.ndarray]


class FilterIndex:
    """Known true tails for every (x, head) over the given stores."""

    def __init__(self, stores: Iterable[TripleStore]):
        tails: dict[tuple[int, int], set[int]] = {}
        for store in stores:
            for s, r, o in store.triples.tolist():
                tails.setdefault((s, r), set()).add(o)
        self._tails = {key: frozenset(value) for key, value in tails.items()}

    def known_tails(self, x: int, head: int) -> frozenset[int]:
        return self._tails.get((x, head), frozenset())

    def filtered(self, x: int, head: int, y: int) -> list[int]:
        """Known tails other than y, removed from contention when ranking y."""
        return [t for t in self.known_tails(x, head) if t != y]

    def __len__(self) -> int:
        return len(self._tails)


def rank_query(scores: np.ndarray, true_tail: int, filtered: Iterable[int] = ()) -> float:
    """1 + #strictly greater + #ties / 2 among entities still in contention."""
    scores = np.asarray(scores, dtype=np.float64)
    contention = np.ones(len(scores), dtype=bool)
    contention[list(filtered)] = False
    contention[true_tail] = False
    target = scores[true_tail]
    others = scores[contention]
    greater = int(np.count_nonzero(others > target))
    ties = int(np.count_nonzero(others == target))
    return 1.0 + greater + ties / 2.0


def evaluation_queries(store: TripleStore, vocab: Optional[Vocabulary] = None, tail_only: bool = False) -> np.ndarray:
    """Queries of an augmented store: every triple, or originals only for tail_only."""
    if not tail_only:
        return store.triples
    if vocab is None:
        raise ArgumentError("tail-only evaluation needs the vocabulary")
    original = np.array([kind == RelationKind.RELATION for kind in vocab.relation_kinds])
    return store.triples[original[store.triples[:, 1]]]


def evaluate(
    scorer: Scorer,
    test_store: TripleStore,
    filter_index: FilterIndex,
    vocab: Optional[Vocabulary] = None,
    tail_only: bool = False,
    threads: int = 1,
) -> Metrics:
    """Filtered MRR and Hits@k over the queries of an augmented test store.

    Each original triple contributes its tail query and, through its inverse
    triple, its head query.
    """
    queries = evaluation_queries(test_store, vocab, tail_only)
    if len(queries) == 0:
        raise ArgumentError("no evaluation queries")

    def rank(query) -> float:
        x, head, y = query
        return rank_query(scorer(x, head, y), y, filter_index.filtered(x, head, y))

    query_list = [tuple(q) for q in queries.tolist()]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            ranks = list(pool.map(rank, query_list))
    else:
        ranks = [rank(q) for q in query_list]

    metrics = Metrics.from_ranks(ranks)
    logger.info("evaluated", queries=metrics.query_count, mrr=round(metrics.mrr, 4), hits10=round(metrics.hits_at[10], 4))
    return metrics
