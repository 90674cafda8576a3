"""Transductive and inductive evaluation over a loaded dataset."""

from typing import Optional

import structlog

from ..kg.adjacency import OperatorSet, build_operators
from ..kg.dataset import Dataset
from ..kg.store import TripleStore
from ..model import DrumModel
from ..rules import RuleList
from .control import DistMultControl
from .metrics import Metrics
from .ranking import FilterIndex, Scorer, evaluate
from .scorers import DrumScorer, RuleScorer


logger = structlog.get_logger()


def graph_operators(dataset: Dataset) -> OperatorSet:
    """Operators over facts ∪ train; evaluated edges are never part of them."""
    return build_operators(dataset.graph(), dataset.vocab)


def evaluate_split(
    scorer: Scorer,
    dataset: Dataset,
    split: str = "test",
    tail_only: bool = False,
    threads: int = 1,
    filter_index: Optional[FilterIndex] = None,
) -> Metrics:
    if filter_index is None:
        filter_index = FilterIndex(dataset.known_triples())
    return evaluate(scorer, dataset.split(split), filter_index, dataset.vocab, tail_only, threads)


def validation_hook(dataset: Dataset, threads: int = 1):
    """Validation MRR of a model, for early stopping during training."""
    operators = graph_operators(dataset)
    filter_index = FilterIndex(dataset.known_triples())
    valid = dataset.split("valid")

    def hook(model: DrumModel) -> float:
        scorer = DrumScorer(model, operators)
        return evaluate(scorer, valid, filter_index, dataset.vocab, threads=threads).mrr

    return hook


def entity_overlap(train: TripleStore, test: TripleStore) -> set[int]:
    return train.entities() & test.entities()


def inductive_graph(dataset: Dataset) -> TripleStore:
    """Inductive train ∪ test; query edges are masked when scoring."""
    return dataset.graph().union(dataset.split("test"))


def evaluate_inductive(
    dataset: Dataset,
    rules: RuleList,
    model: Optional[DrumModel] = None,
    control: Optional[DistMultControl] = None,
    tail_only: bool = False,
    threads: int = 1,
) -> dict[str, Metrics]:
    """Score test queries whose entities were unseen in training.

    The rule-only number is the headline; the full model on the rebuilt
    graph and the embedding control are reported next to it.
    """
    overlap = entity_overlap(dataset.graph(), dataset.split("test"))
    if overlap:
        logger.warning("inductive_entity_overlap", entities=len(overlap))
    operators = build_operators(inductive_graph(dataset), dataset.vocab)
    filter_index = FilterIndex(dataset.known_triples())

    results = {
        "rules": evaluate_split(
            RuleScorer(rules, operators, mask_query=True), dataset, "test", tail_only, threads, filter_index
        )
    }
    if model is not None:
        results["model"] = evaluate_split(
            DrumScorer(model, operators, mask_query=True), dataset, "test", tail_only, threads, filter_index
        )
    if control is not None:
        results["control"] = evaluate_split(control, dataset, "test", tail_only, threads, filter_index)
    for name, metrics in results.items():
        logger.info("inductive_metrics", scorer=name, mrr=round(metrics.mrr, 4), hits10=round(metrics.hits_at[10], 4))
    return results
