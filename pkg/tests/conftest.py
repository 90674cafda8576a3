"""Shared fixtures: small graphs and model factories."""

from pathlib import Path

import numpy as np
import pytest
import structlog

from src.config import ModelConfig
from src.kg import build_operators, named_vocabulary, store_from_triples
from src.kg.store import Vocabulary
from src.model import CoefficientTensor, DrumModel


def write_lines(path: Path, lines) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


def one_hot_rank(path, operator_count: int) -> np.ndarray:
    """(T, K) slice that is one-hot on the given operator path."""
    rank = np.zeros((len(path), operator_count))
    rank[np.arange(len(path)), list(path)] = 1.0
    return rank


def one_hot_coefficients(paths, operator_count: int) -> CoefficientTensor:
    return CoefficientTensor(np.stack([one_hot_rank(p, operator_count) for p in paths]))


@pytest.fixture(autouse=True)
def reset_logging():
    """main() binds structlog to the current stderr; undo it after each test."""
    yield
    structlog.reset_defaults()


@pytest.fixture
def chain_graph():
    """r1(a, b), r2(b, c) with a=0, b=1, c=2.

    Relation ids after augmentation: 0 identity, 1 r1, 2 r2, 3 inv_r1, 4 inv_r2.
    """
    vocab = Vocabulary().extend(entities=["a", "b", "c"], relations=["r1", "r2"])
    store, augmented = store_from_triples([(0, 0, 1), (1, 1, 2)], vocab)
    return store, augmented, build_operators(store, augmented)


@pytest.fixture
def composition_graph():
    """Toy KG where h(x, y) holds exactly when r1(x, z) and r2(z, y).

    Raw relations: r1 = 0, r2 = 1, h = 2 (augmented ids 1, 2, 3). Returns the
    facts store (r1, r2 edges), the train store (h edges) and the vocabulary.
    """
    vocab = named_vocabulary(5, 2).extend(relations=["h"])
    r1 = [(0, 0, 1), (1, 0, 2), (3, 0, 4)]
    r2 = [(1, 1, 3), (2, 1, 0), (4, 1, 2)]
    heads = [(0, 2, 3), (1, 2, 0), (3, 2, 2)]
    facts, augmented = store_from_triples(r1 + r2, vocab)
    train, _ = store_from_triples(heads, vocab)
    return facts, train, augmented


def small_model(operator_count: int, T: int = 2, L: int = 2, dim: int = 4, seed: int = 0) -> DrumModel:
    return DrumModel(ModelConfig(T=T, L=L, hidden_dim=dim, embed_dim=dim, operator_count=operator_count, seed=seed))
