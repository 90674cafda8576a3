"""Coefficient generation, propagation, loss and checkpoints."""

import struct

import numpy as np
import pytest

from conftest import one_hot_coefficients, one_hot_rank, small_model
from src.autodiff import Node
from src.config import ModelConfig
from src.errors import CheckpointError, ContractError
from src.kg import Vocabulary, build_operators, random_store
from src.model import (
    CoefficientTensor,
    DrumModel,
    load_checkpoint,
    normalized_nll,
    propagate,
    propagate_batch,
    save_checkpoint,
    verify_vocabulary,
)


def walk_counts(operators, path, x: int) -> np.ndarray:
    """Number of walks from x along the relation path, by explicit enumeration."""
    successors = [
        {i: [j for r, j in operators[k].entries() if r == i] for i in range(operators.n)}
        for k in range(len(operators))
    ]
    counts = np.zeros(operators.n)
    frontier = [x]
    for k in path:
        frontier = [j for i in frontier for j in successors[k][i]]
    for j in frontier:
        counts[j] += 1
    return counts


def random_coefficients(rng, L: int, T: int, K: int) -> CoefficientTensor:
    logits = rng.normal(size=(L, T, K))
    values = np.exp(logits)
    return CoefficientTensor(values / values.sum(axis=2, keepdims=True))


class TestGenerateCoefficients:

    def test_zero_output_layer_gives_uniform(self):
        model = small_model(5, T=2, L=3)
        model.params["output.W"].value[...] = 0.0
        model.params["output.b"].value[...] = 0.0
        np.testing.assert_allclose(model.coefficients(1).values, 0.2, atol=1e-15)

    def test_shape(self):
        model = small_model(25, T=3, L=4)
        assert model.coefficients(7).shape == (4, 3, 25)

    def test_normalized(self):
        model = small_model(9, T=3, L=2)
        for head in range(9):
            assert model.coefficients(head).is_normalized(atol=1e-12)

    def test_deterministic(self):
        first = small_model(5, seed=3).coefficients(2).values
        second = small_model(5, seed=3).coefficients(2).values
        assert first.tobytes() == second.tobytes()
        assert first.tobytes() == small_model(5, seed=3).coefficients(2).values.tobytes()

    def test_unknown_head(self):
        with pytest.raises(IndexError):
            small_model(5).coefficients(5)

    def test_defaults(self):
        config = ModelConfig(operator_count=5)
        assert (config.hidden_dim, config.embed_dim, config.epsilon_log) == (128, 128, 1e-10)


class TestScoreAllTails:

    def test_one_hot_chain(self, chain_graph):
        _, vocab, operators = chain_graph
        model = small_model(vocab.relation_count)
        coefficients = one_hot_coefficients([(1, 2)], 5).as_nodes()
        scores = model.score_all_tails(1, 0, operators, coefficients=coefficients)
        np.testing.assert_array_equal(scores.value, [0.0, 0.0, 1.0])

    def test_identity_path(self, chain_graph):
        _, _, operators = chain_graph
        scores = propagate(one_hot_coefficients([(0, 0)], 5).as_nodes(), 1, operators)
        np.testing.assert_array_equal(scores.value, [0.0, 1.0, 0.0])

    def test_two_equal_ranks_double(self, chain_graph):
        _, _, operators = chain_graph
        scores = propagate(one_hot_coefficients([(1, 2), (1, 2)], 5).as_nodes(), 0, operators)
        np.testing.assert_array_equal(scores.value, [0.0, 0.0, 2.0])

    def test_path_count_equivalence(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(2, 21))
            store, vocab = random_store(n, int(rng.integers(1, 5)), int(rng.integers(1, 3 * n)), rng)
            operators = build_operators(store, vocab)
            length = int(rng.integers(1, 4))
            path = tuple(int(k) for k in rng.integers(0, len(operators), size=length))
            x = int(rng.integers(n))
            scores = propagate(one_hot_coefficients([path], len(operators)).as_nodes(), x, operators)
            np.testing.assert_array_equal(scores.value, walk_counts(operators, path, x))

    def test_rank_additivity(self):
        rng = np.random.default_rng(1)
        store, vocab = random_store(12, 3, 30, rng)
        operators = build_operators(store, vocab)
        coefficients = random_coefficients(rng, 3, 2, len(operators))
        total = propagate_batch(coefficients, [0, 5], operators)
        parts = sum(
            propagate_batch(CoefficientTensor(coefficients.values[j:j + 1]), [0, 5], operators) for j in range(3)
        )
        np.testing.assert_allclose(total, parts, rtol=1e-12)

    def test_identity_absorption(self):
        rng = np.random.default_rng(2)
        store, vocab = random_store(10, 2, 25, rng)
        operators = build_operators(store, vocab)
        K = len(operators)
        coefficients = random_coefficients(rng, 2, 2, K)
        extended = np.concatenate([coefficients.values, np.tile(one_hot_rank((0,), K), (2, 1, 1))], axis=1)
        np.testing.assert_allclose(
            propagate_batch(CoefficientTensor(extended), [3], operators),
            propagate_batch(coefficients, [3], operators),
            rtol=1e-12,
        )

    def test_batch_matches_tape(self):
        rng = np.random.default_rng(3)
        store, vocab = random_store(10, 2, 25, rng)
        operators = build_operators(store, vocab)
        model = small_model(len(operators))
        for x in range(10):
            tape = model.score_all_tails(2, x, operators).value
            np.testing.assert_allclose(model.score_batch(2, [x], operators)[0], tape, rtol=1e-12)

    def test_scores_nonnegative(self):
        rng = np.random.default_rng(4)
        store, vocab = random_store(10, 2, 25, rng)
        operators = build_operators(store, vocab)
        assert np.all(small_model(len(operators)).score_batch(1, list(range(10)), operators) >= 0)

    def test_operator_count_mismatch(self, chain_graph):
        _, _, operators = chain_graph
        with pytest.raises(ContractError):
            small_model(7).score_all_tails(1, 0, operators)

    def test_entity_out_of_range(self, chain_graph):
        _, _, operators = chain_graph
        with pytest.raises(ContractError):
            small_model(5).query_loss(0, 1, 3, operators)


class TestLoss:

    def test_all_mass_on_true_tail(self):
        assert normalized_nll(Node(np.array([0.0, 0.0, 5.0])), 2, 1e-10).item() == pytest.approx(0.0, abs=1e-9)

    def test_uniform_scores(self):
        assert normalized_nll(Node(np.ones(7)), 3, 1e-10).item() == pytest.approx(np.log(7))

    def test_hand_set_scores(self):
        eps = 1e-10
        loss = normalized_nll(Node(np.array([1.0, 1.0, 0.0])), 0, eps).item()
        assert loss == pytest.approx(-np.log((1 + eps) / (2 + 3 * eps)), rel=1e-12)
        assert loss == pytest.approx(np.log(2))

    def test_disconnected_loss_finite(self, chain_graph):
        _, vocab, operators = chain_graph
        loss = small_model(vocab.relation_count).query_loss(2, 1, 0, operators)
        assert np.isfinite(loss.item())
        assert loss.item() >= 0.0


class TestCheckpoint:

    def test_round_trip_is_bit_identical(self, tmp_path, chain_graph):
        _, vocab, operators = chain_graph
        model = small_model(vocab.relation_count, T=2, L=3, seed=4)
        save_checkpoint(tmp_path / "m.ckpt", model, vocab)
        loaded, header = load_checkpoint(tmp_path / "m.ckpt")
        assert loaded.config == model.config
        assert header.relation_names == list(vocab.relations)
        verify_vocabulary(header, vocab)
        for name, value in model.params.values().items():
            assert loaded.params[name].value.tobytes() == value.tobytes()
        for head in range(vocab.relation_count):
            before = model.score_batch(head, [0, 1, 2], operators)
            after = loaded.score_batch(head, [0, 1, 2], operators)
            assert before.tobytes() == after.tobytes()

    def test_layout_prefix(self, tmp_path, chain_graph):
        _, vocab, _ = chain_graph
        save_checkpoint(tmp_path / "m.ckpt", small_model(vocab.relation_count), vocab)
        data = (tmp_path / "m.ckpt").read_bytes()
        assert data[:8] == b"DRUMCKPT"
        assert struct.unpack("<I", data[8:12]) == (1,)

    def test_saving_twice_is_byte_identical(self, tmp_path, chain_graph):
        _, vocab, _ = chain_graph
        save_checkpoint(tmp_path / "a.ckpt", small_model(vocab.relation_count, seed=1), vocab)
        save_checkpoint(tmp_path / "b.ckpt", small_model(vocab.relation_count, seed=1), vocab)
        assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()

    def test_bad_magic(self, tmp_path):
        (tmp_path / "bad.ckpt").write_bytes(b"NOTACKPT" + bytes(8))
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "bad.ckpt")

    def test_truncated(self, tmp_path, chain_graph):
        _, vocab, _ = chain_graph
        save_checkpoint(tmp_path / "m.ckpt", small_model(vocab.relation_count), vocab)
        data = (tmp_path / "m.ckpt").read_bytes()
        (tmp_path / "cut.ckpt").write_bytes(data[:-8])
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "cut.ckpt")

    def test_vocabulary_mismatch(self, tmp_path, chain_graph):
        _, vocab, _ = chain_graph
        save_checkpoint(tmp_path / "m.ckpt", small_model(vocab.relation_count), vocab)
        _, header = load_checkpoint(tmp_path / "m.ckpt")
        other = Vocabulary().extend(entities=["a", "b", "d"], relations=["r1", "r2"]).augmented()
        with pytest.raises(CheckpointError):
            verify_vocabulary(header, other)
