"""Filtered ranking, metrics, rule scoring and the inductive protocol."""

import numpy as np
import pytest
from structlog.testing import capture_logs

from conftest import small_model
from src.errors import ArgumentError
from src.evaluation import (
    DistMultControl,
    DrumScorer,
    FilterIndex,
    Metrics,
    RuleScorer,
    apply_rules,
    entity_overlap,
    evaluate,
    evaluate_inductive,
    rank_query,
)
from src.kg import Dataset, TripleStore, build_operators, named_vocabulary, random_store, store_from_triples
from src.rules import Rule, RuleList


def oracle_rank(scores, y, known) -> float:
    others = [e for e in range(len(scores)) if e != y and e not in known]
    optimistic = 1 + sum(scores[e] > scores[y] for e in others)
    pessimistic = 1 + sum(scores[e] >= scores[y] for e in others)
    return (optimistic + pessimistic) / 2


class TestRankQuery:

    def test_unfiltered(self):
        assert rank_query(np.array([0.9, 0.5, 0.7]), 1) == 3.0

    def test_filtered(self):
        assert rank_query(np.array([0.9, 0.5, 0.7]), 1, [0]) == 2.0

    def test_ties_take_the_mean(self):
        assert rank_query(np.array([0.5, 0.5, 0.1]), 0) == 1.5

    def test_filter_never_hurts(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            n = int(rng.integers(2, 15))
            scores = rng.integers(0, 4, size=n).astype(float)
            y = int(rng.integers(0, n))
            filtered = [int(e) for e in rng.choice(n, size=int(rng.integers(0, n)), replace=False)]
            assert rank_query(scores, y, filtered) <= rank_query(scores, y)


class TestMetrics:

    def test_single_perfect_query(self):
        metrics = Metrics.from_ranks([1.0])
        assert metrics.mrr == 1.0
        assert metrics.hits_at == {1: 1.0, 3: 1.0, 10: 1.0}
        assert metrics.query_count == 1

    def test_record_line(self):
        metrics = Metrics.from_ranks([1, 2, 4])
        assert metrics.record_line() == "mrr=0.583333 hits1=0.333333 hits3=0.666667 hits10=1.000000 n=3"

    def test_report_mentions_every_cutoff(self):
        report = Metrics.from_ranks([1, 20]).report("test")
        assert report.splitlines()[0] == "test"
        assert "Hits@10" in report


class TestEvaluate:

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            n = int(rng.integers(2, 16))
            store, vocab = random_store(n, int(rng.integers(1, 4)), int(rng.integers(1, 3 * n)), rng)
            table = {}

            def scorer(x, head, y):
                if (x, head) not in table:
                    table[(x, head)] = rng.integers(0, 4, size=n).astype(float)
                return table[(x, head)]

            metrics = evaluate(scorer, store, FilterIndex([store]), vocab)
            known = {}
            for s, r, o in store.triples.tolist():
                known.setdefault((s, r), set()).add(o)
            ranks = [oracle_rank(table[(s, r)], o, known[(s, r)]) for s, r, o in store.triples.tolist()]
            expected = Metrics.from_ranks(ranks)
            assert metrics.query_count == expected.query_count
            assert metrics.mrr == pytest.approx(expected.mrr, rel=1e-12)
            assert metrics.hits_at == expected.hits_at

    def test_perfect_scorer(self, chain_graph):
        store, vocab, _ = chain_graph
        metrics = evaluate(lambda x, head, y: np.eye(store.entity_count)[y], store, FilterIndex([store]), vocab)
        assert metrics.mrr == 1.0
        assert metrics.query_count == len(store)

    def test_tail_only_keeps_original_relations(self, chain_graph):
        store, vocab, _ = chain_graph
        scorer = lambda x, head, y: np.zeros(store.entity_count)
        metrics = evaluate(scorer, store, FilterIndex([store]), vocab, tail_only=True)
        assert metrics.query_count == 2
        with pytest.raises(ArgumentError):
            evaluate(scorer, store, FilterIndex([store]), tail_only=True)

    def test_threads_do_not_change_metrics(self, composition_graph):
        facts, train_store, vocab = composition_graph
        scorer = DrumScorer(small_model(vocab.relation_count), build_operators(facts, vocab))
        index = FilterIndex([facts, train_store])
        serial = evaluate(scorer, train_store, index, vocab)
        threaded = evaluate(scorer, train_store, index, vocab, threads=3)
        assert serial == threaded

    def test_empty_store(self, chain_graph):
        store, vocab, _ = chain_graph
        empty = TripleStore(np.zeros((0, 3)), store.entity_count, store.relation_count, 0)
        with pytest.raises(ArgumentError):
            evaluate(lambda x, head, y: np.zeros(3), empty, FilterIndex([store]), vocab)


class TestScorers:

    def test_drum_scorer_matches_model(self, composition_graph):
        facts, _, vocab = composition_graph
        operators = build_operators(facts, vocab)
        model = small_model(vocab.relation_count)
        scorer = DrumScorer(model, operators)
        expected = model.score_all_tails(3, 1, operators).value
        np.testing.assert_allclose(scorer(1, 3, 0), expected, rtol=1e-9, atol=1e-12)

    def test_single_atom_rule(self):
        raw = named_vocabulary(2, 1).extend(relations=["h"])
        store, vocab = store_from_triples([(0, 0, 1)], raw)
        rules = RuleList(("h", "r1"))
        rules.set_head(0, [Rule(0, (1,), 0.8)])
        scores = apply_rules(rules, build_operators(store, vocab), 0, vocab.relation_id("h"))
        np.testing.assert_allclose(scores, [0.0, 0.8])

    def test_rules_add_up(self):
        raw = named_vocabulary(3, 3).extend(relations=["h"])
        store, vocab = store_from_triples([(0, 0, 2), (0, 1, 1), (1, 2, 2)], raw)
        rules = RuleList(("h", "r1", "r2", "r3"))
        rules.set_head(0, [Rule(0, (1,), 0.8), Rule(0, (2, 3), 0.5)])
        scores = apply_rules(rules, build_operators(store, vocab), 0, vocab.relation_id("h"))
        assert scores[2] == pytest.approx(1.3)

    def test_entity_renaming(self):
        rng = np.random.default_rng(13)
        raw = named_vocabulary(8, 2)
        triples = np.stack([rng.integers(0, 8, 20), rng.integers(0, 2, 20), rng.integers(0, 8, 20)], axis=1)
        store, vocab = store_from_triples(triples, raw)
        rules = RuleList(vocab.relations)
        rules.set_head(1, [Rule(1, (2, 3), 0.6), Rule(1, (4,), 0.3), Rule(1, (1, 2, 1), 0.1)])

        perm = rng.permutation(8)
        renamed = triples.copy()
        renamed[:, 0], renamed[:, 2] = perm[triples[:, 0]], perm[triples[:, 2]]
        renamed_store, _ = store_from_triples(renamed, raw)

        for x in range(8):
            scores = apply_rules(rules, build_operators(store, vocab), x, 1)
            renamed_scores = apply_rules(rules, build_operators(renamed_store, vocab), int(perm[x]), 1)
            np.testing.assert_allclose(renamed_scores[perm], scores)

    def test_missing_relation_scores_zero_and_warns_once(self, chain_graph):
        _, vocab, operators = chain_graph
        rules = RuleList(("r1", "r9", "r2"))
        rules.set_head(0, [Rule(0, (1,), 0.9), Rule(0, (1, 2), 0.5), Rule(0, (2,), 0.25)])
        scorer = RuleScorer(rules, operators)
        with capture_logs() as logs:
            first = scorer(1, vocab.relation_id("r1"))
            scorer(0, vocab.relation_id("r1"))
        np.testing.assert_allclose(first, [0.0, 0.0, 0.25])
        assert [entry["event"] for entry in logs if entry["log_level"] == "warning"] == ["rule_relation_missing"]

    def test_inverse_head_uses_reversed_rules(self):
        raw = named_vocabulary(5, 2).extend(relations=["h"])
        facts, vocab = store_from_triples([(0, 0, 1), (1, 1, 2), (2, 0, 3), (3, 1, 4)], raw)
        test, _ = store_from_triples([(0, 2, 2), (2, 2, 4)], raw)
        rules = RuleList(("h", "r1", "r2"))
        rules.set_head(0, [Rule(0, (1, 2), 1.0)])
        scorer = RuleScorer(rules, build_operators(facts, vocab))
        np.testing.assert_allclose(scorer(2, vocab.relation_id("inv_h")), [1.0, 0.0, 0.0, 0.0, 0.0])
        metrics = evaluate(scorer, test, FilterIndex([facts, test]), vocab)
        assert metrics.query_count == 4
        assert metrics.mrr == 1.0

    def test_own_inverse_rules_take_precedence(self, chain_graph):
        _, vocab, operators = chain_graph
        rules = RuleList(vocab.relations)
        rules.set_head(1, [Rule(1, (2,), 0.5)])
        rules.set_head(3, [Rule(3, (3,), 0.75)])
        # inv_r1 from b follows its own rule inv_r1(b, a)
        np.testing.assert_allclose(RuleScorer(rules, operators)(1, 3), [0.75, 0.0, 0.0])

    def test_masked_rule_scorer(self):
        raw = named_vocabulary(2, 1)
        store, vocab = store_from_triples([(0, 0, 1)], raw)
        rules = RuleList(vocab.relations)
        rules.set_head(1, [Rule(1, (1,), 1.0)])
        operators = build_operators(store, vocab)
        assert RuleScorer(rules, operators)(0, 1, 1)[1] == 1.0
        assert RuleScorer(rules, operators, mask_query=True)(0, 1, 1)[1] == 0.0

    def test_rule_scorer_needs_vocabulary(self, chain_graph):
        store, _, _ = chain_graph
        with pytest.raises(ArgumentError):
            RuleScorer(RuleList(("r1",)), build_operators(store))


@pytest.fixture
def inductive_dataset(tmp_path):
    """Training side on entities 0..4, test side on the unseen entities 5..8."""
    raw = named_vocabulary(9, 2).extend(relations=["h"])
    facts, vocab = store_from_triples([(0, 0, 1), (1, 1, 2), (3, 0, 4), (4, 1, 0)], raw)
    train, _ = store_from_triples([(0, 2, 2), (3, 2, 0)], raw)
    test, _ = store_from_triples([(5, 0, 6), (6, 1, 7), (5, 2, 7)], raw)
    return Dataset(root=tmp_path, vocab=vocab, facts=facts, train=train, test=test)


class TestInductive:

    def test_unseen_entities(self, inductive_dataset):
        assert entity_overlap(inductive_dataset.graph(), inductive_dataset.test) == set()

    def test_rules_transfer_to_new_entities(self, inductive_dataset):
        vocab = inductive_dataset.vocab
        rules = RuleList(vocab.relations)
        h = vocab.relation_id("h")
        rules.set_head(h, [Rule(h, (vocab.relation_id("r1"), vocab.relation_id("r2")), 1.0)])
        results = evaluate_inductive(inductive_dataset, rules, tail_only=True)
        assert set(results) == {"rules"}
        # the h query ranks first; r1 and r2 queries tie with all 8 candidates
        assert results["rules"].mrr == pytest.approx((1 + 0.2 + 0.2) / 3)
        assert results["rules"].query_count == 3

    def test_rules_answer_both_directions(self, inductive_dataset):
        vocab = inductive_dataset.vocab
        rules = RuleList(vocab.relations)
        h = vocab.relation_id("h")
        rules.set_head(h, [Rule(h, (vocab.relation_id("r1"), vocab.relation_id("r2")), 1.0)])
        results = evaluate_inductive(inductive_dataset, rules)
        # h and inv_h rank first; the four r1/r2 queries tie with all 8 candidates
        assert results["rules"].query_count == 6
        assert results["rules"].mrr == pytest.approx((2 + 4 * 0.2) / 6)
        assert results["rules"].hits_at[1] == pytest.approx(2 / 6)

    def test_model_and_control(self, inductive_dataset):
        vocab = inductive_dataset.vocab
        control = DistMultControl(vocab.entity_count, vocab.relation_count, dim=4)
        losses = control.fit(inductive_dataset.graph(), epochs=3, batch_size=4)
        assert len(losses) == 3 and all(np.isfinite(losses))
        results = evaluate_inductive(
            inductive_dataset,
            RuleList(vocab.relations),
            model=small_model(vocab.relation_count),
            control=control,
        )
        assert set(results) == {"rules", "model", "control"}
        for metrics in results.values():
            assert 0.0 < metrics.mrr <= 1.0
            assert metrics.query_count == 6


class TestDistMultControl:

    def test_training_lowers_loss(self, composition_graph):
        facts, train_store, vocab = composition_graph
        control = DistMultControl(vocab.entity_count, vocab.relation_count, dim=8, seed=1)
        losses = control.fit(train_store, epochs=30, learning_rate=0.05)
        assert losses[-1] < losses[0]

    def test_scores_every_entity(self, composition_graph):
        _, _, vocab = composition_graph
        control = DistMultControl(vocab.entity_count, vocab.relation_count, dim=4)
        scores = control(0, 3)
        assert scores.shape == (vocab.entity_count,)
        assert np.all(np.isfinite(scores))
