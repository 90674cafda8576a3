"""Reverse-mode differentiation: ops, backward and finite-difference checks."""

import numpy as np
import pytest

from conftest import small_model
from src.autodiff import Node, ParameterSet, apply, backward, grad_check
from src.autodiff import ops
from src.errors import ContractError, DimensionError
from src.kg import SparseAdjacency, build_operators, random_store


class TestOps:

    def test_spmv_t_identity(self):
        v = np.array([0.3, -1.0, 2.0])
        out = apply("spmv_t", SparseAdjacency.identity(3), Node(v))
        np.testing.assert_array_equal(out.value, v)

    def test_softmax_of_zeros(self):
        np.testing.assert_allclose(ops.softmax(np.zeros(4)).value, [0.25] * 4)

    def test_softmax_large_logits_finite(self):
        value = ops.softmax(np.array([1000.0, 0.0, -1000.0])).value
        assert np.all(np.isfinite(value))
        assert value.sum() == pytest.approx(1.0)

    def test_path_product_on_chain(self, chain_graph):
        _, _, operators = chain_graph
        v_a = Node(np.array([1.0, 0.0, 0.0]))
        v_c = np.array([0.0, 0.0, 1.0])
        reached = ops.spmv_t(operators[2], ops.spmv_t(operators[1], v_a))
        assert ops.dot(reached, v_c).item() == 1.0

    def test_shape_mismatch_names_both_shapes(self):
        with pytest.raises(DimensionError) as info:
            ops.add(np.ones(3), np.ones(4))
        assert info.value.left == (3,)
        assert info.value.right == (4,)

    def test_guarded_log(self):
        assert ops.log(0.0).item() == pytest.approx(np.log(1e-10))
        assert np.isfinite(ops.log(np.zeros(3)).value).all()

    def test_constants_record_no_parents(self):
        out = ops.add(np.ones(2), np.ones(2))
        assert out.parents == ()
        assert not out.requires_grad


class TestBackward:

    def test_linear(self):
        params = ParameterSet()
        p = params.add("p", np.array([1.0, 2.0, 3.0]))
        c = np.array([0.5, -1.0, 4.0])
        backward(ops.dot(p, c))
        np.testing.assert_array_equal(p.grad, c)

    def test_unused_parameter_gets_zeros(self):
        params = ParameterSet()
        p = params.add("p", np.ones(2))
        params.add("q", np.ones(3))
        backward(ops.sum_(p))
        np.testing.assert_array_equal(params.gradients()["q"], np.zeros(3))

    def test_reuse_accumulates(self):
        params = ParameterSet()
        p = params.add("p", np.array(3.0))
        backward(ops.mul(p, p))
        assert p.grad == pytest.approx(6.0)

    def test_non_scalar_loss(self):
        params = ParameterSet()
        p = params.add("p", np.ones(2))
        with pytest.raises(ContractError):
            backward(ops.scale(2.0, p))

    def test_double_backward(self):
        params = ParameterSet()
        p = params.add("p", np.ones(2))
        loss = ops.sum_(ops.mul(p, p))
        backward(loss)
        with pytest.raises(ContractError):
            backward(loss)

    def test_linearity_of_add_and_scale(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            params = ParameterSet()
            a = params.add("a", rng.normal(size=4))
            b = params.add("b", rng.normal(size=4))
            s = params.add("s", np.array(rng.normal()))
            c = rng.normal(size=4)
            backward(ops.dot(ops.add(ops.scale(s, a), b), c))
            np.testing.assert_allclose(a.grad, s.value * c)
            np.testing.assert_allclose(b.grad, c)
            assert s.grad == pytest.approx(np.dot(a.value, c))

    def test_spmv_t_gradient_matches_dense(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            store, vocab = random_store(15, 2, 30, rng)
            adjacency = build_operators(store, vocab)[1]
            params = ParameterSet()
            x = params.add("x", rng.normal(size=15))
            u = rng.normal(size=15)
            backward(ops.dot(ops.spmv_t(adjacency, x), u))
            np.testing.assert_allclose(x.grad, adjacency.to_dense() @ u)

    def test_fork_keeps_gradients_private(self):
        params = ParameterSet()
        p = params.add("p", np.array([1.0, 2.0]))
        forked = params.fork()
        backward(ops.sum_(forked["p"]))
        assert p.grad is None
        np.testing.assert_array_equal(forked["p"].grad, [1.0, 1.0])
        p.value[0] = 5.0
        assert forked["p"].value[0] == 5.0


class TestGradCheck:

    def test_quadratic(self):
        params = ParameterSet()
        params.add("p", np.array([0.3, -1.2, 2.0]))
        report = grad_check(lambda ps: ops.dot(ps["p"], ps["p"]), params, tolerance=1e-6)
        assert report.passed

    def test_random_composite(self):
        rng = np.random.default_rng(2)
        params = ParameterSet()
        params.add("w", rng.normal(size=(3, 2)))
        params.add("x", rng.normal(size=2))
        params.add("b", rng.normal(size=3))

        def f(ps):
            hidden = ops.tanh(ops.affine(ps["w"], ps["x"], ps["b"]))
            gated = ops.mul(ops.sigmoid(hidden), ops.softmax(hidden))
            first = ops.slice_(hidden, 0, 1)
            return ops.log(ops.sum_(ops.concat(gated, ops.mul(first, first))))

        assert grad_check(f, params).passed

    def test_corrupted_backward_fails(self):
        params = ParameterSet()
        params.add("p", np.array([0.5, 1.5]))

        def broken_square(ps):
            p = ps["p"]

            def wrong(g):
                p.accumulate(g * 3.0 * p.value)

            return ops.sum_(Node(p.value * p.value, requires_grad=True, op="mul", parents=(p,), backward_fn=wrong))

        report = grad_check(broken_square, params)
        assert not report.passed
        assert report.worst_parameter == "p"

    def test_drum_loss_on_toy_graph(self):
        store, vocab = random_store(4, 2, 6, np.random.default_rng(3))
        operators = build_operators(store, vocab)
        model = small_model(vocab.relation_count, T=2, L=2, dim=3)
        queries = store.triples[:2].tolist()

        def loss(ps):
            total = None
            for x, head, y in queries:
                term = model.query_loss(x, head, y, operators, params=ps)
                total = term if total is None else ops.add(total, term)
            return total

        report = grad_check(loss, model.params)
        assert report.passed, report.summary()
