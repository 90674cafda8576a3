"""Differentiable operations over vectors and matrices.

Every op evaluates eagerly. If any input requires a gradient the result
records its parents and a closure that pushes the output gradient back.
"""

from enum import Enum
from typing import Callable, Protocol

import numpy as np
from scipy.special import expit

from ..errors import DimensionError
from .node import Node, constant


LOG_EPSILON = 1e-10


class OpKind(str, Enum):
    ADD = "add"
    SUB = "sub"
    SCALE = "scale"
    MUL = "mul"
    DOT = "dot"
    AFFINE = "affine"
    CONCAT = "concat"
    SLICE = "slice"
    INDEX = "index"
    ROW = "row"
    SUM = "sum"
    SIGMOID = "sigmoid"
    TANH = "tanh"
    SOFTMAX = "softmax"
    LOG = "log"
    SPMV_T = "spmv_t"


class TransposeOperator(Protocol):
    """A constant linear map u -> Aᵀu with its adjoint g -> A·g."""

    def transpose_matvec(self, u: np.ndarray) -> np.ndarray: ...

    def matvec(self, g: np.ndarray) -> np.ndarray: ...


def _result(value: np.ndarray, op: OpKind, parents: tuple[Node, ...], backward_fn: Callable) -> Node:
    requires_grad = any(p.requires_grad for p in parents)
    if not requires_grad:
        return Node(value, op=op.value)
    return Node(value, requires_grad=True, op=op.value, parents=parents, backward_fn=backward_fn)


def _same_or_scalar(op: OpKind, a: Node, b: Node) -> None:
    if a.shape != b.shape and a.shape != () and b.shape != ():
        raise DimensionError(op.value, a.shape, b.shape)


def _reduce_to(gradient: np.ndarray, shape: tuple) -> np.ndarray:
    return gradient.sum() if shape == () and gradient.shape != () else gradient


def add(a, b) -> Node:
    a, b = constant(a), constant(b)
    _same_or_scalar(OpKind.ADD, a, b)

    def backward_fn(g):
        a.accumulate(_reduce_to(g, a.shape))
        b.accumulate(_reduce_to(g, b.shape))

    return _result(a.value + b.value, OpKind.ADD, (a, b), backward_fn)


def sub(a, b) -> Node:
    a, b = constant(a), constant(b)
    _same_or_scalar(OpKind.SUB, a, b)

    def backward_fn(g):
        a.accumulate(_reduce_to(g, a.shape))
        b.accumulate(-_reduce_to(g, b.shape))

    return _result(a.value - b.value, OpKind.SUB, (a, b), backward_fn)


def scale(s, a) -> Node:
    """Multiply a tensor by a scalar node."""
    s, a = constant(s), constant(a)
    if s.shape != ():
        raise DimensionError(OpKind.SCALE.value, s.shape, a.shape)

    def backward_fn(g):
        s.accumulate(np.sum(g * a.value))
        a.accumulate(s.value * g)

    return _result(s.value * a.value, OpKind.SCALE, (s, a), backward_fn)


def mul(a, b) -> Node:
    a, b = constant(a), constant(b)
    if a.shape != b.shape:
        raise DimensionError(OpKind.MUL.value, a.shape, b.shape)

    def backward_fn(g):
        a.accumulate(g * b.value)
        b.accumulate(g * a.value)

    return _result(a.value * b.value, OpKind.MUL, (a, b), backward_fn)


def dot(a, b) -> Node:
    """Vector·vector → scalar, or vector·matrix (k,)·(k, n) → (n,)."""
    a, b = constant(a), constant(b)
    if a.value.ndim != 1 or b.value.ndim not in (1, 2) or a.shape[0] != b.shape[0]:
        raise DimensionError(OpKind.DOT.value, a.shape, b.shape)

    def backward_fn(g):
        if b.value.ndim == 1:
            a.accumulate(g * b.value)
            b.accumulate(g * a.value)
        else:
            a.accumulate(b.value @ g)
            b.accumulate(np.outer(a.value, g))

    return _result(np.dot(a.value, b.value), OpKind.DOT, (a, b), backward_fn)


def affine(w, x, b=None) -> Node:
    """W·x + b for W (m, k), x (k,), b (m,)."""
    w, x = constant(w), constant(x)
    if w.value.ndim != 2 or x.value.ndim != 1 or w.shape[1] != x.shape[0]:
        raise DimensionError(OpKind.AFFINE.value, w.shape, x.shape)
    value = w.value @ x.value
    parents = (w, x)
    if b is not None:
        b = constant(b)
        if b.shape != (w.shape[0],):
            raise DimensionError(OpKind.AFFINE.value, w.shape, b.shape)
        value = value + b.value
        parents = (w, x, b)

    def backward_fn(g):
        w.accumulate(np.outer(g, x.value))
        x.accumulate(w.value.T @ g)
        if b is not None:
            b.accumulate(g)

    return _result(value, OpKind.AFFINE, parents, backward_fn)


def concat(*nodes) -> Node:
    nodes = tuple(constant(n) for n in nodes)
    for n in nodes:
        if n.value.ndim != 1:
            raise DimensionError(OpKind.CONCAT.value, nodes[0].shape, n.shape)
    bounds = np.cumsum([0] + [n.shape[0] for n in nodes])

    def backward_fn(g):
        for n, lo, hi in zip(nodes, bounds[:-1], bounds[1:]):
            n.accumulate(g[lo:hi])

    return _result(np.concatenate([n.value for n in nodes]), OpKind.CONCAT, nodes, backward_fn)


def slice_(a, start: int, stop: int) -> Node:
    a = constant(a)
    if a.value.ndim != 1 or not 0 <= start <= stop <= a.shape[0]:
        raise DimensionError(OpKind.SLICE.value, a.shape, (start, stop))

    def backward_fn(g):
        full = np.zeros_like(a.value)
        full[start:stop] = g
        a.accumulate(full)

    return _result(a.value[start:stop], OpKind.SLICE, (a,), backward_fn)


def index(a, i: int) -> Node:
    """Select one element of a vector as a scalar."""
    a = constant(a)
    if a.value.ndim != 1:
        raise DimensionError(OpKind.INDEX.value, a.shape, ())
    if not -a.shape[0] <= i < a.shape[0]:
        raise IndexError(f"index {i} out of range for shape {a.shape}")

    def backward_fn(g):
        full = np.zeros_like(a.value)
        full[i] = g
        a.accumulate(full)

    return _result(a.value[i].copy(), OpKind.INDEX, (a,), backward_fn)


def row(m, i: int) -> Node:
    """Select row i of a matrix, e.g. an embedding lookup."""
    m = constant(m)
    if m.value.ndim != 2:
        raise DimensionError(OpKind.ROW.value, m.shape, ())
    if not 0 <= i < m.shape[0]:
        raise IndexError(f"row {i} out of range for shape {m.shape}")

    def backward_fn(g):
        full = np.zeros_like(m.value)
        full[i] = g
        m.accumulate(full)

    return _result(m.value[i].copy(), OpKind.ROW, (m,), backward_fn)


def sum_(a) -> Node:
    a = constant(a)

    def backward_fn(g):
        a.accumulate(np.full_like(a.value, g))

    return _result(np.sum(a.value), OpKind.SUM, (a,), backward_fn)


def sigmoid(a) -> Node:
    a = constant(a)
    value = expit(a.value)

    def backward_fn(g):
        a.accumulate(g * value * (1.0 - value))

    return _result(value, OpKind.SIGMOID, (a,), backward_fn)


def tanh(a) -> Node:
    a = constant(a)
    value = np.tanh(a.value)

    def backward_fn(g):
        a.accumulate(g * (1.0 - value * value))

    return _result(value, OpKind.TANH, (a,), backward_fn)


def softmax(a) -> Node:
    a = constant(a)
    if a.value.ndim != 1:
        raise DimensionError(OpKind.SOFTMAX.value, a.shape, ())
    shifted = np.exp(a.value - np.max(a.value))
    value = shifted / shifted.sum()

    def backward_fn(g):
        a.accumulate(value * (g - np.dot(g, value)))

    return _result(value, OpKind.SOFTMAX, (a,), backward_fn)


def log(a, epsilon: float = LOG_EPSILON) -> Node:
    """log(max(a, epsilon)); no gradient flows where the guard is active."""
    a = constant(a)
    guarded = np.maximum(a.value, epsilon)

    def backward_fn(g):
        a.accumulate(np.where(a.value > epsilon, g / guarded, 0.0))

    return _result(np.log(guarded), OpKind.LOG, (a,), backward_fn)


def spmv_t(operator: TransposeOperator, u) -> Node:
    """Aᵀ·u for a constant sparse operator; no gradient reaches the operator."""
    u = constant(u)
    if u.value.ndim != 1:
        raise DimensionError(OpKind.SPMV_T.value, getattr(operator, "shape", ()), u.shape)

    def backward_fn(g):
        u.accumulate(operator.matvec(g))

    return _result(operator.transpose_matvec(u.value), OpKind.SPMV_T, (u,), backward_fn)


_DISPATCH: dict[OpKind, Callable[..., Node]] = {
    OpKind.ADD: add,
    OpKind.SUB: sub,
    OpKind.SCALE: scale,
    OpKind.MUL: mul,
    OpKind.DOT: dot,
    OpKind.AFFINE: affine,
    OpKind.CONCAT: concat,
    OpKind.SLICE: slice_,
    OpKind.INDEX: index,
    OpKind.ROW: row,
    OpKind.SUM: sum_,
    OpKind.SIGMOID: sigmoid,
    OpKind.TANH: tanh,
    OpKind.SOFTMAX: softmax,
    OpKind.LOG: log,
    OpKind.SPMV_T: spmv_t,
}


def apply(kind: OpKind | str, *inputs, **kwargs) -> Node:
    """Run the op named by kind, e.g. apply("spmv_t", adjacency, v)."""
    return _DISPATCH[OpKind(kind)](*inputs, **kwargs)
