"""The DRUM scorer: recurrent coefficient generation feeding a rank-L operator product."""

from typing import Optional, Sequence

import numpy as np
import structlog

from ..autodiff import Node, ParameterSet
from ..autodiff import ops
from ..config import ModelConfig
from ..errors import ContractError
from ..kg.adjacency import MaskedOperatorSet, OperatorSet
from .coefficients import CoefficientNodes, CoefficientTensor
from .lstm import LSTMCell


logger = structlog.get_logger()

Operators = OperatorSet | MaskedOperatorSet


def one_hot(n: int, i: int) -> np.ndarray:
    v = np.zeros(n)
    v[i] = 1.0
    return v


def _check_operators(operators: Operators, operator_count: int, *entities: int) -> None:
    if len(operators) != operator_count:
        raise ContractError(f"model expects {operator_count} operators, got {len(operators)}")
    for e in entities:
        if not 0 <= e < operators.n:
            raise ContractError(f"entity {e} outside operator dimension {operators.n}")


def propagate(coefficients: CoefficientNodes, x: int, operators: Operators) -> Node:
    """Scores v_xᵀ·Ω·v_y for every y.

    Per rank: u_0 = v_x, u_i = Σ_k a[i][k]·A_kᵀ·u_{i-1}; the ranks' u_T are summed.
    """
    start = Node(one_hot(operators.n, x))
    total: Optional[Node] = None
    for rank in coefficients:
        u = start
        for a in rank:
            u = ops.dot(a, ops.spmv_t(operators, u))
        total = u if total is None else ops.add(total, u)
    if total is None:
        return Node(np.zeros(operators.n))
    return total


def propagate_batch(coefficients: CoefficientTensor, xs: Sequence[int], operators: Operators) -> np.ndarray:
    """Gradient-free propagate for many start entities; returns (len(xs), n)."""
    u0 = np.zeros((operators.n, len(xs)))
    u0[np.asarray(xs, dtype=np.int64), np.arange(len(xs))] = 1.0
    total = np.zeros_like(u0)
    for rank in coefficients.values:
        u = u0
        for a in rank:
            u = np.einsum("k,knb->nb", a, operators.transpose_matmat(u))
        total += u
    return total.T


class DrumModel:
    """Head embeddings, L bidirectional LSTMs and a shared output layer f_θ."""

    def __init__(self, config: ModelConfig, params: Optional[ParameterSet] = None):
        self.config = config
        self.head_count = config.operator_count
        self.forward_cells = [
            LSTMCell(f"rnn.{j}.forward", config.embed_dim, config.hidden_dim) for j in range(config.L)
        ]
        self.backward_cells = [
            LSTMCell(f"rnn.{j}.backward", config.embed_dim, config.hidden_dim) for j in range(config.L)
        ]
        if params is None:
            params = self._init_params()
        self.params = params

    def _init_params(self) -> ParameterSet:
        rng = np.random.default_rng(self.config.seed)
        scale = self.config.init_scale
        params = ParameterSet()
        params.add("head_embeddings", rng.uniform(-scale, scale, size=(self.head_count, self.config.embed_dim)))
        for forward, backward in zip(self.forward_cells, self.backward_cells):
            forward.register(params, rng, scale)
            backward.register(params, rng, scale)
        params.add(
            "output.W",
            rng.uniform(-scale, scale, size=(self.config.operator_count, 2 * self.config.hidden_dim)),
        )
        params.add("output.b", np.zeros(self.config.operator_count))
        logger.info("model_initialized", parameters=params.size(), T=self.config.T, L=self.config.L)
        return params

    def generate_coefficients(self, head: int, params: Optional[ParameterSet] = None) -> CoefficientNodes:
        """a[j][i] = softmax(f_θ([h^(j)_i, h'^(j)_{T-i+1}])) as differentiable nodes."""
        params = self.params if params is None else params
        T = self.config.T
        embedding = ops.row(params["head_embeddings"], head)
        coefficients: CoefficientNodes = []
        for forward, backward in zip(self.forward_cells, self.backward_cells):
            h_forward = forward.unroll(params, embedding, T)
            h_backward = backward.unroll(params, embedding, T)
            rank = []
            for i in range(T):
                # h'_{T-i+1} with 1-based i is h_backward[T-1-i] with 0-based i
                features = ops.concat(h_forward[i], h_backward[T - 1 - i])
                logits = ops.affine(params["output.W"], features, params["output.b"])
                rank.append(ops.softmax(logits))
            coefficients.append(rank)
        return coefficients

    def coefficients(self, head: int) -> CoefficientTensor:
        return CoefficientTensor.from_nodes(self.generate_coefficients(head))

    def score_all_tails(
        self,
        head: int,
        x: int,
        operators: Operators,
        coefficients: Optional[CoefficientNodes] = None,
        params: Optional[ParameterSet] = None,
    ) -> Node:
        """Score vector over all entities for the query head(x, ?)."""
        _check_operators(operators, self.config.operator_count, x)
        if coefficients is None:
            coefficients = self.generate_coefficients(head, params)
        return propagate(coefficients, x, operators)

    def query_loss(
        self,
        x: int,
        head: int,
        y: int,
        operators: Operators,
        coefficients: Optional[CoefficientNodes] = None,
        params: Optional[ParameterSet] = None,
    ) -> Node:
        """−log((s_y + ε) / (Σ s + n·ε))."""
        _check_operators(operators, self.config.operator_count, x, y)
        scores = self.score_all_tails(head, x, operators, coefficients, params)
        return normalized_nll(scores, y, self.config.epsilon_log)

    def score_batch(self, head: int, xs: Sequence[int], operators: Operators) -> np.ndarray:
        """Gradient-free scores for many queries sharing one head; shape (len(xs), n)."""
        _check_operators(operators, self.config.operator_count, *xs)
        return propagate_batch(self.coefficients(head), xs, operators)


def normalized_nll(scores: Node, y: int, epsilon: float) -> Node:
    n = scores.shape[0]
    total = ops.add(ops.sum_(scores), Node(n * epsilon))
    target = ops.add(ops.index(scores, y), Node(epsilon))
    return ops.sub(ops.log(total, epsilon), ops.log(target, epsilon))
