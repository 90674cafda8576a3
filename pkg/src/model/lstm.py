"""Gated recurrent cell built from autodiff ops."""

import numpy as np

from ..autodiff import Node, ParameterSet
from ..autodiff import ops


GATES = ("i", "f", "o", "c")


class LSTMCell:
    """Standard LSTM cell.

    i, f, o = sigmoid(W_g·[x, h] + b_g), c̃ = tanh(W_c·[x, h] + b_c),
    c' = f*c + i*c̃, h' = o*tanh(c'). Weights live in a ParameterSet under
    `<prefix>.W_<gate>` / `<prefix>.b_<gate>`.
    """

    def __init__(self, prefix: str, input_dim: int, hidden_dim: int):
        self.prefix = prefix
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim

    def register(self, params: ParameterSet, rng: np.random.Generator, init_scale: float) -> None:
        for gate in GATES:
            params.add(
                f"{self.prefix}.W_{gate}",
                rng.uniform(-init_scale, init_scale, size=(self.hidden_dim, self.input_dim + self.hidden_dim)),
            )
            params.add(f"{self.prefix}.b_{gate}", np.zeros(self.hidden_dim))

    def zero_state(self) -> tuple[Node, Node]:
        return Node(np.zeros(self.hidden_dim)), Node(np.zeros(self.hidden_dim))

    def step(self, params: ParameterSet, x: Node, h: Node, c: Node) -> tuple[Node, Node]:
        xh = ops.concat(x, h)

        def gate(name: str) -> Node:
            return ops.affine(params[f"{self.prefix}.W_{name}"], xh, params[f"{self.prefix}.b_{name}"])

        i = ops.sigmoid(gate("i"))
        f = ops.sigmoid(gate("f"))
        o = ops.sigmoid(gate("o"))
        candidate = ops.tanh(gate("c"))
        c_next = ops.add(ops.mul(f, c), ops.mul(i, candidate))
        h_next = ops.mul(o, ops.tanh(c_next))
        return h_next, c_next

    def unroll(self, params: ParameterSet, x: Node, steps: int) -> list[Node]:
        """Hidden states h_1..h_steps, feeding the same input at every step."""
        h, c = self.zero_state()
        hidden = []
        for _ in range(steps):
            h, c = self.step(params, x, h, c)
            hidden.append(h)
        return hidden
