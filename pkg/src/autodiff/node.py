"""Tape nodes, trainable parameter sets and reverse-mode backward."""

from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from ..errors import ContractError


BackwardFn = Callable[[np.ndarray], None]


class Node:
    """A float64 value recorded on the tape together with how it was made.

    Leaves with requires_grad=True are parameters. Non-leaf nodes keep their
    parents and a backward closure until the graph is differentiated once.
    """

    def __init__(
        self,
        value,
        requires_grad: bool = False,
        op: str = "const",
        parents: Sequence["Node"] = (),
        backward_fn: Optional[BackwardFn] = None,
        name: Optional[str] = None,
    ):
        self.value = np.asarray(value, dtype=np.float64)
        self.requires_grad = requires_grad
        self.op = op
        self.parents = tuple(parents)
        self.backward_fn = backward_fn
        self.name = name
        self.grad: Optional[np.ndarray] = None
        self.released = False

    @property
    def shape(self) -> tuple:
        return self.value.shape

    @property
    def is_leaf(self) -> bool:
        return not self.parents

    def accumulate(self, gradient: np.ndarray) -> None:
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        self.grad += gradient

    def zero_grad(self) -> None:
        self.grad = None

    def item(self) -> float:
        return float(self.value)

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        label = self.name or self.op
        return f"Node({label}, shape={self.shape}, requires_grad={self.requires_grad})"


def constant(value) -> Node:
    return value if isinstance(value, Node) else Node(value)


def _topological_order(root: Node) -> list[Node]:
    order: list[Node] = []
    visited: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Node) -> None:
    """Populate .grad on every trainable leaf reachable from a scalar loss.

    Gradients accumulate additively; the graph is released afterwards, so a
    second backward through the same graph raises ContractError.
    """
    if loss.value.shape != ():
        raise ContractError(f"backward needs a scalar loss, got shape {loss.value.shape}")
    if loss.released:
        raise ContractError("graph already differentiated; double backward is not supported")
    if not loss.requires_grad:
        return

    order = _topological_order(loss)
    loss.accumulate(np.ones_like(loss.value))
    for node in reversed(order):
        if node.backward_fn is not None and node.grad is not None:
            node.backward_fn(node.grad)

    for node in order:
        if not node.is_leaf:
            node.released = True
            node.backward_fn = None
            node.parents = ()
            node.grad = None


class ParameterSet:
    """Named trainable leaves."""

    def __init__(self):
        self._params: dict[str, Node] = {}

    def add(self, name: str, value: np.ndarray) -> Node:
        if name in self._params:
            raise ValueError(f"duplicate parameter name: {name}")
        node = Node(np.array(value, dtype=np.float64), requires_grad=True, op="param", name=name)
        self._params[name] = node
        return node

    def __getitem__(self, name: str) -> Node:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def items(self) -> Iterator[tuple[str, Node]]:
        return iter(self._params.items())

    def names(self) -> list[str]:
        return list(self._params)

    def size(self) -> int:
        return sum(node.value.size for node in self._params.values())

    def zero_grad(self) -> None:
        for node in self._params.values():
            node.zero_grad()

    def gradients(self) -> dict[str, np.ndarray]:
        """Gradient per parameter; unused parameters get zeros."""
        return {
            name: node.grad.copy() if node.grad is not None else np.zeros_like(node.value)
            for name, node in self._params.items()
        }

    def values(self) -> dict[str, np.ndarray]:
        return {name: node.value for name, node in self._params.items()}

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: node.value.copy() for name, node in self._params.items()}

    def load(self, values: dict[str, np.ndarray]) -> None:
        """Overwrite values in place; names and shapes must match."""
        if set(values) != set(self._params):
            missing = set(self._params) ^ set(values)
            raise ContractError(f"parameter names differ: {sorted(missing)}")
        for name, node in self._params.items():
            value = np.asarray(values[name], dtype=np.float64)
            if value.shape != node.value.shape:
                raise ContractError(f"{name}: shape {value.shape} != {node.value.shape}")
            node.value[...] = value

    def fork(self) -> "ParameterSet":
        """Leaves sharing this set's values but with private gradients."""
        forked = ParameterSet()
        for name, node in self._params.items():
            forked._params[name] = Node(node.value, requires_grad=True, op="param", name=name)
            forked._params[name].value = node.value
        return forked
