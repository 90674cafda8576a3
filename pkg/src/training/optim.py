"""Gradient clipping and the Adam update."""

from dataclasses import dataclass, field

import numpy as np

from ..autodiff import ParameterSet
from ..errors import ContractError


def global_norm(grads: dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_gradients(grads: dict[str, np.ndarray], clip_norm: float) -> tuple[dict[str, np.ndarray], float]:
    """Rescale all gradients together when their global L2 norm exceeds clip_norm.

    Returns:
        (clipped gradients, global norm before clipping).
    """
    norm = global_norm(grads)
    if norm <= clip_norm or norm == 0.0:
        return grads, norm
    factor = clip_norm / norm
    return {name: g * factor for name, g in grads.items()}, norm


@dataclass
class AdamState:
    """First and second moments per parameter plus the step counter."""
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params: ParameterSet, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8) -> "AdamState":
        return cls(
            m={name: np.zeros_like(node.value) for name, node in params.items()},
            v={name: np.zeros_like(node.value) for name, node in params.items()},
            beta1=beta1,
            beta2=beta2,
            epsilon=epsilon,
        )


def adam_step(params: ParameterSet, grads: dict[str, np.ndarray], state: AdamState, lr: float) -> AdamState:
    """One bias-corrected Adam update, applied to params in place."""
    for name, node in params.items():
        if name not in grads or name not in state.m:
            raise ContractError(f"no gradient or optimizer state for {name}")
        if grads[name].shape != node.value.shape or state.m[name].shape != node.value.shape:
            raise ContractError(
                f"{name}: parameter {node.value.shape}, gradient {grads[name].shape}, state {state.m[name].shape}"
            )

    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t
    for name, node in params.items():
        g = grads[name]
        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * g * g
        m_hat = state.m[name] / correction1
        v_hat = state.v[name] / correction2
        node.value -= lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return state
