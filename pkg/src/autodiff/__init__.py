from .node import Node, ParameterSet, backward, constant
from .ops import LOG_EPSILON, OpKind, apply
from .gradcheck import GradCheckReport, grad_check

__all__ = [
    "Node",
    "ParameterSet",
    "backward",
    "constant",
    "LOG_EPSILON",
    "OpKind",
    "apply",
    "GradCheckReport",
    "grad_check",
]
