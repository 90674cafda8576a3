"""The rule-selection coefficient tensor a[j][i][k]."""

from dataclasses import dataclass

import numpy as np

from ..autodiff import Node
from ..errors import DimensionError


CoefficientNodes = list[list[Node]]


@dataclass(frozen=True, eq=False)
class CoefficientTensor:
    """Coefficients of shape L x T x K; k = 0 is the identity operator."""
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise DimensionError("coefficients", values.shape, ("L", "T", "K"))
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def L(self) -> int:
        return self.values.shape[0]

    @property
    def T(self) -> int:
        return self.values.shape[1]

    @property
    def K(self) -> int:
        return self.values.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    def rank(self, j: int) -> np.ndarray:
        return self.values[j]

    def is_normalized(self, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.values.sum(axis=2), 1.0, rtol=0.0, atol=atol))

    def as_nodes(self) -> CoefficientNodes:
        return [[Node(step) for step in rank] for rank in self.values]

    @classmethod
    def from_nodes(cls, nodes: CoefficientNodes) -> "CoefficientTensor":
        return cls(np.array([[step.value for step in rank] for rank in nodes], dtype=np.float64))
