"""Central finite-difference check of analytic gradients."""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import structlog

from .node import Node, ParameterSet, backward


logger = structlog.get_logger()


@dataclass
class GradCheckReport:
    """Per-parameter maximum relative error against finite differences."""
    tolerance: float
    step: float
    errors: dict[str, float] = field(default_factory=dict)

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance

    @property
    def worst_parameter(self) -> str | None:
        if not self.errors:
            return None
        return max(self.errors, key=self.errors.get)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lines = [f"{status} max_relative_error={self.max_error:.3e} tolerance={self.tolerance:.1e}"]
        for name, error in self.errors.items():
            lines.append(f"  {name}\t{error:.3e}")
        return "\n".join(lines)


def grad_check(
    function: Callable[[ParameterSet], Node],
    params: ParameterSet,
    step: float = 1e-5,
    tolerance: float = 1e-4,
    floor: float = 1e-5,
) -> GradCheckReport:
    """Compare backward() against central differences on every parameter entry.

    Args:
        function: Deterministic map from parameters to a scalar loss node;
            called once for the analytic pass and twice per entry.
        params: Parameters to perturb in place (restored afterwards).
        step: Finite-difference step.
        tolerance: Pass threshold on the maximum relative error.
        floor: Lower bound of the relative-error denominator, so entries with
            near-zero gradients are compared absolutely.

    Returns:
        GradCheckReport.
    """
    params.zero_grad()
    backward(function(params))
    analytic = params.gradients()

    report = GradCheckReport(tolerance=tolerance, step=step)
    for name, node in params.items():
        numeric = np.zeros_like(node.value)
        flat = node.value.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            plus = function(params).item()
            flat[i] = original - step
            minus = function(params).item()
            flat[i] = original
            numeric.reshape(-1)[i] = (plus - minus) / (2.0 * step)
        denominator = np.maximum(np.maximum(np.abs(analytic[name]), np.abs(numeric)), floor)
        report.errors[name] = float(np.max(np.abs(analytic[name] - numeric) / denominator, initial=0.0))

    params.zero_grad()
    logger.info("grad_check", passed=report.passed, max_error=report.max_error, parameters=len(params))
    return report
