"""Link-prediction metrics."""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


HITS_AT = (1, 3, 10)


@dataclass(frozen=True)
class Metrics:
    mrr: float
    hits_at: dict[int, float] = field(default_factory=dict)
    query_count: int = 0

    @classmethod
    def from_ranks(cls, ranks: Sequence[float]) -> "Metrics":
        ranks = np.asarray(ranks, dtype=np.float64)
        if len(ranks) == 0:
            return cls(mrr=0.0, hits_at={k: 0.0 for k in HITS_AT}, query_count=0)
        return cls(
            mrr=float(np.mean(1.0 / ranks)),
            hits_at={k: float(np.mean(ranks <= k)) for k in HITS_AT},
            query_count=len(ranks),
        )

    def record_line(self) -> str:
        """Machine-readable `mrr=… hits1=… hits3=… hits10=… n=…`."""
        hits = " ".join(f"hits{k}={self.hits_at[k]:.6f}" for k in HITS_AT)
        return f"mrr={self.mrr:.6f} {hits} n={self.query_count}"

    def report(self, title: str = "metrics") -> str:
        lines = [title, f"  queries  {self.query_count}", f"  MRR      {self.mrr:.4f}"]
        lines += [f"  Hits@{k:<3d} {self.hits_at[k]:.4f}" for k in HITS_AT]
        return "\n".join(lines)


def format_metrics(metrics: dict[str, Metrics]) -> str:
    """Text report for several named metric sets."""
    return "\n".join(m.report(name) for name, m in metrics.items())
