"""DistMult entity-embedding baseline for the inductive comparison.

Every entity owns an embedding, so entities never seen in training keep
their random initial vectors and score essentially at random.
"""

from typing import Optional

import numpy as np
import structlog

from ..autodiff import Node, ParameterSet, backward
from ..autodiff import ops
from ..errors import ArgumentError
from ..kg.store import TripleStore
from ..training.optim import AdamState, adam_step, clip_gradients


logger = structlog.get_logger()


class DistMultControl:
    """score(x, r, y) = Σ_d e_x[d]·w_r[d]·e_y[d], trained with softmax over tails."""

    def __init__(self, entity_count: int, relation_count: int, dim: int = 32, seed: int = 0, init_scale: float = 0.1):
        rng = np.random.default_rng(seed)
        self.params = ParameterSet()
        self.params.add("entities", rng.uniform(-init_scale, init_scale, size=(entity_count, dim)))
        self.params.add("relations", rng.uniform(-init_scale, init_scale, size=(relation_count, dim)))
        self.seed = seed

    def _logits(self, x: int, head: int, params: Optional[ParameterSet] = None) -> Node:
        params = self.params if params is None else params
        query = ops.mul(ops.row(params["entities"], x), ops.row(params["relations"], head))
        return ops.affine(params["entities"], query)

    def query_loss(self, x: int, head: int, y: int) -> Node:
        probabilities = ops.softmax(self._logits(x, head))
        return ops.scale(-1.0, ops.log(ops.index(probabilities, y)))

    def fit(
        self,
        store: TripleStore,
        epochs: int = 20,
        learning_rate: float = 0.01,
        batch_size: int = 64,
        clip_norm: float = 5.0,
    ) -> list[float]:
        """Train on an augmented store; returns the mean loss per epoch."""
        if len(store) == 0:
            raise ArgumentError("control training store is empty")
        rng = np.random.default_rng(self.seed)
        state = AdamState.for_params(self.params)
        losses = []
        for epoch in range(1, epochs + 1):
            queries = store.triples[rng.permutation(len(store))]
            total = 0.0
            for start in range(0, len(queries), batch_size):
                batch = queries[start:start + batch_size]
                self.params.zero_grad()
                loss = None
                for x, head, y in batch.tolist():
                    term = self.query_loss(x, head, y)
                    loss = term if loss is None else ops.add(loss, term)
                loss = ops.scale(1.0 / len(batch), loss)
                backward(loss)
                grads, _ = clip_gradients(self.params.gradients(), clip_norm)
                adam_step(self.params, grads, state, learning_rate)
                total += loss.item() * len(batch)
            losses.append(total / len(queries))
            logger.info("control_epoch_finished", epoch=epoch, mean_loss=round(losses[-1], 6))
        self.params.zero_grad()
        return losses

    def __call__(self, x: int, head: int, y: Optional[int] = None) -> np.ndarray:
        entities = self.params["entities"].value
        relations = self.params["relations"].value
        return entities @ (entities[x] * relations[head])
