"""Mini-batch training of DrumModel."""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import structlog

from ..autodiff import Node, ParameterSet, backward
from ..autodiff import ops
from ..config import TrainConfig
from ..errors import ArgumentError
from ..kg.adjacency import OperatorSet
from ..kg.store import TripleStore
from ..model import DrumModel
from .optim import AdamState, adam_step, clip_gradients


logger = structlog.get_logger()

ValidationHook = Callable[[DrumModel], float]


@dataclass
class EpochRecord:
    epoch: int
    mean_loss: float
    val_mrr: Optional[float]
    seconds: float
    grad_norm: float = 0.0

    def log_line(self) -> str:
        val = "-" if self.val_mrr is None else f"{self.val_mrr:.6f}"
        return f"{self.epoch}\t{self.mean_loss:.6f}\t{val}\t{self.seconds:.3f}"


@dataclass
class TrainingResult:
    model: DrumModel
    history: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False

    @property
    def losses(self) -> list[float]:
        return [record.mean_loss for record in self.history]


def _batch_loss_sum(
    model: DrumModel,
    params: ParameterSet,
    queries: np.ndarray,
    operators: OperatorSet,
) -> Node:
    """Sum of query losses; coefficients are generated once per head."""
    by_head: dict[int, list] = {}
    total: Optional[Node] = None
    for x, head, y in queries.tolist():
        if head not in by_head:
            by_head[head] = model.generate_coefficients(head, params)
        loss = model.query_loss(x, head, y, operators, coefficients=by_head[head], params=params)
        total = loss if total is None else ops.add(total, loss)
    return total


def _chunk_gradients(
    model: DrumModel,
    queries: np.ndarray,
    operators: OperatorSet,
) -> tuple[dict[str, np.ndarray], float]:
    params = model.params.fork()
    loss = _batch_loss_sum(model, params, queries, operators)
    backward(loss)
    return params.gradients(), loss.item()


def _batch_gradients(
    model: DrumModel,
    queries: np.ndarray,
    operators: OperatorSet,
    config: TrainConfig,
    pool: Optional[ThreadPoolExecutor],
) -> tuple[dict[str, np.ndarray], float]:
    """Mean-loss gradients of one batch and its summed loss."""
    if pool is None:
        model.params.zero_grad()
        loss = _batch_loss_sum(model, model.params, queries, operators)
        backward(loss)
        grads, loss_sum = model.params.gradients(), loss.item()
    else:
        chunks = [c for c in np.array_split(queries, config.threads) if len(c)]
        results = list(pool.map(lambda chunk: _chunk_gradients(model, chunk, operators), chunks))
        # reduce in chunk order
        grads = {name: np.zeros_like(node.value) for name, node in model.params.items()}
        loss_sum = 0.0
        for chunk_grads, chunk_loss in results:
            for name, g in chunk_grads.items():
                grads[name] += g
            loss_sum += chunk_loss
    count = float(len(queries))
    return {name: g / count for name, g in grads.items()}, loss_sum


def train(
    model: DrumModel,
    train_store: TripleStore,
    operators: OperatorSet,
    config: TrainConfig,
    validation: Optional[ValidationHook] = None,
    log_path: Optional[str | Path] = None,
) -> TrainingResult:
    """Optimize the model on the queries of an augmented training store.

    Args:
        model: Model to train; its parameters are updated in place.
        train_store: Supervision triples (both directions once augmented),
            disjoint from the facts the operators were built from.
        operators: Operators over the facts graph.
        config: Optimizer and schedule settings.
        validation: Optional hook returning validation MRR; enables early
            stopping and restoring the best parameters.
        log_path: Where to write the tab-separated epoch log.

    Returns:
        TrainingResult with the per-epoch history.
    """
    if len(train_store) == 0:
        raise ArgumentError("training store is empty")

    rng = np.random.default_rng(config.seed)
    state = AdamState.for_params(model.params, config.beta1, config.beta2, config.adam_epsilon)
    result = TrainingResult(model=model)
    best_mrr = -np.inf
    best_values: Optional[dict[str, np.ndarray]] = None
    stale = 0

    log_file = None
    if log_path is not None:
        Path(log_path).parent.mkdir(parents=True, exist_ok=True)
        log_file = open(log_path, "w", encoding="utf-8", newline="\n")

    pool = ThreadPoolExecutor(max_workers=config.threads) if config.parallel_batch and config.threads > 1 else None
    logger.info(
        "training_started",
        queries=len(train_store),
        batch_size=config.batch_size,
        max_epochs=config.max_epochs,
        parallel=pool is not None,
    )
    try:
        for epoch in range(1, config.max_epochs + 1):
            started = time.perf_counter()
            order = rng.permutation(len(train_store))
            queries = train_store.triples[order]
            loss_total = 0.0
            max_norm = 0.0
            for start in range(0, len(queries), config.batch_size):
                batch = queries[start:start + config.batch_size]
                grads, loss_sum = _batch_gradients(model, batch, operators, config, pool)
                grads, norm = clip_gradients(grads, config.clip_norm)
                adam_step(model.params, grads, state, config.learning_rate)
                model.params.zero_grad()
                loss_total += loss_sum
                max_norm = max(max_norm, norm)

            val_mrr = validation(model) if validation is not None else None
            record = EpochRecord(
                epoch=epoch,
                mean_loss=loss_total / len(queries),
                val_mrr=val_mrr,
                seconds=time.perf_counter() - started,
                grad_norm=max_norm,
            )
            result.history.append(record)
            if log_file is not None:
                log_file.write(record.log_line() + "\n")
                log_file.flush()
            logger.info(
                "epoch_finished",
                epoch=epoch,
                mean_loss=round(record.mean_loss, 6),
                val_mrr=val_mrr,
                max_grad_norm=round(max_norm, 4),
                seconds=round(record.seconds, 2),
            )

            if val_mrr is None:
                result.best_epoch = epoch
                continue
            if val_mrr > best_mrr:
                best_mrr = val_mrr
                best_values = model.params.snapshot()
                result.best_epoch = epoch
                stale = 0
            else:
                stale += 1
                if stale >= config.patience:
                    result.stopped_early = True
                    logger.info("early_stop", epoch=epoch, best_epoch=result.best_epoch, best_mrr=best_mrr)
                    break
    finally:
        if pool is not None:
            pool.shutdown()
        if log_file is not None:
            log_file.close()

    if best_values is not None:
        model.params.load(best_values)
    logger.info("training_finished", epochs=len(result.history), best_epoch=result.best_epoch)
    return result
