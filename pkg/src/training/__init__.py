from .optim import AdamState, adam_step, clip_gradients, global_norm
from .trainer import EpochRecord, TrainingResult, ValidationHook, train

__all__ = [
    "AdamState",
    "adam_step",
    "clip_gradients",
    "global_norm",
    "EpochRecord",
    "TrainingResult",
    "ValidationHook",
    "train",
]
