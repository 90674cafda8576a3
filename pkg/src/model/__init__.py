from .coefficients import CoefficientNodes, CoefficientTensor
from .lstm import LSTMCell
from .drum import DrumModel, normalized_nll, one_hot, propagate, propagate_batch
from .checkpoint import CheckpointHeader, load_checkpoint, save_checkpoint, verify_vocabulary

__all__ = [
    "CoefficientNodes",
    "CoefficientTensor",
    "LSTMCell",
    "DrumModel",
    "normalized_nll",
    "one_hot",
    "propagate",
    "propagate_batch",
    "CheckpointHeader",
    "load_checkpoint",
    "save_checkpoint",
    "verify_vocabulary",
]
