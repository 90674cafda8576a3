"""Exception types raised across the rule miner."""

from typing import Optional


class DrumError(Exception):
    """Base class for all rule-miner errors."""


class ParseError(DrumError, ValueError):
    """Malformed input file."""

    def __init__(self, message: str, path: Optional[str] = None, line_number: Optional[int] = None):
        self.path = path
        self.line_number = line_number
        location = ""
        if path is not None:
            location = f"{path}:"
        if line_number is not None:
            location += f"{line_number}:"
        super().__init__(f"{location} {message}" if location else message)


class DimensionError(DrumError, ValueError):
    """Shapes of two operands do not fit together."""

    def __init__(self, op: str, left: tuple, right: tuple):
        self.op = op
        self.left = left
        self.right = right
        super().__init__(f"{op}: incompatible shapes {left} and {right}")


class ContractError(DrumError, RuntimeError):
    """A call contract was violated."""


class ArgumentError(DrumError, ValueError):
    """An argument value is out of range."""


class CheckpointError(DrumError, ValueError):
    """Checkpoint file is corrupt or does not match the data."""
