"""Binary checkpoints for DrumModel.

Layout (all integers little-endian):

    offset 0   8 bytes   magic b"DRUMCKPT"
    offset 8   u32       format version (currently 1)
    offset 12  u32       header length H in bytes
    offset 16  H bytes   UTF-8 JSON header (CheckpointHeader)
    offset 16+H          arrays, in header.arrays order, each the raw
                         little-endian float64 ('<f8') C-order bytes of
                         prod(shape) values

The header records the ModelConfig, the relation names and kinds the head
embeddings are indexed by, the entity count and the vocabulary content hash.
"""

import struct
from pathlib import Path

import numpy as np
import structlog
from pydantic import BaseModel

from ..autodiff import ParameterSet
from ..config import ModelConfig
from ..errors import CheckpointError
from ..kg.store import RelationKind, Vocabulary
from .drum import DrumModel


logger = structlog.get_logger()

MAGIC = b"DRUMCKPT"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sII")


class ArraySpec(BaseModel):
    name: str
    shape: list[int]


class CheckpointHeader(BaseModel):
    """JSON header of a checkpoint file."""
    model: ModelConfig
    relation_names: list[str]
    relation_kinds: list[RelationKind]
    entity_count: int
    vocab_hash: str
    arrays: list[ArraySpec]

    def relation_vocabulary(self) -> Vocabulary:
        """Relation-only vocabulary (no entity names) for rule formatting."""
        return Vocabulary((), tuple(self.relation_names), tuple(self.relation_kinds))


def save_checkpoint(path: str | Path, model: DrumModel, vocab: Vocabulary) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = model.params.values()
    header = CheckpointHeader(
        model=model.config,
        relation_names=list(vocab.relations),
        relation_kinds=list(vocab.relation_kinds),
        entity_count=vocab.entity_count,
        vocab_hash=vocab.content_hash(),
        arrays=[ArraySpec(name=name, shape=list(value.shape)) for name, value in values.items()],
    )
    header_bytes = header.model_dump_json().encode("utf-8")
    with open(path, "wb") as f:
        f.write(_PREFIX.pack(MAGIC, FORMAT_VERSION, len(header_bytes)))
        f.write(header_bytes)
        for value in values.values():
            f.write(np.ascontiguousarray(value, dtype="<f8").tobytes())
    logger.info("checkpoint_written", path=str(path), arrays=len(values))


def load_checkpoint(path: str | Path) -> tuple[DrumModel, CheckpointHeader]:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _PREFIX.size:
        raise CheckpointError(f"{path}: file too short")
    magic, version, header_len = _PREFIX.unpack_from(data, 0)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    offset = _PREFIX.size
    header = CheckpointHeader.model_validate_json(data[offset:offset + header_len].decode("utf-8"))
    offset += header_len

    params = ParameterSet()
    for spec in header.arrays:
        count = int(np.prod(spec.shape, dtype=np.int64))
        end = offset + 8 * count
        if end > len(data):
            raise CheckpointError(f"{path}: truncated at array {spec.name}")
        value = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(spec.shape)
        params.add(spec.name, value.astype(np.float64))
        offset = end
    if offset != len(data):
        raise CheckpointError(f"{path}: {len(data) - offset} trailing bytes")

    model = DrumModel(header.model, params=params)
    logger.info("checkpoint_loaded", path=str(path), T=header.model.T, L=header.model.L)
    return model, header


def verify_vocabulary(header: CheckpointHeader, vocab: Vocabulary) -> None:
    if header.vocab_hash != vocab.content_hash():
        raise CheckpointError("checkpoint was trained on a different vocabulary")
