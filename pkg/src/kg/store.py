"""Triple stores, vocabularies and the triple/vocabulary file formats."""

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
import structlog

from ..errors import ParseError


logger = structlog.get_logger()

INVERSE_PREFIX = "inv_"
IDENTITY_NAME = "__identity__"


class RelationKind(str, Enum):
    """Role of a relation index in the vocabulary."""
    RELATION = "relation"
    INVERSE = "inverse"
    IDENTITY = "identity"


@dataclass(frozen=True)
class Vocabulary:
    """Bijective entity and relation name maps.

    After augmentation the relation layout is canonical: index 0 is the
    identity relation, 1..R are the original relations and R+1..2R their
    inverses, so a relation index doubles as its operator slot.
    """
    entities: tuple[str, ...] = ()
    relations: tuple[str, ...] = ()
    relation_kinds: tuple[RelationKind, ...] = ()
    _entity_index: dict = field(init=False, repr=False, compare=False)
    _relation_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.relations) != len(self.relation_kinds):
            raise ValueError("relations and relation_kinds differ in length")
        object.__setattr__(self, "_entity_index", {name: i for i, name in enumerate(self.entities)})
        object.__setattr__(self, "_relation_index", {name: i for i, name in enumerate(self.relations)})
        if len(self._entity_index) != len(self.entities):
            raise ValueError("duplicate entity names")
        if len(self._relation_index) != len(self.relations):
            raise ValueError("duplicate relation names")

    @property
    def entity_count(self) -> int:
        return len(self.entities)

    @property
    def relation_count(self) -> int:
        return len(self.relations)

    def entity_id(self, name: str) -> int:
        try:
            return self._entity_index[name]
        except KeyError:
            raise IndexError(f"unknown entity: {name}") from None

    def relation_id(self, name: str) -> int:
        try:
            return self._relation_index[name]
        except KeyError:
            raise IndexError(f"unknown relation: {name}") from None

    def has_relation(self, name: str) -> bool:
        return name in self._relation_index

    @property
    def is_augmented(self) -> bool:
        return RelationKind.IDENTITY in self.relation_kinds

    @property
    def identity_relation(self) -> Optional[int]:
        for i, kind in enumerate(self.relation_kinds):
            if kind == RelationKind.IDENTITY:
                return i
        return None

    def original_relations(self) -> list[int]:
        return [i for i, kind in enumerate(self.relation_kinds) if kind == RelationKind.RELATION]

    def inverse_of(self, relation: int) -> int:
        """Index of the inverse relation (the identity is its own inverse)."""
        kind = self.relation_kinds[relation]
        name = self.relations[relation]
        if kind == RelationKind.IDENTITY:
            return relation
        if kind == RelationKind.INVERSE:
            return self.relation_id(name[len(INVERSE_PREFIX):])
        return self.relation_id(INVERSE_PREFIX + name)

    def extend(self, entities: Iterable[str] = (), relations: Iterable[str] = ()) -> "Vocabulary":
        """Return a copy with unknown names appended."""
        new_entities = list(self.entities)
        seen = set(self.entities)
        for name in entities:
            if name not in seen:
                seen.add(name)
                new_entities.append(name)
        new_relations = list(self.relations)
        new_kinds = list(self.relation_kinds)
        seen = set(self.relations)
        for name in relations:
            if name not in seen:
                seen.add(name)
                new_relations.append(name)
                new_kinds.append(RelationKind.RELATION)
        return Vocabulary(tuple(new_entities), tuple(new_relations), tuple(new_kinds))

    def augmented(self) -> "Vocabulary":
        """Canonical vocabulary with identity and one inverse per original relation."""
        originals = [self.relations[i] for i in self.original_relations()]
        relations = [IDENTITY_NAME] + originals + [INVERSE_PREFIX + name for name in originals]
        kinds = (
            [RelationKind.IDENTITY]
            + [RelationKind.RELATION] * len(originals)
            + [RelationKind.INVERSE] * len(originals)
        )
        return Vocabulary(self.entities, tuple(relations), tuple(kinds))

    def dump_lines(self) -> list[str]:
        lines = [f"{i}\t{name}\tentity" for i, name in enumerate(self.entities)]
        lines += [
            f"{i}\t{name}\t{kind.value}"
            for i, (name, kind) in enumerate(zip(self.relations, self.relation_kinds))
        ]
        return lines

    def content_hash(self) -> str:
        return hashlib.sha256("\n".join(self.dump_lines()).encode("utf-8")).hexdigest()


@dataclass(frozen=True, eq=False)
class TripleStore:
    """Deduplicated integer triples (subject, relation, object)."""
    triples: np.ndarray
    entity_count: int
    relation_count: int
    identity_relation: Optional[int] = None

    def __post_init__(self):
        triples = np.asarray(self.triples, dtype=np.int64).reshape(-1, 3)
        triples.flags.writeable = False
        object.__setattr__(self, "triples", triples)
        if len(triples):
            if triples[:, [0, 2]].min() < 0 or triples[:, [0, 2]].max() >= self.entity_count:
                raise IndexError("entity id out of range")
            if triples[:, 1].min() < 0 or triples[:, 1].max() >= self.relation_count:
                raise IndexError("relation id out of range")

    def __len__(self) -> int:
        return len(self.triples)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TripleStore):
            return NotImplemented
        return (
            self.entity_count == other.entity_count
            and self.relation_count == other.relation_count
            and self.identity_relation == other.identity_relation
            and np.array_equal(self.triples, other.triples)
        )

    def __hash__(self):
        return hash((self.entity_count, self.relation_count, self.triples.tobytes()))

    def entities(self) -> set[int]:
        return set(np.unique(self.triples[:, [0, 2]]).tolist())

    def as_set(self) -> set[tuple[int, int, int]]:
        return set(map(tuple, self.triples.tolist()))

    def select(self, mask: np.ndarray) -> "TripleStore":
        return self.with_triples(self.triples[mask])

    def with_triples(self, triples: np.ndarray) -> "TripleStore":
        return TripleStore(triples, self.entity_count, self.relation_count, self.identity_relation)

    def union(self, *others: "TripleStore") -> "TripleStore":
        stacked = np.concatenate([self.triples] + [o.triples for o in others])
        entity_count = max([self.entity_count] + [o.entity_count for o in others])
        return TripleStore(_dedupe(stacked)[0], entity_count, self.relation_count, self.identity_relation)

    def resized(self, vocab: Vocabulary) -> "TripleStore":
        """Same triples, counts taken from a (possibly extended) vocabulary."""
        return TripleStore(self.triples, vocab.entity_count, vocab.relation_count, vocab.identity_relation)


def _dedupe(triples: np.ndarray) -> tuple[np.ndarray, int]:
    """Drop repeated rows keeping first occurrences in order."""
    if len(triples) == 0:
        return triples.reshape(0, 3), 0
    _, first = np.unique(triples, axis=0, return_index=True)
    keep = np.sort(first)
    return triples[keep], len(triples) - len(keep)


def load_triples(path: str | Path, vocab: Optional[Vocabulary] = None) -> tuple[TripleStore, Vocabulary]:
    """Load a `subject<TAB>relation<TAB>object` file.

    Args:
        path: UTF-8 triple file.
        vocab: Existing vocabulary; unknown names extend a copy of it.

    Returns:
        Deduplicated store and the (extended) vocabulary.
    """
    path = Path(path)
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError(
                    f"expected 3 tab-separated fields, got {len(fields)}",
                    path=str(path),
                    line_number=line_number,
                )
            rows.append(tuple(field_.strip() for field_ in fields))

    vocab = vocab or Vocabulary()
    vocab = vocab.extend(
        entities=(name for s, _, o in rows for name in (s, o)),
        relations=(r for _, r, _ in rows),
    )
    triples = np.array(
        [(vocab.entity_id(s), vocab.relation_id(r), vocab.entity_id(o)) for s, r, o in rows],
        dtype=np.int64,
    ).reshape(-1, 3)
    triples, duplicates = _dedupe(triples)
    if duplicates:
        logger.warning("duplicate_triples_dropped", path=str(path), duplicates=duplicates)
    logger.info("triples_loaded", path=str(path), triples=len(triples))
    store = TripleStore(triples, vocab.entity_count, vocab.relation_count, vocab.identity_relation)
    return store, vocab


def augment_relations(store: TripleStore, vocab: Vocabulary) -> tuple[TripleStore, Vocabulary]:
    """Add inverse triples and allocate the identity relation.

    Identity triples are never stored; its adjacency is synthesized from n.
    Calling this on an already augmented store is a no-op up to relabeling.
    """
    augmented = vocab.augmented()
    remap = np.array([augmented.relation_id(name) for name in vocab.relations], dtype=np.int64)
    triples = store.triples.copy()
    triples[:, 1] = remap[triples[:, 1]] if len(triples) else triples[:, 1]
    identity = augmented.identity_relation
    triples = triples[triples[:, 1] != identity]

    inverse_table = np.array(
        [augmented.inverse_of(r) for r in range(augmented.relation_count)], dtype=np.int64
    )
    inverses = np.stack([triples[:, 2], inverse_table[triples[:, 1]], triples[:, 0]], axis=1)
    combined, _ = _dedupe(np.concatenate([triples, inverses]))
    out = TripleStore(combined, augmented.entity_count, augmented.relation_count, identity)
    return out, augmented


def write_triples(store: TripleStore, vocab: Vocabulary, path: str | Path) -> None:
    """Write original-relation triples back to the TSV format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for s, r, o in store.triples.tolist():
            if vocab.relation_kinds[r] != RelationKind.RELATION:
                continue
            f.write(f"{vocab.entities[s]}\t{vocab.relations[r]}\t{vocab.entities[o]}\n")


def dump_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """Write the `index<TAB>name<TAB>kind` dump."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for line in vocab.dump_lines():
            f.write(line + "\n")


def load_vocabulary(path: str | Path) -> Vocabulary:
    """Read a dump written by dump_vocabulary."""
    path = Path(path)
    entities: dict[int, str] = {}
    relations: dict[int, tuple[str, RelationKind]] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError("expected index, name and kind", path=str(path), line_number=line_number)
            index, name, kind = fields
            try:
                index = int(index)
            except ValueError:
                raise ParseError(f"bad index {index!r}", path=str(path), line_number=line_number) from None
            if kind == "entity":
                entities[index] = name
            else:
                try:
                    relations[index] = (name, RelationKind(kind))
                except ValueError:
                    raise ParseError(f"unknown kind {kind!r}", path=str(path), line_number=line_number) from None

    if sorted(entities) != list(range(len(entities))) or sorted(relations) != list(range(len(relations))):
        raise ParseError("indices are not dense", path=str(path))
    return Vocabulary(
        tuple(entities[i] for i in range(len(entities))),
        tuple(relations[i][0] for i in range(len(relations))),
        tuple(relations[i][1] for i in range(len(relations))),
    )
