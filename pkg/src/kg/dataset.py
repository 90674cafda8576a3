"""Benchmark dataset directories (facts/train/valid/test files)."""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import structlog

from .store import TripleStore, Vocabulary, augment_relations, load_triples


logger = structlog.get_logger()

SPLIT_FILES = ("facts", "train", "valid", "test")


@dataclass(frozen=True)
class Dataset:
    """All splits of one dataset, augmented under one vocabulary."""
    root: Path
    vocab: Vocabulary
    facts: TripleStore
    train: TripleStore
    valid: Optional[TripleStore] = None
    test: Optional[TripleStore] = None

    def graph(self) -> TripleStore:
        """facts ∪ train, the graph test queries are answered on."""
        return self.facts.union(self.train)

    def known_triples(self) -> list[TripleStore]:
        return [s for s in (self.facts, self.train, self.valid, self.test) if s is not None]

    def split(self, name: str) -> TripleStore:
        store = getattr(self, name, None)
        if store is None:
            raise FileNotFoundError(f"dataset {self.root} has no {name} split")
        return store


def resolve_dataset_dir(dataset: str | Path, data_dir: Optional[str | Path] = None) -> Path:
    """Accept a directory path or a dataset name under the data root."""
    candidate = Path(dataset)
    if candidate.is_dir():
        return candidate
    if data_dir is not None and (Path(data_dir) / str(dataset)).is_dir():
        return Path(data_dir) / str(dataset)
    raise FileNotFoundError(f"dataset not found: {dataset} (data root: {data_dir})")


def load_dataset(root: str | Path) -> Dataset:
    """Load a dataset directory.

    Files are read in the fixed order facts, train, valid, test so the
    vocabulary is reproducible. valid.txt and test.txt are optional.
    """
    root = Path(root)
    if not (root / "facts.txt").exists():
        raise FileNotFoundError(f"{root / 'facts.txt'} missing; run `prepare` on the raw training file first")

    vocab = Vocabulary()
    raw: dict[str, TripleStore] = {}
    for name in SPLIT_FILES:
        path = root / f"{name}.txt"
        if not path.exists():
            if name in ("facts", "train"):
                raise FileNotFoundError(f"required split file missing: {path}")
            continue
        raw[name], vocab = load_triples(path, vocab)

    augmented: dict[str, TripleStore] = {}
    augmented_vocab = vocab.augmented()
    for name, store in raw.items():
        augmented[name], augmented_vocab = augment_relations(store.resized(vocab), vocab)

    logger.info(
        "dataset_loaded",
        root=str(root),
        entities=augmented_vocab.entity_count,
        relations=len(augmented_vocab.original_relations()),
        **{name: len(store) for name, store in augmented.items()},
    )
    return Dataset(root=root, vocab=augmented_vocab, **augmented)
