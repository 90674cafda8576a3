from .store import (
    RelationKind,
    TripleStore,
    Vocabulary,
    augment_relations,
    dump_vocabulary,
    load_triples,
    load_vocabulary,
    write_triples,
)
from .adjacency import MaskedOperatorSet, OperatorSet, SparseAdjacency, build_adjacency, build_operators
from .splits import make_inductive_split, sample_test_subset, split_facts_train
from .dataset import Dataset, load_dataset, resolve_dataset_dir
from .synthetic import named_vocabulary, random_store, store_from_triples

__all__ = [
    "RelationKind",
    "TripleStore",
    "Vocabulary",
    "augment_relations",
    "dump_vocabulary",
    "load_triples",
    "load_vocabulary",
    "write_triples",
    "MaskedOperatorSet",
    "OperatorSet",
    "SparseAdjacency",
    "build_adjacency",
    "build_operators",
    "make_inductive_split",
    "sample_test_subset",
    "split_facts_train",
    "Dataset",
    "load_dataset",
    "resolve_dataset_dir",
    "named_vocabulary",
    "random_store",
    "store_from_triples",
]
