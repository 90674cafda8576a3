"""Sparse binary adjacency operators over a triple store."""

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional

import numpy as np
import scipy.sparse as sp

from ..errors import DimensionError
from .store import TripleStore, Vocabulary


@dataclass(frozen=True, eq=False)
class SparseAdjacency:
    """Binary n x n matrix stored as sorted (row, col) coordinates."""
    n: int
    rows: np.ndarray
    cols: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        if rows.shape != cols.shape:
            raise DimensionError("adjacency", rows.shape, cols.shape)
        if len(rows):
            keys = np.unique(rows * self.n + cols)
            rows, cols = keys // self.n, keys % self.n
            if rows.min() < 0 or cols.min() < 0 or max(rows.max(), cols.max()) >= self.n:
                raise IndexError("coordinate out of range")
        rows.flags.writeable = False
        cols.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)

    @classmethod
    def identity(cls, n: int) -> "SparseAdjacency":
        diagonal = np.arange(n, dtype=np.int64)
        return cls(n, diagonal, diagonal)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseAdjacency):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.rows, other.rows) and np.array_equal(self.cols, other.cols)

    def __hash__(self):
        return hash((self.n, self.rows.tobytes(), self.cols.tobytes()))

    @property
    def nnz(self) -> int:
        return len(self.rows)

    def entries(self) -> list[tuple[int, int]]:
        return list(zip(self.rows.tolist(), self.cols.tolist()))

    def has_edge(self, i: int, j: int) -> bool:
        key = i * self.n + j
        keys = self.rows * self.n + self.cols
        pos = np.searchsorted(keys, key)
        return bool(pos < len(keys) and keys[pos] == key)

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        data = np.ones(len(self.rows), dtype=np.float64)
        return sp.csr_matrix((data, (self.rows, self.cols)), shape=(self.n, self.n))

    @cached_property
    def _transposed(self) -> sp.csr_matrix:
        return self.matrix.T.tocsr()

    def transpose(self) -> "SparseAdjacency":
        return SparseAdjacency(self.n, self.cols, self.rows)

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def transpose_matvec(self, v: np.ndarray) -> np.ndarray:
        """Aᵀ·v."""
        if v.shape[0] != self.n:
            raise DimensionError("spmv-T", (self.n, self.n), v.shape)
        return self._transposed @ v

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """A·v, the adjoint of transpose_matvec."""
        if v.shape[0] != self.n:
            raise DimensionError("spmv", (self.n, self.n), v.shape)
        return self.matrix @ v


def build_adjacency(store: TripleStore, relation: int) -> SparseAdjacency:
    """Adjacency of one relation; the identity relation yields I_n."""
    if not 0 <= relation < store.relation_count:
        raise IndexError(f"relation id {relation} out of range 0..{store.relation_count - 1}")
    if relation == store.identity_relation:
        return SparseAdjacency.identity(store.entity_count)
    selected = store.triples[store.triples[:, 1] == relation]
    return SparseAdjacency(store.entity_count, selected[:, 0], selected[:, 2])


class OperatorSet:
    """Every relation's adjacency, indexed by relation id.

    The stacked matrix S holds A_kᵀ in block k, so one sparse product
    computes A_kᵀ·u for all k at once.
    """

    def __init__(self, adjacencies: list[SparseAdjacency], vocab: Optional[Vocabulary] = None):
        if not adjacencies:
            raise ValueError("operator set needs at least one adjacency")
        sizes = {a.n for a in adjacencies}
        if len(sizes) != 1:
            raise DimensionError("operator set", tuple(sorted(sizes)), (len(adjacencies),))
        self.adjacencies = tuple(adjacencies)
        self.n = adjacencies[0].n
        self.vocab = vocab
        self._stacked = sp.vstack([a.matrix.T for a in adjacencies]).tocsr()
        self._stacked_t = self._stacked.T.tocsr()

    def __len__(self) -> int:
        return len(self.adjacencies)

    def __getitem__(self, relation: int) -> SparseAdjacency:
        return self.adjacencies[relation]

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.adjacencies), self.n)

    def transpose_matvec(self, u: np.ndarray) -> np.ndarray:
        """Rows k of the result are A_kᵀ·u."""
        if u.shape != (self.n,):
            raise DimensionError("spmv-T", (len(self), self.n, self.n), u.shape)
        return (self._stacked @ u).reshape(len(self), self.n)

    def matvec(self, g: np.ndarray) -> np.ndarray:
        """Σ_k A_k·g[k], the adjoint of transpose_matvec."""
        if g.shape != self.shape:
            raise DimensionError("spmv", self.shape, g.shape)
        return self._stacked_t @ g.reshape(-1)

    def apply_transpose(self, relation: int, u: np.ndarray) -> np.ndarray:
        """A_relationᵀ·u for a single relation."""
        return self.adjacencies[relation].transpose_matvec(u)

    def transpose_matmat(self, u: np.ndarray) -> np.ndarray:
        """Batched transpose_matvec over the columns of u, shape (K, n, B)."""
        if u.ndim != 2 or u.shape[0] != self.n:
            raise DimensionError("spmm-T", (len(self), self.n, self.n), u.shape)
        return np.asarray(self._stacked @ u).reshape(len(self), self.n, u.shape[1])

    def masked(self, edges: Iterable[tuple[int, int, int]]) -> "MaskedOperatorSet":
        """View with the given (relation, i, j) edges removed where present."""
        present = tuple(
            (k, i, j) for k, i, j in dict.fromkeys(edges) if self.adjacencies[k].has_edge(i, j)
        )
        return MaskedOperatorSet(self, present)

    def mask_query(self, x: int, head: int, y: int) -> "MaskedOperatorSet":
        """Hide the query edge head(x, y) and its inverse."""
        if self.vocab is None:
            raise ValueError("masking a query needs the vocabulary")
        return self.masked([(head, x, y), (self.vocab.inverse_of(head), y, x)])


class MaskedOperatorSet:
    """An OperatorSet with a few edges subtracted on the fly."""

    def __init__(self, base: OperatorSet, edges: tuple[tuple[int, int, int], ...]):
        self.base = base
        self.edges = edges
        self.n = base.n
        self.vocab = base.vocab

    def __len__(self) -> int:
        return len(self.base)

    @property
    def shape(self) -> tuple[int, int]:
        return self.base.shape

    def transpose_matvec(self, u: np.ndarray) -> np.ndarray:
        out = self.base.transpose_matvec(u)
        for k, i, j in self.edges:
            out[k, j] -= u[i]
        return out

    def matvec(self, g: np.ndarray) -> np.ndarray:
        out = self.base.matvec(g)
        for k, i, j in self.edges:
            out[i] -= g[k, j]
        return out

    def apply_transpose(self, relation: int, u: np.ndarray) -> np.ndarray:
        out = self.base.apply_transpose(relation, u)
        for k, i, j in self.edges:
            if k == relation:
                out[j] -= u[i]
        return out

    def transpose_matmat(self, u: np.ndarray) -> np.ndarray:
        out = self.base.transpose_matmat(u)
        for k, i, j in self.edges:
            out[k, j, :] -= u[i, :]
        return out


def build_operators(store: TripleStore, vocab: Optional[Vocabulary] = None) -> OperatorSet:
    """Operators for every relation id of an augmented store."""
    return OperatorSet(
        [build_adjacency(store, relation) for relation in range(store.relation_count)],
        vocab=vocab,
    )
