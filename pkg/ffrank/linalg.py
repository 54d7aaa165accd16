# Copyright © 2024 ffrank authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Exact rank, kernels and kernel sampling for sparse matrices over GF(q).

Elimination runs in two phases. The sparse phase repeatedly takes the
uneliminated column of lowest current degree and pivots on its row of
lowest current degree, eliminating the column from the other rows and
tracking the fill-in. It stops once every column left has more than
SPARSE_PIVOT_DEGREE entries. The block that is left is eliminated densely
with columns in order of increasing degree; over GF(2) its rows are packed
into 64 bit words and row additions are word-wise XORs.
"""

import heapq
import logging
from dataclasses import dataclass
from itertools import product
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

import numpy as np

from ffrank.ensemble import SparseMatrix
from ffrank.errors import SizeLimit
from ffrank.gf import FieldSpec

logger = logging.getLogger(__name__)

# largest rows*cols accepted by the dense textbook oracle
DENSE_ORACLE_LIMIT = 10**6

# largest kernel size enumerated by kernel_vectors
ENUMERATION_LIMIT = 10**6

WORD_BITS = 64

# columns of at most this many entries are pivoted on in the sparse phase
SPARSE_PIVOT_DEGREE = 2

FrozenColumns = FrozenSet[int]
SparseRow = Dict[int, int]


@dataclass(frozen=True, eq=False)
class KernelBasis:

    """Basis of the kernel of a matrix, one vector per row of `vectors`."""

    field: FieldSpec
    n: int
    vectors: np.ndarray
    free_columns: Tuple[int, ...]

    @property
    def dimension(self) -> int:
        """Number of basis vectors, the nullity of the matrix."""
        return len(self.vectors)

    def __len__(self) -> int:
        """Number of basis vectors."""
        return self.dimension

    def combine(self, coefficients: np.ndarray) -> np.ndarray:
        """Linear combinations of the basis, one per row of coefficients."""
        coefficients = np.atleast_2d(np.asarray(coefficients, dtype=np.int64))
        return _combine(self.field, coefficients, self.vectors)

    def sample(self, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        """Uniformly random kernel vectors."""
        count = 1 if size is None else size
        coefficients = rng.integers(0, self.field.q, size=(count, self.dimension), dtype=np.int64)
        vectors = self.combine(coefficients)
        return vectors[0] if size is None else vectors


@dataclass(frozen=True)
class CoordinateClasses:

    """Frozen columns and classes of columns with proportional kernel coordinates."""

    frozen: FrozenColumns
    classes: Tuple[Tuple[int, ...], ...]


def _combine(field: FieldSpec, coefficients: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Field products of a coefficient matrix with a matrix of row vectors."""
    count, n = len(coefficients), vectors.shape[1]
    if vectors.shape[0] == 0:
        return np.zeros((count, n), dtype=np.int64)
    if field.e == 1:
        # exact in int64 for q <= 2**16 and fewer than 2**31 rows
        return (coefficients @ vectors) % field.p
    out = np.zeros((count, n), dtype=np.int64)
    for j in range(vectors.shape[0]):
        out = field.add_array(out, field.mul_array(coefficients[:, j:j + 1], vectors[j][None, :]))
    return out


def _pack(bits: np.ndarray) -> np.ndarray:
    """Pack a 0/1 matrix into rows of little endian 64 bit words."""
    rows, cols = bits.shape
    width = -(-cols // WORD_BITS) * WORD_BITS
    padded = np.zeros((rows, max(width, WORD_BITS)), dtype=np.uint8)
    padded[:, :cols] = bits
    return np.ascontiguousarray(np.packbits(padded, axis=1, bitorder="little")).view("<u8")


def _unpack(words: np.ndarray, cols: int) -> np.ndarray:
    """Inverse of _pack."""
    as_bytes = np.ascontiguousarray(words).view(np.uint8)
    return np.unpackbits(as_bytes, axis=1, bitorder="little")[:, :cols].astype(np.int64)


def _echelon_gf2(dense: np.ndarray, reduce: bool) -> Tuple[np.ndarray, List[int]]:
    rows, cols = dense.shape
    packed = _pack(dense)
    rank = 0
    pivots = []
    for c in range(cols):
        if rank == rows:
            break
        word, bit = divmod(c, WORD_BITS)
        column = (packed[:, word] >> np.uint64(bit)) & np.uint64(1)
        hits = np.flatnonzero(column[rank:]) + rank
        if len(hits) == 0:
            continue
        p = hits[0]
        if p != rank:
            packed[[rank, p]] = packed[[p, rank]]
        targets = hits[1:]
        if reduce:
            targets = np.concatenate([np.flatnonzero(column[:rank]), targets])
        if len(targets):
            # rows from the pivot on are zero before column c
            packed[targets, word:] ^= packed[rank, word:]
        pivots.append(c)
        rank += 1
    return _unpack(packed[:rank], cols), pivots


def _echelon_generic(field: FieldSpec, dense: np.ndarray,
                     reduce: bool) -> Tuple[np.ndarray, List[int]]:
    a = dense.copy()
    rows, cols = a.shape
    rank = 0
    pivots = []
    for c in range(cols):
        if rank == rows:
            break
        hits = np.flatnonzero(a[rank:, c]) + rank
        if len(hits) == 0:
            continue
        p = hits[0]
        if p != rank:
            a[[rank, p]] = a[[p, rank]]
        a[rank, c:] = field.mul_array(a[rank, c:], field.inv(int(a[rank, c])))
        if reduce:
            targets = np.flatnonzero(a[:, c])
            targets = targets[targets != rank]
        else:
            targets = np.flatnonzero(a[rank + 1:, c]) + rank + 1
        if len(targets):
            factors = a[targets, c][:, None]
            update = field.mul_array(factors, a[rank, c:][None, :])
            a[targets, c:] = field.sub_array(a[targets, c:], update)
        pivots.append(c)
        rank += 1
    return a[:rank], pivots


def echelon(field: FieldSpec, dense: np.ndarray,
            reduce: bool = True) -> Tuple[np.ndarray, List[int]]:
    """Row echelon form and pivot columns of a dense matrix.

    With reduce the form is the reduced one: pivots equal one and are the
    only nonzero entries of their columns.
    """
    dense = np.asarray(dense, dtype=np.int64)
    if field.q == 2:
        return _echelon_gf2(dense, reduce)
    return _echelon_generic(field, dense, reduce)


@dataclass
class _Reduction:

    """Outcome of the sparse phase of elimination.

    Pivots are kept in elimination order as the pivot column and the pivot
    row as it was when chosen; every other column of that row was still
    uneliminated then.
    """

    pivots: List[Tuple[int, SparseRow]]
    free: List[int]
    rows: List[SparseRow]
    cols: List[int]

    def dense(self) -> np.ndarray:
        """Remainder as a dense matrix, sparsest rows and columns first."""
        position = {c: i for i, c in enumerate(self.cols)}
        dense = np.zeros((len(self.rows), len(self.cols)), dtype=np.int64)
        for i, row in enumerate(self.rows):
            for c, v in row.items():
                dense[i, position[c]] = v
        return dense


def _sparse_phase(m: SparseMatrix, limit: int = SPARSE_PIVOT_DEGREE) -> _Reduction:
    """Eliminate columns of lowest current degree while it is at most limit.

    Ties between columns go to the lower index, the pivot row is the row of
    lowest current degree in the column. Columns whose entries all cancel
    are free.
    """
    f = m.field
    indptr = m.indptr.tolist()
    indices = m.indices.tolist()
    data = m.data.tolist()
    rows: List[SparseRow] = []
    cols: List[Set[int]] = [set() for _ in range(m.cols)]
    for r in range(m.rows):
        row = {c: v for c, v in zip(indices[indptr[r]:indptr[r + 1]],
                                    data[indptr[r]:indptr[r + 1]]) if v}
        rows.append(row)
        for c in row:
            cols[c].add(r)
    row_alive = [True] * m.rows
    col_alive = [True] * m.cols
    heap = [(len(members), c) for c, members in enumerate(cols)]
    heapq.heapify(heap)
    pivots = []
    free = []
    while heap:
        degree, c = heap[0]
        if not col_alive[c] or degree != len(cols[c]):
            heapq.heappop(heap)
            continue
        if degree > limit:
            break
        heapq.heappop(heap)
        col_alive[c] = False
        if degree == 0:
            free.append(c)
            continue
        r = min(cols[c], key=lambda i: (len(rows[i]), i))
        pivot = rows[r]
        row_alive[r] = False
        touched = set(pivot)
        for c2 in pivot:
            cols[c2].discard(r)
        scale = f.inv(pivot[c])
        for r2 in list(cols[c]):
            target = rows[r2]
            factor = f.mul(target[c], scale)
            for c2, v in pivot.items():
                value = f.sub(target.get(c2, 0), f.mul(factor, v))
                if value:
                    target[c2] = value
                    cols[c2].add(r2)
                else:
                    target.pop(c2, None)
                    cols[c2].discard(r2)
        pivots.append((c, pivot))
        for c2 in touched:
            if col_alive[c2]:
                heapq.heappush(heap, (len(cols[c2]), c2))
    left_rows = sorted((r for r in range(m.rows) if row_alive[r] and rows[r]),
                       key=lambda r: (len(rows[r]), r))
    left_cols = sorted((c for c in range(m.cols) if col_alive[c]),
                       key=lambda c: (len(cols[c]), c))
    return _Reduction(pivots, free, [rows[r] for r in left_rows], left_cols)


def rank(m: SparseMatrix) -> int:
    """Rank of the matrix over its field.

    Pivots are chosen by lowest current column degree with the row of
    lowest current degree in that column, see the module description.
    """
    if m.nnz == 0:
        return 0
    reduction = _sparse_phase(m)
    if not reduction.rows:
        return len(reduction.pivots)
    dense = reduction.dense()
    logger.debug("%d sparse pivots, dense remainder %d x %d",
                 len(reduction.pivots), *dense.shape)
    _, dense_pivots = echelon(m.field, dense, reduce=False)
    return len(reduction.pivots) + len(dense_pivots)


def nullity(m: SparseMatrix) -> int:
    """Dimension of the kernel."""
    return m.cols - rank(m)


def kernel_basis(m: SparseMatrix) -> KernelBasis:
    """Basis of the kernel by back substitution through the pivots of rank.

    The sparse phase runs as in rank and its remainder is brought to reduced
    row echelon form. Every free column gets one basis vector with a one on
    that column and zeros on the other free columns; pivot coordinates are
    solved from the dense pivots and then from the sparse pivots in reverse
    order. The basis depends only on the matrix.
    """
    f = m.field
    reduction = _sparse_phase(m)
    dense = reduction.dense()
    if dense.size:
        reduced, dense_pivots = echelon(f, dense, reduce=True)
    else:
        reduced, dense_pivots = dense, []
    pivot_set = set(dense_pivots)
    free_idx = [i for i in range(len(reduction.cols)) if i not in pivot_set]
    dense_free = [reduction.cols[i] for i in free_idx]
    free = sorted(reduction.free + dense_free)
    vectors = np.zeros((len(free), m.cols), dtype=np.int64)
    vectors[np.arange(len(free)), free] = 1
    if not free:
        return KernelBasis(f, m.cols, vectors, ())
    if dense_pivots and dense_free:
        solved = _combine(f, vectors[:, dense_free], reduced[:, free_idx].T)
        vectors[:, [reduction.cols[i] for i in dense_pivots]] = f.neg_array(solved)
    for c, row in reversed(reduction.pivots):
        total = np.zeros(len(free), dtype=np.int64)
        for c2, v in row.items():
            if c2 != c:
                total = f.add_array(total, f.mul_array(vectors[:, c2], v))
        vectors[:, c] = f.mul_array(f.neg_array(total), f.inv(row[c]))
    return KernelBasis(f, m.cols, vectors, tuple(free))



def frozen_variables(m: SparseMatrix) -> FrozenColumns:
    """Columns on which every kernel vector vanishes."""
    vectors = kernel_basis(m).vectors
    return frozenset(np.flatnonzero(~vectors.any(axis=0)).tolist())


def boltzmann_sample(m: SparseMatrix, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random element of the kernel."""
    return kernel_basis(m).sample(rng)


def coordinate_classes(m: SparseMatrix) -> CoordinateClasses:
    """Split the columns into frozen ones and classes of proportional coordinates.

    Two unfrozen columns share a class when their coordinates agree up to
    a nonzero factor on every kernel vector. Columns of different classes
    are pairwise independent under the uniform kernel distribution.
    """
    basis = kernel_basis(m)
    field = m.field
    frozen = []
    groups = {}
    for i in range(m.cols):
        profile = basis.vectors[:, i]
        nonzero = np.flatnonzero(profile)
        if len(nonzero) == 0:
            frozen.append(i)
            continue
        scaled = field.mul_array(profile, field.inv(int(profile[nonzero[0]])))
        groups.setdefault(tuple(scaled.tolist()), []).append(i)
    classes = sorted(tuple(members) for members in groups.values())
    return CoordinateClasses(frozenset(frozen), tuple(classes))


def kernel_vectors(m: SparseMatrix) -> np.ndarray:
    """Every vector of the kernel, one per row."""
    basis = kernel_basis(m)
    size = m.field.q ** basis.dimension
    if size > ENUMERATION_LIMIT:
        raise SizeLimit(f"kernel has {size} vectors, more than {ENUMERATION_LIMIT}")
    coefficients = np.array(list(product(range(m.field.q), repeat=basis.dimension)),
                            dtype=np.int64).reshape(size, basis.dimension)
    return basis.combine(coefficients)


def rank_dense_oracle(m: SparseMatrix) -> int:
    """Rank by textbook Gaussian elimination with scalar field operations."""
    if m.rows * m.cols > DENSE_ORACLE_LIMIT:
        raise SizeLimit(f"{m.rows} x {m.cols} matrix exceeds the dense oracle limit")
    f = m.field
    a = m.to_dense().tolist()
    r = 0
    for c in range(m.cols):
        pivot = next((i for i in range(r, m.rows) if a[i][c] != 0), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        inv = f.inv(a[r][c])
        a[r] = [f.mul(x, inv) for x in a[r]]
        for i in range(r + 1, m.rows):
            if a[i][c] != 0:
                factor = a[i][c]
                a[i] = [f.sub(x, f.mul(factor, y)) for x, y in zip(a[i], a[r])]
        r += 1
    return r
