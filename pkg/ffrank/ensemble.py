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

"""Sampling of Tanner graphs and the sparse matrices they induce.

The number of checks is Poisson with mean d*n/k, degrees are drawn
independently and the whole draw is repeated until the variable and check
degree sums agree. Half-edges ("clones") are then paired by a uniformly
random permutation. In simple mode pairings with a repeated (check,
variable) pair are redrawn, in multigraph mode the entries of repeated
pairs are summed in the field and may cancel.
"""

import json
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import jsonschema
import numpy as np

from ffrank.analytic import ChiLaw, EnsembleSpec, Mode
from ffrank.degrees import DegreeDistribution, gcd_support, sample_degrees
from ffrank.errors import (
    ConfigError,
    DivisibilityError,
    DomainError,
    IntegralityError,
    RejectionBudgetExhausted,
)
from ffrank.gf import FieldSpec, make_field

logger = logging.getLogger(__name__)

# conditioning attempts per square root of n
CONDITIONING_BUDGET = 10000

# attempts to draw a pairing without repeated edges
MATCHING_BUDGET = 10000

INTEGRALITY_TOLERANCE = 1e-9

MASK64 = (1 << 64) - 1

INSTANCE_SCHEMA = Path(__file__).parent / "schemas" / "instance.json"

# independent random streams of one instance
STREAMS = ("m", "d", "k", "matching", "chi")


def splitmix64(x: int) -> int:
    """One output of the SplitMix64 generator seeded with x."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def split_trial_seed(seed: int, trial: int) -> int:
    """Seed of one trial, independent of how trials are scheduled."""
    return (seed ^ splitmix64(trial)) & MASK64


@dataclass(frozen=True)
class InstanceSeed:

    """Seed of one instance, split into independent named streams."""

    seed: int

    def streams(self) -> Dict[str, np.random.Generator]:
        """Fresh generators for every stream."""
        children = np.random.SeedSequence(self.seed & MASK64).spawn(len(STREAMS))
        return {name: np.random.default_rng(child) for name, child in zip(STREAMS, children)}


@dataclass(frozen=True, eq=False)
class TannerGraph:

    """Bipartite multigraph between variables (columns) and checks (rows)."""

    n_vars: int
    check_degrees: np.ndarray
    edges: np.ndarray

    @property
    def m(self) -> int:
        """Number of checks."""
        return len(self.check_degrees)

    @cached_property
    def var_degrees(self) -> np.ndarray:
        """Degree of every variable, repeated edges counted with multiplicity."""
        return np.bincount(self.edges[:, 1], minlength=self.n_vars)

    @property
    def num_edges(self) -> int:
        """Number of edges including repeats."""
        return len(self.edges)

    def is_simple(self) -> bool:
        """Check that no (check, variable) pair repeats."""
        keys = self.edges[:, 0] * self.n_vars + self.edges[:, 1]
        return len(np.unique(keys)) == len(keys)

    def __eq__(self, other: object) -> bool:
        """Compare graphs edge by edge."""
        if not isinstance(other, TannerGraph):
            return NotImplemented
        return (self.n_vars == other.n_vars
                and np.array_equal(self.check_degrees, other.check_degrees)
                and np.array_equal(self.edges, other.edges))

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class SparseMatrix:

    """Matrix over GF(q) in compressed sparse row form without explicit zeros."""

    field: FieldSpec
    rows: int
    cols: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    @classmethod
    def from_entries(cls, field: FieldSpec, rows: int, cols: int, row_idx: Sequence[int],
                     col_idx: Sequence[int], values: Sequence[int]) -> "SparseMatrix":
        """Build a matrix from coordinates, summing repeated positions in the field."""
        r = np.asarray(row_idx, dtype=np.int64)
        c = np.asarray(col_idx, dtype=np.int64)
        v = np.asarray(values, dtype=np.int64)
        if len(r) and (r.min() < 0 or r.max() >= rows or c.min() < 0 or c.max() >= cols):
            raise DomainError("matrix coordinates out of range")
        if len(v) and (v.min() < 0 or v.max() >= field.q):
            raise DomainError(f"matrix entries must be elements of GF({field.q})")
        width = max(cols, 1)
        keys = r * width + c
        order = np.argsort(keys, kind="stable")
        keys, v = keys[order], v[order]
        unique_keys, starts = np.unique(keys, return_index=True)
        sums = _field_segment_sums(field, v, starts)
        keep = sums != 0
        unique_keys, sums = unique_keys[keep], sums[keep]
        row_of = unique_keys // width
        indptr = np.zeros(rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(row_of, minlength=rows), out=indptr[1:])
        return cls(field, rows, cols, indptr, unique_keys % width, sums)

    @classmethod
    def from_dense(cls, field: FieldSpec, dense: Union[np.ndarray, list]) -> "SparseMatrix":
        """Build a matrix from a dense two-dimensional array."""
        array = np.asarray(dense, dtype=np.int64)
        if array.ndim != 2:
            raise DomainError("dense matrix must be two-dimensional")
        r, c = np.nonzero(array)
        return cls.from_entries(field, array.shape[0], array.shape[1], r, c, array[r, c])

    @property
    def nnz(self) -> int:
        """Number of stored nonzero entries."""
        return len(self.data)

    def row(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        """Column indices and values of row i."""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def row_counts(self) -> np.ndarray:
        """Number of nonzeros per row."""
        return np.diff(self.indptr)

    def column_counts(self) -> np.ndarray:
        """Number of nonzeros per column."""
        return np.bincount(self.indices, minlength=self.cols)

    def nonzero_rows(self) -> int:
        """Number of rows with at least one nonzero entry."""
        return int(np.count_nonzero(self.row_counts()))

    def row_ids(self) -> np.ndarray:
        """Row index of every stored entry."""
        return np.repeat(np.arange(self.rows), self.row_counts())

    def to_dense(self) -> np.ndarray:
        """Dense copy of the matrix."""
        dense = np.zeros((self.rows, self.cols), dtype=np.int64)
        dense[self.row_ids(), self.indices] = self.data
        return dense

    def matvec(self, vector: Union[np.ndarray, list]) -> np.ndarray:
        """Product of the matrix with a column vector over the field."""
        v = np.asarray(vector, dtype=np.int64)
        if v.shape != (self.cols,):
            raise DomainError(f"vector of length {self.cols} expected, got shape {v.shape}")
        products = self.field.mul_array(self.data, v[self.indices])
        result = np.zeros(self.rows, dtype=np.int64)
        if self.nnz == 0:
            return result
        nonempty = np.flatnonzero(self.row_counts())
        sums = _field_segment_sums(self.field, products, self.indptr[nonempty])
        result[nonempty] = sums
        return result

    def with_unit_rows(self, columns: Iterable[int]) -> "SparseMatrix":
        """Append one row per given column with a single entry one there."""
        extra = np.asarray(sorted(columns), dtype=np.int64)
        r = np.concatenate([self.row_ids(), self.rows + np.arange(len(extra))])
        c = np.concatenate([self.indices, extra])
        v = np.concatenate([self.data, np.ones(len(extra), dtype=np.int64)])
        return SparseMatrix.from_entries(self.field, self.rows + len(extra), self.cols, r, c, v)

    def entries(self) -> np.ndarray:
        """Triples (row, col, value) of all stored entries."""
        return np.column_stack([self.row_ids(), self.indices, self.data])

    def __eq__(self, other: object) -> bool:
        """Compare matrices entry by entry."""
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (self.field == other.field and self.rows == other.rows
                and self.cols == other.cols
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.data, other.data))

    __hash__ = None  # type: ignore[assignment]


def _field_segment_sums(field: FieldSpec, values: np.ndarray, starts: np.ndarray) -> np.ndarray:
    """Field sums of consecutive segments of values beginning at starts."""
    if len(starts) == 0:
        return np.zeros(0, dtype=np.int64)
    if field.e == 1:
        return np.add.reduceat(values, starts) % field.p
    if field.p == 2:
        return np.bitwise_xor.reduceat(values, starts)
    # odd characteristic extension fields: fold segments element by element
    ends = np.append(starts[1:], len(values))
    sums = values[starts].copy()
    for i in np.flatnonzero(ends - starts > 1):
        acc = int(sums[i])
        for x in values[starts[i] + 1:ends[i]]:
            acc = field.add(acc, int(x))
        sums[i] = acc
    return sums


def matrix_from_graph(g: TannerGraph, field: FieldSpec, chi: ChiLaw,
                      rng: np.random.Generator) -> SparseMatrix:
    """Draw an entry for every edge and sum entries of repeated edges."""
    values = chi.sample(field, rng, g.num_edges)
    return SparseMatrix.from_entries(field, g.m, g.n_vars, g.edges[:, 0], g.edges[:, 1], values)


def _match(n: int, dseq: np.ndarray, kseq: np.ndarray, rng: np.random.Generator,
           simple: bool) -> TannerGraph:
    """Pair variable clones with check clones uniformly at random."""
    var_clones = np.repeat(np.arange(n, dtype=np.int64), dseq)
    check_clones = np.repeat(np.arange(len(kseq), dtype=np.int64), kseq)
    for attempt in range(1, MATCHING_BUDGET + 1):
        edges = np.column_stack([check_clones, var_clones[rng.permutation(len(var_clones))]])
        graph = TannerGraph(n, kseq.astype(np.int64), edges)
        if not simple or graph.is_simple():
            logger.debug("pairing accepted after %d attempt(s)", attempt)
            return graph
    raise RejectionBudgetExhausted(
        f"no simple pairing found in {MATCHING_BUDGET} attempts, consider multigraph mode")


def _require_size(ens: EnsembleSpec) -> None:
    if ens.n <= 0:
        raise DomainError("sampling needs a positive number of variables")


def sample_instance(ens: EnsembleSpec,
                    seed: InstanceSeed) -> Tuple[TannerGraph, SparseMatrix]:
    """Sample from the Poisson-checks ensemble conditioned on equal degree sums."""
    _require_size(ens)
    if ens.mode not in (Mode.SIMPLE, Mode.MULTIGRAPH):
        raise DomainError(f"sample_instance does not handle mode {ens.mode.value}")
    g = gcd_support(ens.kdist)
    if ens.n % g != 0:
        raise DivisibilityError(f"n = {ens.n} is not divisible by {g}")
    streams = seed.streams()
    n = ens.n
    budget = CONDITIONING_BUDGET * math.ceil(math.sqrt(n))
    mean_checks = ens.d * n / ens.k
    for attempt in range(1, budget + 1):
        m = int(streams["m"].poisson(mean_checks))
        dseq = sample_degrees(ens.ddist, streams["d"], n)
        kseq = sample_degrees(ens.kdist, streams["k"], m)
        if dseq.sum() == kseq.sum():
            break
    else:
        raise RejectionBudgetExhausted(
            f"degree sums did not agree in {budget} attempts for n = {n}")
    logger.debug("degree sums agreed after %d attempt(s), m = %d", attempt, m)
    graph = _match(n, dseq, kseq, streams["matching"], ens.mode is Mode.SIMPLE)
    return graph, matrix_from_graph(graph, ens.field, ens.chi, streams["chi"])


def _exact_counts(dist: DegreeDistribution, total: int, what: str) -> np.ndarray:
    """Degree sequence with exactly total*P(l) entries of degree l."""
    if not dist.finite:
        raise IntegralityError(f"{what} law {dist} has infinite support")
    counts = []
    for degree, p in dist.pmf:
        count = total * p
        if abs(count - round(count)) > INTEGRALITY_TOLERANCE:
            raise IntegralityError(
                f"{total} * P({what} = {degree}) = {count} is not an integer")
        counts.append(int(round(count)))
    degrees = np.array([d for d, _ in dist.pmf], dtype=np.int64)
    return np.repeat(degrees, counts)


def sample_ldpc_exact(ens: EnsembleSpec,
                      seed: InstanceSeed) -> Tuple[TannerGraph, SparseMatrix]:
    """Sample a simple Tanner graph with exactly prescribed degree counts."""
    _require_size(ens)
    n = ens.n
    m_exact = ens.d * n / ens.k
    if abs(m_exact - round(m_exact)) > INTEGRALITY_TOLERANCE:
        raise IntegralityError(f"number of checks d*n/k = {m_exact} is not an integer")
    m = int(round(m_exact))
    streams = seed.streams()
    dseq = streams["d"].permutation(_exact_counts(ens.ddist, n, "d"))
    kseq = streams["k"].permutation(_exact_counts(ens.kdist, m, "k"))
    if dseq.sum() != kseq.sum():
        raise IntegralityError("prescribed degree sums disagree")
    graph = _match(n, dseq, kseq, streams["matching"], True)
    return graph, matrix_from_graph(graph, ens.field, ens.chi, streams["chi"])


def sample(ens: EnsembleSpec, seed: Union[InstanceSeed, int]) -> Tuple[TannerGraph, SparseMatrix]:
    """Sample an instance according to the ensemble's mode."""
    if not isinstance(seed, InstanceSeed):
        seed = InstanceSeed(int(seed))
    if ens.mode is Mode.EXACT_DEGREES:
        return sample_ldpc_exact(ens, seed)
    return sample_instance(ens, seed)


def instance_record(graph: TannerGraph, matrix: SparseMatrix,
                    seed: Optional[int] = None) -> Dict[str, object]:
    """JSON friendly description of an instance."""
    return {
        "q": matrix.field.q,
        "modulus": list(matrix.field.modulus),
        "n": graph.n_vars,
        "m": graph.m,
        "edges": graph.edges.tolist(),
        "entries": matrix.entries().tolist(),
        "seed": seed,
    }


def _schema() -> Dict[str, object]:
    with open(INSTANCE_SCHEMA, encoding="utf-8") as fin:
        return json.load(fin)


def validate_instance(record: Dict[str, object]) -> None:
    """Check an instance record against the JSON schema."""
    try:
        jsonschema.validate(instance=record, schema=_schema())
    except jsonschema.ValidationError as e:
        raise ConfigError(f"instance does not fit the expected schema: {e.message}") from e


def dump_instance(path: Union[str, Path], graph: TannerGraph, matrix: SparseMatrix,
                  seed: Optional[int] = None) -> None:
    """Write an instance as JSON."""
    record = instance_record(graph, matrix, seed)
    validate_instance(record)
    with open(path, "w", encoding="utf-8") as fout:
        json.dump(record, fout)
    logger.info("instance with n = %d, m = %d written to %s", graph.n_vars, graph.m, path)


def load_instance(path: Union[str, Path]) -> Tuple[TannerGraph, SparseMatrix, Optional[int]]:
    """Read an instance written by dump_instance."""
    with open(path, encoding="utf-8") as fin:
        try:
            record = json.load(fin)
        except json.JSONDecodeError as e:
            raise ConfigError(f"instance file {path} is not valid JSON: {e}") from e
    validate_instance(record)
    field = make_field(record["q"])
    if list(field.modulus) != record["modulus"]:
        raise ConfigError(f"modulus {record['modulus']} differs from {list(field.modulus)}")
    n, m = record["n"], record["m"]
    edges = np.asarray(record["edges"], dtype=np.int64).reshape(-1, 2)
    if len(edges) and (edges[:, 0].max() >= m or edges[:, 1].max() >= n):
        raise ConfigError("instance edge refers to a missing node")
    graph = TannerGraph(n, np.bincount(edges[:, 0], minlength=m), edges)
    entries = np.asarray(record["entries"], dtype=np.int64).reshape(-1, 3)
    try:
        matrix = SparseMatrix.from_entries(field, m, n, entries[:, 0], entries[:, 1],
                                           entries[:, 2])
    except DomainError as e:
        raise ConfigError(f"instance entries are invalid: {e}") from e
    return graph, matrix, record["seed"]
