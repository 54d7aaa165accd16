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

"""Unit tests for functions defined in ensemble.py source file."""

import itertools
import json

import numpy as np
import pytest
from scipy import stats

from ffrank import ensemble
from ffrank.analytic import ChiLaw, Mode, make_ensemble
from ffrank.degrees import explicit, point, truncated_poisson
from ffrank.ensemble import (
    InstanceSeed,
    SparseMatrix,
    dump_instance,
    load_instance,
    sample,
    sample_instance,
    sample_ldpc_exact,
    split_trial_seed,
)
from ffrank.errors import (
    ConfigError,
    DivisibilityError,
    DomainError,
    IntegralityError,
    RejectionBudgetExhausted,
)
from ffrank.gf import make_field

mixed = explicit({3: 0.8, 15: 0.2})

# field order, entries (row, col, value), expected dense matrix
cancellations = (
        (2, ((0, 0, 1), (0, 0, 1)), [[0]]),
        (3, ((0, 0, 1), (0, 0, 1)), [[2]]),
        (3, ((0, 0, 2), (0, 0, 1), (0, 1, 1)), [[0, 1]]),
        (4, ((0, 0, 2), (0, 0, 3)), [[1]]),
        (9, ((0, 0, 3), (0, 0, 3)), [[6]]),
        (9, ((0, 0, 3), (0, 0, 3), (0, 0, 3)), [[0]]),
        (9, ((1, 0, 4), (1, 0, 5)), [[0], [6]]),
)

# ensembles sampled in the degree accounting test
accounted = (
        make_ensemble(point(3), point(3), n=30),
        make_ensemble(mixed, mixed, n=300, mode=Mode.MULTIGRAPH),
        make_ensemble(truncated_poisson(1, 2.0), point(3), q=3, n=201, mode=Mode.MULTIGRAPH),
        make_ensemble(point(3), point(6), q=4, n=40, mode=Mode.EXACT_DEGREES),
)


def test_split_trial_seed():
    """Check that trial seeds are deterministic, distinct and 64 bit."""
    seeds = [split_trial_seed(42, trial) for trial in range(1000)]
    assert seeds == [split_trial_seed(42, trial) for trial in range(1000)]
    assert len(set(seeds)) == 1000
    assert all(0 <= s < 2**64 for s in seeds)
    assert split_trial_seed(2**64 - 1, 3) < 2**64


def test_instance_seed_streams():
    """Check that named streams are reproducible and mutually different."""
    first = InstanceSeed(5).streams()
    second = InstanceSeed(5).streams()
    assert set(first) == {"m", "d", "k", "matching", "chi"}
    draws = {name: rng.integers(0, 2**32, size=4).tolist() for name, rng in first.items()}
    assert draws == {name: rng.integers(0, 2**32, size=4).tolist()
                     for name, rng in second.items()}
    assert len({tuple(v) for v in draws.values()}) == 5


def test_regular_instance():
    """Check that a regular ensemble gives a regular simple graph."""
    ens = make_ensemble(point(3), point(3), n=12)
    graph, matrix = sample_instance(ens, InstanceSeed(1))
    assert graph.m == 12
    assert graph.is_simple()
    assert set(graph.var_degrees.tolist()) == {3}
    assert set(graph.check_degrees.tolist()) == {3}
    assert matrix.rows == 12 and matrix.cols == 12
    assert matrix.nnz == 36
    assert set(matrix.data.tolist()) == {1}


def test_indivisible_size():
    """Check that sizes not divisible by the check degree gcd are refused."""
    with pytest.raises(DivisibilityError):
        make_ensemble(mixed, mixed, n=31)


def test_exact_degrees():
    """Check the exact degree counts of the exact ensemble."""
    ens = make_ensemble(point(3), point(6), n=10, mode=Mode.EXACT_DEGREES)
    graph, _ = sample_ldpc_exact(ens, InstanceSeed(3))
    assert graph.m == 5
    assert graph.is_simple()
    assert set(graph.check_degrees.tolist()) == {6}
    ens = make_ensemble(explicit({2: 0.5, 4: 0.5}), point(3), n=10, mode=Mode.EXACT_DEGREES)
    graph, _ = sample(ens, 3)
    assert graph.m == 10
    assert sorted(graph.var_degrees.tolist()) == [2] * 5 + [4] * 5
    assert set(graph.check_degrees.tolist()) == {3}


def test_exact_degrees_not_integral():
    """Check that fractional degree counts are refused."""
    with pytest.raises(IntegralityError):
        sample_ldpc_exact(make_ensemble(explicit({3: 0.5, 4: 0.5}), point(3), n=9),
                          InstanceSeed(0))
    with pytest.raises(IntegralityError):
        sample_ldpc_exact(make_ensemble(truncated_poisson(1, 2.0), point(3), n=9),
                          InstanceSeed(0))


@pytest.mark.parametrize("ens", accounted)
def test_degree_accounting(ens):
    """Check that sampled degrees respect the laws and the edge count."""
    graph, matrix = sample(ens, 11)
    assert graph.num_edges == graph.check_degrees.sum() == graph.var_degrees.sum()
    assert set(graph.check_degrees.tolist()) <= set(ens.kdist.support)
    assert graph.var_degrees.min() >= ens.ddist.min_degree
    assert matrix.nnz <= graph.num_edges
    # cancellations only remove entries
    assert (matrix.row_counts() <= graph.check_degrees).all()
    assert (matrix.column_counts() <= graph.var_degrees).all()
    if ens.mode is not Mode.MULTIGRAPH:
        assert graph.is_simple()
        assert matrix.nnz == graph.num_edges
        assert np.array_equal(matrix.row_counts(), graph.check_degrees)
        assert np.array_equal(matrix.column_counts(), graph.var_degrees)


def test_degree_accounting_after_cancellation():
    """Check the row and column bounds on a multigraph with cancelled entries."""
    ens = make_ensemble(mixed, mixed, n=60, mode=Mode.MULTIGRAPH)
    graph, matrix = sample(ens, 2024)
    assert matrix.nnz < graph.num_edges
    assert (matrix.row_counts() <= graph.check_degrees).all()
    assert (matrix.column_counts() <= graph.var_degrees).all()


def test_matching_uniformity():
    """Check that the six clone pairings of a single check are equally likely."""
    ens = make_ensemble(point(1), point(3), n=3)
    counts = {}
    for seed in range(600):
        graph, _ = sample_instance(ens, InstanceSeed(seed))
        assert graph.m == 1
        key = tuple(graph.edges[:, 1].tolist())
        counts[key] = counts.get(key, 0) + 1
    assert set(counts) == set(itertools.permutations(range(3)))
    assert stats.chisquare(list(counts.values())).pvalue > 1e-3


def test_checks_per_variable_regular():
    """Check that m/n is exactly one half for 3,6-regular degrees."""
    ens = make_ensemble(point(3), point(6), n=600, mode=Mode.MULTIGRAPH)
    ratios = [sample(ens, seed)[0].m / 600 for seed in range(200)]
    assert set(ratios) == {0.5}


def test_checks_per_variable_concentrates():
    """Check that m/n concentrates near d/k for irregular variable degrees."""
    ens = make_ensemble(truncated_poisson(1, 2.0), point(3), n=600, mode=Mode.MULTIGRAPH)
    ratios = np.array([sample(ens, seed)[0].m / 600 for seed in range(200)])
    assert ratios.std() > 0
    spread = ratios.std(ddof=1) / np.sqrt(len(ratios))
    assert abs(ratios.mean() - ens.d / ens.k) <= 5 * spread


def test_multigraph_cancellation_over_gf2():
    """Check that pairs of odd multiplicity are exactly the nonzero entries."""
    ens = make_ensemble(mixed, mixed, n=60, mode=Mode.MULTIGRAPH)
    graph, matrix = sample(ens, 2024)
    pairs, counts = np.unique(graph.edges, axis=0, return_counts=True)
    expected = {tuple(p) for p, c in zip(pairs.tolist(), counts) if c % 2 == 1}
    assert {(int(r), int(c)) for r, c, _ in matrix.entries()} == expected


def test_sample_reproducible():
    """Check that equal seeds give equal instances and different seeds differ."""
    ens = make_ensemble(truncated_poisson(1, 2.5), point(3), q=5, n=90)
    first = sample(ens, 77)
    second = sample(ens, InstanceSeed(77))
    third = sample(ens, 78)
    assert first == second
    assert first != third


@pytest.mark.parametrize("q, entries, expected", cancellations)
def test_from_entries_cancellation(q, entries, expected):
    """Check that repeated positions are summed in the field."""
    expected = np.array(expected)
    rows, cols = expected.shape
    r, c, v = zip(*entries)
    matrix = SparseMatrix.from_entries(make_field(q), rows, cols, r, c, v)
    assert np.array_equal(matrix.to_dense(), expected)
    assert matrix.nnz == np.count_nonzero(expected)


def test_from_entries_invalid():
    """Check that coordinates and values are validated."""
    f = make_field(3)
    with pytest.raises(DomainError):
        SparseMatrix.from_entries(f, 2, 2, [2], [0], [1])
    with pytest.raises(DomainError):
        SparseMatrix.from_entries(f, 2, 2, [0], [0], [3])
    with pytest.raises(DomainError):
        SparseMatrix.from_dense(f, [1, 2])


@pytest.mark.parametrize("q", (2, 3, 4, 7, 9))
def test_matvec(q):
    """Check matrix vector products against scalar field arithmetic."""
    f = make_field(q)
    rng = np.random.default_rng(q)
    dense = rng.integers(0, q, size=(6, 8)) * (rng.random((6, 8)) < 0.4)
    dense[2] = 0
    vector = rng.integers(0, q, size=8)
    matrix = SparseMatrix.from_dense(f, dense)
    expected = []
    for row in dense.tolist():
        acc = 0
        for a, x in zip(row, vector.tolist()):
            acc = f.add(acc, f.mul(a, x))
        expected.append(acc)
    assert matrix.matvec(vector).tolist() == expected
    with pytest.raises(DomainError):
        matrix.matvec(vector[:-1])


def test_with_unit_rows():
    """Check that unit rows are appended in column order."""
    f = make_field(2)
    matrix = SparseMatrix.from_dense(f, [[1, 1, 0], [0, 1, 1]])
    extended = matrix.with_unit_rows([2, 0])
    assert extended.to_dense().tolist() == [[1, 1, 0], [0, 1, 1], [1, 0, 0], [0, 0, 1]]
    assert extended.nonzero_rows() == 4
    assert extended.column_counts().tolist() == [2, 2, 2]


def test_fixed_entry_law():
    """Check that a fixed entry law puts the same value on every edge."""
    ens = make_ensemble(point(3), point(3), q=7, chi=ChiLaw(4), n=30)
    _, matrix = sample(ens, 9)
    assert set(matrix.data.tolist()) == {4}


def test_uniform_entry_law():
    """Check that uniform entries pass a chi squared test."""
    ens = make_ensemble(point(3), point(3), q=5, n=3000)
    _, matrix = sample(ens, 13)
    observed = np.bincount(matrix.data, minlength=5)[1:]
    assert observed.sum() == 9000
    assert stats.chisquare(observed).pvalue > 1e-4


def test_matching_budget(monkeypatch):
    """Check that impossible simple pairings exhaust the budget."""
    monkeypatch.setattr(ensemble, "MATCHING_BUDGET", 20)
    # checks of degree 6 over 3 variables always repeat a variable
    ens = make_ensemble(point(9), explicit({3: 0.5, 6: 0.5}), n=3, mode=Mode.EXACT_DEGREES)
    with pytest.raises(RejectionBudgetExhausted):
        sample(ens, 0)


def test_conditioning_budget(monkeypatch):
    """Check that an exhausted conditioning budget is reported."""
    monkeypatch.setattr(ensemble, "CONDITIONING_BUDGET", 0)
    with pytest.raises(RejectionBudgetExhausted):
        sample(make_ensemble(point(3), point(3), n=12), 0)


def test_sample_instance_refuses_exact_mode():
    """Check that the Poisson sampler does not accept the exact mode."""
    ens = make_ensemble(point(3), point(3), n=12, mode=Mode.EXACT_DEGREES)
    with pytest.raises(DomainError):
        sample_instance(ens, InstanceSeed(0))
    with pytest.raises(DomainError):
        sample(make_ensemble(point(3), point(3)), 0)


def test_dump_and_load(tmp_path):
    """Check that a dumped instance loads back unchanged."""
    ens = make_ensemble(mixed, mixed, q=9, n=60, mode=Mode.MULTIGRAPH)
    graph, matrix = sample(ens, 5)
    path = tmp_path / "instance.json"
    dump_instance(path, graph, matrix, seed=5)
    loaded_graph, loaded_matrix, seed = load_instance(path)
    assert seed == 5
    assert loaded_graph == graph
    assert loaded_matrix == matrix


def test_load_invalid_instance(tmp_path):
    """Check that records not fitting the schema are refused."""
    path = tmp_path / "bad.json"
    record = {"q": 2, "modulus": [0, 1], "n": 1, "m": 1, "edges": [[0, 0]],
              "entries": [[0, 0, 1]], "seed": None, "extra": 1}
    path.write_text(json.dumps(record))
    with pytest.raises(ConfigError):
        load_instance(path)
    del record["extra"]
    record["modulus"] = [1, 1]
    path.write_text(json.dumps(record))
    with pytest.raises(ConfigError):
        load_instance(path)
    record["modulus"] = [0, 1]
    record["entries"] = [[0, 0, 2]]
    path.write_text(json.dumps(record))
    with pytest.raises(ConfigError):
        load_instance(path)
    path.write_text("{")
    with pytest.raises(ConfigError):
        load_instance(path)
