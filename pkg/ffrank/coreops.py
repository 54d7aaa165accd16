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

"""2-core of Tanner graphs and the rank bound it implies.

A variable joined to the same check by two edges has degree two, so the
peeling works on the graph alone and cancellations in the matrix play no
part in it.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Optional

import numpy as np

from ffrank.analytic import EnsembleSpec
from ffrank.ensemble import SparseMatrix, TannerGraph, sample, split_trial_seed
from ffrank.errors import DomainError
from ffrank.linalg import nullity, rank

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoreResult:

    """Variables and checks of the 2-core and statistics of the peeling."""

    core_vars: frozenset
    core_checks: frozenset
    n_star: int
    m_star: int
    peel_rounds: int
    round_sizes: tuple = ()

    def as_dict(self) -> Dict[str, object]:
        """Summary without the node sets."""
        return {
            "n_star": self.n_star,
            "m_star": self.m_star,
            "peel_rounds": self.peel_rounds,
            "round_sizes": list(self.round_sizes),
        }


@dataclass(frozen=True)
class CoreBound:

    """Lower bound n - n* - (m - m*) on the nullity and whether it is attained."""

    bound: int
    tight: bool
    nullity: int


@dataclass(frozen=True)
class CoreEstimate:

    """Mean core fractions over sampled instances with their standard errors."""

    var_fraction: float
    check_fraction: float
    var_stderr: float
    check_stderr: float
    trials: int


class _Pending:

    """Work queue of variables to remove, FIFO or in random order."""

    def __init__(self, items: Iterable[int], rng: Optional[np.random.Generator]):
        self.rng = rng
        self.items = list(items) if rng is not None else deque(items)

    def push(self, item: int) -> None:
        self.items.append(item)

    def pop(self) -> int:
        if self.rng is None:
            return self.items.popleft()
        i = int(self.rng.integers(len(self.items)))
        self.items[i], self.items[-1] = self.items[-1], self.items[i]
        return self.items.pop()

    def __bool__(self) -> bool:
        return bool(self.items)


def peel(g: TannerGraph, rng: Optional[np.random.Generator] = None) -> CoreResult:
    """Remove variables of degree at most one with their check until none is left.

    Every removal is tagged with one plus the largest round of the check
    removals that brought the variable down, which reproduces the rounds of
    the parallel stripping process.
    """
    edge_check = g.edges[:, 0]
    edge_var = g.edges[:, 1]
    by_var = np.argsort(edge_var, kind="stable")
    var_ptr = np.concatenate([[0], np.cumsum(np.bincount(edge_var, minlength=g.n_vars))])
    by_check = np.argsort(edge_check, kind="stable")
    check_ptr = np.concatenate([[0], np.cumsum(np.bincount(edge_check, minlength=g.m))])

    var_checks = edge_check[by_var].tolist()
    check_vars = edge_var[by_check].tolist()
    var_ptr = var_ptr.tolist()
    check_ptr = check_ptr.tolist()
    degree = g.var_degrees.tolist()

    var_alive = [True] * g.n_vars
    check_alive = [True] * g.m
    queued = [d <= 1 for d in degree]
    var_round = [1 if d <= 1 else 0 for d in degree]
    # largest round of the removed checks seen by each variable
    latest = [0] * g.n_vars

    initial = [v for v in range(g.n_vars) if queued[v]]
    if rng is not None:
        initial = rng.permutation(initial).tolist() if initial else initial
    pending = _Pending(initial, rng)
    while pending:
        v = pending.pop()
        var_alive[v] = False
        if degree[v] == 0:
            continue
        degree[v] = 0
        c = next(c for c in var_checks[var_ptr[v]:var_ptr[v + 1]] if check_alive[c])
        check_alive[c] = False
        for u in check_vars[check_ptr[c]:check_ptr[c + 1]]:
            if u == v or not var_alive[u]:
                continue
            degree[u] -= 1
            latest[u] = max(latest[u], var_round[v])
            if degree[u] <= 1 and not queued[u]:
                queued[u] = True
                var_round[u] = latest[u] + 1
                pending.push(u)

    core_vars = frozenset(v for v in range(g.n_vars) if var_alive[v])
    core_checks = frozenset(c for c in range(g.m) if check_alive[c])
    removed_rounds = [r for v, r in enumerate(var_round) if not var_alive[v]]
    rounds = max(removed_rounds, default=0)
    sizes = tuple(np.bincount(removed_rounds, minlength=rounds + 1)[1:].tolist())
    logger.debug("2-core with %d variables and %d checks after %d rounds",
                 len(core_vars), len(core_checks), rounds)
    return CoreResult(core_vars, core_checks, len(core_vars), len(core_checks), rounds, sizes)


def core_graph(g: TannerGraph, core: CoreResult) -> TannerGraph:
    """Subgraph induced by the core, nodes renumbered in increasing order."""
    checks = np.array(sorted(core.core_checks), dtype=np.int64)
    variables = np.array(sorted(core.core_vars), dtype=np.int64)
    check_pos = np.full(g.m, -1, dtype=np.int64)
    check_pos[checks] = np.arange(len(checks))
    var_pos = np.full(g.n_vars, -1, dtype=np.int64)
    var_pos[variables] = np.arange(len(variables))
    kept = check_pos[g.edges[:, 0]] >= 0
    edges = np.column_stack([check_pos[g.edges[kept, 0]], var_pos[g.edges[kept, 1]]])
    assert (edges[:, 1] >= 0).all(), "core check adjacent to a peeled variable"
    return TannerGraph(len(variables), g.check_degrees[checks], edges)


def core_rank_bound(g: TannerGraph, m: SparseMatrix,
                    core: Optional[CoreResult] = None) -> CoreBound:
    """Compare the nullity with the bound n - n* - (m - m*) of the 2-core.

    Only checks whose row keeps a nonzero entry after cancellation count in
    m and m*. A row that cancels completely has every variable joined to it
    twice, so it never leaves the core and the bound itself does not move;
    the count matters for the full row rank n - m used by the tightness
    test.
    """
    core = core if core is not None else peel(g)
    live = m.row_counts() > 0
    live_checks = int(np.count_nonzero(live))
    live_core = sum(1 for c in core.core_checks if live[c])
    bound = g.n_vars - core.n_star - (live_checks - live_core)
    null = nullity(m)
    full_row_rank = g.n_vars - live_checks
    tight = null == bound or (null == full_row_rank and bound < full_row_rank)
    assert null >= bound, f"nullity {null} below the 2-core bound {bound}"
    return CoreBound(bound, tight, null)


def kernel_zero_on_core(m: SparseMatrix, core_vars: Iterable[int]) -> bool:
    """Check whether every kernel vector vanishes on the given columns.

    Pinning the columns with unit rows keeps the rank exactly when no
    kernel vector is supported on them.
    """
    core_vars = list(core_vars)
    if not core_vars:
        return True
    return rank(m.with_unit_rows(core_vars)) == rank(m)


def _mean_and_stderr(values: List[float]):
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return mean, stderr


def core_counts_mc(ens: EnsembleSpec, n: int, trials: int, seed: int) -> CoreEstimate:
    """Estimate the core fractions n*/n and m*/n by sampling."""
    if trials < 1:
        raise DomainError(f"at least one trial is needed, got {trials}")
    sized = replace(ens, n=n)
    var_fractions = []
    check_fractions = []
    for trial in range(trials):
        graph, _ = sample(sized, split_trial_seed(seed, trial))
        core = peel(graph)
        var_fractions.append(core.n_star / n)
        check_fractions.append(core.m_star / n)
        logger.debug("trial %d: n* = %d, m* = %d", trial, core.n_star, core.m_star)
    var_mean, var_se = _mean_and_stderr(var_fractions)
    check_mean, check_se = _mean_and_stderr(check_fractions)
    return CoreEstimate(var_mean, check_mean, var_se, check_se, trials)
