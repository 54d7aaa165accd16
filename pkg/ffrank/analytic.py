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

"""Closed-form predictions for the rank of random sparse matrices.

With D and K the generating functions of the variable and check degrees and
d, k their means, the limiting rank of the matrix divided by the number of
columns is 1 - max Phi(alpha) over [0, 1] where

    Phi(alpha) = D(1 - K'(alpha)/k) + d/k * (K(alpha) + (1 - alpha) K'(alpha) - 1)

The derivative satisfies Phi'(alpha) = d/k * K''(alpha) * phi(alpha) with

    phi(alpha) = 1 - alpha - D'(1 - K'(alpha)/k) / d

so the stationary points of Phi are the zeros of phi.
"""

import logging
import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from ffrank.degrees import (
    POINT,
    TRUNCATED_POISSON,
    DegreeDistribution,
    gcd_support,
    pgf_eval,
    point,
    sample_degrees,
    size_biased,
    truncated_poisson,
)
from ffrank.errors import DivisibilityError, DomainError, Infeasible, NonConvergence
from ffrank.gf import FieldSpec, make_field

logger = logging.getLogger(__name__)

# resolution of the uniform grids used for scanning Phi and phi
GRID_POINTS = 4097

ROOT_TOLERANCE = 1e-12
MAX_TOLERANCE = 1e-10
TIE_TOLERANCE = 1e-12
REFINE_WINDOW = 1e-4

# golden ratio constants used by the maximizer
INV_GOLDEN = (math.sqrt(5) - 1) / 2
INV_GOLDEN_SQUARE = (3 - math.sqrt(5)) / 2

# samples drawn per independent random stream in the Bethe estimator
BETHE_CHUNK = 1 << 16

Real = Union[float, np.ndarray]


class Mode(str, Enum):

    """How the Tanner graph is sampled."""

    SIMPLE = "simple"
    MULTIGRAPH = "multigraph"
    EXACT_DEGREES = "exact-degrees"


class TightVerdict(str, Enum):

    """Whether the 2-core rank bound is known to be tight."""

    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ChiLaw:

    """Law of the nonzero matrix entries, uniform on the multiplicative group or fixed."""

    value: Optional[int] = None

    @property
    def uniform(self) -> bool:
        """Check whether entries are uniform on the nonzero field elements."""
        return self.value is None

    def sample(self, field: FieldSpec, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw size independent nonzero field elements."""
        if self.value is None:
            return rng.integers(1, field.q, size=size, dtype=np.int64)
        return np.full(size, self.value, dtype=np.int64)

    def describe(self) -> str:
        """Text form accepted by parse_chi."""
        return "uniform" if self.value is None else f"fixed:{self.value}"


def parse_chi(text: str) -> ChiLaw:
    """Parse 'uniform', 'one' or 'fixed:<element>'."""
    text = text.strip().lower()
    if text == "uniform":
        return ChiLaw()
    if text == "one":
        return ChiLaw(1)
    kind, _, value = text.partition(":")
    if kind == "fixed" and value.strip().isdigit():
        return ChiLaw(int(value))
    raise DomainError(f"unknown entry law '{text}', expected uniform, one or fixed:<element>")


@dataclass(frozen=True)
class EnsembleSpec:

    """Random matrix ensemble: field, degree laws, entry law, size and sampling mode."""

    field: FieldSpec
    ddist: DegreeDistribution
    kdist: DegreeDistribution
    chi: ChiLaw = ChiLaw()
    n: int = 0
    mode: Mode = Mode.SIMPLE

    def __post_init__(self) -> None:
        """Check the ensemble invariants."""
        if self.kdist.min_degree < 3:
            raise DomainError(
                f"check degrees must be at least 3, {self.kdist} allows {self.kdist.min_degree}")
        if self.ddist.min_degree < 1:
            raise DomainError(f"variable degrees must be at least 1, got {self.ddist}")
        if self.chi.value is not None and not 0 < self.chi.value < self.field.q:
            raise DomainError(
                f"fixed entry {self.chi.value} is not a nonzero element of GF({self.field.q})")
        if self.n < 0:
            raise DomainError(f"number of variables must be nonnegative, got {self.n}")
        g = gcd_support(self.kdist)
        # exact degree counts are governed by integrality instead
        if self.mode is not Mode.EXACT_DEGREES and self.n > 0 and self.n % g != 0:
            raise DivisibilityError(
                f"n = {self.n} is not divisible by {g}, the gcd of the check degree support")

    @property
    def d(self) -> float:
        """Mean variable degree."""
        return self.ddist.mean

    @property
    def k(self) -> float:
        """Mean check degree."""
        return self.kdist.mean

    def describe(self) -> str:
        """Text form of the degree laws."""
        return f"d={self.ddist.describe()};k={self.kdist.describe()}"

    def to_record(self) -> Dict[str, object]:
        """Serialize the ensemble into a JSON friendly mapping."""
        return {
            "field": self.field.to_record(),
            "d": self.ddist.describe(),
            "k": self.kdist.describe(),
            "chi": self.chi.describe(),
            "n": self.n,
            "mode": self.mode.value,
        }


def make_ensemble(ddist: DegreeDistribution, kdist: DegreeDistribution, q: int = 2,
                  chi: ChiLaw = ChiLaw(), n: int = 0,
                  mode: Union[Mode, str] = Mode.SIMPLE) -> EnsembleSpec:
    """Assemble an ensemble from its parts."""
    return EnsembleSpec(make_field(q), ddist, kdist, chi, n, Mode(mode))


@dataclass(frozen=True)
class TightnessReport:

    """Predicates deciding whether the 2-core bound is tight."""

    tight: TightVerdict
    exception_flag: bool
    phi_small_deriv_at_rho: float
    stable_core: bool


@dataclass(frozen=True)
class AnalyticReport:

    """All closed-form predictions for one ensemble."""

    alpha_star: float
    phi_max: float
    rho: float
    phi_at_rho: float
    phi_at_zero: float
    rank_limit: float
    rate: float
    core_var_fraction: float
    core_check_fraction: float
    tight: TightVerdict
    exception_flag: bool
    phi_small_deriv_at_rho: float
    stable_core: bool
    interior_rho: Optional[float]
    core_bound_gap: float
    core_bound_tight: bool

    def to_dict(self) -> Dict[str, object]:
        """Serialize into a JSON friendly mapping."""
        record = asdict(self)
        record["tight"] = self.tight.value
        return record


def _check_alpha(alpha: Real) -> np.ndarray:
    """Validate arguments of Phi and phi."""
    values = np.asarray(alpha, dtype=np.float64)
    if np.any(values < 0.0) or np.any(values > 1.0) or np.any(np.isnan(values)):
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    return values


def _inner(ens: EnsembleSpec, alpha: np.ndarray) -> np.ndarray:
    """The argument 1 - K'(alpha)/k, clipped against rounding."""
    return np.clip(1.0 - pgf_eval(ens.kdist, alpha, 1) / ens.k, 0.0, 1.0)


def _as_output(alpha: Real, values: np.ndarray) -> Real:
    if np.ndim(alpha) == 0:
        return float(values)
    return values


def phi(ens: EnsembleSpec, alpha: Real) -> Real:
    """Evaluate Phi(alpha)."""
    a = _check_alpha(alpha)
    d, k = ens.d, ens.k
    kp = pgf_eval(ens.kdist, a, 1)
    value = (pgf_eval(ens.ddist, _inner(ens, a), 0)
             + d / k * (pgf_eval(ens.kdist, a, 0) + (1.0 - a) * kp - 1.0))
    return _as_output(alpha, value)


def phi_small(ens: EnsembleSpec, alpha: Real) -> Real:
    """Evaluate phi(alpha) whose zeros are the stationary points of Phi."""
    a = _check_alpha(alpha)
    value = 1.0 - a - pgf_eval(ens.ddist, _inner(ens, a), 1) / ens.d
    return _as_output(alpha, value)


def phi_small_derivative(ens: EnsembleSpec, alpha: Real) -> Real:
    """Evaluate phi'(alpha) through the second derivatives of D and K."""
    a = _check_alpha(alpha)
    value = -1.0 + (pgf_eval(ens.ddist, _inner(ens, a), 2) * pgf_eval(ens.kdist, a, 2)
                    / (ens.d * ens.k))
    return _as_output(alpha, value)


def phi_derivative(ens: EnsembleSpec, alpha: Real) -> Real:
    """Evaluate Phi'(alpha) = d/k * K''(alpha) * phi(alpha)."""
    a = _check_alpha(alpha)
    value = ens.d / ens.k * pgf_eval(ens.kdist, a, 2) * np.asarray(phi_small(ens, a))
    return _as_output(alpha, value)


def _grid() -> np.ndarray:
    return np.linspace(0.0, 1.0, GRID_POINTS)


def _bisect_root(ens: EnsembleSpec, lo: float, hi: float) -> float:
    """Refine a sign change of phi inside [lo, hi]."""
    f_lo = phi_small(ens, lo)
    while hi - lo > ROOT_TOLERANCE:
        mid = 0.5 * (lo + hi)
        f_mid = phi_small(ens, mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _interior_zeros(ens: EnsembleSpec) -> List[float]:
    """Zeros of phi strictly inside (0, 1), in decreasing order."""
    xs = _grid()
    values = phi_small(ens, xs)
    zeros = []
    # scan downward from the top of the grid, the endpoints are not interior
    for i in range(GRID_POINTS - 2, 0, -1):
        if abs(values[i]) < ROOT_TOLERANCE:
            zeros.append(float(xs[i]))
        elif abs(values[i + 1]) >= ROOT_TOLERANCE and (values[i] > 0) != (values[i + 1] > 0):
            zeros.append(_bisect_root(ens, float(xs[i]), float(xs[i + 1])))
    return zeros


def phi_zeros(ens: EnsembleSpec) -> List[float]:
    """All zeros of phi on the open interval (0, 1) in increasing order."""
    return sorted(_interior_zeros(ens))


def interior_rho(ens: EnsembleSpec) -> Optional[float]:
    """Largest zero of phi strictly inside (0, 1), None if there is none."""
    zeros = _interior_zeros(ens)
    return zeros[0] if zeros else None


def rho(ens: EnsembleSpec) -> float:
    """Largest stationary point of Phi on [0, 1]."""
    if abs(phi_small(ens, 1.0)) <= ROOT_TOLERANCE:
        return 1.0
    xs = _grid()
    values = phi_small(ens, xs)
    for i in range(GRID_POINTS - 2, 0, -1):
        if abs(values[i]) < ROOT_TOLERANCE:
            return float(xs[i])
        if (values[i] > 0) != (values[i + 1] > 0):
            return _bisect_root(ens, float(xs[i]), float(xs[i + 1]))
    # Phi'(0) = 0 always since K''(0) = 0
    return 0.0


def _golden_max(ens: EnsembleSpec, a: float, b: float) -> Tuple[float, float]:
    """Golden-section search for a local maximum of Phi on [a, b]."""
    h = b - a
    c = a + INV_GOLDEN_SQUARE * h
    d = a + INV_GOLDEN * h
    yc = phi(ens, c)
    yd = phi(ens, d)
    while h > MAX_TOLERANCE:
        if yc > yd:
            b, d, yd = d, c, yc
            h = INV_GOLDEN * h
            c = a + INV_GOLDEN_SQUARE * h
            yc = phi(ens, c)
        else:
            a, c, yc = c, d, yd
            h = INV_GOLDEN * h
            d = a + INV_GOLDEN * h
            yd = phi(ens, d)
    return (c, yc) if yc > yd else (d, yd)


def max_phi(ens: EnsembleSpec) -> Tuple[float, float]:
    """Global maximum of Phi on [0, 1] as (argmax, value)."""
    xs = _grid()
    values = phi(ens, xs)
    last = GRID_POINTS - 1
    grid_best = float(values.max())
    candidates = [(0.0, float(values[0])), (1.0, float(values[last]))]
    for i in range(last + 1):
        left = values[i - 1] if i > 0 else -np.inf
        right = values[i + 1] if i < last else -np.inf
        if values[i] < left or values[i] < right or (values[i] == left == right):
            continue
        # grid maxima far below the best one cannot win after refinement
        if values[i] < grid_best - REFINE_WINDOW:
            continue
        a = float(xs[max(i - 1, 0)])
        b = float(xs[min(i + 1, last)])
        candidates.append(_golden_max(ens, a, b))
    best_value = max(v for _, v in candidates)
    alpha_star = min(a for a, v in candidates if v >= best_value - TIE_TOLERANCE)
    return alpha_star, float(phi(ens, alpha_star))


def rank_limit(ens: EnsembleSpec) -> float:
    """Limit of rank(A)/n."""
    return 1.0 - max_phi(ens)[1]


def ldpc_rate(ens: EnsembleSpec) -> float:
    """Limit of the design rate of the LDPC code defined by the ensemble."""
    return max_phi(ens)[1]


def core_fractions_at(ens: EnsembleSpec, alpha: float) -> Tuple[float, float]:
    """2-core variable and check fractions evaluated at a given fixed point."""
    if alpha <= 0.0:
        return 0.0, 0.0
    kp = pgf_eval(ens.kdist, alpha, 1) / ens.k
    t = min(max(1.0 - kp, 0.0), 1.0)
    var_fraction = 1.0 - pgf_eval(ens.ddist, t, 0) - kp * pgf_eval(ens.ddist, t, 1)
    check_fraction = ens.d / ens.k * pgf_eval(ens.kdist, alpha, 0)
    return min(max(var_fraction, 0.0), 1.0), min(max(check_fraction, 0.0), 1.0)


def core_fractions(ens: EnsembleSpec) -> Tuple[float, float]:
    """Limits of n*/n and m*/n for the 2-core."""
    r = rho(ens)
    if r > 0.0 and phi_small_derivative(ens, r) >= 0.0:
        logger.warning(
            "phi'(rho) = %g is not negative for %s, the 2-core fractions may not converge",
            phi_small_derivative(ens, r), ens.describe())
    return core_fractions_at(ens, r)


def density_evolution_trace(ens: EnsembleSpec, rounds: int) -> Tuple[List[float], List[float]]:
    """Sequences rho_t and lambda_t of the parallel stripping process, starting at rho_0 = 1."""
    rhos = [1.0]
    lambdas = [core_fractions_at(ens, 1.0)[0]]
    r = 1.0
    for _ in range(rounds):
        r = 1.0 - pgf_eval(ens.ddist, float(_inner(ens, np.float64(r))), 1) / ens.d
        r = min(max(r, 0.0), 1.0)
        rhos.append(r)
        lambdas.append(core_fractions_at(ens, r)[0])
    return rhos, lambdas


def density_evolution(ens: EnsembleSpec, max_iters: int = 100000,
                      tol: float = 1e-12) -> Tuple[float, float, int]:
    """Iterate rho_{t+1} = 1 - D'(1 - K'(rho_t)/k)/d from rho_0 = 1 to its fixed point."""
    if max_iters < 1 or not tol > 0:
        raise DomainError("density evolution needs max_iters >= 1 and tol > 0")
    r = 1.0
    for iteration in range(1, max_iters + 1):
        nxt = 1.0 - pgf_eval(ens.ddist, float(_inner(ens, np.float64(r))), 1) / ens.d
        nxt = min(max(nxt, 0.0), 1.0)
        if abs(nxt - r) < tol:
            return nxt, core_fractions_at(ens, nxt)[0], iteration
        r = nxt
    raise NonConvergence(
        f"density evolution did not settle within {max_iters} iterations, last rho = {r}")


def _theorem_family(dist: DegreeDistribution, min_truncation: int) -> bool:
    """Check whether a law is a point mass or a suitably truncated Poisson law."""
    if dist.family == POINT:
        return True
    if dist.family == TRUNCATED_POISSON:
        return dist.ell >= min_truncation
    return dist.variance <= 1e-12


def tightness_report(ens: EnsembleSpec) -> TightnessReport:
    """Decide tightness of the 2-core bound and the stability of the core."""
    r = rho(ens)
    deriv = float(phi_small_derivative(ens, r))
    p1 = ens.ddist.prob(1)
    p2 = ens.ddist.prob(2)
    exception_flag = p1 == 0.0 and 2.0 * (ens.k - 1.0) * p2 > ens.d
    if _theorem_family(ens.ddist, 1) and _theorem_family(ens.kdist, 3):
        # the closed form must then agree with the global maximum
        gap = max_phi(ens)[1] - max(phi(ens, 0.0), phi(ens, r))
        tight = TightVerdict.YES if gap <= 1e-9 else TightVerdict.NO
        if tight is TightVerdict.NO:
            logger.warning("2-core bound gap %g contradicts tightness for %s",
                           gap, ens.describe())
    else:
        tight = TightVerdict.UNKNOWN
    return TightnessReport(tight, exception_flag, deriv, deriv < 0.0)


def analytic_report(ens: EnsembleSpec) -> AnalyticReport:
    """Compute every closed-form prediction for an ensemble."""
    alpha_star, value = max_phi(ens)
    r = rho(ens)
    phi_rho = float(phi(ens, r))
    phi_zero = float(phi(ens, 0.0))
    var_fraction, check_fraction = core_fractions(ens)
    tightness = tightness_report(ens)
    gap = value - max(phi_zero, phi_rho)
    return AnalyticReport(
        alpha_star=alpha_star,
        phi_max=value,
        rho=r,
        phi_at_rho=phi_rho,
        phi_at_zero=phi_zero,
        rank_limit=1.0 - value,
        rate=value,
        core_var_fraction=var_fraction,
        core_check_fraction=check_fraction,
        tight=tightness.tight,
        exception_flag=tightness.exception_flag,
        phi_small_deriv_at_rho=tightness.phi_small_deriv_at_rho,
        stable_core=tightness.stable_core,
        interior_rho=interior_rho(ens),
        core_bound_gap=gap,
        core_bound_tight=gap <= 1e-9,
    )


def _bethe_chunk(ens: EnsembleSpec, alpha: float, size: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Per-sample values of the Bethe functional at the two-atom message law."""
    d_bar, k_bar = ens.d, ens.k
    degrees = sample_degrees(ens.ddist, rng, size)

    # a check is frozen towards the variable when all its other messages are atoms at zero
    biased = sample_degrees(size_biased(ens.kdist), rng, int(degrees.sum()))
    frozen = rng.binomial(biased - 1, 1.0 - alpha) == 0
    owner = np.repeat(np.arange(size), degrees)
    frozen_checks = np.bincount(owner, weights=frozen.astype(np.float64), minlength=size)
    variable_term = np.where(frozen_checks >= 1, -(degrees - frozen_checks), 1.0 - degrees)

    # the entry law enters only through its support, so it is not drawn
    checks = sample_degrees(ens.kdist, rng, size)
    unfrozen = rng.binomial(checks, 1.0 - alpha) > 0
    check_term = d_bar / k_bar * (checks - 1) * unfrozen
    return variable_term + check_term


def bethe_at_alpha(ens: EnsembleSpec, alpha: float, num_samples: int,
                   seed: int = 0) -> Tuple[float, float]:
    """Monte Carlo estimate of the Bethe free entropy at the two-atom message law."""
    _check_alpha(alpha)
    if num_samples < 1:
        raise DomainError(f"num_samples must be positive, got {num_samples}")
    values = []
    for chunk, start in enumerate(range(0, num_samples, BETHE_CHUNK)):
        size = min(BETHE_CHUNK, num_samples - start)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))
        values.append(_bethe_chunk(ens, float(alpha), size, rng))
    samples = np.concatenate(values)
    if num_samples == 1:
        return float(samples[0]), 0.0
    return float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(num_samples))


def _switched(kdist: DegreeDistribution, lam: float, q: int) -> bool:
    """Check whether Phi is maximized away from zero for d = Po>=1(lam)."""
    ens = make_ensemble(truncated_poisson(1, lam), kdist, q)
    return max_phi(ens)[1] - float(phi(ens, 0.0)) > TIE_TOLERANCE


def locate_transition(kdist: DegreeDistribution = point(3), lo: float = 2.0, hi: float = 4.0,
                      tol: float = 1e-9, q: int = 2) -> Tuple[float, float]:
    """Find the Poisson intensity where the maximizer of Phi leaves zero.

    Variable degrees follow Po>=1(lam). Returns the intensity together with
    the mean degree of the truncated law at the transition.
    """
    if _switched(kdist, lo, q) or not _switched(kdist, hi, q):
        raise Infeasible(f"no full-rank transition bracketed by [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _switched(kdist, mid, q):
            hi = mid
        else:
            lo = mid
    lam = 0.5 * (lo + hi)
    logger.info("full-rank transition at lambda = %.9f", lam)
    return lam, truncated_poisson(1, lam).mean
