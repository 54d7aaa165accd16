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

"""Degree distributions, their generating functions and sampling.

Four families are supported:

    point:3                         every node has degree 3
    tpoisson:ell=1,lambda=1.0       Poisson(lambda) conditioned on being >= ell
    tpoisson:ell=1,mean=2.0         the same, lambda solved from the mean
    explicit:3=0.8,15=0.2           finite table of probabilities
    powerlaw:exp=3.5,min=3,max=100  P(l) proportional to l**-exp on [min, max]

Distributions are role agnostic: the constraint that check degrees are at
least three is enforced where ensembles are assembled.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Dict, Mapping, Tuple, Union

import numpy as np

from ffrank.errors import DomainError, FFRankError, Infeasible

logger = logging.getLogger(__name__)

POINT = "point"
TRUNCATED_POISSON = "tpoisson"
EXPLICIT = "explicit"
POWER_LAW = "powerlaw"

FAMILIES = (POINT, TRUNCATED_POISSON, EXPLICIT, POWER_LAW)

# tolerance on the total mass of explicit tables
NORMALIZATION_TOLERANCE = 1e-9

# tail mass dropped when a Poisson law has to be tabulated
TAIL_MASS = 1e-14

Real = Union[float, np.ndarray]


@dataclass(frozen=True)
class DegreeDistribution:

    """Distribution on positive integers.

    Finite families keep their probability table in `pmf` as sorted
    (degree, probability) pairs. Truncated Poisson laws keep only their
    parameters and are evaluated through h-functions.
    """

    family: str
    pmf: Tuple[Tuple[int, float], ...] = ()
    ell: int = 0
    lam: float = 0.0
    exponent: float = 0.0

    @property
    def finite(self) -> bool:
        """Check whether the support is finite."""
        return self.family != TRUNCATED_POISSON

    @cached_property
    def table(self) -> Tuple[np.ndarray, np.ndarray]:
        """Degrees and probabilities as numpy arrays, Poisson tails cut at TAIL_MASS."""
        if self.finite:
            degrees = np.array([d for d, _ in self.pmf], dtype=np.int64)
            probs = np.array([p for _, p in self.pmf], dtype=np.float64)
            return degrees, probs
        return _poisson_table(self.ell, self.lam)

    @property
    def support(self) -> Tuple[int, ...]:
        """Degrees with positive probability (tabulated part for Poisson laws)."""
        return tuple(int(d) for d in self.table[0])

    @property
    def min_degree(self) -> int:
        """Smallest degree with positive probability."""
        if self.family == TRUNCATED_POISSON:
            return self.ell
        return self.pmf[0][0]

    @property
    def max_degree(self) -> int:
        """Largest tabulated degree."""
        return int(self.table[0][-1])

    def prob(self, degree: int) -> float:
        """Probability of a single degree."""
        if self.family == TRUNCATED_POISSON:
            if degree < self.ell:
                return 0.0
            return math.exp(
                degree * math.log(self.lam) - math.lgamma(degree + 1)
                - math.log(h_function(self.ell, self.lam)))
        return dict(self.pmf).get(degree, 0.0)

    @cached_property
    def mean(self) -> float:
        """Expected degree."""
        if self.family == TRUNCATED_POISSON:
            return truncated_poisson_mean(self.ell, self.lam)
        degrees, probs = self.table
        return float(np.dot(degrees, probs))

    @cached_property
    def variance(self) -> float:
        """Variance of the degree."""
        # second factorial moment plus mean minus squared mean
        return max(pgf_eval(self, 1.0, 2) + self.mean - self.mean**2, 0.0)

    def describe(self) -> str:
        """Canonical text form accepted by parse_distribution."""
        if self.family == POINT:
            return f"point:{self.pmf[0][0]}"
        if self.family == TRUNCATED_POISSON:
            return f"tpoisson:ell={self.ell},lambda={self.lam!r}"
        if self.family == POWER_LAW:
            return (f"powerlaw:exp={self.exponent!r},min={self.pmf[0][0]},"
                    f"max={self.pmf[-1][0]}")
        return "explicit:" + ",".join(f"{d}={p!r}" for d, p in self.pmf)

    def __str__(self) -> str:
        """Text form used in logs and reports."""
        return self.describe()

    @cached_property
    def _alias(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Walker alias table for finite laws."""
        degrees, probs = self.table
        k = len(probs)
        scaled = probs * k / probs.sum()
        threshold = np.ones(k)
        alias = np.arange(k)
        small = [i for i in range(k) if scaled[i] < 1.0]
        large = [i for i in range(k) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            g = large.pop()
            threshold[s] = scaled[s]
            alias[s] = g
            scaled[g] -= 1.0 - scaled[s]
            if scaled[g] < 1.0:
                small.append(g)
            else:
                large.append(g)
        return degrees, threshold, alias

    @cached_property
    def _cdf(self) -> Tuple[np.ndarray, np.ndarray]:
        """Cumulative table for inverse transform sampling of Poisson laws."""
        degrees, probs = self.table
        return degrees, np.cumsum(probs)


def point(degree: int) -> DegreeDistribution:
    """Point mass at a single degree."""
    if int(degree) != degree or degree < 1:
        raise DomainError(f"point degree must be a positive integer, got {degree}")
    return DegreeDistribution(POINT, pmf=((int(degree), 1.0),))


def truncated_poisson(ell: int, lam: float) -> DegreeDistribution:
    """Poisson law with intensity lam conditioned on being at least ell."""
    if int(ell) != ell or ell < 1:
        raise DomainError(f"truncation point must be a positive integer, got {ell}")
    if not lam > 0:
        raise DomainError(f"Poisson intensity must be positive, got {lam}")
    return DegreeDistribution(TRUNCATED_POISSON, ell=int(ell), lam=float(lam))


def explicit(pmf: Mapping[int, float]) -> DegreeDistribution:
    """Finite table of degree probabilities, normalized when almost summing to one."""
    items = []
    for degree, p in pmf.items():
        if int(degree) != degree or degree < 1:
            raise DomainError(f"degrees must be positive integers, got {degree}")
        if p < 0:
            raise DomainError(f"negative probability {p} for degree {degree}")
        if p > 0:
            items.append((int(degree), float(p)))
    total = sum(p for _, p in items)
    if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
        raise DomainError(f"probabilities sum to {total}, not to 1")
    items.sort()
    if abs(total - 1.0) > 1e-15:
        items = [(d, p / total) for d, p in items]
    pmf_table = tuple(items)
    if len(pmf_table) == 1:
        return DegreeDistribution(POINT, pmf=((pmf_table[0][0], 1.0),))
    return DegreeDistribution(EXPLICIT, pmf=pmf_table)


def power_law(exponent: float, min_degree: int, max_degree: int) -> DegreeDistribution:
    """Power law l**-exponent restricted to [min_degree, max_degree]."""
    if min_degree < 1 or max_degree < min_degree:
        raise DomainError(f"invalid power law range [{min_degree}, {max_degree}]")
    degrees = np.arange(min_degree, max_degree + 1, dtype=np.float64)
    weights = degrees ** (-float(exponent))
    weights /= weights.sum()
    pmf_table = tuple((int(d), float(w)) for d, w in zip(degrees, weights))
    return DegreeDistribution(POWER_LAW, pmf=pmf_table, exponent=float(exponent))


def h_values(r: int, xs: np.ndarray) -> np.ndarray:
    """Vectorized tail of the exponential series, sum of x**j/j! over j >= r."""
    xs = np.asarray(xs, dtype=np.float64)
    if np.any(xs < 0):
        raise DomainError("h-function arguments must be nonnegative")
    if r <= 0:
        return np.exp(xs)
    out = np.empty_like(xs)

    # the tail dominates, subtraction loses less than one digit
    big = xs >= r + 1
    if np.any(big):
        x = xs[big]
        head = np.zeros_like(x)
        term = np.ones_like(x)
        for j in range(r):
            head += term
            term = term * x / (j + 1)
        out[big] = np.exp(x) - head

    # direct tail summation, ratios x/(j+1) are below one
    small = ~big
    if np.any(small):
        x = xs[small]
        with np.errstate(divide="ignore"):
            term = np.exp(r * np.log(x) - math.lgamma(r + 1))
        total = np.zeros_like(x)
        j = r
        while True:
            total += term
            j += 1
            term = term * x / j
            if np.all(term <= 1e-17 * total):
                break
        out[small] = total
    return out


def h_function(r: int, x: float) -> float:
    """Tail of the exponential series, sum of x**j/j! over j >= r."""
    if x < 0:
        raise DomainError(f"h-function argument must be nonnegative, got {x}")
    return float(h_values(r, np.array([x], dtype=np.float64))[0])


def truncated_poisson_mean(ell: int, lam: float) -> float:
    """Mean of Poisson(lam) conditioned on being at least ell."""
    if lam <= 0:
        return float(ell)
    # mean = lam * (1 + 1/s) with s = h_ell(lam) * (ell-1)! / lam**(ell-1)
    s = 0.0
    term = lam / ell
    i = 1
    while True:
        s += term
        if math.isinf(s):
            return lam
        i += 1
        term *= lam / (ell + i - 1)
        if term < 1e-17 * s and ell + i > lam:
            break
    return lam * (1.0 + 1.0 / s)


def solve_truncated_poisson(ell: int, target_mean: float) -> float:
    """Find the intensity whose truncated Poisson law has the requested mean."""
    if target_mean <= ell:
        raise Infeasible(
            f"the mean of a Poisson law truncated at {ell} exceeds {ell}, "
            f"target {target_mean} is unreachable")
    lo, hi = 1e-12, max(10.0 * target_mean, 50.0)
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        value = truncated_poisson_mean(ell, mid)
        if abs(value - target_mean) <= 1e-12 * max(1.0, target_mean):
            return mid
        if value < target_mean:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return 0.5 * (lo + hi)


def _poisson_table(ell: int, lam: float) -> Tuple[np.ndarray, np.ndarray]:
    """Tabulate a truncated Poisson law until the remaining mass drops below TAIL_MASS."""
    log_norm = math.log(h_function(ell, lam))
    degrees = []
    probs = []
    cumulative = 0.0
    j = ell
    while True:
        p = math.exp(j * math.log(lam) - math.lgamma(j + 1) - log_norm)
        degrees.append(j)
        probs.append(p)
        cumulative += p
        if cumulative >= 1.0 - TAIL_MASS and j > lam:
            break
        j += 1
    probs_np = np.array(probs)
    return np.array(degrees, dtype=np.int64), probs_np / probs_np.sum()


def pgf_eval(dist: DegreeDistribution, x: Real, order: int = 0) -> Real:
    """Evaluate the generating function or one of its first three derivatives."""
    if order not in (0, 1, 2, 3):
        raise DomainError(f"derivative order must be between 0 and 3, got {order}")
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if np.any(xs < 0.0) or np.any(xs > 1.0):
        raise DomainError(f"generating functions are evaluated on [0, 1], got {x}")

    if dist.family == TRUNCATED_POISSON:
        lam = dist.lam
        norm = h_function(dist.ell, lam)
        values = lam**order * h_values(dist.ell - order, lam * xs) / norm
    else:
        degrees, probs = dist.table
        mask = degrees >= order
        degrees, probs = degrees[mask], probs[mask]
        falling = np.ones_like(probs)
        for i in range(order):
            falling = falling * (degrees - i)
        # 0.0 ** 0 evaluates to 1
        powers = np.power.outer(xs, (degrees - order).astype(np.float64))
        values = powers @ (probs * falling)

    if scalar:
        return float(values[0])
    return values


def size_biased(dist: DegreeDistribution) -> DegreeDistribution:
    """Law of the degree seen from a uniformly random edge end."""
    if dist.family == POINT:
        return dist
    degrees, probs = dist.table
    weights = degrees * probs
    weights = weights / weights.sum()
    return explicit({int(d): float(w) for d, w in zip(degrees, weights)})


def sample_degrees(dist: DegreeDistribution, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw size independent degrees."""
    if dist.family == POINT:
        return np.full(size, dist.pmf[0][0], dtype=np.int64)
    if dist.family == TRUNCATED_POISSON:
        degrees, cdf = dist._cdf
        idx = np.searchsorted(cdf, rng.random(size) * cdf[-1], side="right")
        return degrees[np.minimum(idx, len(degrees) - 1)]
    degrees, threshold, alias = dist._alias
    idx = rng.integers(0, len(degrees), size=size)
    keep = rng.random(size) < threshold[idx]
    return np.where(keep, degrees[idx], degrees[alias[idx]])


def sample_degree(dist: DegreeDistribution, rng: np.random.Generator) -> int:
    """Draw a single degree."""
    return int(sample_degrees(dist, rng, 1)[0])


def gcd_support(dist: DegreeDistribution) -> int:
    """Greatest common divisor of the degrees with positive probability."""
    if dist.family == TRUNCATED_POISSON:
        # contains two consecutive integers
        return 1
    return reduce(math.gcd, (d for d, _ in dist.pmf))


def _parse_params(family: str, body: str) -> Dict[str, str]:
    """Split key=value pairs of a distribution description."""
    params = {}
    for item in body.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise DomainError(f"expected key=value in '{family}:{body}', got '{item}'")
        key, value = item.split("=", 1)
        params[key.strip()] = value.strip()
    return params


def parse_distribution(text: str) -> DegreeDistribution:
    """Parse a textual distribution description."""
    family, sep, body = text.strip().partition(":")
    family = family.strip().lower()
    if not sep or family not in FAMILIES:
        raise DomainError(
            f"unknown degree distribution '{text}', expected one of {', '.join(FAMILIES)}")
    try:
        if family == POINT:
            return point(int(body))
        params = _parse_params(family, body)
        if family == EXPLICIT:
            return explicit({int(k): float(v) for k, v in params.items()})
        if family == POWER_LAW:
            return power_law(float(params["exp"]), int(params["min"]), int(params["max"]))
        ell = int(params.get("ell", "1"))
        if "lambda" in params:
            return truncated_poisson(ell, float(params["lambda"]))
        if "mean" in params:
            return truncated_poisson(ell, solve_truncated_poisson(ell, float(params["mean"])))
        raise DomainError(f"truncated Poisson needs lambda or mean: '{text}'")
    except (KeyError, ValueError) as e:
        if isinstance(e, FFRankError):
            raise
        raise DomainError(f"malformed degree distribution '{text}': {e}") from e
