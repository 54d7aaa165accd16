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

"""Exact arithmetic in the finite field GF(q) for prime powers q <= 2**16.

Elements are plain integers in [0, q). For q = p**e the integer
c_0 + c_1*p + ... + c_{e-1}*p**(e-1) encodes the polynomial
c_0 + c_1*x + ... + c_{e-1}*x**(e-1) reduced modulo the field modulus.

Multiplication and division go through discrete log/antilog tables built
when the field is constructed. In odd characteristic extension fields the
addition goes through a Zech logarithm table, in characteristic two it is
a plain XOR and in prime fields it is integer arithmetic modulo p.
"""

import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from ffrank.errors import DivisionByZero, DomainError, NotAPrimePower

logger = logging.getLogger(__name__)

# largest supported field order
MAX_ORDER = 2**16

# field element is just an integer in [0, q)
FieldElement = int

# supported operations accepted by field_op
OPERATIONS = ("add", "sub", "mul", "div")


def _factor_prime_power(q: int) -> Tuple[int, int]:
    """Return (p, e) such that q == p**e, raise NotAPrimePower otherwise."""
    if q < 2:
        raise NotAPrimePower(f"{q} is not a prime power (q must be at least 2)")
    p = next(d for d in range(2, q + 1) if q % d == 0)
    e = 0
    rest = q
    while rest % p == 0:
        rest //= p
        e += 1
    if rest != 1:
        raise NotAPrimePower(f"{q} has at least two distinct prime factors")
    return p, e


def _poly_mod(poly: List[int], modulus: List[int], p: int) -> List[int]:
    """Remainder of poly divided by a monic modulus over GF(p), low-to-high coefficients."""
    rem = [c % p for c in poly]
    deg = len(modulus) - 1
    for shift in range(len(rem) - 1 - deg, -1, -1):
        lead = rem[shift + deg]
        if lead:
            for i, c in enumerate(modulus):
                rem[shift + i] = (rem[shift + i] - lead * c) % p
    return rem[:deg] if deg > 0 else []


def _is_irreducible(modulus: List[int], p: int) -> bool:
    """Check irreducibility of a monic polynomial by trial division."""
    e = len(modulus) - 1
    # a reducible polynomial has a monic factor of degree at most e/2
    for degree in range(1, e // 2 + 1):
        for lower in product(range(p), repeat=degree):
            divisor = list(lower) + [1]
            if not any(_poly_mod(modulus, divisor, p)):
                return False
    return True


def _smallest_irreducible(p: int, e: int) -> List[int]:
    """Find the lexicographically smallest monic irreducible polynomial of degree e."""
    # candidates ordered by the integer encoding of their lower coefficients,
    # which compares the highest differing coefficient first
    for code in range(p**e):
        lower = [(code // p**i) % p for i in range(e)]
        if lower[0] == 0:
            # divisible by x
            continue
        candidate = lower + [1]
        if _is_irreducible(candidate, p):
            return candidate
    raise AssertionError(f"no irreducible polynomial of degree {e} over GF({p})")


def _distinct_prime_factors(n: int) -> List[int]:
    """Distinct prime factors of a positive integer."""
    factors = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            factors.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        factors.append(n)
    return factors


@dataclass(frozen=True)
class FieldSpec:

    """Finite field GF(q) with q = p**e together with its lookup tables."""

    q: int
    p: int
    e: int
    modulus: Tuple[int, ...]
    primitive_element: int = field(default=1, compare=False)
    _exp: List[int] = field(default_factory=list, repr=False, compare=False)
    _log: List[int] = field(default_factory=list, repr=False, compare=False)
    _zech: List[Optional[int]] = field(default_factory=list, repr=False, compare=False)
    _inv: List[int] = field(default_factory=list, repr=False, compare=False)

    def __getstate__(self) -> Dict[str, int]:
        """Pickle only the defining parameters, the tables are rebuilt."""
        return {"q": self.q}

    def __setstate__(self, state: Dict[str, int]) -> None:
        """Rebuild the tables after unpickling."""
        rebuilt = make_field(state["q"])
        for name in rebuilt.__dataclass_fields__:
            object.__setattr__(self, name, getattr(rebuilt, name))

    def __hash__(self) -> int:
        """Hash by field parameters."""
        return hash((self.q, self.p, self.e, self.modulus))

    # scalar arithmetic

    def valid(self, a: int) -> bool:
        """Check that the integer encodes an element of this field."""
        return 0 <= a < self.q

    def add(self, a: FieldElement, b: FieldElement) -> FieldElement:
        """Add two field elements."""
        if self.e == 1:
            return (a + b) % self.p
        if self.p == 2:
            return a ^ b
        if a == 0:
            return b
        if b == 0:
            return a
        la = self._log[a]
        z = self._zech[(self._log[b] - la) % (self.q - 1)]
        if z is None:
            return 0
        return self._exp[la + z]

    def neg(self, a: FieldElement) -> FieldElement:
        """Additive inverse."""
        if self.e == 1:
            return (-a) % self.p
        if self.p == 2 or a == 0:
            return a
        # -1 is the unique element of multiplicative order two
        return self._exp[self._log[a] + (self.q - 1) // 2]

    def sub(self, a: FieldElement, b: FieldElement) -> FieldElement:
        """Subtract b from a."""
        return self.add(a, self.neg(b))

    def mul(self, a: FieldElement, b: FieldElement) -> FieldElement:
        """Multiply two field elements."""
        if a == 0 or b == 0:
            return 0
        if self.e == 1:
            return (a * b) % self.p
        return self._exp[self._log[a] + self._log[b]]

    def inv(self, a: FieldElement) -> FieldElement:
        """Multiplicative inverse of a nonzero element."""
        if a == 0:
            raise DivisionByZero("zero has no multiplicative inverse")
        return self._inv[a]

    def div(self, a: FieldElement, b: FieldElement) -> FieldElement:
        """Divide a by a nonzero b."""
        if b == 0:
            raise DivisionByZero("division by zero field element")
        return self.mul(a, self._inv[b])

    def pow(self, a: FieldElement, exponent: int) -> FieldElement:
        """Raise an element to a nonnegative integer power."""
        if exponent == 0:
            return 1
        if a == 0:
            return 0
        return self._exp[(self._log[a] * exponent) % (self.q - 1)]

    def elements(self) -> Iterator[FieldElement]:
        """Iterate over all field elements."""
        return iter(range(self.q))

    def nonzero_elements(self) -> Iterator[FieldElement]:
        """Iterate over the multiplicative group."""
        return iter(range(1, self.q))

    # vectorized arithmetic over numpy integer arrays

    def add_array(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Elementwise sum of two arrays of field elements."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.e == 1:
            return (a + b) % self.p
        if self.p == 2:
            return a ^ b
        a, b = np.broadcast_arrays(a, b)
        out = np.where(a == 0, b, a).astype(np.int64)
        both = (a != 0) & (b != 0)
        if np.any(both):
            la = self._log_np[a[both]]
            diff = (self._log_np[b[both]] - la) % (self.q - 1)
            z = self._zech_np[diff]
            out[both] = np.where(z < 0, 0, self._exp_np[la + np.maximum(z, 0)])
        return out

    def neg_array(self, a: np.ndarray) -> np.ndarray:
        """Elementwise additive inverse."""
        a = np.asarray(a, dtype=np.int64)
        if self.e == 1:
            return (-a) % self.p
        if self.p == 2:
            return a.copy()
        return np.where(a == 0, 0, self._exp_np[self._log_np[a] + (self.q - 1) // 2])

    def sub_array(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Elementwise difference."""
        return self.add_array(a, self.neg_array(b))

    def mul_array(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Elementwise product."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.e == 1:
            return (a * b) % self.p
        a, b = np.broadcast_arrays(a, b)
        return np.where(
            (a == 0) | (b == 0), 0, self._exp_np[self._log_np[a] + self._log_np[b]],
        )

    def inv_array(self, a: np.ndarray) -> np.ndarray:
        """Elementwise inverse, zero entries are rejected."""
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise DivisionByZero("zero has no multiplicative inverse")
        return self._inv_np[a]

    @property
    def _exp_np(self) -> np.ndarray:
        return self._numpy_tables()[0]

    @property
    def _log_np(self) -> np.ndarray:
        return self._numpy_tables()[1]

    @property
    def _zech_np(self) -> np.ndarray:
        return self._numpy_tables()[2]

    @property
    def _inv_np(self) -> np.ndarray:
        return self._numpy_tables()[3]

    def _numpy_tables(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Numpy copies of the lookup tables, built lazily once per field."""
        cached = self.__dict__.get("_np_tables")
        if cached is None:
            zech = [-1 if z is None else z for z in self._zech]
            cached = (
                np.asarray(self._exp, dtype=np.int64),
                np.asarray(self._log, dtype=np.int64),
                np.asarray(zech, dtype=np.int64),
                np.asarray(self._inv, dtype=np.int64),
            )
            # frozen dataclass, write around __setattr__
            self.__dict__["_np_tables"] = cached
        return cached

    def to_record(self) -> Dict[str, object]:
        """Serialize the field description into a JSON friendly mapping."""
        return {"q": self.q, "p": self.p, "e": self.e, "modulus": list(self.modulus)}


def _mulmod_factory(p: int, e: int, modulus: List[int]):
    """Return a slow polynomial multiplication used only to build tables."""
    if e == 1:
        return lambda a, b: (a * b) % p

    if p == 2:
        mod_int = sum(c << i for i, c in enumerate(modulus))

        def mul2(a: int, b: int) -> int:
            # carryless multiplication followed by reduction
            result = 0
            while b:
                if b & 1:
                    result ^= a
                b >>= 1
                a <<= 1
                if a >> e & 1:
                    a ^= mod_int
            return result

        return mul2

    def digits(a: int) -> List[int]:
        return [(a // p**i) % p for i in range(e)]

    def mulp(a: int, b: int) -> int:
        da, db = digits(a), digits(b)
        prod = [0] * (2 * e - 1)
        for i, x in enumerate(da):
            if x:
                for j, y in enumerate(db):
                    prod[i + j] += x * y
        rem = _poly_mod(prod, modulus, p)
        return sum(c * p**i for i, c in enumerate(rem))

    return mulp


def _find_primitive(q: int, mul) -> int:
    """Smallest generator of the multiplicative group."""
    if q == 2:
        return 1
    order = q - 1
    cofactors = [order // r for r in _distinct_prime_factors(order)]

    def power(a: int, k: int) -> int:
        result = 1
        while k:
            if k & 1:
                result = mul(result, a)
            a = mul(a, a)
            k >>= 1
        return result

    for g in range(2, q):
        if all(power(g, c) != 1 for c in cofactors):
            return g
    raise AssertionError(f"no primitive element found in GF({q})")


def make_field(q: int) -> FieldSpec:
    """Construct GF(q) with the lexicographically smallest irreducible modulus."""
    if q > MAX_ORDER:
        raise DomainError(f"field order {q} exceeds the supported maximum {MAX_ORDER}")
    p, e = _factor_prime_power(q)

    if e == 1:
        # identity placeholder, prime fields need no reduction polynomial
        modulus = [0, 1]
    else:
        modulus = _smallest_irreducible(p, e)
        assert _is_irreducible(modulus, p), "modulus must be irreducible"

    mul = _mulmod_factory(p, e, modulus)
    g = _find_primitive(q, mul)

    # antilog table is doubled so that exp[log a + log b] needs no reduction
    exp = [1] * (2 * (q - 1))
    log = [0] * q
    value = 1
    for i in range(q - 1):
        exp[i] = value
        log[value] = i
        value = mul(value, g)
    exp[q - 1:] = exp[: q - 1]

    inverse = [0] * q
    for a in range(1, q):
        inverse[a] = exp[(q - 1 - log[a]) % (q - 1)]

    zech: List[Optional[int]] = []
    if e > 1 and p != 2:
        # Zech logarithm: g**zech[k] == 1 + g**k, None when the sum vanishes
        for k in range(q - 1):
            a = exp[k]
            c0 = a % p
            one_plus = a - c0 + (c0 + 1) % p
            zech.append(None if one_plus == 0 else log[one_plus])

    logger.debug("constructed GF(%d) with modulus %s and generator %d", q, modulus, g)
    return FieldSpec(
        q=q, p=p, e=e, modulus=tuple(modulus), primitive_element=g,
        _exp=exp, _log=log, _zech=zech, _inv=inverse,
    )


def field_op(f: FieldSpec, op: str, a: FieldElement, b: FieldElement) -> FieldElement:
    """Apply one of the operations add, sub, mul and div."""
    if not (f.valid(a) and f.valid(b)):
        raise DomainError(f"operands {a}, {b} are not elements of GF({f.q})")
    if op == "add":
        return f.add(a, b)
    if op == "sub":
        return f.sub(a, b)
    if op == "mul":
        return f.mul(a, b)
    if op == "div":
        return f.div(a, b)
    raise DomainError(f"unknown field operation '{op}', expected one of {OPERATIONS}")


def inverse(f: FieldSpec, a: FieldElement) -> FieldElement:
    """Multiplicative inverse of a nonzero element."""
    if not f.valid(a):
        raise DomainError(f"{a} is not an element of GF({f.q})")
    return f.inv(a)
