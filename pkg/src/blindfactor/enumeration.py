"""Counting circuit components and sizing their bit-string labels."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial, isqrt

import numpy as np

from .circuit import Component, Gate, component_unitary

#: max over 1 <= n <= 8 of s'(n)/n!, attained at n = 8.
COMPONENT_CONSTANT = Fraction(1133233, factorial(8))


@lru_cache(maxsize=None)
def s_prime(n: int) -> int:
    """Number of distinct n-qubit components when CR exponents are ignored."""
    if n < 0:
        return 0
    if n == 0:
        return 1
    total = 3 * s_prime(n - 1) + 2 * (n - 1) * s_prime(n - 2)
    total += sum(comb(n - 1, j) * (n - j) * s_prime(j) for j in range(n - 1))
    return total


@dataclass(frozen=True)
class EnumerationTable:
    values: dict[int, int] = field(default_factory=dict)
    c: Fraction = COMPONENT_CONSTANT

    @classmethod
    def build(cls, n_max: int) -> "EnumerationTable":
        return cls({n: s_prime(n) for n in range(n_max + 1)})

    def ratio(self, n: int) -> Fraction:
        return Fraction(self.values[n], factorial(n))


def _half_power_bound(n: int) -> tuple[int, int]:
    """``(num, squared)`` with ``n**(n/2) == num * sqrt(squared)``."""
    if n % 2 == 0:
        return n ** (n // 2), 1
    return n ** ((n - 1) // 2), n


def component_count_bound(n: int) -> int:
    """``ceil(c * n**(n/2) * n!)``, an upper bound on the number of components."""
    num, rad = _half_power_bound(n)
    exact = COMPONENT_CONSTANT * num * factorial(n)
    if rad == 1:
        return -(-exact.numerator // exact.denominator)
    # smallest v with v * q >= p * sqrt(rad)
    p, q = exact.numerator, exact.denominator
    target = p * p * rad
    v = -(-isqrt(target) // q)
    while (v * q) ** 2 < target:
        v += 1
    while v > 0 and ((v - 1) * q) ** 2 >= target:
        v -= 1
    return v


def bitstring_size_bound(n: int) -> int:
    """``ceil(log2(c * n**(n/2) * n!))`` in exact integer arithmetic."""
    num, rad = _half_power_bound(n)
    lhs = COMPONENT_CONSTANT.numerator * num * factorial(n)
    den = COMPONENT_CONSTANT.denominator
    # smallest b with 2**b * den >= lhs * sqrt(rad)
    b = max(0, (lhs * isqrt(rad) // den).bit_length() - 1)
    while (den << b) ** 2 < lhs * lhs * rad:
        b += 1
    while b > 0 and (den << (b - 1)) ** 2 >= lhs * lhs * rad:
        b -= 1
    return b


def max_depth(N: int, a: int) -> int:
    """Depth bound ``96 floor(log2 a) floor(log2 N)**2`` for a modexp circuit."""
    if N < 3 or not 1 < a < N:
        raise ValueError("need N >= 3 and 1 < a < N")
    la = a.bit_length() - 1
    lN = N.bit_length() - 1
    return 96 * la * lN * lN


def enumerate_components(n: int, k: int = 0) -> list[Component]:
    """Every component on ``n`` qubits, CR exponents fixed to ``k``.

    Works by always deciding the role of the lowest unassigned qubit, which
    visits each gate set exactly once.
    """
    out: list[Component] = []

    def rec(free: tuple[int, ...], gates: list[Gate]):
        if not free:
            out.append(Component(n, tuple(gates)))
            return
        q, rest = free[0], free[1:]
        rec(rest, gates)
        for kind in ("H", "X"):
            rec(rest, gates + [Gate(kind, q)])
        for p in rest:
            others = tuple(x for x in rest if x != p)
            rec(others, gates + [Gate.cr(k, q, p)])
            rec(others, gates + [Gate.cr(k, p, q)])
        m = len(rest)
        for mask in range(1, 1 << m):
            chosen = tuple(rest[i] for i in range(m) if mask >> i & 1)
            others = tuple(rest[i] for i in range(m) if not mask >> i & 1)
            members = (q,) + chosen
            for tgt in members:
                ctrls = tuple(x for x in members if x != tgt)
                rec(others, gates + [Gate.cnot(ctrls, tgt)])

    rec(tuple(range(n)), [])
    return out


def count_distinct_unitaries(components: list[Component], decimals: int = 9) -> int:
    seen = set()
    for c in components:
        u = np.round(component_unitary(c), decimals) + 0.0
        seen.add(u.tobytes())
    return len(seen)
