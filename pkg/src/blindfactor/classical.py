"""Classical side of period finding: modexp, period checks, continued fractions."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd as _gcd, isqrt
from typing import Iterable, Optional

import numpy as np

from .errors import PreconditionError
from .statevec import Distribution


def modexp(a: int, x: int, N: int) -> int:
    if N < 2:
        raise ValueError("modulus must be at least 2")
    result, base = 1 % N, a % N
    while x:
        if x & 1:
            result = result * base % N
        base = base * base % N
        x >>= 1
    return result


def gcd(u: int, v: int) -> int:
    u, v = abs(u), abs(v)
    while v:
        u, v = v, u % v
    return u


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


def order(a: int, N: int) -> int:
    """Multiplicative order of ``a`` modulo ``N`` by brute force."""
    if _gcd(a, N) != 1:
        raise PreconditionError(f"gcd({a}, {N}) != 1")
    v, r = a % N, 1
    while v != 1 % N:
        v = v * a % N
        r += 1
    return r


def orbit(a: int, N: int) -> list[int]:
    """Residues ``[1, a, a^2, ...]`` up to the period."""
    return [modexp(a, x, N) for x in range(order(a, N))]


@dataclass(frozen=True)
class FactorInstance:
    N: int
    a: int
    r: Optional[int] = None
    p: Optional[int] = None
    q: Optional[int] = None

    def __post_init__(self):
        if self.N < 3 or self.N % 2 == 0:
            raise PreconditionError(f"N = {self.N} must be an odd integer >= 3")
        if not 1 < self.a < self.N or _gcd(self.a, self.N) != 1:
            raise PreconditionError(f"base {self.a} must satisfy 1 < a < N and gcd(a, N) = 1")
        if self.r is not None and modexp(self.a, self.r, self.N) != 1:
            raise PreconditionError(f"{self.a}^{self.r} != 1 mod {self.N}")
        if self.p is not None and self.q is not None:
            if self.p * self.q != self.N or self.p == self.q or not (is_prime(self.p) and is_prime(self.q)):
                raise PreconditionError(f"{self.p} * {self.q} is not a factorization of {self.N}")

    @classmethod
    def solved(cls, N: int, a: int) -> "FactorInstance":
        """Instance with period and factors filled in by brute force (small N only)."""
        r = order(a, N)
        p = next(f for f in range(3, N, 2) if N % f == 0)
        return cls(N, a, r, p, N // p)


@dataclass(frozen=True)
class ConvergentCandidate:
    d: int
    s: int
    error: Fraction


def continued_fraction(x: Fraction) -> list[int]:
    terms = []
    num, den = x.numerator, x.denominator
    while den:
        q = num // den
        terms.append(q)
        num, den = den, num - q * den
    return terms


def all_convergents(x: Fraction) -> list[Fraction]:
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    out = []
    for a in continued_fraction(x):
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        out.append(Fraction(h1, k1))
    return out


def convergents(y: int, t: int, N: int) -> list[ConvergentCandidate]:
    """Convergents ``d/s`` of ``y/2**t`` with ``s < N`` and error below ``2**-(t+1)``."""
    if not 0 <= y < 1 << t:
        raise ValueError(f"outcome {y} out of range for t = {t}")
    x = Fraction(y, 1 << t)
    bound = Fraction(1, 1 << (t + 1))
    found = {}
    for c in all_convergents(x):
        err = abs(c - x)
        if c.denominator < N and err < bound:
            found.setdefault(c.denominator, ConvergentCandidate(c.numerator, c.denominator, err))
    return [found[s] for s in sorted(found)]


def _half_power(s: int, a: int, N: int) -> Optional[int]:
    """``a^(s/2) mod N``; for odd ``s`` this needs ``a`` to be a perfect square."""
    if s % 2 == 0:
        return modexp(a, s // 2, N)
    w = isqrt(a)
    if w * w != a:
        return None
    return modexp(w, s, N)


def validate_period(s: int, a: int, N: int) -> bool:
    if s < 1:
        raise PreconditionError("candidate period must be >= 1")
    if modexp(a, s, N) != 1:
        return False
    h = _half_power(s, a, N)
    return h is not None and h != N - 1


def factors_from_period(r: int, a: int, N: int) -> Optional[tuple[int, int]]:
    """``(gcd(a^(r/2) + 1, N), gcd(a^(r/2) - 1, N))``, or None if either is trivial."""
    if r < 1 or not validate_period(r, a, N):
        raise PreconditionError(f"{r} is not a usable period of {a} mod {N}")
    h = _half_power(r, a, N)
    p, q = gcd(h + 1, N), gcd(h - 1, N)
    if p in (1, N) or q in (1, N):
        return None
    return p, q


def heuristic_scan(s: int, radius: int = 2, max_multiple: int = 4) -> list[int]:
    """Order in which neighbours of a candidate are tried."""
    out = [s]
    for off in range(1, radius + 1):
        out.extend([s - off, s + off])
    out.extend(m * s for m in range(2, max_multiple + 1))
    return [v for v in out if v >= 1]


def heuristic_extend(candidates: Iterable[int], a: int, N: int,
                     radius: int = 2, max_multiple: int = 4) -> Optional[int]:
    if radius < 1 or max_multiple < 1:
        raise ValueError("radius and max_multiple must be >= 1")
    for s in candidates:
        for v in heuristic_scan(s, radius, max_multiple):
            if validate_period(v, a, N):
                return v
    return None


@dataclass(frozen=True)
class PostprocessResult:
    y: int
    candidates: tuple[ConvergentCandidate, ...]
    period: Optional[int]
    via_heuristic: bool
    factors: Optional[tuple[int, int]]


def postprocess(y: int, t: int, N: int, a: int, heuristic: bool = False,
                radius: int = 2, max_multiple: int = 4) -> PostprocessResult:
    """Outcome -> convergents -> period check (-> heuristic) -> factors."""
    cands = tuple(convergents(y, t, N))
    period = next((c.s for c in cands if validate_period(c.s, a, N)), None)
    via = False
    if period is None and heuristic:
        period = heuristic_extend([c.s for c in cands], a, N, radius, max_multiple)
        via = period is not None
    facs = factors_from_period(period, a, N) if period is not None else None
    if facs is not None:
        facs = tuple(sorted(facs))
    return PostprocessResult(y, cands, period, via, facs)


def ideal_qpe_distribution(N: int, a: int, t: int) -> Distribution:
    """Exact first-register distribution of an uncompiled period-finding circuit.

    ``P(y) = 2**(-2t) sum_v |sum_{x: a^x = v} exp(2 pi i x y / 2**t)|**2``.
    """
    if t > 12:
        raise ValueError("t > 12 not supported")
    r = order(a, N)
    T = 1 << t
    x = np.arange(T)
    y = np.arange(T)
    phases = np.exp(2j * np.pi * np.outer(y, x) / T)
    probs = np.zeros(T)
    for rho in range(r):
        amp = phases[:, x % r == rho].sum(axis=1)
        probs += np.abs(amp) ** 2
    probs /= T * T
    return Distribution.from_array(tuple(range(t)), probs)
