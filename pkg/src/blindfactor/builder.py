"""Compiled period-finding circuits over the primitive gate set.

The second register holds a codeword for ``a**x mod N`` rather than the
residue itself.  Modexp is written as ``s ^= code(e(x) mod r)`` where
``e(x)`` is the exponent held by the first register: every output bit of
``code`` is expanded into its algebraic normal form over the first-register
bits, and each monomial becomes a NOT (empty monomial) or a C^l NOT
controlled by the monomial's qubits.  All second-register gates therefore
commute with X on any second-register qubit, which the blind execution
relies on.

First-register qubit ``j`` carries exponent weight ``2**(t-1-j)`` so that the
textbook inverse QFT without swaps leaves bit ``j`` of the outcome on qubit
``j``.  The controlled rotations use positive phases; the reduced state of the
first register is real, so the outcome statistics are those of the exact
inverse transform.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import permutations
from math import gcd
from typing import Sequence, Union

import numpy as np

from .circuit import Circuit, Gate, schedule
from .classical import orbit as _orbit
from .errors import EncodingError, PreconditionError

MAX_QUBITS = 12


@dataclass(frozen=True)
class CompiledEncoding:
    orbit: tuple[int, ...]
    codewords: tuple[int, ...]
    L: int

    def __post_init__(self):
        if len(set(self.codewords)) != len(self.codewords):
            raise EncodingError("codewords must be distinct")
        if len(self.codewords) != len(self.orbit):
            raise EncodingError("one codeword per orbit residue")
        if any(not 0 <= c < 1 << self.L for c in self.codewords):
            raise EncodingError(f"codewords must fit in {self.L} bits")

    @property
    def r(self) -> int:
        return len(self.orbit)

    @property
    def initial(self) -> int:
        """Codeword of ``f(0) = 1``."""
        return self.codewords[0]

    def codeword(self, residue: int) -> int:
        return self.codewords[self.orbit.index(residue)]


EncodingSpec = Union[None, str, Sequence[int]]


def make_encoding(N: int, a: int, L: int, encoding: EncodingSpec = None) -> CompiledEncoding:
    """Codeword map: ``None``/``"binary"`` (position i -> i), ``"gray"``, or explicit list.

    ``shor_circuit`` additionally accepts ``"search"`` (see :func:`search_encoding`).
    """
    orb = tuple(_orbit(a, N))
    r = len(orb)
    if r > 1 << L:
        raise EncodingError(f"orbit of {a} mod {N} has size {r}, more than the {1 << L} codewords of L = {L}")
    if encoding is None or encoding == "binary":
        words = tuple(range(r))
    elif encoding == "gray":
        words = tuple(i ^ (i >> 1) for i in range(r))
    elif encoding == "search":
        raise EncodingError("the search encoding needs t; use search_encoding()")
    elif isinstance(encoding, str):
        raise EncodingError(f"unknown encoding {encoding!r}")
    else:
        words = tuple(int(w) for w in encoding)
    return CompiledEncoding(orb, words, L)


def anf(truth: np.ndarray) -> np.ndarray:
    """Algebraic normal form coefficients of a Boolean function (Moebius transform)."""
    coef = np.array(truth, dtype=np.uint8) & 1
    n = int(np.log2(len(coef)))
    for i in range(n):
        step = 1 << i
        for base in range(0, len(coef), step << 1):
            coef[base + step:base + 2 * step] ^= coef[base:base + step]
    return coef


def exponent_of(index: int, t: int) -> int:
    """Exponent encoded by first-register basis index (qubit j has weight 2**(t-1-j))."""
    return sum(1 << (t - 1 - j) for j in range(t) if index >> j & 1)


def modexp_gates(enc: CompiledEncoding, t: int) -> list[Gate]:
    """NOT / C^l NOT gates computing ``s ^= code(e(x) mod r)``."""
    table = np.array([enc.codewords[exponent_of(i, t) % enc.r] for i in range(1 << t)])
    gates = []
    for b in range(enc.L):
        coef = anf((table >> b) & 1)
        for mono in np.flatnonzero(coef):
            controls = tuple(j for j in range(t) if mono >> j & 1)
            target = t + b
            gates.append(Gate.x(target) if not controls else Gate.cnot(controls, target))
    gates.sort(key=lambda g: (len(g.controls), g.controls, g.target))
    return gates


def search_encoding(N: int, a: int, t: int, L: int, limit: int = 200_000) -> CompiledEncoding:
    """Codeword map with the fewest non-Clifford modexp gates.

    Ties go to fewer gates overall, then to the lexicographically smallest
    codeword tuple.  Exhaustive over injective maps, so only for small L.
    """
    base = make_encoding(N, a, L)
    r = base.r
    total = 1
    for i in range(r):
        total *= (1 << L) - i
    if total > limit:
        raise EncodingError(f"{total} codeword maps exceed the search limit {limit}")
    best = None
    for words in permutations(range(1 << L), r):
        gates = modexp_gates(CompiledEncoding(base.orbit, words, L), t)
        key = (sum(1 for g in gates if not g.is_clifford), len(gates), words)
        if best is None or key < best:
            best = key
    return CompiledEncoding(base.orbit, best[2], L)


def qft_gates(t: int) -> list[Gate]:
    return [Gate.h(j) for j in range(t)]


def inverse_qft_gates(t: int) -> list[Gate]:
    gates = []
    for m in range(t):
        for i in range(m):
            gates.append(Gate.cr(m - i, i, m))
        gates.append(Gate.h(m))
    return gates


def shor_circuit(N: int, a: int, t: int, L: int, encoding: EncodingSpec = None) -> Circuit:
    """Compiled period-finding circuit for ``f(x) = a**x mod N`` on ``t + L`` qubits."""
    if gcd(a, N) != 1 or not 1 < a < N:
        raise PreconditionError(f"base {a} must satisfy 1 < a < {N} and gcd(a, N) = 1")
    if t < 1 or L < 1:
        raise PreconditionError("both registers need at least one qubit")
    n = t + L
    if n > MAX_QUBITS:
        raise PreconditionError(f"t + L = {n} exceeds {MAX_QUBITS}")
    if encoding == "search":
        enc = search_encoding(N, a, t, L)
    else:
        enc = make_encoding(N, a, L, encoding)
    gates = qft_gates(t) + modexp_gates(enc, t) + inverse_qft_gates(t)
    return Circuit(n, t, L, tuple(schedule(n, gates)))


@dataclass(frozen=True)
class Census:
    counts: dict[str, int]
    clifford: int
    non_clifford: int
    depth: int

    @property
    def non_clifford_counts(self) -> dict[str, int]:
        return {k: v for k, v in self.counts.items() if not _label_is_clifford(k)}

    def to_json(self) -> dict:
        return {
            "counts": dict(sorted(self.counts.items())),
            "clifford": self.clifford,
            "non_clifford": self.non_clifford,
            "non_clifford_counts": dict(sorted(self.non_clifford_counts.items())),
            "depth": self.depth,
        }


def _label_is_clifford(label: str) -> bool:
    return label in ("H", "X", "CR0", "CNOT")


def gate_census(C: Circuit) -> Census:
    counts = Counter(g.label for g in C.gates())
    non = sum(v for k, v in counts.items() if not _label_is_clifford(k))
    return Census(dict(counts), sum(counts.values()) - non, non, C.depth)
