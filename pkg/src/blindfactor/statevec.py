"""Exact dense state-vector simulation.

Qubit 0 is the least significant bit of basis indices and of outcome strings,
so an outcome string is written with qubit 0 as its rightmost character.
For bipartite runs the A-side block is qubits ``[0, n)`` and the B-side block
is ``[n, 2n)``; EPR pair ``i`` links qubit ``i`` with qubit ``n + i``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import _kernels as K
from .circuit import Circuit, Component
from .errors import SizeError

MAX_QUBITS = 14


@dataclass
class StateVector:
    m: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (1 << self.m,):
            raise ValueError("amplitude vector has the wrong length")

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> "StateVector":
        return StateVector(self.m, self.amplitudes.copy())


@dataclass(frozen=True)
class Distribution:
    """Outcome probabilities for ``qubits``; keys are integers over those qubits."""

    qubits: tuple[int, ...]
    probs: Mapping[int, float]

    @property
    def width(self) -> int:
        return len(self.qubits)

    def bitstring(self, outcome: int) -> str:
        return format(outcome, f"0{self.width}b") if self.width else ""

    def as_bitstrings(self) -> dict[str, float]:
        return {self.bitstring(k): v for k, v in sorted(self.probs.items())}

    def __getitem__(self, outcome) -> float:
        if isinstance(outcome, str):
            outcome = int(outcome, 2) if outcome else 0
        return self.probs.get(outcome, 0.0)

    def as_array(self) -> np.ndarray:
        out = np.zeros(1 << self.width)
        for k, v in self.probs.items():
            out[k] = v
        return out

    def total_variation(self, other: "Distribution") -> float:
        return 0.5 * float(np.abs(self.as_array() - other.as_array()).sum())

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("outcome,probability\n")
        for k in sorted(self.probs):
            buf.write(f"{self.bitstring(k)},{_fmt(self.probs[k])}\n")
        return buf.getvalue()

    @classmethod
    def from_array(cls, qubits, arr, cutoff=1e-14) -> "Distribution":
        return cls(tuple(qubits), {int(i): float(arr[i]) for i in np.flatnonzero(arr > cutoff)})


def _fmt(p: float) -> str:
    s = f"{p:.12g}"
    if "." not in s and "e" not in s:
        s += ".0"
    return s


def _check_size(m):
    if not 1 <= m <= MAX_QUBITS:
        raise SizeError(f"{m} qubits outside the supported range 1..{MAX_QUBITS}")


def init_zero(m: int) -> StateVector:
    _check_size(m)
    amp = np.zeros(1 << m, dtype=complex)
    amp[0] = 1
    return StateVector(m, amp)


def init_basis(m: int, index: int) -> StateVector:
    _check_size(m)
    amp = np.zeros(1 << m, dtype=complex)
    amp[index] = 1
    return StateVector(m, amp)


def init_epr(n: int) -> StateVector:
    """``n`` EPR pairs (|00> + |11>)/sqrt(2), pair i on qubits (i, n + i)."""
    _check_size(2 * n)
    amp = np.zeros(1 << 2 * n, dtype=complex)
    i = np.arange(1 << n)
    amp[i | (i << n)] = 1 / np.sqrt(1 << n)
    return StateVector(2 * n, amp)


def _check_fit(state, n, offset):
    if offset < 0 or offset + n > state.m:
        raise SizeError(f"{n} qubits at offset {offset} do not fit in {state.m}")


def apply(state: StateVector, op: Component | Circuit, offset: int = 0) -> StateVector:
    """Apply a component or a whole circuit to the block starting at ``offset``."""
    _check_fit(state, op.n, offset)
    comps = op.components if isinstance(op, Circuit) else (op,)
    psi = state.amplitudes
    for c in comps:
        psi = c.apply(psi, state.m, offset)
    return StateVector(state.m, psi)


def apply_unitary(state: StateVector, u: np.ndarray, qubits: Sequence[int]) -> StateVector:
    return StateVector(state.m, K.apply_matrix(state.amplitudes, state.m, list(qubits), u))


def rotate_to_basis(state: StateVector, qubits: Sequence[int], angles: Sequence[float]) -> StateVector:
    """Rotate so that a Z measurement reads out ``cos(a) Z + sin(a) X``."""
    psi = state.amplitudes
    for q, a in zip(qubits, angles):
        if a:
            psi = K.apply_1q(psi, state.m, q, K.ry(-a))
    return StateVector(state.m, psi)


def distribution(state: StateVector, qubits: Sequence[int] | None = None) -> Distribution:
    qubits = tuple(range(state.m)) if qubits is None else tuple(qubits)
    return Distribution.from_array(qubits, K.marginal(state.probabilities(), state.m, qubits))


def measure(state: StateVector, qubits, angles=None, rng=None):
    """Projective measurement of ``qubits`` in rotated bases.

    Returns ``(bits, post_state)`` where ``bits[j]`` is the outcome of
    ``qubits[j]`` (0 for the +1 eigenvalue).
    """
    if rng is None:
        raise ValueError("measure needs an explicit random generator")
    qubits = list(qubits)
    angles = [0.0] * len(qubits) if angles is None else list(angles)
    if len(angles) != len(qubits):
        raise ValueError("one basis angle per measured qubit")
    rotated = rotate_to_basis(state, qubits, angles)
    probs = K.marginal(rotated.probabilities(), state.m, qubits)
    probs = probs / probs.sum()
    outcome = int(rng.choice(len(probs), p=probs))
    bits = [(outcome >> j) & 1 for j in range(len(qubits))]
    idx = np.arange(1 << state.m)
    keep = np.ones_like(idx, dtype=bool)
    for q, b in zip(qubits, bits):
        keep &= ((idx >> q) & 1) == b
    psi = np.where(keep, rotated.amplitudes, 0)
    psi = psi / np.linalg.norm(psi)
    post = StateVector(state.m, psi)
    for q, a in zip(qubits, angles):
        if a:
            post = StateVector(state.m, K.apply_1q(post.amplitudes, state.m, q, K.ry(a)))
    return bits, post


def project(state: StateVector, qubits: Sequence[int], bits: Sequence[int]):
    """Unnormalized amplitudes of the remaining qubits given ``qubits == bits``.

    Returns ``(vector, probability)`` where the vector is over the qubits not
    listed, ordered by increasing qubit index.
    """
    idx = np.arange(1 << state.m)
    keep = np.ones_like(idx, dtype=bool)
    for q, b in zip(qubits, bits):
        keep &= ((idx >> q) & 1) == b
    rest = [q for q in range(state.m) if q not in set(qubits)]
    sub = np.zeros(1 << len(rest), dtype=complex)
    sel = idx[keep]
    key = np.zeros_like(sel)
    for j, q in enumerate(rest):
        key |= ((sel >> q) & 1) << j
    sub[key] = state.amplitudes[sel]
    return sub, float(np.vdot(sub, sub).real)


def sample(probs: np.ndarray, shots: int, rng) -> np.ndarray:
    """Draw ``shots`` basis indices from an explicit probability vector."""
    p = np.clip(probs, 0, None)
    return rng.choice(len(p), size=shots, p=p / p.sum())
