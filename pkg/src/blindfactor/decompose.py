"""Expansion of primitive circuits into {CNOT, H, X, T, R^k} with daggers.

``R^k`` is the phase gate ``diag(1, exp(i pi / 2**k))``; ``T`` is ``R^2`` and
``S`` is ``R^1``.  Inverse gates are tallied under the same label as the gate.
Output circuits use their own gate type because these phase gates are not
part of the component grammar.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K
from .circuit import Circuit, Gate, circuit_unitary
from .errors import ResourceError, SizeError

STD_KINDS = ("H", "X", "R", "CNOT")


@dataclass(frozen=True)
class StdGate:
    kind: str
    target: int
    control: int | None = None
    k: int = 0
    dagger: bool = False

    @property
    def label(self) -> str:
        if self.kind == "R":
            return "T" if self.k == 2 else f"R{self.k}"
        return self.kind

    def apply(self, psi, m):
        if self.kind == "H":
            return K.apply_1q(psi, m, self.target, K.HADAMARD)
        if self.kind == "X":
            return K.apply_x(psi, m, self.target)
        if self.kind == "CNOT":
            return K.apply_mcx(psi, m, (self.control,), self.target)
        sign = -1 if self.dagger else 1
        return K.apply_phase(psi, m, (self.target,), np.exp(sign * 1j * np.pi / 2**self.k))


def _r(k, q, dagger=False):
    return StdGate("R", q, k=k, dagger=dagger)


def _cx(c, q):
    return StdGate("CNOT", q, c)


@dataclass(frozen=True)
class StdCircuit:
    n: int
    gates: tuple[StdGate, ...]

    def tally(self) -> dict[str, int]:
        return dict(Counter(g.label for g in self.gates))

    def unitary(self, cap: int = 12) -> np.ndarray:
        if self.n > cap:
            raise SizeError(f"{self.n} qubits exceeds the unitary cap of {cap}")
        u = np.eye(1 << self.n, dtype=complex)
        for g in self.gates:
            u = g.apply(u, self.n)
        return u


def toffoli(a: int, b: int, target: int) -> list[StdGate]:
    """Seven-T Toffoli with controls ``a``, ``b``."""
    h = StdGate("H", target)
    return [
        h, _cx(b, target), _r(2, target, True), _cx(a, target), _r(2, target),
        _cx(b, target), _r(2, target, True), _cx(a, target), _r(2, b, True), _r(2, target),
        _cx(a, b), h, _r(2, b, True), _cx(a, b), _r(2, a), _r(1, b),
    ]


def controlled_phase(k: int, control: int, target: int) -> list[StdGate]:
    """CR^k from two CNOTs and three R^(k+1) phases.

    The phase ``c*t`` splits as ``(c + t - c xor t) / 2``, and each of the
    three parities needs its own phase gate.
    """
    return [
        _cx(control, target), _r(k + 1, target, True), _cx(control, target),
        _r(k + 1, target), _r(k + 1, control),
    ]


def vchain(controls: Sequence[int], target: int, ancillae: Sequence[int]) -> list[Gate]:
    """C^l NOT as ``2l - 3`` C^2 NOTs over ``l - 2`` clean ancillae.

    Ancillae must start in ``|0>`` and are returned to it.
    """
    controls = list(controls)
    l = len(controls)
    if l < 3:
        return [Gate.cnot(controls, target)]
    anc = [q for q in ancillae if q not in controls and q != target]
    if len(anc) < l - 2:
        raise ResourceError(f"C{l}NOT needs {l - 2} clean ancillae, {len(anc)} available")
    anc = anc[:l - 2]
    up = [Gate.cnot((controls[0], controls[1]), anc[0])]
    for i in range(1, l - 2):
        up.append(Gate.cnot((controls[i + 1], anc[i - 1]), anc[i]))
    top = Gate.cnot((controls[-1], anc[-1]), target)
    return up + [top] + up[::-1]


def expand_gate(g: Gate, ancillae: Sequence[int] = ()) -> list[StdGate]:
    if g.kind == "H":
        return [StdGate("H", g.target)]
    if g.kind == "X":
        return [StdGate("X", g.target)]
    if g.kind == "CR":
        return controlled_phase(g.k, g.controls[0], g.target)
    if len(g.controls) == 1:
        return [_cx(g.controls[0], g.target)]
    if len(g.controls) == 2:
        return toffoli(g.controls[0], g.controls[1], g.target)
    out = []
    for sub in vchain(g.controls, g.target, ancillae):
        out.extend(toffoli(sub.controls[0], sub.controls[1], sub.target))
    return out


def decompose_standard(C: Circuit, ancillae: Iterable[int] = ()) -> StdCircuit:
    """Expand every gate of ``C``; ``ancillae`` lists qubits known to be clean."""
    ancillae = tuple(ancillae)
    gates: list[StdGate] = []
    for g in C.gates():
        busy = set(g.support)
        gates.extend(expand_gate(g, [q for q in ancillae if q not in busy]))
    return StdCircuit(C.n, tuple(gates))


def decomposition_error(C: Circuit, std: StdCircuit, ancillae: Iterable[int] = ()) -> float:
    """Max-entry error up to global phase on inputs whose ancillae are ``|0>``.

    Also catches ancillae left dirty, since those columns then differ.
    """
    ancillae = tuple(ancillae)
    u, v = circuit_unitary(C), std.unitary()
    mask = 0
    for q in ancillae:
        mask |= 1 << q
    cols = [i for i in range(1 << C.n) if i & mask == 0]
    u, v = u[:, cols], v[:, cols]
    flat = u.ravel()
    ref = int(np.argmax(np.abs(flat)))
    phase = v.ravel()[ref] / flat[ref]
    if abs(phase) < 1e-12:
        return float(np.max(np.abs(u - v)))
    phase /= abs(phase)
    return float(np.max(np.abs(u * phase - v)))
