"""Primitive gates, circuit components and circuits.

A circuit is an ordered list of components (computational cycles); each
component holds primitive gates acting in parallel on disjoint qubits.  The
primitive set is H, X, CR^k (controlled phase pi/2**k) and multi-controlled
NOT.  Every primitive has a symmetric matrix, which is why reversing the
component order transposes the circuit unitary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K
from .errors import MalformedComponentError, SizeError

GATE_KINDS = ("H", "X", "CR", "CNOT")
DEFAULT_UNITARY_CAP = 12


@dataclass(frozen=True)
class Gate:
    """One primitive gate.

    ``controls`` is empty for H and X, a single qubit for CR and one or more
    qubits for the CNOT family (``l`` controls is C^l NOT).
    """

    kind: str
    target: int
    controls: tuple[int, ...] = ()
    k: int = 0

    def __post_init__(self):
        object.__setattr__(self, "controls", tuple(int(c) for c in self.controls))
        if self.kind not in GATE_KINDS:
            raise MalformedComponentError(f"unknown gate kind {self.kind!r}")
        if self.kind in ("H", "X") and self.controls:
            raise MalformedComponentError(f"{self.kind} takes no controls")
        if self.kind == "CR" and len(self.controls) != 1:
            raise MalformedComponentError("CR takes exactly one control")
        if self.kind == "CNOT" and not self.controls:
            raise MalformedComponentError("CNOT needs at least one control")
        if self.k < 0:
            raise MalformedComponentError("CR exponent must be nonnegative")
        if len(set(self.support)) != len(self.support):
            raise MalformedComponentError(f"repeated qubit in {self}")

    @classmethod
    def h(cls, q):
        return cls("H", q)

    @classmethod
    def x(cls, q):
        return cls("X", q)

    @classmethod
    def cr(cls, k, control, target):
        return cls("CR", target, (control,), k)

    @classmethod
    def cnot(cls, controls, target):
        if isinstance(controls, int):
            controls = (controls,)
        return cls("CNOT", target, tuple(controls))

    @property
    def support(self) -> tuple[int, ...]:
        return self.controls + (self.target,)

    @property
    def label(self) -> str:
        """Census label: H, X, CR<k>, CNOT, C<l>NOT."""
        if self.kind == "CR":
            return f"CR{self.k}"
        if self.kind == "CNOT":
            return "CNOT" if len(self.controls) == 1 else f"C{len(self.controls)}NOT"
        return self.kind

    @property
    def is_clifford(self) -> bool:
        if self.kind in ("H", "X"):
            return True
        if self.kind == "CR":
            return self.k == 0
        return len(self.controls) == 1

    def apply(self, psi, m, offset=0):
        q = self.target + offset
        if self.kind == "H":
            return K.apply_1q(psi, m, q, K.HADAMARD)
        if self.kind == "X":
            return K.apply_x(psi, m, q)
        controls = tuple(c + offset for c in self.controls)
        if self.kind == "CR":
            return K.apply_phase(psi, m, controls + (q,), np.exp(1j * np.pi / 2**self.k))
        return K.apply_mcx(psi, m, controls, q)

    def to_json(self) -> dict:
        if self.kind in ("H", "X"):
            return {"g": self.kind, "q": self.target}
        if self.kind == "CR":
            return {"g": "CR", "k": self.k, "c": self.controls[0], "q": self.target}
        return {"g": "CNOT", "c": list(self.controls), "q": self.target}

    @classmethod
    def from_json(cls, obj) -> "Gate":
        try:
            g = obj["g"]
            if g in ("H", "X"):
                return cls(g, int(obj["q"]))
            if g == "CR":
                return cls.cr(int(obj["k"]), int(obj["c"]), int(obj["q"]))
            if g == "CNOT":
                return cls.cnot([int(c) for c in obj["c"]], int(obj["q"]))
        except (KeyError, TypeError) as exc:
            raise MalformedComponentError(f"bad gate record {obj!r}") from exc
        raise MalformedComponentError(f"unknown gate kind {g!r}")


@dataclass(frozen=True)
class Component:
    """Gates executed in one cycle; an empty gate list is the identity."""

    n: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        seen = set()
        for g in self.gates:
            for q in g.support:
                if not 0 <= q < self.n:
                    raise MalformedComponentError(f"qubit {q} outside [0, {self.n})")
                if q in seen:
                    raise MalformedComponentError(f"qubit {q} used twice in one component")
                seen.add(q)
            if g.kind == "CR" and g.k >= self.n:
                raise MalformedComponentError(f"CR exponent {g.k} must be < n = {self.n}")

    @property
    def support(self) -> frozenset[int]:
        return frozenset(q for g in self.gates for q in g.support)

    @property
    def is_clifford(self) -> bool:
        """Gate-table Clifford test; see :func:`is_clifford_numeric` for the check."""
        return all(g.is_clifford for g in self.gates)

    def apply(self, psi, m, offset=0):
        for g in self.gates:
            psi = g.apply(psi, m, offset)
        return psi


@dataclass(frozen=True)
class Circuit:
    """Components listed first-executed-first; qubits ``[0, t)`` are the first register."""

    n: int
    t: int
    L: int
    components: tuple[Component, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if self.t < 0 or self.L < 0 or self.t + self.L != self.n:
            raise ValueError(f"register sizes t={self.t}, L={self.L} do not sum to n={self.n}")
        for c in self.components:
            if c.n != self.n:
                raise MalformedComponentError(f"component on {c.n} qubits in a {self.n}-qubit circuit")

    @property
    def depth(self) -> int:
        return len(self.components)

    def gates(self) -> Iterable[Gate]:
        for c in self.components:
            yield from c.gates

    def with_components(self, components: Sequence[Component]) -> "Circuit":
        return Circuit(self.n, self.t, self.L, tuple(components))

    def then(self, other: "Circuit") -> "Circuit":
        """``other`` executed after ``self``."""
        return self.with_components(self.components + other.components)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "t": self.t,
            "L": self.L,
            "components": [[g.to_json() for g in c.gates] for c in self.components],
        }

    @classmethod
    def from_json(cls, obj) -> "Circuit":
        try:
            n, t, L = int(obj["n"]), int(obj["t"]), int(obj["L"])
            comps = [Component(n, tuple(Gate.from_json(g) for g in layer)) for layer in obj["components"]]
        except (KeyError, TypeError) as exc:
            raise MalformedComponentError(f"bad circuit record: {exc}") from exc
        return cls(n, t, L, tuple(comps))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "Circuit":
        return cls.from_json(json.loads(text))


def identity_circuit(n, t=None, d=0):
    t = n if t is None else t
    return Circuit(n, t, n - t, tuple(Component(n) for _ in range(d)))


def component_unitary(c: Component) -> np.ndarray:
    eye = np.eye(1 << c.n, dtype=complex)
    return c.apply(eye, c.n)


def circuit_unitary(C: Circuit, cap: int = DEFAULT_UNITARY_CAP) -> np.ndarray:
    """``G = G_d ... G_1`` as a dense matrix."""
    if C.n > cap:
        raise SizeError(f"{C.n} qubits exceeds the unitary cap of {cap}")
    u = np.eye(1 << C.n, dtype=complex)
    for comp in C.components:
        u = comp.apply(u, C.n)
    return u


def reverse_circuit(C: Circuit) -> Circuit:
    """Components in reverse order; its unitary is the transpose of ``C``'s."""
    return C.with_components(C.components[::-1])


def _pauli_decompose(m, n, tol=1e-9):
    """Return ``(xmask, zmask)`` if ``m`` is a phase times a Pauli string, else None."""
    dim = 1 << n
    row0 = np.flatnonzero(np.abs(m[0]) > tol)
    if row0.size != 1:
        return None
    xmask = int(row0[0])
    idx = np.arange(dim)
    vals = m[idx, idx ^ xmask]
    off = m.copy()
    off[idx, idx ^ xmask] = 0
    if np.max(np.abs(off)) > tol:
        return None
    v0 = vals[0]
    if abs(abs(v0) - 1) > tol:
        return None
    phase = v0 / abs(v0)
    if min(abs(phase - p) for p in (1, -1, 1j, -1j)) > 1e-6:
        return None
    zmask = 0
    for q in range(n):
        r = vals[1 << q] / v0
        if abs(r + 1) < tol:
            zmask |= 1 << q
        elif abs(r - 1) > tol:
            return None
    parity = np.array([bin(i & zmask).count("1") & 1 for i in range(dim)])
    if np.max(np.abs(vals - v0 * (1 - 2 * parity))) > tol:
        return None
    return xmask, zmask


def is_clifford_numeric(c: Component, cap: int = 6) -> bool:
    """Conjugate each X_i and Z_i by the component and test for a Pauli result."""
    if c.n > cap:
        raise SizeError(f"numerical Clifford test limited to {cap} qubits")
    u = component_unitary(c)
    dim = 1 << c.n
    idx = np.arange(dim)
    for q in range(c.n):
        px = np.zeros((dim, dim), dtype=complex)
        px[idx ^ (1 << q), idx] = 1
        pz = np.diag(1 - 2 * ((idx >> q) & 1)).astype(complex)
        for p in (px, pz):
            if _pauli_decompose(u @ p @ u.conj().T, c.n) is None:
                return False
    return True


def is_clifford(c: Component) -> bool:
    return c.is_clifford


def random_component(n, rng, kinds=GATE_KINDS, max_controls=None, density=0.7):
    """Random component on ``n`` qubits drawn from the listed gate kinds."""
    free = list(rng.permutation(n))
    gates = []
    max_controls = n - 1 if max_controls is None else max_controls
    while free and rng.random() < density:
        kind = kinds[rng.integers(len(kinds))]
        if kind in ("H", "X"):
            gates.append(Gate(kind, int(free.pop())))
        elif kind == "CR" and len(free) >= 2:
            k = int(rng.integers(n))
            gates.append(Gate.cr(k, int(free.pop()), int(free.pop())))
        elif kind == "CNOT" and len(free) >= 2:
            l = int(rng.integers(1, min(max_controls, len(free) - 1) + 1))
            controls = [int(free.pop()) for _ in range(l)]
            gates.append(Gate.cnot(controls, int(free.pop())))
        else:
            break
    return Component(n, tuple(gates))


def random_circuit(n, d, rng, t=None, **kw):
    t = n if t is None else t
    return Circuit(n, t, n - t, tuple(random_component(n, rng, **kw) for _ in range(d)))


def schedule(n, gates: Sequence[Gate]) -> list[Component]:
    """Greedy as-soon-as-possible layering of an ordered gate list."""
    ready = [0] * n
    layers: list[list[Gate]] = []
    for g in gates:
        level = max(ready[q] for q in g.support)
        if level == len(layers):
            layers.append([])
        layers[level].append(g)
        for q in g.support:
            ready[q] = level + 1
    return [Component(n, tuple(layer)) for layer in layers]
