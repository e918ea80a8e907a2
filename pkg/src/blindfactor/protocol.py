"""Client and two servers running the blind factoring protocol.

Every round the client picks one of four subprotocols: the computation
itself, a CHSH batch, or a tomography batch in which one server runs its
circuit while the other measures its EPR halves in X or Z.  Servers only see
instruction messages (circuit hex, basis or CHSH questions) and answer with
bits; the shared EPR resource is simulated exactly from their declared local
operations.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from . import _kernels as K
from .builder import shor_circuit
from .circuit import Circuit
from .classical import FactorInstance, gcd, is_prime, postprocess
from .codec import from_hex, to_hex
from .errors import PreconditionError
from .partition import BlindPair, blind_pair, optimize
from .statevec import apply, init_epr, rotate_to_basis

SUBPROTOCOLS = ("computation", "chsh", "tomography-A", "tomography-B")
CHSH_QUANTUM = float(np.cos(np.pi / 8) ** 2)
CHSH_CLASSICAL = 0.75
INSTRUCTION_KEYS = frozenset({"kind", "n", "circuit", "basis", "shots", "questions"})

HONEST_ANGLES = {"A": (0.0, np.pi / 2), "B": (np.pi / 4, -np.pi / 4)}


# -- servers -------------------------------------------------------------

@dataclass(frozen=True)
class Behavior:
    name: str
    p: float = 0.0

    def __str__(self):
        return self.name if self.name in ("honest", "chsh-classical") else f"{self.name}({self.p:g})"

    @property
    def quantum(self) -> bool:
        return self.name != "chsh-classical"


_BEHAVIOR_RE = re.compile(r"^(honest|chsh-classical|depolarizing|bit-flip)(?:\((.*)\))?$")


def parse_behavior(spec: str | Behavior) -> Behavior:
    if isinstance(spec, Behavior):
        return spec
    m = _BEHAVIOR_RE.match(spec.strip())
    if not m:
        raise PreconditionError(f"unknown server behavior {spec!r}")
    name, arg = m.groups()
    if name in ("honest", "chsh-classical"):
        if arg is not None:
            raise PreconditionError(f"{name} takes no parameter")
        return Behavior(name)
    if arg is None:
        raise PreconditionError(f"{name} needs a probability, e.g. {name}(0.1)")
    p = float(arg)
    if not 0 <= p <= 1:
        raise PreconditionError(f"probability {p} outside [0, 1]")
    return Behavior(name, p)


@dataclass(frozen=True)
class Instruction:
    """A message from the client to one server."""

    kind: str  # compute | measure | chsh
    n: int
    circuit: Optional[str] = None
    basis: Optional[str] = None
    shots: int = 1
    questions: Optional[tuple[int, ...]] = None

    def message(self) -> dict:
        out = {"kind": self.kind, "n": self.n, "shots": self.shots}
        if self.circuit is not None:
            out["circuit"] = self.circuit
        if self.basis is not None:
            out["basis"] = self.basis
        if self.questions is not None:
            out["questions"] = list(self.questions)
        return out

    def summary(self) -> dict:
        out = self.message()
        if self.questions is not None:
            out["questions"] = _digest(np.array(self.questions, dtype=np.uint8))
        return out


@dataclass(frozen=True)
class LocalAction:
    """What a server physically does to its half: run a circuit, then rotate and measure."""

    quantum: bool
    circuit: Optional[Circuit] = None
    basis: Optional[str] = None
    angle_table: Optional[tuple[float, float]] = None


class ServerEndpoint:
    def __init__(self, name: str, behavior: str | Behavior = "honest"):
        if name not in ("A", "B"):
            raise ValueError("servers are named A and B")
        self.name = name
        self.behavior = parse_behavior(behavior)
        self.inbox: list[dict] = []

    def prepare(self, ins: Instruction) -> LocalAction:
        msg = ins.message()
        if not set(msg) <= INSTRUCTION_KEYS:
            raise PreconditionError(f"unexpected instruction fields {set(msg) - INSTRUCTION_KEYS}")
        self.inbox.append(ins.summary())
        if not self.behavior.quantum:
            return LocalAction(False)
        if ins.kind == "compute":
            return LocalAction(True, circuit=from_hex(ins.circuit, ins.n, ins.n, 0), basis="Z")
        if ins.kind == "measure":
            return LocalAction(True, basis=ins.basis)
        if ins.kind == "chsh":
            return LocalAction(True, angle_table=HONEST_ANGLES[self.name])
        raise PreconditionError(f"unknown instruction kind {ins.kind!r}")

    def report(self, raw: np.ndarray, width: int, rng) -> np.ndarray:
        """Bits the server sends back; ``raw`` holds integers over ``width`` bits."""
        b = self.behavior
        if b.name == "chsh-classical":
            return np.zeros_like(raw)
        if b.name == "honest" or b.p == 0:
            return raw
        bits = (raw[:, None] >> np.arange(width)) & 1
        hit = rng.random(bits.shape) < b.p
        if b.name == "bit-flip":
            bits = bits ^ hit
        else:
            bits = np.where(hit, rng.integers(0, 2, bits.shape), bits)
        return (bits << np.arange(width)).sum(axis=1)


# -- shared resource -------------------------------------------------------

def _block_probs(n: int, act_a: LocalAction, act_b: LocalAction) -> np.ndarray:
    """Joint outcome distribution over ``2n`` qubits, A block low."""
    state = init_epr(n)
    for act, off in ((act_a, 0), (act_b, n)):
        if act.quantum and act.circuit is not None:
            state = apply(state, act.circuit, off)
        if act.quantum and act.basis == "X":
            psi = state.amplitudes
            for q in range(off, off + n):
                psi = K.apply_1q(psi, 2 * n, q, K.HADAMARD)
            state = type(state)(2 * n, psi)
    p = state.probabilities()
    return p / p.sum()


def _chsh_table(act_a: LocalAction, act_b: LocalAction) -> np.ndarray:
    """``table[s, t]`` = distribution of ``a + 2b`` for questions ``(s, t)``."""
    table = np.zeros((2, 2, 4))
    for s in range(2):
        for tq in range(2):
            angles = [act_a.angle_table[s] if act_a.quantum else 0.0,
                      act_b.angle_table[tq] if act_b.quantum else 0.0]
            st = rotate_to_basis(init_epr(1), [0, 1], angles)
            table[s, tq] = st.probabilities()
    return table


def _sample(p: np.ndarray, shots: int, rng) -> np.ndarray:
    return rng.choice(len(p), size=shots, p=p)


def _digest(arr: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr, dtype=np.int64).tobytes()).hexdigest()[:16]


def _hist(values: np.ndarray, width: int) -> dict[str, int]:
    counts = np.bincount(values, minlength=1 << width)
    return {format(i, f"0{width}b"): int(c) for i, c in enumerate(counts) if c}


# -- subprotocols ---------------------------------------------------------

@dataclass(frozen=True)
class OutcomeRecord:
    a_bits: int
    b_bits: int
    postselected: bool
    y: Optional[int]
    n: int
    t: int

    def to_json(self) -> dict:
        fmt = f"0{self.n}b"
        return {
            "a": format(self.a_bits, fmt), "b": format(self.b_bits, fmt),
            "postselected": self.postselected,
            "y": None if self.y is None else format(self.y, f"0{self.t}b"),
        }


def _servers(server_a, server_b):
    return (server_a or ServerEndpoint("A"), server_b or ServerEndpoint("B"))


def _compute_instructions(pair: BlindPair, shots: int = 1):
    return (Instruction("compute", pair.n, to_hex(pair.circ_a), shots=shots),
            Instruction("compute", pair.n, to_hex(pair.circ_b), shots=shots))


def sample_computation_rounds(pair: BlindPair, shots: int, rng, server_a=None, server_b=None):
    """Independent computational rounds on fresh resources; returns reported (A, B) bits."""
    sa, sb = _servers(server_a, server_b)
    ia, ib = _compute_instructions(pair, shots)
    p = _block_probs(pair.n, sa.prepare(ia), sb.prepare(ib))
    idx = _sample(p, shots, rng)
    mask = (1 << pair.n) - 1
    return sa.report(idx & mask, pair.n, rng), sb.report(idx >> pair.n, pair.n, rng)


def run_computation_round(pair: BlindPair, rng, server_a=None, server_b=None) -> OutcomeRecord:
    a, b = sample_computation_rounds(pair, 1, rng, server_a, server_b)
    a, b = int(a[0]), int(b[0])
    fmask = (1 << pair.t) - 1
    sel = a & fmask == 0
    return OutcomeRecord(a, b, sel, (b & fmask) if sel else None, pair.n, pair.t)


@dataclass(frozen=True)
class ChshRecord:
    questions: np.ndarray
    answers_a: np.ndarray
    answers_b: np.ndarray

    @property
    def games(self) -> int:
        return len(self.questions)

    @property
    def wins(self) -> np.ndarray:
        s, tq = self.questions & 1, self.questions >> 1
        return (self.answers_a ^ self.answers_b) == (s & tq)

    @property
    def results(self) -> list[str]:
        return ["win" if w else "loss" for w in self.wins]

    @property
    def win_rate(self) -> float:
        return float(self.wins.mean()) if self.games else float("nan")


def run_chsh_round(rng, server_a=None, server_b=None, games: int = 1) -> ChshRecord:
    """``games`` CHSH games, each on its own fresh EPR pair."""
    sa, sb = _servers(server_a, server_b)
    s = rng.integers(0, 2, games)
    tq = rng.integers(0, 2, games)
    act_a = sa.prepare(Instruction("chsh", 1, shots=games, questions=tuple(int(v) for v in s)))
    act_b = sb.prepare(Instruction("chsh", 1, shots=games, questions=tuple(int(v) for v in tq)))
    table = _chsh_table(act_a, act_b)
    cdf = np.cumsum(table, axis=2)
    u = rng.random(games)
    out = (u[:, None] > cdf[s, tq][:, :3]).sum(axis=1)
    a = sa.report(out & 1, 1, rng)
    b = sb.report(out >> 1, 1, rng)
    return ChshRecord(s + 2 * tq, a, b)


def honest_tomography_distribution(pair: BlindPair, computing: str, basis: str) -> np.ndarray:
    """Predicted distribution of the XOR of the two servers' reported n-bit strings."""
    return _tomography_xor(pair.n, *_tomography_actions(pair, computing, basis))


def _tomography_actions(pair, computing, basis):
    circ = pair.circ_a if computing == "A" else pair.circ_b
    comp = LocalAction(True, circuit=circ, basis="Z")
    meas = LocalAction(True, basis=basis)
    if computing == "A":
        return (comp, meas)
    return (meas, comp)


def _tomography_xor(n, act_a, act_b):
    p = _block_probs(n, act_a, act_b)
    idx = np.arange(len(p))
    return np.bincount((idx & ((1 << n) - 1)) ^ (idx >> n), weights=p, minlength=1 << n)


@dataclass(frozen=True)
class TomographyRecord:
    computing: str
    basis: str
    samples: int
    tv: Optional[float]
    measuring_tv: Optional[float]
    xor_hist: dict
    digest: str

    @property
    def inconclusive(self) -> bool:
        return self.samples == 0

    def passed(self, eps: float) -> Optional[bool]:
        return None if self.inconclusive else self.tv <= eps


def run_tomography_round(pair: BlindPair, computing: str, basis: str, rng, samples: int = 10_000,
                         server_a=None, server_b=None) -> TomographyRecord:
    if computing not in ("A", "B") or basis not in ("X", "Z"):
        raise PreconditionError("computing server is A or B and basis is X or Z")
    sa, sb = _servers(server_a, server_b)
    n = pair.n
    if samples == 0:
        return TomographyRecord(computing, basis, 0, None, None, {}, _digest(np.zeros(0)))
    circ = pair.circ_a if computing == "A" else pair.circ_b
    ins_comp = Instruction("compute", n, to_hex(circ), shots=samples)
    ins_meas = Instruction("measure", n, basis=basis, shots=samples)
    if computing == "A":
        act_a, act_b = sa.prepare(ins_comp), sb.prepare(ins_meas)
    else:
        act_a, act_b = sa.prepare(ins_meas), sb.prepare(ins_comp)
    idx = _sample(_block_probs(n, act_a, act_b), samples, rng)
    mask = (1 << n) - 1
    a = sa.report(idx & mask, n, rng)
    b = sb.report(idx >> n, n, rng)
    x = a ^ b
    emp = np.bincount(x, minlength=1 << n) / samples
    tv = 0.5 * float(np.abs(emp - honest_tomography_distribution(pair, computing, basis)).sum())
    meas_bits = b if computing == "A" else a
    memp = np.bincount(meas_bits, minlength=1 << n) / samples
    mtv = 0.5 * float(np.abs(memp - 1 / (1 << n)).sum())
    return TomographyRecord(computing, basis, samples, tv, mtv, _hist(x, n),
                            _digest(np.stack([a, b])))


# -- orchestration ----------------------------------------------------------

@dataclass(frozen=True)
class ProtocolConfig:
    instance: FactorInstance
    t: int = 3
    L: int = 3
    eta: float = 0.25
    max_rounds: int = 2000
    seed: int = 0
    adversary_a: str = "honest"
    adversary_b: str = "honest"
    heuristic: bool = True
    encoding: Optional[str] = None
    chsh_games: int = 10_000
    chsh_threshold: float = (CHSH_CLASSICAL + CHSH_QUANTUM) / 2
    tomography_samples: int = 10_000
    eps_tom: float = 0.05
    trial_budget: Optional[int] = None
    marginal_sigma: float = 5.0

    def __post_init__(self):
        if not 0 < self.eta < 1:
            raise PreconditionError("eta must lie strictly between 0 and 1")
        if self.max_rounds < 0:
            raise PreconditionError("max_rounds must be >= 0")
        parse_behavior(self.adversary_a)
        parse_behavior(self.adversary_b)

    @property
    def budget(self) -> int:
        return 4 * (1 << self.t) if self.trial_budget is None else self.trial_budget

    @property
    def probabilities(self) -> tuple[float, ...]:
        rest = (1 - self.eta) / 3
        return (self.eta, rest, rest, rest)

    def to_json(self) -> dict:
        return {
            "N": self.instance.N, "a": self.instance.a, "t": self.t, "L": self.L,
            "eta": self.eta, "max_rounds": self.max_rounds, "seed": self.seed,
            "adversary_a": str(parse_behavior(self.adversary_a)),
            "adversary_b": str(parse_behavior(self.adversary_b)),
            "heuristic": self.heuristic, "encoding": self.encoding,
            "chsh_games": self.chsh_games, "chsh_threshold": self.chsh_threshold,
            "tomography_samples": self.tomography_samples, "eps_tom": self.eps_tom,
            "trial_budget": self.budget,
        }


@lru_cache(maxsize=32)
def cached_blind_pair(N: int, a: int, t: int, L: int, encoding: Optional[str] = None) -> BlindPair:
    return blind_pair(optimize(shor_circuit(N, a, t, L, encoding)))


@dataclass
class ProtocolTranscript:
    config: dict
    rounds: list[dict] = field(default_factory=list)
    verdict: Optional[dict] = None

    def append(self, record: dict):
        if self.verdict is not None:
            raise RuntimeError("transcript is closed")
        self.rounds.append(record)

    def close(self, verdict: dict):
        if self.verdict is not None:
            raise RuntimeError("transcript is closed")
        self.verdict = verdict

    @property
    def verdict_label(self) -> str:
        v = self.verdict or {"kind": "open"}
        if v["kind"] == "factors":
            return f"factors({v['p']},{v['q']})"
        if v["kind"] == "dishonest":
            return f"dishonest({v['server']})"
        return v["kind"]

    def to_json(self) -> dict:
        return {"config": self.config, "rounds": self.rounds, "verdict": self.verdict}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=1) + "\n"

    def summary_rows(self) -> list[dict]:
        rows = []
        for sub in SUBPROTOCOLS:
            recs = [r for r in self.rounds if r["subprotocol"] == sub]
            stats = [r["statistic"] for r in recs if r.get("statistic") is not None]
            rows.append({
                "subprotocol": sub,
                "rounds": len(recs),
                "passed": sum(1 for r in recs if r.get("passed") is True),
                "failed": sum(1 for r in recs if r.get("passed") is False),
                "postselected": sum(1 for r in recs if r.get("postselected")),
                "mean_statistic": f"{np.mean(stats):.6f}" if stats else "",
            })
        return rows

    def summary_csv(self) -> str:
        buf = io.StringIO()
        rows = self.summary_rows()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()


def _marginal_off(bits: np.ndarray, sigma: float) -> bool:
    """True if a batch of answer bits is implausibly far from fair."""
    n = len(bits)
    return n > 0 and abs(bits.mean() - 0.5) > sigma * 0.5 / np.sqrt(n)


def _verified_factors(facs, N) -> Optional[tuple[int, int]]:
    if facs is None:
        return None
    p, q = facs
    if gcd(p, N) == p and is_prime(p) and is_prime(q) and p * q == N:
        return p, q
    return None


def run_protocol(config: ProtocolConfig) -> ProtocolTranscript:
    inst = config.instance
    rng = np.random.default_rng(config.seed)
    pair = cached_blind_pair(inst.N, inst.a, config.t, config.L, config.encoding)
    sa = ServerEndpoint("A", config.adversary_a)
    sb = ServerEndpoint("B", config.adversary_b)
    tr = ProtocolTranscript(config.to_json())
    postselected = 0
    a_passed = 0
    probs = np.array(config.probabilities)

    for rnd in range(config.max_rounds):
        sub = SUBPROTOCOLS[int(rng.choice(4, p=probs))]
        rec: dict = {"round": rnd, "subprotocol": sub}
        verdict = None
        if sub == "computation":
            ia, ib = _compute_instructions(pair)
            rec["instructions"] = {"A": ia.summary(), "B": ib.summary()}
            out = run_computation_round(pair, rng, sa, sb)
            rec["outcomes"] = out.to_json()
            rec["postselected"] = out.postselected
            if out.postselected:
                postselected += 1
                res = postprocess(out.y, config.t, inst.N, inst.a, heuristic=config.heuristic)
                rec["postprocess"] = {
                    "candidates": [c.s for c in res.candidates], "period": res.period,
                    "via_heuristic": res.via_heuristic,
                    "factors": list(res.factors) if res.factors else None,
                }
                facs = _verified_factors(res.factors, inst.N)
                if facs is not None:
                    verdict = {"kind": "factors", "p": facs[0], "q": facs[1]}
        elif sub == "chsh":
            ch = run_chsh_round(rng, sa, sb, config.chsh_games)
            rec["instructions"] = {"A": {"kind": "chsh", "n": 1, "shots": ch.games},
                                   "B": {"kind": "chsh", "n": 1, "shots": ch.games}}
            cells = np.bincount(ch.questions * 4 + ch.answers_a + 2 * ch.answers_b, minlength=16)
            # cell index: 4 * (s + 2t) + a + 2b
            rec["outcomes"] = {"counts": [int(c) for c in cells],
                               "digest": _digest(np.stack([ch.questions, ch.answers_a, ch.answers_b]))}
            rec["statistic"] = ch.win_rate
            rec["passed"] = ch.win_rate >= config.chsh_threshold
            if not rec["passed"]:
                verdict = {"kind": "dishonest", "server": _blame_chsh(ch, config.marginal_sigma)}
        else:
            computing = sub[-1]
            worst, details, blame = 0.0, [], None
            for basis in ("Z", "X"):
                tomo = run_tomography_round(pair, computing, basis, rng, config.tomography_samples, sa, sb)
                details.append({"basis": basis, "samples": tomo.samples, "tv": tomo.tv,
                                "measuring_tv": tomo.measuring_tv, "xor_counts": tomo.xor_hist,
                                "digest": tomo.digest})
                if tomo.inconclusive:
                    continue
                worst = max(worst, tomo.tv)
                if not tomo.passed(config.eps_tom) and blame is None:
                    blame = ("B" if computing == "A" else "A") if tomo.measuring_tv > config.eps_tom else computing
            rec["outcomes"] = details
            other = "B" if computing == "A" else "A"
            circ = pair.circ_a if computing == "A" else pair.circ_b
            rec["instructions"] = {
                computing: Instruction("compute", pair.n, to_hex(circ), shots=config.tomography_samples).summary(),
                other: [Instruction("measure", pair.n, basis=b, shots=config.tomography_samples).summary()
                        for b in ("Z", "X")],
            }
            if config.tomography_samples == 0:
                rec["passed"] = None
            else:
                rec["statistic"] = worst
                rec["passed"] = blame is None
                if blame is not None:
                    verdict = {"kind": "dishonest", "server": blame}
                elif computing == "A":
                    a_passed += 1
        if verdict is None and postselected >= config.budget and a_passed > 0:
            verdict = {"kind": "dishonest", "server": "B",
                       "reason": f"no valid period from {postselected} post-selected outcomes"}
        tr.append(rec)
        if verdict is not None:
            tr.close(verdict)
            return tr
    tr.close({"kind": "exhausted", "rounds": config.max_rounds})
    return tr


def _blame_chsh(ch: ChshRecord, sigma: float) -> str:
    bad_a = _marginal_off(ch.answers_a, sigma)
    bad_b = _marginal_off(ch.answers_b, sigma)
    if bad_a and not bad_b:
        return "A"
    if bad_b and not bad_a:
        return "B"
    return "AB"
