"""Command-line entry point.

Exit codes: 0 success, 1 negative protocol verdict (dishonest or exhausted),
2 usage or input error.  Files written with ``--out`` get a
``<file>.manifest.json`` alongside recording the command, flags and seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from math import factorial
from pathlib import Path
from typing import Optional

from . import SCHEMA_VERSION, __version__
from .builder import gate_census, shor_circuit
from .circuit import Circuit
from .classical import FactorInstance, postprocess
from .enumeration import COMPONENT_CONSTANT, bitstring_size_bound, component_count_bound, s_prime
from .errors import BlindFactorError
from .partition import blind_pair, optimize, partition_report
from .protocol import ProtocolConfig, run_protocol
from .statevec import apply, distribution, init_zero

SEED_ENV = "BLINDFACTOR_SEED"


class InputError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{SEED_ENV}={raw!r} is not an integer")


def _manifest_path(path: Path) -> Path:
    return path.with_name(path.name + ".manifest.json")


def _write(path: Optional[str], text: str, args, seed=None, inputs=()):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    p = Path(path)
    p.write_text(text)
    flags = {k: v for k, v in vars(args).items() if k != "func"}
    manifest = {
        "command": args.command,
        "flags": flags,
        "seed": seed,
        "inputs": [str(i) for i in inputs],
        "output": str(p),
        "version": __version__,
        "schema": SCHEMA_VERSION,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    _manifest_path(p).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")


def _read_circuit(path: str) -> Circuit:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}")
    try:
        return Circuit.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}")
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: not a circuit file ({exc})")


def _instance_from_manifest(path: str):
    try:
        flags = json.loads(_manifest_path(Path(path)).read_text())["flags"]
        return int(flags["N"]), int(flags["a"])
    except (OSError, KeyError, ValueError, TypeError):
        return None, None


def cmd_build(args) -> int:
    C = shor_circuit(args.N, args.a, args.t, args.L, args.encoding)
    _write(args.out, C.dumps(), args)
    census = gate_census(C)
    print(f"built {C.n}-qubit circuit: depth {C.depth}, {census.non_clifford} non-Clifford gates",
          file=sys.stderr)
    return 0


def cmd_partition(args) -> int:
    C = _read_circuit(args.input)
    N, a = args.N, args.a
    if N is None or a is None:
        N, a = _instance_from_manifest(args.input)
    part = optimize(C, budget=args.budget)
    pair = blind_pair(part)
    report = partition_report(C, part, N, a)
    _write(args.out_a, pair.circ_a.dumps(), args, inputs=[args.input])
    _write(args.out_b, pair.circ_b.dumps(), args, inputs=[args.input])
    _write(args.report, json.dumps(report, indent=1, sort_keys=True) + "\n", args, inputs=[args.input])
    return 0


def cmd_simulate(args) -> int:
    C = _read_circuit(args.input)
    state = apply(init_zero(C.n), C)
    qubits = range(C.t) if args.register == "first" else range(C.n)
    _write(args.out, distribution(state, qubits).to_csv(), args, inputs=[args.input])
    return 0


def _protocol_config(args, seed: int) -> ProtocolConfig:
    return ProtocolConfig(
        FactorInstance(args.N, args.a), t=args.t, L=args.L, eta=args.eta, max_rounds=args.max_rounds,
        seed=seed, adversary_a=args.adversary_a, adversary_b=args.adversary_b,
        heuristic=not args.no_heuristic, encoding=args.encoding,
    )


def _sweep_one(cfg: ProtocolConfig):
    tr = run_protocol(cfg)
    return cfg.seed, tr.verdict_label, len(tr.rounds)


def cmd_protocol(args) -> int:
    seed = _default_seed() if args.seed is None else args.seed
    if args.runs == 1:
        tr = run_protocol(_protocol_config(args, seed))
        _write(args.out, tr.dumps(), args, seed=seed)
        if args.summary:
            _write(args.summary, tr.summary_csv(), args, seed=seed)
        print(tr.verdict_label, file=sys.stderr)
        return 0 if tr.verdict["kind"] == "factors" else 1
    cfgs = [_protocol_config(args, seed + i) for i in range(args.runs)]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            rows = list(ex.map(_sweep_one, cfgs))
    else:
        rows = [_sweep_one(c) for c in cfgs]
    lines = ["seed,verdict,rounds"] + [f"{s},{v},{r}" for s, v, r in rows]
    _write(args.out, "\n".join(lines) + "\n", args, seed=seed)
    return 0 if all(v.startswith("factors") for _, v, _ in rows) else 1


def cmd_enumerate(args) -> int:
    lines = ["n,s_prime,ratio_to_factorial,component_bound,bitstring_bits"]
    for n in range(1, args.n + 1):
        lines.append(f"{n},{s_prime(n)},{s_prime(n) / factorial(n):.6f},"
                     f"{component_count_bound(n)},{bitstring_size_bound(n)}")
    lines.append(f"# constant c = {COMPONENT_CONSTANT.numerator}/{COMPONENT_CONSTANT.denominator}")
    _write(args.out, "\n".join(lines) + "\n", args)
    return 0


def cmd_postprocess(args) -> int:
    res = postprocess(args.y, args.t, args.N, args.a, heuristic=args.heuristic)
    out = {
        "y": args.y, "t": args.t, "N": args.N, "a": args.a,
        "convergents": [{"d": c.d, "s": c.s, "error": str(c.error)} for c in res.candidates],
        "period": res.period,
        "via_heuristic": res.via_heuristic,
        "factors": list(res.factors) if res.factors else None,
    }
    _write(args.out, json.dumps(out, indent=1) + "\n", args)
    return 0


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blindfactor", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version",
                   version=f"blindfactor {__version__} (circuit schema {SCHEMA_VERSION})")
    sub = p.add_subparsers(dest="command", required=True)

    def instance(sp, required=True):
        sp.add_argument("--N", type=int, required=required, help="number to factor (num)")
        sp.add_argument("--a", type=int, required=required, help="base coprime to N (base)")

    def registers(sp):
        sp.add_argument("--t", type=int, default=3, help="first-register size (siz1)")
        sp.add_argument("--L", type=int, default=3, help="second-register size (siz2)")
        sp.add_argument("--encoding", choices=["binary", "gray", "search"], default=None,
                        help="codeword map for the orbit; default binary")

    b = sub.add_parser("build", help="compile a period-finding circuit")
    instance(b)
    registers(b)
    b.add_argument("--out", help="circuit JSON path (default stdout)")
    b.set_defaults(func=cmd_build)

    pa = sub.add_parser("partition", help="split a circuit into server circuits A and B")
    pa.add_argument("--in", dest="input", required=True)
    pa.add_argument("--out-a", required=True)
    pa.add_argument("--out-b", required=True)
    pa.add_argument("--report", required=True)
    pa.add_argument("--budget", type=int, default=10**6, help="state budget for long circuits")
    instance(pa, required=False)
    pa.set_defaults(func=cmd_partition)

    s = sub.add_parser("simulate", help="exact outcome distribution of a circuit")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--register", choices=["first", "all"], default="first")
    s.add_argument("--format", choices=["csv"], default="csv")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    pr = sub.add_parser("protocol", help="run the client/two-server protocol")
    instance(pr)
    registers(pr)
    pr.add_argument("--eta", type=float, default=0.25, help="probability of a computational round")
    pr.add_argument("--seed", type=int, default=None, help=f"RNG seed (default ${SEED_ENV} or 0)")
    pr.add_argument("--max-rounds", type=int, default=2000)
    pr.add_argument("--adversary-a", default="honest")
    pr.add_argument("--adversary-b", default="honest")
    pr.add_argument("--no-heuristic", action="store_true", help="skip neighbour/multiple search")
    pr.add_argument("--out", help="transcript JSON (or sweep CSV with --runs)")
    pr.add_argument("--summary", help="per-subprotocol summary CSV")
    pr.add_argument("--runs", type=int, default=1, help="seed sweep: seeds seed..seed+runs-1")
    pr.add_argument("--jobs", type=int, default=1)
    pr.set_defaults(func=cmd_protocol)

    e = sub.add_parser("enumerate", help="component counts and label-size bounds")
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--out")
    e.set_defaults(func=cmd_enumerate)

    pp = sub.add_parser("postprocess", help="continued-fraction post-processing of one outcome")
    pp.add_argument("--y", type=int, required=True)
    pp.add_argument("--t", type=int, required=True)
    instance(pp)
    pp.add_argument("--heuristic", action="store_true")
    pp.add_argument("--out")
    pp.set_defaults(func=cmd_postprocess)
    return p


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, BlindFactorError) as exc:
        print(f"blindfactor {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"blindfactor {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
