import json

import pytest

from blindfactor import __version__
from blindfactor.circuit import Circuit
from blindfactor.cli import main


def build(tmp_path, t=2, name="c.json"):
    out = tmp_path / name
    assert main(["build", "--N", "21", "--a", "4", "--t", str(t), "--L", "3", "--out", str(out)]) == 0
    return out


def test_build_writes_circuit_and_manifest(tmp_path):
    out = build(tmp_path)
    C = Circuit.loads(out.read_text())
    assert C.n == 5 and C.t == 2
    man = json.loads((tmp_path / "c.json.manifest.json").read_text())
    assert man["command"] == "build" and man["flags"]["N"] == 21 and man["version"] == __version__
    assert Circuit.loads(build(tmp_path, 3, "d.json").read_text()).n == 6


def test_build_errors(tmp_path, capsys):
    assert main(["build", "--N", "21", "--a", "7", "--t", "2", "--L", "3"]) == 2
    assert main(["build", "--N", "21", "--a", "2", "--t", "2", "--L", "2"]) == 2
    assert "size 6" in capsys.readouterr().err


def test_build_deterministic(tmp_path):
    assert build(tmp_path, name="x.json").read_text() == build(tmp_path, name="y.json").read_text()


def test_partition(tmp_path):
    src = build(tmp_path)
    a, b, rep = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "r.json"
    assert main(["partition", "--in", str(src), "--out-a", str(a), "--out-b", str(b), "--report", str(rep)]) == 0
    report = json.loads(rep.read_text())
    assert report["d_star"] == 5 and report["equivalent"]
    assert report["census_b"]["non_clifford"] == report["census"]["non_clifford"] == 3
    assert report["max_depth"] == 3072
    assert "matches" in report["reference"]
    assert Circuit.loads(a.read_text()).depth == report["depth_a"]


def test_partition_all_clifford(tmp_path):
    src = tmp_path / "cl.json"
    from blindfactor.circuit import Component, Gate
    C = Circuit(2, 1, 1, (Component(2, (Gate.h(0),)), Component(2, (Gate.cnot(0, 1),))))
    src.write_text(C.dumps())
    b = tmp_path / "b.json"
    assert main(["partition", "--in", str(src), "--out-a", str(tmp_path / "a.json"), "--out-b", str(b),
                 "--report", str(tmp_path / "r.json")]) == 0
    assert Circuit.loads(b.read_text()).depth == 0


def test_partition_malformed(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    rc = main(["partition", "--in", str(bad), "--out-a", "a", "--out-b", "b", "--report", "r"])
    assert rc == 2
    assert "line 1" in capsys.readouterr().err
    assert main(["simulate", "--in", str(tmp_path / "missing.json")]) == 2


def test_simulate(tmp_path, capsys):
    src = build(tmp_path)
    assert main(["simulate", "--in", str(src)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "outcome,probability"
    probs = dict(l.split(",") for l in lines[1:])
    assert {k: round(float(v), 10) for k, v in probs.items()} == {"00": 0.375, "01": 0.25, "10": 0.125, "11": 0.25}
    src3 = build(tmp_path, 3, "t3.json")
    out = tmp_path / "d.csv"
    assert main(["simulate", "--in", str(src3), "--out", str(out)]) == 0
    rows = out.read_text().splitlines()[1:]
    assert len(rows) == 8
    assert float(dict(r.split(",") for r in rows)["011"]) == pytest.approx(0.2355, abs=1e-4)


def test_simulate_empty(tmp_path, capsys):
    src = tmp_path / "e.json"
    src.write_text(Circuit(3, 2, 1, ()).dumps())
    assert main(["simulate", "--in", str(src)]) == 0
    assert capsys.readouterr().out.splitlines()[1] == "00,1.0"


def test_protocol(tmp_path):
    out = tmp_path / "tr.json"
    summary = tmp_path / "s.csv"
    args = ["protocol", "--N", "21", "--a", "4", "--seed", "4", "--out", str(out), "--summary", str(summary)]
    assert main(args) == 0
    tr = json.loads(out.read_text())
    assert tr["verdict"] == {"kind": "factors", "p": 3, "q": 7}
    first = out.read_text()
    assert main(args) == 0
    assert out.read_text() == first
    assert summary.read_text().startswith("subprotocol,")
    man = json.loads((tmp_path / "tr.json.manifest.json").read_text())
    assert man["seed"] == 4


def test_protocol_negative_verdicts(tmp_path, capsys):
    assert main(["protocol", "--N", "21", "--a", "4", "--max-rounds", "0", "--out", str(tmp_path / "x")]) == 1
    assert json.loads((tmp_path / "x").read_text())["verdict"]["kind"] == "exhausted"
    rc = main(["protocol", "--N", "21", "--a", "4", "--seed", "0", "--adversary-a", "chsh-classical",
               "--out", str(tmp_path / "y")])
    assert rc == 1
    assert json.loads((tmp_path / "y").read_text())["verdict"]["kind"] == "dishonest"
    assert main(["protocol", "--N", "21", "--a", "4", "--adversary-a", "evil"]) == 2


def test_protocol_seed_env(tmp_path, monkeypatch):
    monkeypatch.setenv("BLINDFACTOR_SEED", "4")
    out = tmp_path / "tr.json"
    assert main(["protocol", "--N", "21", "--a", "4", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["config"]["seed"] == 4
    monkeypatch.setenv("BLINDFACTOR_SEED", "four")
    assert main(["protocol", "--N", "21", "--a", "4", "--out", str(out)]) == 2


def test_protocol_sweep(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["protocol", "--N", "21", "--a", "4", "--runs", "3", "--jobs", "2", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "seed,verdict,rounds"
    assert [l.split(",")[0] for l in lines[1:]] == ["0", "1", "2"]


def test_enumerate(capsys):
    assert main(["enumerate", "--n", "8"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "n,s_prime,ratio_to_factorial,component_bound,bitstring_bits"
    assert lines[8].split(",")[1] == "1133233"


def test_postprocess(capsys):
    assert main(["postprocess", "--y", "3", "--t", "3", "--N", "21", "--a", "4"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["period"] == 3 and out["factors"] == [3, 7]
    main(["postprocess", "--y", "1", "--t", "2", "--N", "21", "--a", "4"])
    assert json.loads(capsys.readouterr().out)["period"] is None
    main(["postprocess", "--y", "1", "--t", "2", "--N", "21", "--a", "4", "--heuristic"])
    assert json.loads(capsys.readouterr().out)["period"] == 3


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out
