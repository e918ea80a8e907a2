import numpy as np
import pytest

from blindfactor.builder import (anf, exponent_of, gate_census, inverse_qft_gates, make_encoding,
                                 modexp_gates, search_encoding, shor_circuit)
from blindfactor.circuit import Circuit, Gate, circuit_unitary, schedule
from blindfactor.classical import ideal_qpe_distribution, order
from blindfactor.errors import EncodingError, PreconditionError
from blindfactor.statevec import apply, distribution, init_zero

MATRIX = [(15, 11, 2, 2), (21, 4, 2, 3), (21, 4, 3, 3), (15, 7, 3, 2), (21, 2, 3, 3),
          (33, 4, 3, 3), (35, 4, 4, 4)]


def first_register(C):
    return distribution(apply(init_zero(C.n), C), range(C.t))


@pytest.mark.parametrize("N, a, t, L", MATRIX)
@pytest.mark.parametrize("encoding", [None, "gray"])
def test_matches_ideal_qpe(N, a, t, L, encoding):
    C = shor_circuit(N, a, t, L, encoding)
    got = first_register(C)
    assert got.total_variation(ideal_qpe_distribution(N, a, t)) < 1e-10


def test_search_encoding_matches_ideal():
    C = shor_circuit(21, 4, 3, 3, "search")
    assert first_register(C).total_variation(ideal_qpe_distribution(21, 4, 3)) < 1e-10
    binary = gate_census(shor_circuit(21, 4, 3, 3)).non_clifford
    assert gate_census(C).non_clifford <= binary


def test_examples():
    assert first_register(shor_circuit(21, 4, 2, 3)).as_bitstrings() == pytest.approx(
        {"00": 0.375, "01": 0.25, "10": 0.125, "11": 0.25}, abs=1e-12)
    d3 = first_register(shor_circuit(21, 4, 3, 3))
    assert d3["011"] == pytest.approx(0.2355, abs=1e-4)
    d = first_register(shor_circuit(15, 11, 2, 2)).as_bitstrings()
    assert d == pytest.approx({"00": 0.5, "10": 0.5}, abs=1e-12)


def test_stage_structure():
    C = shor_circuit(21, 4, 3, 3)
    gates = list(C.gates())
    t = C.t
    hs_first = [g for g in gates[:t]]
    assert all(g.kind == "H" for g in hs_first)
    for g in gates:
        if g.target >= t:
            assert g.kind in ("X", "CNOT")
            assert all(q < t for q in g.controls)
        else:
            assert g.kind in ("H", "CR")


@pytest.mark.parametrize("N, a, t, L", MATRIX)
def test_modexp_commutes_with_second_register_x(N, a, t, L):
    enc = make_encoding(N, a, L)
    n = t + L
    mod = Circuit(n, t, L, tuple(schedule(n, modexp_gates(enc, t))))
    u = circuit_unitary(mod)
    for q in range(t, n):
        x = circuit_unitary(Circuit(n, t, L, tuple(schedule(n, [Gate.x(q)]))))
        assert np.max(np.abs(u @ x - x @ u)) < 1e-12


@pytest.mark.parametrize("N, a, t, L", MATRIX)
def test_second_register_on_codewords(N, a, t, L):
    enc = make_encoding(N, a, L)
    C = shor_circuit(N, a, t, L)
    probs = distribution(apply(init_zero(C.n), C), range(t, t + L)).probs
    support = {k for k, v in probs.items() if v > 1e-12}
    assert support <= set(enc.codewords)
    assert enc.r == order(a, N)


def test_encoding_defaults():
    enc = make_encoding(21, 4, 3)
    assert enc.orbit == (1, 4, 16)
    assert enc.codewords == (0, 1, 2)
    assert enc.initial == 0
    assert enc.codeword(16) == 2
    assert make_encoding(21, 4, 2, "gray").codewords == (0, 1, 3)


def test_encoding_errors():
    with pytest.raises(EncodingError, match="size 6"):
        shor_circuit(21, 2, 2, 2)
    with pytest.raises(EncodingError):
        make_encoding(21, 4, 3, [0, 0, 1])
    with pytest.raises(EncodingError):
        make_encoding(21, 4, 3, "unary")
    with pytest.raises(EncodingError):
        search_encoding(35, 4, 3, 4, limit=10)
    with pytest.raises(PreconditionError):
        shor_circuit(21, 7, 2, 3)
    with pytest.raises(PreconditionError):
        shor_circuit(21, 4, 8, 5)


def test_census():
    c2 = gate_census(shor_circuit(21, 4, 2, 3))
    assert c2.non_clifford_counts == {"C2NOT": 2, "CR1": 1}
    assert c2.non_clifford == 3
    c3 = gate_census(shor_circuit(21, 4, 3, 3))
    assert c3.non_clifford_counts["CR1"] == 2 and c3.non_clifford_counts["CR2"] == 1
    empty = gate_census(Circuit(2, 1, 1, ()))
    assert empty.counts == {} and empty.non_clifford == 0


def test_anf_and_weights():
    # x0 AND x1 has a single top monomial
    assert list(anf(np.array([0, 0, 0, 1]))) == [0, 0, 0, 1]
    assert list(anf(np.array([1, 1, 1, 1]))) == [1, 0, 0, 0]
    assert exponent_of(0b001, 3) == 4
    assert exponent_of(0b100, 3) == 1
    assert [g.label for g in inverse_qft_gates(2)] == ["H", "CR1", "H"]
