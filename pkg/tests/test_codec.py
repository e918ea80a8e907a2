import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blindfactor.circuit import Circuit, Component, Gate, identity_circuit, random_circuit
from blindfactor.codec import (component_bit_lengths, count_width, decode, encode, encode_component,
                               field_width, from_hex, to_hex)
from blindfactor.errors import DecodeError

from conftest import default_circuit


def test_identity_component_is_header_only():
    bits = encode_component(Component(3))
    assert bits == format(count_width(3), "016b") + "00"
    assert component_bit_lengths(identity_circuit(3, d=2)) == [2, 2]


def test_field_widths():
    assert [field_width(n) for n in (1, 2, 3, 4, 5, 8, 9)] == [0, 1, 2, 2, 3, 3, 4]


@pytest.mark.parametrize("t", [2, 3])
def test_default_round_trip(t):
    C = default_circuit(t)
    assert decode(encode(C), C.n, C.t, C.L) == C
    assert from_hex(to_hex(C), C.n, C.t, C.L) == C


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 6), st.integers(0, 8), st.integers(0, 2**32 - 1))
def test_random_round_trip(n, d, seed):
    C = random_circuit(n, d, np.random.default_rng(seed))
    assert decode(encode(C), n, n, 0) == C
    assert from_hex(to_hex(C), n, n, 0) == C


def test_cr_orientation_preserved():
    a = Circuit(2, 2, 0, (Component(2, (Gate.cr(1, 0, 1),)),))
    b = Circuit(2, 2, 0, (Component(2, (Gate.cr(1, 1, 0),)),))
    assert encode(a) != encode(b)
    assert decode(encode(b), 2, 2, 0) == b


def test_truncated_reports_offset():
    bits = encode(default_circuit(2))
    with pytest.raises(DecodeError) as err:
        decode(bits[:-3], 5, 2, 3)
    assert err.value.offset >= 0
    assert "bit offset" in str(err.value)


def test_bad_opcode_offset():
    # one component, 1 gate, opcode 7
    rec = "001" + "111" + "000"
    bits = format(len(rec), "016b") + rec
    with pytest.raises(DecodeError) as err:
        decode(bits, 5, 2, 3)
    assert err.value.offset == 16 + 3


def test_overlapping_gates_rejected():
    rec = "010" + "000" + "000" + "001" + "000"  # H(0), X(0) on n=5
    bits = format(len(rec), "016b") + rec
    with pytest.raises(DecodeError):
        decode(bits, 5, 2, 3)


def test_non_binary_rejected():
    with pytest.raises(DecodeError):
        decode("0102", 2, 2, 0)


def test_hex_rejects_garbage():
    with pytest.raises(DecodeError):
        from_hex("00zz", 2, 2, 0)
    with pytest.raises(DecodeError):
        from_hex("000", 2, 2, 0)
