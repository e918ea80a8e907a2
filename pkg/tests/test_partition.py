from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blindfactor.builder import gate_census
from blindfactor.circuit import (Circuit, Component, Gate, circuit_unitary, random_circuit,
                                 reverse_circuit)
from blindfactor.classical import ideal_qpe_distribution
from blindfactor.errors import PreconditionError, SizeError
from blindfactor.partition import (BlindPair, blind_pair, components_commute, conditional_first_register,
                                   equivalent, split_residual, optimize, partition_report,
                                   postselection_probability, reduced_depth, verify_split)
from blindfactor.statevec import apply, init_zero

from conftest import default_circuit, default_pair, default_partition

CLIFFORD_KINDS = ("H", "X", "CNOT")


def circ(n, *layers, t=None):
    t = n if t is None else t
    return Circuit(n, t, n - t, tuple(Component(n, tuple(layer)) for layer in layers))


def test_reduced_depth_examples():
    assert reduced_depth(circ(3, [Gate.h(0)], [Gate.x(1)])) == 0
    assert reduced_depth(circ(3, [Gate.h(0)], [Gate.cnot((0, 1), 2)], [Gate.h(0)])) == 2
    assert reduced_depth(circ(3, [Gate.cnot((0, 1), 2)], [Gate.h(0)], [Gate.h(0)])) == 3
    assert reduced_depth(circ(1)) == 0


def test_equivalent_examples():
    C = default_circuit(2)
    assert equivalent(C, C)
    assert equivalent(circ(2, [Gate.h(0)], [Gate.x(1)]), circ(2, [Gate.x(1)], [Gate.h(0)]))
    assert equivalent(circ(2, [Gate.h(0)], [Gate.cr(0, 0, 1)]), circ(2, [Gate.cr(0, 0, 1)], [Gate.h(0)]))
    assert not equivalent(circ(2, [Gate.h(0)], [Gate.cnot(0, 1)]), circ(2, [Gate.cnot(0, 1)], [Gate.h(0)]))
    with pytest.raises(ValueError):
        equivalent(circ(2), circ(3))


def test_equivalence_is_on_zero_input_only():
    # CZ then H1 vs H1 then CZ: same on |00>, different unitaries
    lhs = circ(2, [Gate.h(0)], [Gate.cr(0, 0, 1)])
    rhs = circ(2, [Gate.cr(0, 0, 1)], [Gate.h(0)])
    assert equivalent(lhs, rhs)
    assert not np.allclose(circuit_unitary(lhs), circuit_unitary(rhs))


def test_optimize_examples():
    C = circ(4, [Gate.cnot((0, 1), 2)], [Gate.h(3)])
    p = optimize(C)
    assert p.d_star == 1 and p.optimal
    assert [c.gates for c in p.reordered.components] == [(Gate.h(3),), (Gate.cnot((0, 1), 2),)]
    clif = circ(2, [Gate.h(0)], [Gate.cnot(0, 1)])
    p = optimize(clif)
    assert p.d_star == 0 and p.c_greater.depth == 0
    ident = circ(2)
    pair = blind_pair(ident)
    assert pair.circ_a.depth == 0 and pair.circ_b.depth == 0


@pytest.mark.parametrize("t", [2, 3])
def test_default_partitions(t):
    C = default_circuit(t)
    part = default_partition(t)
    assert equivalent(C, part.reordered)
    assert all(c.is_clifford for c in part.c_less.components)
    assert gate_census(part.c_less).non_clifford == 0
    assert gate_census(part.c_greater).non_clifford == gate_census(C).non_clifford
    assert part.d_star == part.c_greater.depth
    assert reduced_depth(part.reordered) == part.d_star <= reduced_depth(C)
    pair = default_pair(t)
    assert pair.circ_a == reverse_circuit(part.c_less)
    assert pair.circ_b == part.c_greater


def test_default_values():
    assert (default_circuit(2).depth, default_partition(2).d_star) == (7, 5)
    assert default_partition(2).optimal
    assert (default_circuit(3).depth, default_partition(3).d_star) == (14, 11)


def test_report_flags_reference_deviation():
    rep = partition_report(default_circuit(2), default_partition(2), 21, 4)
    assert rep["reference"]["d"] == 8 and rep["reference"]["d_star"] == 5
    assert rep["reference"]["matches"] is False
    assert rep["max_depth"] == 3072
    assert rep["max_split_residual"] < 1e-10
    assert rep["census_a"]["non_clifford"] == 0
    no_ref = partition_report(default_circuit(2), default_partition(2))
    assert "reference" not in no_ref and "max_depth" not in no_ref


def test_blind_pair_rejects_magic_first_stage():
    from blindfactor.partition import Partition
    C = circ(3, [Gate.cnot((0, 1), 2)])
    bad = Partition(C, circ(3), 0, (0,), True, 1)
    with pytest.raises(PreconditionError):
        blind_pair(bad)


def _naive_min_reduced_depth(C):
    """Every ordering reachable by adjacent swaps that keep C-equivalence, by BFS."""
    d = C.depth
    target = C
    start = tuple(range(d))
    seen = {start}
    queue = deque([start])
    best = reduced_depth(C)
    while queue:
        order = queue.popleft()
        for i in range(d - 1):
            new = order[:i] + (order[i + 1], order[i]) + order[i + 2:]
            if new in seen:
                continue
            cand = C.with_components([C.components[j] for j in new])
            if equivalent(cand, target):
                seen.add(new)
                queue.append(new)
                best = min(best, reduced_depth(cand))
    return best


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 3), st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_trace_search_matches_naive_swap_search(n, d, seed):
    C = random_circuit(n, d, np.random.default_rng(seed), max_controls=2)
    fast = optimize(C, exhaustive_max=0)
    assert fast.optimal
    assert equivalent(C, fast.reordered)
    assert fast.d_star == _naive_min_reduced_depth(C)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 3), st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_exhaustive_is_at_least_as_good(n, d, seed):
    C = random_circuit(n, d, np.random.default_rng(seed))
    full = optimize(C)
    assert full.optimal and equivalent(C, full.reordered)
    assert full.d_star <= optimize(C, exhaustive_max=0).d_star
    assert all(c.is_clifford for c in full.c_less.components)


def test_components_commute():
    assert components_commute(Component(2, (Gate.h(0),)), Component(2, (Gate.x(1),)))
    assert components_commute(Component(2, (Gate.cr(1, 0, 1),)), Component(2, (Gate.cr(0, 0, 1),)))
    assert not components_commute(Component(2, (Gate.h(0),)), Component(2, (Gate.cnot(0, 1),)))
    # large exponent on a two-qubit support
    assert not components_commute(Component(4, (Gate.cr(3, 0, 1),)), Component(4, (Gate.h(1),)))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 3), st.integers(0, 4), st.integers(0, 5), st.integers(0, 2**32 - 1), st.data())
def test_split_identity_random(n, dl, dg, seed, data):
    rng = np.random.default_rng(seed)
    t = data.draw(st.integers(1, n))
    c_less = random_circuit(n, dl, rng, t=t, kinds=CLIFFORD_KINDS, max_controls=1)
    c_greater = random_circuit(n, dg, rng, t=t)
    assert verify_split(c_less, c_greater) < 1e-10


def test_nonzero_x_needs_x_commutation():
    # H on a second-register qubit breaks the X^x symmetry
    c_less = circ(2, [Gate.h(1)], t=1)
    assert verify_split(c_less, circ(2, t=1), 0) < 1e-12
    assert verify_split(c_less, circ(2, t=1), 0b10) > 0.1


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3), st.integers(0, 7), st.integers(0, 2**32 - 1))
def test_general_split_identity(n, x, seed):
    rng = np.random.default_rng(seed)
    x &= (1 << n) - 1
    gl = circuit_unitary(random_circuit(n, 4, rng))
    gg = circuit_unitary(random_circuit(n, 4, rng))
    assert split_residual(gl, gg, x) < 1e-10


def test_split_identity_and_errors():
    assert verify_split(circ(2), circ(2)) < 1e-12
    with pytest.raises(PreconditionError):
        verify_split(circ(2, t=1), circ(2, t=1), x=1)
    with pytest.raises(SizeError):
        verify_split(circ(8), circ(8))


@pytest.mark.parametrize("t", [2, 3])
def test_default_pair_split_all_x(t):
    part = default_partition(t)
    for x2 in range(1 << part.c_less.L):
        assert verify_split(part.c_less, part.c_greater, x2 << t) < 1e-10


@pytest.mark.parametrize("t", [2, 3])
def test_postselection_and_conditional(t):
    pair = default_pair(t)
    assert abs(postselection_probability(pair) - 2.0 ** -t) < 1e-12
    cond = conditional_first_register(pair)
    assert cond.total_variation(ideal_qpe_distribution(21, 4, t)) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(0, 4), st.integers(0, 4), st.integers(0, 2**32 - 1), st.data())
def test_postselection_rate_any_pair(n, da, db, seed, data):
    rng = np.random.default_rng(seed)
    t = data.draw(st.integers(1, n))
    pair = BlindPair(random_circuit(n, da, rng, t=t, kinds=CLIFFORD_KINDS, max_controls=1),
                     random_circuit(n, db, rng, t=t))
    assert abs(postselection_probability(pair) - 2.0 ** -t) < 1e-12


def test_full_postselection_matches_circuit_for_random_splits():
    from blindfactor.partition import bipartite_state
    from blindfactor.statevec import project
    rng = np.random.default_rng(7)
    for _ in range(20):
        c_less = random_circuit(3, 3, rng, t=2, kinds=CLIFFORD_KINDS, max_controls=1)
        c_greater = random_circuit(3, 4, rng, t=2)
        whole = apply(init_zero(3), c_less.then(c_greater)).amplitudes
        pair = BlindPair(reverse_circuit(c_less), c_greater)
        vec, p = project(bipartite_state(pair), range(3), [0, 0, 0])
        assert p == pytest.approx(1 / 8, abs=1e-12)
        assert abs(abs(np.vdot(whole, vec / np.sqrt(p))) - 1) < 1e-10
