import itertools

import pytest

from anonqnet.errors import SimulationError
from anonqnet.runtime import (CostReport, PartyProgram, parallel, run_classical,
                              sequential, verify_anonymity)
from anonqnet.subroutines import (all_zeros_flooding, consistency_from_all_zeros,
                                  modular_sum_views)
from anonqnet.topology import catalog

from conftest import all_bit_vectors


def echo_program(rounds=1):
    return PartyProgram(
        rounds=rounds, symbol_dim=2,
        init=lambda x, deg, g: (x, deg),
        send=lambda s, r: {p: (s[0],) for p in range(1, s[1] + 1)},
        recv=lambda s, inbox, r: s,
        finish=lambda s: s[0],
        name="echo",
    )


def test_k2_echo_two_messages():
    topo = catalog("complete", 2)
    out, cost, trace = run_classical(topo, echo_program(), [1, 0])
    assert out == [1, 0]
    assert cost.rounds == 1 and cost.qubits_sent == 2 and cost.bits_sent == 2
    assert len(trace.events) == 2


def test_flooding_cost_is_two_m_delta():
    topo = catalog("ring", 4)
    sub = all_zeros_flooding(4)
    for x in ([0, 0, 0, 0], [1, 0, 1, 1]):
        _out, cost, _tr = run_classical(topo, sub.program, x)
        assert cost.rounds == 4
        assert cost.qubits_sent == 2 * topo.m * 4 == 32
        assert cost.per_round == (8, 8, 8, 8)


def test_zero_round_program():
    topo = catalog("ring", 4)
    prog = PartyProgram(rounds=0, symbol_dim=2,
                        init=lambda x, d, g: x,
                        send=lambda s, r: {},
                        recv=lambda s, i, r: s,
                        finish=lambda s: s)
    out, cost, trace = run_classical(topo, prog, [1, 2, 3, 4])
    assert out == [1, 2, 3, 4]
    assert cost == CostReport.zero()
    assert trace.events == ()


def test_determinism():
    topo = catalog("star", 4)
    sub = all_zeros_flooding(4)
    runs = [run_classical(topo, sub.program, [0, 1, 0, 0]) for _ in range(2)]
    assert runs[0][0] == runs[1][0]
    assert runs[0][1] == runs[1][1]
    assert runs[0][2].canonical() == runs[1][2].canonical()


def test_bad_port_rejected():
    topo = catalog("path", 3)
    prog = PartyProgram(rounds=1, symbol_dim=2,
                        init=lambda x, d, g: d,
                        send=lambda s, r: {s + 1: (0,)},  # one past the last port
                        recv=lambda s, i, r: s,
                        finish=lambda s: s)
    with pytest.raises(ValueError):
        run_classical(topo, prog, [0, 0, 0])


def test_symbol_out_of_alphabet_rejected():
    topo = catalog("complete", 2)
    prog = PartyProgram(rounds=1, symbol_dim=2,
                        init=lambda x, d, g: x,
                        send=lambda s, r: {1: (7,)},
                        recv=lambda s, i, r: s,
                        finish=lambda s: s)
    with pytest.raises(SimulationError):
        run_classical(topo, prog, [0, 0])


def test_anonymity_constant_inputs():
    topo = catalog("ring", 4)
    sub = all_zeros_flooding(4)
    assert verify_anonymity(topo, sub.program, [1, 1, 1, 1], (1, 2, 3, 0))


def test_anonymity_rotated_inputs():
    topo = catalog("ring", 4)
    sub = all_zeros_flooding(4)
    for aut in ((1, 2, 3, 0), (2, 3, 0, 1), (3, 0, 1, 2)):
        assert verify_anonymity(topo, sub.program, [1, 0, 0, 0], aut)


def test_anonymity_rejects_non_automorphism():
    topo = catalog("ring", 4)
    sub = all_zeros_flooding(4)
    with pytest.raises(ValueError):
        verify_anonymity(topo, sub.program, [0, 0, 0, 0], (0, 2, 1, 3))


@pytest.mark.parametrize("name,n", [("ring", 3), ("ring", 4), ("path", 4), ("star", 4)])
def test_oblivious_patterns(name, n):
    """Per-round (sender, receiver, size) patterns never depend on inputs."""
    topo = catalog(name, n)
    zeros = all_zeros_flooding(n)
    cons = consistency_from_all_zeros(zeros)
    sums = modular_sum_views(2, 2 * (n - 1))
    patterns = {
        run_classical(topo, zeros.program, list(x))[2].pattern()
        for x in all_bit_vectors(n)
    }
    assert len(patterns) == 1
    patterns = {
        run_classical(topo, cons.program, list(rz))[2].pattern()
        for rz in itertools.product(((0, 0), (0, 1), (1, 0), (1, 1)), repeat=n)
    }
    assert len(patterns) == 1
    patterns = {
        run_classical(topo, sums.program, list(x), global_info=n)[2].pattern()
        for x in all_bit_vectors(n)
    }
    assert len(patterns) == 1


def test_equivariance_all_catalog_graphs():
    """Every automorphism of every catalog graph fixes every subroutine run."""
    from conftest import catalog_cases
    from anonqnet.topology import automorphisms
    for _name, n, topo in catalog_cases(2, 4):
        zeros = all_zeros_flooding(n)
        cons = consistency_from_all_zeros(zeros)
        sums = modular_sum_views(2, 2 * (n - 1))
        for aut in automorphisms(topo):
            for x in all_bit_vectors(n):
                assert verify_anonymity(topo, zeros.program, list(x), aut)
                assert verify_anonymity(topo, sums.program, list(x), aut,
                                        global_info=n)
            for rz in itertools.product(((0, 1), (1, 1)), repeat=n):
                assert verify_anonymity(topo, cons.program, list(rz), aut)


def test_cost_composition():
    a = CostReport(2, 10, 10, (4, 6))
    b = CostReport(3, 6, 12, (2, 2, 2))
    seq = sequential(a, b)
    assert (seq.rounds, seq.qubits_sent, seq.bits_sent) == (5, 16, 22)
    assert seq.per_round == (4, 6, 2, 2, 2)
    par = parallel(a, b)
    assert (par.rounds, par.qubits_sent) == (3, 16)
    assert par.per_round == (6, 8, 2)
    # detail is dropped, not faked, when one side lacks it
    c = CostReport(1, 5, 5, ())
    assert sequential(a, c).per_round == ()
    assert sequential(a, c).qubits_sent == 15


def test_cost_report_validation():
    with pytest.raises(ValueError):
        CostReport(2, 5, 5, (1, 1))
    with pytest.raises(ValueError):
        CostReport(1, 5, 5, (5, 0))


def test_trace_json_shape():
    topo = catalog("complete", 2)
    _out, _cost, trace = run_classical(topo, echo_program(), [1, 0])
    rows = trace.to_json(topo)
    assert rows[0]["edge"] == [0, 1]
    assert {row["direction"] for row in rows} == {"0->1", "1->0"}
    assert all(row["symbols"] == 1 and row["bits"] == 1 for row in rows)
