"""Synchronous anonymous execution of classical distributed programs.

Every party runs identical code; a party's hooks see only its local input,
its degree, shared global information, and whatever arrives on its ports.
The engine meters communication exactly: one unit per transmitted symbol per
link per direction per round, with d-level symbols charged ceil(log2 d) bits.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

from .errors import SimulationError
from .topology import Topology, is_automorphism


@dataclass(frozen=True)
class PartyProgram:
    """One synchronous distributed program, identical at every party.

    ``init(local_input, degree, global_info)`` builds the local state.
    Each round the engine calls ``send(state, r)`` for a ``{port: message}``
    outbox, delivers all messages, then calls ``recv(state, inbox, r)``.
    After exactly ``rounds`` rounds, ``finish(state)`` yields the output.

    Messages are tuples of symbols drawn from ``range(symbol_dim)``, or
    :class:`SizedMessage` values carrying an explicit symbol count.  For the
    program to be usable coherently its (port, size) pattern per round must
    not depend on the inputs; the quantum layer enforces this.
    """

    rounds: int
    symbol_dim: int
    init: Callable[[Any, int, Any], Any]
    send: Callable[[Any, int], dict]
    recv: Callable[[Any, dict, int], Any]
    finish: Callable[[Any], Any]
    name: str = "program"
    setup: Optional[Callable[[], None]] = None  # run once before init, per run

    @property
    def bits_per_symbol(self) -> int:
        return max(1, (self.symbol_dim - 1).bit_length())


@dataclass(frozen=True)
class SizedMessage:
    """A structured message whose transmitted size is declared explicitly.

    ``symbols`` must equal the length the payload would have in a flat symbol
    encoding and must not depend on input values, only on topology.
    """

    payload: Any
    symbols: int


@dataclass(frozen=True)
class CostReport:
    """Exact communication cost: rounds and symbols (qubits) transmitted.

    ``per_round`` optionally details the symbols per round; compositions keep
    it only when both operands carry it.
    """

    rounds: int
    qubits_sent: int
    bits_sent: int
    per_round: tuple = ()

    def __post_init__(self):
        if self.per_round:
            if len(self.per_round) != self.rounds:
                raise ValueError("per_round must have one entry per round")
            if sum(self.per_round) != self.qubits_sent:
                raise ValueError("per_round entries must sum to qubits_sent")

    @property
    def detailed(self) -> bool:
        return bool(self.per_round) or (self.rounds == 0 and self.qubits_sent == 0)

    @staticmethod
    def zero() -> "CostReport":
        return CostReport(0, 0, 0, ())

    def then(self, other: "CostReport") -> "CostReport":
        """Sequential composition: rounds and traffic add."""
        detail = self.per_round + other.per_round if (self.detailed and other.detailed) else ()
        return CostReport(
            self.rounds + other.rounds,
            self.qubits_sent + other.qubits_sent,
            self.bits_sent + other.bits_sent,
            detail,
        )

    def alongside(self, other: "CostReport") -> "CostReport":
        """Parallel composition: traffic adds, rounds overlap."""
        rounds = max(self.rounds, other.rounds)
        if self.detailed and other.detailed:
            a = self.per_round + (0,) * (rounds - self.rounds)
            b = other.per_round + (0,) * (rounds - other.rounds)
            detail = tuple(x + y for x, y in zip(a, b))
        else:
            detail = ()
        return CostReport(
            rounds,
            self.qubits_sent + other.qubits_sent,
            self.bits_sent + other.bits_sent,
            detail,
        )

    def to_json(self) -> dict:
        return {
            "rounds": self.rounds,
            "qubits_sent": self.qubits_sent,
            "bits_sent": self.bits_sent,
            "per_round": list(self.per_round),
        }


def sequential(*costs: CostReport) -> CostReport:
    total = CostReport.zero()
    for c in costs:
        total = total.then(c)
    return total


def parallel(*costs: CostReport) -> CostReport:
    total = CostReport.zero()
    for c in costs:
        total = total.alongside(c)
    return total


@dataclass(frozen=True)
class TraceEvent:
    round: int        # 1-based
    sender: int
    receiver: int
    payload: Any
    symbols: int
    bits: int


@dataclass(frozen=True)
class Trace:
    events: tuple

    def pattern(self) -> tuple:
        """The input-oblivious part of the trace: who sent how much when."""
        return tuple((ev.round, ev.sender, ev.receiver, ev.symbols) for ev in self.events)

    def permuted(self, perm: Sequence[int]) -> "Trace":
        return Trace(tuple(
            TraceEvent(ev.round, perm[ev.sender], perm[ev.receiver], ev.payload, ev.symbols, ev.bits)
            for ev in self.events
        ))

    def canonical(self) -> tuple:
        return tuple(sorted(
            (ev.round, ev.sender, ev.receiver, ev.payload, ev.symbols) for ev in self.events
        ))

    def to_json(self, topo: Topology) -> list:
        out = []
        for ev in self.events:
            u, v = sorted((ev.sender, ev.receiver))
            out.append({
                "round": ev.round,
                "edge": [u, v],
                "direction": f"{ev.sender}->{ev.receiver}",
                "symbols": ev.symbols,
                "bits": ev.bits,
            })
        return out


def _message_size(msg) -> int:
    if isinstance(msg, SizedMessage):
        return msg.symbols
    return len(msg)


def _message_payload(msg):
    if isinstance(msg, SizedMessage):
        return msg.payload
    return msg


def _normalize(msg, symbol_dim: int, sender: int, port: int):
    if isinstance(msg, SizedMessage):
        if msg.symbols < 0:
            raise SimulationError(f"party {sender} declared a negative message size")
        return msg
    if isinstance(msg, int):
        msg = (msg,)
    msg = tuple(msg)
    for s in msg:
        if not (0 <= s < symbol_dim):
            raise SimulationError(
                f"party {sender} sent symbol {s} outside alphabet 0..{symbol_dim - 1} on port {port}"
            )
    return msg


def run_classical(
    topology: Topology,
    program: PartyProgram,
    inputs: Sequence[Any],
    global_info: Any = None,
) -> tuple:
    """Run ``program`` at every party for exactly ``program.rounds`` rounds.

    Returns ``(outputs, cost, trace)``.  A round sends first and then
    delivers: messages emitted in round r are absorbed by ``recv`` in the
    same engine round, so information travels one hop per round.
    """
    n = topology.n
    if len(inputs) != n:
        raise ValueError(f"expected {n} inputs, got {len(inputs)}")
    if program.setup is not None:
        program.setup()
    states = [program.init(inputs[v], topology.degree(v), global_info) for v in range(n)]
    events = []
    per_round = []
    bps = program.bits_per_symbol
    for r in range(program.rounds):
        inboxes = [dict() for _ in range(n)]
        symbols_this_round = 0
        for v in range(n):
            outbox = program.send(states[v], r) or {}
            for port in sorted(outbox):
                msg = _normalize(outbox[port], program.symbol_dim, v, port)
                u, edge = topology.neighbor_at(v, port)
                size = _message_size(msg)
                inboxes[u][topology.port_of(u, edge)] = _message_payload(msg)
                symbols_this_round += size
                events.append(TraceEvent(r + 1, v, u, _message_payload(msg), size, size * bps))
        per_round.append(symbols_this_round)
        for v in range(n):
            states[v] = program.recv(states[v], inboxes[v], r)
    outputs = [program.finish(states[v]) for v in range(n)]
    total = sum(per_round)
    cost = CostReport(program.rounds, total, total * bps, tuple(per_round))
    return outputs, cost, Trace(tuple(events))


def verify_anonymity(
    topology: Topology,
    program: PartyProgram,
    inputs: Sequence[Any],
    aut: Sequence[int],
    global_info: Any = None,
) -> bool:
    """Check equivariance of a run under a port-preserving automorphism.

    Runs the program on ``inputs`` and on the permuted inputs, and compares
    outputs, costs, and traces modulo the node relabeling.
    """
    if not is_automorphism(topology, aut):
        raise ValueError("permutation is not a port-preserving automorphism")
    n = topology.n
    moved = [None] * n
    for v in range(n):
        moved[aut[v]] = inputs[v]
    out1, cost1, trace1 = run_classical(topology, program, inputs, global_info)
    out2, cost2, trace2 = run_classical(topology, program, moved, global_info)
    if cost1 != cost2:
        return False
    for v in range(n):
        if out2[aut[v]] != out1[v]:
            return False
    return trace1.permuted(aut).canonical() == trace2.canonical()
