"""Reversible classical distributed subroutines used coherently.

All three subroutines here are deterministic, measurement-free, and have
input-oblivious communication patterns, which is what allows the quantum
layer to run them once per basis component of a superposed input.

Output encoding is integer symbols: predicates return 1 for "yes"
(all-zeros / consistent) and 0 for "no".
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import SimulationError
from .runtime import PartyProgram, SizedMessage, run_classical
from .topology import Topology

TRUE, FALSE = 1, 0


@dataclass(frozen=True)
class ClassicalSubroutine:
    """A party program plus the metadata the quantum layer needs.

    ``input_arity`` is the number of registers consumed per party: 1 means
    the program input is a single symbol, 2 means a pair, and so on.
    """

    program: PartyProgram
    name: str
    input_arity: int = 1
    output_dim: int = 2

    def run(self, topology: Topology, inputs, global_info=None):
        return run_classical(topology, self.program, inputs, global_info)


def run_cached(sub: ClassicalSubroutine, topology: Topology, inputs: tuple,
               global_info=None, cache: dict = None):
    """Run a subroutine, memoizing (outputs, cost, pattern) per input vector.

    The trace itself is not cached; coherent application only needs the
    oblivious pattern for cross-component checks.
    """
    if cache is None:
        outputs, cost, trace = sub.run(topology, inputs, global_info)
        return tuple(outputs), cost, trace.pattern()
    key = (sub.name, inputs, global_info)
    hit = cache.get(key)
    if hit is None:
        outputs, cost, trace = sub.run(topology, inputs, global_info)
        hit = (tuple(outputs), cost, trace.pattern())
        cache[key] = hit
    return hit


# ---------------------------------------------------------------------------
# all-zeros test by OR-flooding


def all_zeros_flooding(delta: int) -> ClassicalSubroutine:
    """Every party ends up knowing whether every input bit is 0.

    Each round every party sends its accumulated OR on all ports and folds in
    whatever it receives; after ``delta`` rounds (``delta`` at least the graph
    diameter) the OR of all bits has reached everyone.  Exactly one bit per
    port per direction per round, so the pattern is trivially oblivious.
    """
    if delta < 0:
        raise ValueError("round bound must be nonnegative")

    def init(x, deg, _g):
        return [1 if x else 0, deg]

    def send(state, _r):
        bit, deg = state
        return {p: (bit,) for p in range(1, deg + 1)}

    def recv(state, inbox, _r):
        bit, deg = state
        for msg in inbox.values():
            bit |= msg[0]
        return [bit, deg]

    def finish(state):
        return TRUE if state[0] == 0 else FALSE

    program = PartyProgram(
        rounds=delta, symbol_dim=2,
        init=init, send=send, recv=recv, finish=finish,
        name=f"all_zeros_flooding[{delta}]",
    )
    return ClassicalSubroutine(program, program.name)


# ---------------------------------------------------------------------------
# consistency of the marked parties, from two parallel all-zeros runs


def consistency_from_all_zeros(zeros: ClassicalSubroutine) -> ClassicalSubroutine:
    """All marked parties hold the same bit?  Two all-zeros floods in parallel.

    Each party holds ``(r, marked)``.  Run A floods ``r if marked else 0`` and
    decides "no marked party holds 1"; run B floods ``1-r if marked else 0``
    and decides "no marked party holds 0".  The input is consistent over the
    marked set iff A or B holds; an empty marked set is vacuously consistent.
    Cost is exactly twice the flooding cost in the same number of rounds.
    """
    delta = zeros.program.rounds

    def init(rz, deg, _g):
        r, marked = rz
        a = r if marked else 0
        b = (1 - r) if marked else 0
        return [a, b, deg]

    def send(state, _r):
        a, b, deg = state
        return {p: (a, b) for p in range(1, deg + 1)}

    def recv(state, inbox, _r):
        a, b, deg = state
        for msg in inbox.values():
            a |= msg[0]
            b |= msg[1]
        return [a, b, deg]

    def finish(state):
        a, b, _deg = state
        return TRUE if (a == 0 or b == 0) else FALSE

    program = PartyProgram(
        rounds=delta, symbol_dim=2,
        init=init, send=send, recv=recv, finish=finish,
        name=f"consistency[{delta}]",
    )
    return ClassicalSubroutine(program, program.name, input_arity=2)


# ---------------------------------------------------------------------------
# view trees


class View:
    """A truncated universal-cover tree node, hash-consed.

    ``children`` is ordered by the exit port at this node (1..degree) and each
    entry is ``(entry_port_at_child, child_view)``.  Interning makes equality
    an identity check within one interning generation and lets repeated
    subtrees share storage; compare serializations when objects may span a
    cache reset.  ``symbols`` is the length of the flat serialization (two
    symbols per node, one per edge), which is what transmitting the view is
    metered as.
    """

    __slots__ = ("label", "degree", "children", "symbols")

    def __init__(self, label, degree, children, symbols):
        self.label = label
        self.degree = degree
        self.children = children
        self.symbols = symbols

    def __repr__(self):
        return f"View(label={self.label}, degree={self.degree}, depth={view_depth(self)})"


_INTERN: dict = {}
_TRUNC: dict = {}
_CACHE_CEILING = 300_000


def intern_view(label: int, degree: int, children: tuple) -> View:
    # keys hold the child objects themselves (identity-hashed), so entries
    # keep their children alive and a cache reset can never alias ids
    key = (label, degree, children)
    node = _INTERN.get(key)
    if node is None:
        symbols = 2 + sum(1 + c.symbols for _q, c in children)
        node = View(label, degree, children, symbols)
        _INTERN[key] = node
    return node


def clear_view_caches() -> None:
    """Drop interned views.  Only safe between runs, never during one."""
    _INTERN.clear()
    _TRUNC.clear()


def _trim_view_caches() -> None:
    if len(_INTERN) > _CACHE_CEILING:
        clear_view_caches()


def view_depth(v: View) -> int:
    if not v.children:
        return 0
    return 1 + max(view_depth(c) for _q, c in v.children)


def serialize_view(v: View) -> tuple:
    """Flat preorder encoding: label, degree, then per child port and subtree."""
    out = [v.label, v.degree]
    for q, c in v.children:
        out.append(q)
        out.extend(serialize_view(c))
    return tuple(out)


def truncate_view(v: View, depth: int) -> View:
    if depth <= 0 or not v.children:
        return intern_view(v.label, v.degree, ())
    key = (v, depth)
    hit = _TRUNC.get(key)
    if hit is None:
        hit = intern_view(
            v.label, v.degree,
            tuple((q, truncate_view(c, depth - 1)) for q, c in v.children),
        )
        _TRUNC[key] = hit
    return hit


def view(topology: Topology, node: int, depth: int, inputs=None) -> View:
    """Harness-side reference constructor for the view of ``node``.

    Builds the labeled universal-cover tree of (topology, ports, inputs)
    rooted at ``node``, truncated at ``depth``.  Tests use this as the
    independent counterpart of the distributed exchange below.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if inputs is None:
        inputs = [0] * topology.n
    memo = {}

    def build(v: int, d: int) -> View:
        key = (v, d)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if d == 0:
            node_ = intern_view(inputs[v], topology.degree(v), ())
        else:
            children = []
            for port in range(1, topology.degree(v) + 1):
                u, edge = topology.neighbor_at(v, port)
                children.append((topology.port_of(u, edge), build(u, d - 1)))
            node_ = intern_view(inputs[v], topology.degree(v), tuple(children))
        memo[key] = node_
        return node_

    return build(node, depth)


def distinct_truncated_views(root: View, radius: int) -> list:
    """Distinct depth-``radius`` views rooted within ``radius`` steps of ``root``.

    In a connected n-party network every party sits within n-1 steps of the
    root, so with ``radius = n-1`` this enumerates every party's truncated
    view exactly once per equivalence class.
    """
    found = {}
    seen = set()
    stack = [(root, radius)]
    while stack:
        node, left = stack.pop()
        key = (id(node), left)
        if key in seen:
            continue
        seen.add(key)
        t = truncate_view(node, radius)
        found[id(t)] = t
        if left > 0:
            for _q, child in node.children:
                stack.append((child, left - 1))
    return sorted(found.values(), key=serialize_view)


# ---------------------------------------------------------------------------
# sum of inputs modulo k, via view exchange


def modular_sum_views(k: int, depth: int) -> ClassicalSubroutine:
    """Every party computes the sum of all inputs mod k from its view.

    Parties exchange their full labeled views for ``depth`` rounds (``depth``
    at least 2(n-1), with n passed as the global information).  A party then
    enumerates the distinct depth-(n-1) views occurring in the network inside
    its own tree; the c distinct classes all have the same cardinality n/c,
    so the total input sum is (n/c) times the sum over one representative per
    class.  Messages are serialized views plus the sender's entry port; their
    size depends on the topology but never on the input labels.
    """
    if k < 2:
        raise ValueError("modulus must be at least 2")
    if depth < 0:
        raise ValueError("depth must be nonnegative")

    def setup():
        _trim_view_caches()

    def init(x, deg, n):
        if n is None:
            raise ValueError("modular sum needs the party count as global info")
        if not (0 <= x < k):
            raise ValueError(f"input {x} outside 0..{k - 1}")
        return [n, x, deg, intern_view(x, deg, ())]

    def send(state, _r):
        _n, _x, deg, v = state
        return {p: SizedMessage((p, v), 1 + v.symbols) for p in range(1, deg + 1)}

    def recv(state, inbox, _r):
        n, x, deg, _v = state
        children = tuple((inbox[port][0], inbox[port][1]) for port in range(1, deg + 1))
        return [n, x, deg, intern_view(x, deg, children)]

    def finish(state):
        n, _x, _deg, v = state
        classes = distinct_truncated_views(v, n - 1)
        c = len(classes)
        if n % c != 0:
            raise SimulationError(
                f"view classes do not divide the party count (n={n}, classes={c})"
            )
        total = (n // c) * sum(w.label for w in classes)
        return total % k

    # transmitted symbols are labels (< k) plus ports and degrees, which stay
    # below the party count; depth >= 2(n-1) caps that count at depth//2 + 1
    program = PartyProgram(
        rounds=depth, symbol_dim=max(k, depth // 2 + 1),
        init=init, send=send, recv=recv, finish=finish,
        name=f"modular_sum[{k},{depth}]",
        setup=setup,
    )
    return ClassicalSubroutine(program, program.name, output_dim=k)
