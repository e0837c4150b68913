"""What a unique leader unlocks: identifiers, graph recognition, functions.

Once one party is distinguished, anonymity is broken for good: the leader
walks a depth-first token through the network, hands out identifiers, learns
the whole adjacency structure, and can then evaluate any function of the
labeled graph or reroute qudits.  These steps are computed centrally here
with every message explicitly metered; traversals are counted as sequential
token walks without pipelining.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .election import elect
from .qsim import SparseState
from .runtime import CostReport, sequential
from .topology import Topology


@dataclass(frozen=True)
class SpanningTree:
    root: int
    parent: tuple          # parent[v]; None at the root
    preorder: tuple        # nodes in visit order
    ids: tuple             # ids[v] in 1..n, leader gets 1

    @property
    def n(self) -> int:
        return len(self.parent)

    def children(self, v: int) -> list:
        return [u for u in self.preorder if self.parent[u] == v]

    def depth(self, v: int) -> int:
        d = 0
        while self.parent[v] is not None:
            v = self.parent[v]
            d += 1
        return d

    def height(self) -> int:
        return max(self.depth(v) for v in range(self.n))

    def party_with_id(self, ident: int) -> int:
        return self.ids.index(ident)


def spanning_tree(topology: Topology, leader: int) -> tuple:
    """Depth-first tree from the leader, children visited in port order.

    The token walks each tree edge twice; on first arrival at a node, one
    notify/acknowledge exchange with its neighbors tells the walk which ports
    still lead to unvisited parties.  A second walk hands out identifiers in
    visit order.  Rounds stay linear in n, traffic linear in m.
    """
    n = topology.n
    parent = [None] * n
    order = []
    visited = [False] * n
    stack = [(leader, None)]
    # iterative DFS, expanding ports in ascending order
    def visit(v):
        visited[v] = True
        order.append(v)
    visit(leader)
    path = [leader]
    token_moves = 0
    while path:
        v = path[-1]
        advanced = False
        for port in range(1, topology.degree(v) + 1):
            u, _e = topology.neighbor_at(v, port)
            if not visited[u]:
                parent[u] = v
                visit(u)
                path.append(u)
                token_moves += 1
                advanced = True
                break
        if not advanced:
            path.pop()
            if path:
                token_moves += 1
    ids = [0] * n
    for i, v in enumerate(order, start=1):
        ids[v] = i
    tree = SpanningTree(root=leader, parent=tuple(parent),
                        preorder=tuple(order), ids=tuple(ids))

    # pass 1: token walk (1 bit per move) plus one notify/ack round pair per
    # node; pass 2: the identifier walk carries a counter up to n
    notify = 2 * sum(topology.degree(v) for v in range(n))
    walk_rounds = token_moves
    pass1 = CostReport(walk_rounds + 2 * n, token_moves + notify,
                       token_moves + notify, ())
    id_bits = max(1, n.bit_length())
    pass2 = CostReport(token_moves, token_moves, token_moves * id_bits, ())
    return tree, pass1.then(pass2)


def recognize_graph(topology: Topology, tree: SpanningTree) -> tuple:
    """The adjacency matrix in identifier space, known to every party.

    Parties swap identifiers with their neighbors, leaves start adjacency
    matrices up the tree with internal nodes merging, and the leader
    broadcasts the result back down.
    """
    n = topology.n
    adj = np.zeros((n, n), dtype=int)
    for e in topology.edges:
        u, v = sorted(e)
        adj[tree.ids[u] - 1, tree.ids[v] - 1] = 1
        adj[tree.ids[v] - 1, tree.ids[u] - 1] = 1
    id_bits = max(1, n.bit_length())
    id_swap = CostReport(1, 2 * topology.m, 2 * topology.m * id_bits, ())
    height = tree.height()
    matrix_symbols = (n - 1) * n * n
    gather = CostReport(height, matrix_symbols, matrix_symbols, ())
    broadcast = CostReport(height, matrix_symbols, matrix_symbols, ())
    return adj, sequential(id_swap, gather, broadcast)


def majority(adj: np.ndarray, labels: Sequence[int]) -> int:
    return 1 if 2 * sum(labels) > len(labels) else 0


def parity(adj: np.ndarray, labels: Sequence[int]) -> int:
    return sum(labels) % 2


def all_equal(adj: np.ndarray, labels: Sequence[int]) -> int:
    return 1 if len(set(labels)) == 1 else 0


def labeled_cycle_exists(adj: np.ndarray, labels: Sequence[int]) -> int:
    """Is there a cycle on which every node carries label 1?

    Any such cycle lies in the subgraph induced by the label-1 nodes, so this
    reduces to cycle detection there.
    """
    n = len(labels)
    keep = [i for i in range(n) if labels[i] == 1]
    index = {v: i for i, v in enumerate(keep)}
    parent = list(range(len(keep)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u in keep:
        for v in keep:
            if v <= u or not adj[u][v]:
                continue
            ru, rv = find(index[u]), find(index[v])
            if ru == rv:
                return 1
            parent[ru] = rv
    return 0


BUILTIN_FUNCTIONS = {
    "majority": majority,
    "parity": parity,
    "all-equal": all_equal,
    "labeled-cycle": labeled_cycle_exists,
}


@dataclass
class FunctionRun:
    values: tuple            # one per party; all equal
    leader: int
    tree: SpanningTree
    adjacency: np.ndarray
    cost: CostReport

    @property
    def value(self):
        return self.values[0]


def compute_function(topology: Topology, inputs: Sequence[int],
                     fn: Callable, seed: Optional[int] = None) -> FunctionRun:
    """Elect, build the tree, recognize the graph, evaluate, broadcast.

    ``fn(adjacency, labels)`` sees the graph in identifier space with
    ``labels[i]`` the input of the party holding identifier i+1; it must not
    care which consistent relabeling it is given.
    """
    n = topology.n
    if len(inputs) != n:
        raise ValueError(f"expected {n} inputs")
    election = elect(topology, seed=seed)
    branch = election.sampled
    (leader,) = branch.leaders
    tree, tree_cost = spanning_tree(topology, leader)
    adj, rec_cost = recognize_graph(topology, tree)
    labels = [0] * n
    for v in range(n):
        labels[tree.ids[v] - 1] = inputs[v]
    value = fn(adj, labels)
    height = tree.height()
    label_symbols = sum(tree.depth(v) for v in range(n))
    gather = CostReport(height, label_symbols, label_symbols, ())
    broadcast = CostReport(height, n - 1, n - 1, ())
    cost = sequential(election.cost, tree_cost, rec_cost, gather, broadcast)
    return FunctionRun(values=(value,) * n, leader=leader, tree=tree,
                       adjacency=adj, cost=cost)


def unitary_from_first_column(column: np.ndarray) -> np.ndarray:
    """Complete a unit vector to a unitary having it as the first column."""
    col = np.asarray(column, dtype=complex)
    norm = np.linalg.norm(col)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError("column must be a unit vector")
    d = len(col)
    seed_mat = np.eye(d, dtype=complex)
    seed_mat[:, 0] = col
    q, r = np.linalg.qr(seed_mat)
    q[:, 0] *= r[0, 0] / abs(r[0, 0])
    return q


def gather_scatter_state(topology: Topology, leader: int, state: SparseState,
                         register: str, transform: np.ndarray,
                         tree: Optional[SpanningTree] = None) -> tuple:
    """Route every party's qudit to the leader, transform, route back.

    Ownership is tracked by relabeling rather than hop-by-hop state updates,
    but every hop is metered: each qudit travels its tree distance twice.
    ``transform`` acts on the gathered qudits ordered by identifier, and the
    i-th output qudit ends up at the party holding identifier i.
    """
    lay = state.layout
    n = lay.n_parties
    if topology.n != n:
        raise ValueError("state and topology disagree on the party count")
    k = lay.dim(register)
    if tree is None:
        tree, _ = spanning_tree(topology, leader)
    dim = k ** n
    mat = np.asarray(transform, dtype=complex)
    if mat.shape != (dim, dim):
        raise ValueError(f"transform must be {dim}x{dim}")
    if np.max(np.abs(mat.conj().T @ mat - np.eye(dim))) > 1e-9:
        raise ValueError("transform is not unitary")

    slots = [lay.slot(p, register) for p in range(n)]
    others = [s for s in range(len(lay.regs) * n) if s not in slots]
    by_rest: dict = {}
    for key, amp in state.amps.items():
        rest = tuple(key[s] for s in others)
        by_rest.setdefault(rest, {})[key] = amp

    def id_index(key) -> int:
        idx = 0
        for ident in range(1, n + 1):
            party = tree.party_with_id(ident)
            idx = idx * k + key[slots[party]]
        return idx

    amps: dict = {}
    for rest, group in by_rest.items():
        vec = np.zeros(dim, dtype=complex)
        template = None
        for key, amp in group.items():
            vec[id_index(key)] += amp
            template = key
        vec = mat @ vec
        for idx in np.flatnonzero(np.abs(vec) > 1e-14):
            syms = []
            rem = int(idx)
            for _ in range(n):
                syms.append(rem % k)
                rem //= k
            syms.reverse()  # syms[i] belongs to identifier i+1
            nk = list(template)
            for ident in range(1, n + 1):
                party = tree.party_with_id(ident)
                nk[slots[party]] = syms[ident - 1]
            nk = tuple(nk)
            amps[nk] = amps.get(nk, 0j) + vec[idx]
    final = SparseState(lay, amps)

    hops = sum(tree.depth(v) for v in range(n))
    qudit_bits = max(1, (k - 1).bit_length())
    cost = CostReport(4 * max(n - 1, 0), 2 * hops, 2 * hops * qudit_bits, ())
    return final, cost
