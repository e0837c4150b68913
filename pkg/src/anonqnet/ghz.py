"""Sharing a generalized GHZ (cat) state over k-level qudits.

Every party applies the Fourier gate over Z_k to a fresh qudit, the network
coherently computes the sum of all qudits mod k, and measuring that shared
sum collapses the qudits to a cat state whose phase index is determined by
the outcome.  k such attempts run in parallel; if none lands on phase index
zero, two attempts that landed on the same index are distilled into the
target state with one local modular addition and one more measurement.
Communication happens only inside the mod-k sum, so the whole procedure gets
by with a constant gate inventory plus that one black box.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import SimulationError
from .qsim import (SparseState, apply_all_parties, apply_coherent_subroutine,
                   binary_op_all_parties, branches, drop_registers, init_state,
                   layout, rename_register, tensor)
from .runtime import CostReport, parallel
from .subroutines import modular_sum_views
from .topology import Topology


def fourier_gate(k: int) -> np.ndarray:
    """The Fourier matrix over Z_k; the Hadamard gate for k = 2."""
    if k < 2:
        raise ValueError("qudit dimension must be at least 2")
    omega = cmath.exp(2j * math.pi / k)
    mat = np.array([[omega ** (x * j) for x in range(k)] for j in range(k)], dtype=complex)
    return mat / math.sqrt(k)


def cat_state(k: int, t: int, n: int, register: str = "share") -> SparseState:
    """Reference cat state: sum_x omega^{t x} |x...x> / sqrt(k) over n parties."""
    if not (0 <= t < k):
        raise ValueError(f"phase index {t} outside 0..{k - 1}")
    omega = cmath.exp(2j * math.pi / k)
    lay = layout(n, [(register, k)])
    amps = {
        (x,) * n: omega ** (t * x) / math.sqrt(k)
        for x in range(k)
    }
    return SparseState(lay, amps)


@dataclass(frozen=True)
class AttemptBranch:
    """One measurement branch of a single cat-preparation attempt."""

    outcome: int
    probability: float
    state: SparseState   # over register "share"


def _attempt(topology: Topology, k: int, fk, run_cache: dict, audit: list) -> tuple:
    """Run one attempt up to its measurement; enumerate all its branches."""
    n = topology.n
    lay = layout(n, [("share", k), ("sum", k)])
    state = init_state(lay, 0)
    gate = fourier_gate(k)
    audit.append(f"fourier[{k}]")
    state = apply_all_parties(state, "share", gate)
    audit.append(f"sum_mod_{k}_blackbox")
    state, cost = apply_coherent_subroutine(
        state, fk, topology, ("share",), "sum",
        fiducial=0, global_info=n, run_cache=run_cache)
    audit.append("measure")
    audit.append(f"fourier_dag[{k}]")
    out = []
    dagger = gate.conj().T
    for br in branches(state, "sum"):
        values = set(br.outcome_vector("sum"))
        if len(values) > 1:
            raise SimulationError("sum register disagrees across parties")
        outcome = values.pop()
        post = apply_all_parties(br.post_state, "share", dagger)
        post = drop_registers(post, ["sum"])
        out.append(AttemptBranch(outcome=outcome, probability=br.probability, state=post))
    return out, cost


def phase1(topology: Topology, k: int, *, run_cache: Optional[dict] = None,
           audit: Optional[list] = None) -> tuple:
    """All k parallel attempts, fully branch-enumerated.

    Returns ``(attempts, cost)`` where ``attempts[i]`` lists the branches of
    attempt i; measuring the shared sum of attempt i leaves its qudits in the
    cat state of phase index (-outcome) mod k.
    """
    if run_cache is None:
        run_cache = {}
    if audit is None:
        audit = []
    n = topology.n
    fk = modular_sum_views(k, 2 * (n - 1))
    attempts = []
    costs = []
    for _i in range(k):
        branches_i, cost_i = _attempt(topology, k, fk, run_cache, audit)
        attempts.append(branches_i)
        costs.append(cost_i)
    return attempts, parallel(*costs)


def phase2(state: SparseState, k: int, keep_reg: str, add_reg: str,
           audit: Optional[list] = None) -> list:
    """Distill one cat state of phase index zero from two of equal index.

    ``state`` holds two cat registers with the same nonzero phase index.
    Each party adds its ``keep_reg`` qudit into its ``add_reg`` qudit mod k
    and the ``add_reg`` qudits are measured; every branch leaves ``keep_reg``
    in the index-zero cat state up to a global phase.
    """
    if audit is None:
        audit = []
    audit.append(f"add_mod_{k}")
    state = binary_op_all_parties(state, keep_reg, add_reg, "addmod")
    audit.append("measure")
    out = []
    for br in branches(state, add_reg):
        values = set(br.outcome_vector(add_reg))
        if len(values) > 1:
            raise SimulationError("distillation outcomes disagree across parties")
        post = drop_registers(br.post_state, [add_reg])
        out.append(AttemptBranch(outcome=values.pop(), probability=br.probability, state=post))
    return out


@dataclass(frozen=True)
class GhzBranch:
    attempt_outcomes: tuple              # measured sums, one per attempt
    probability: float
    state: SparseState                   # final shared state, register "share"
    source_attempt: int                  # 0-based attempt the state came from
    pair: Optional[tuple] = None         # (l, m) used for distillation
    distill_outcome: Optional[int] = None

    def to_json(self) -> dict:
        from .qsim import dump_state
        return {
            "attempt_outcomes": list(self.attempt_outcomes),
            "probability": self.probability,
            "source_attempt": self.source_attempt,
            "pair": list(self.pair) if self.pair else None,
            "distill_outcome": self.distill_outcome,
            "state": dump_state(self.state),
        }


@dataclass
class GhzShareResult:
    k: int
    n: int
    branches: list
    cost: CostReport
    gates_used: tuple
    sampled_index: Optional[int] = None

    @property
    def sampled(self) -> Optional[GhzBranch]:
        if self.sampled_index is None:
            return None
        return self.branches[self.sampled_index]

    def total_probability(self) -> float:
        return sum(b.probability for b in self.branches)

    def to_json(self) -> dict:
        payload = {
            "k": self.k,
            "n": self.n,
            "cost": self.cost.to_json(),
            "gates_used": list(self.gates_used),
            "branches": [b.to_json() for b in self.branches],
        }
        if self.sampled_index is not None:
            payload["sampled_index"] = self.sampled_index
        return payload


def _first_equal_pair(outcomes) -> tuple:
    k = len(outcomes)
    for l in range(k):
        for m in range(l + 1, k):
            if outcomes[l] == outcomes[m]:
                return l, m
    raise SimulationError("no two attempts agree; pigeonhole violated")


def ghz_share(topology: Topology, k: int, *, seed: Optional[int] = None,
              all_branches: bool = False) -> GhzShareResult:
    """Share the n-party index-zero cat state over k-level qudits, exactly.

    Enumerates every combination of the k attempts' outcomes (and, where
    distillation runs, its outcome too); each resulting branch carries the
    final shared state.  A branch is sampled unless ``all_branches`` is set.
    """
    n = topology.n
    if k < 2:
        raise ValueError("qudit dimension must be at least 2")
    run_cache: dict = {}
    audit: list = []
    attempts, cost = phase1(topology, k, run_cache=run_cache, audit=audit)

    combos = [((), 1.0)]
    for branches_i in attempts:
        combos = [
            (picked + (br,), p * br.probability)
            for picked, p in combos
            for br in branches_i
        ]

    out = []
    for picked, prob in combos:
        outcomes = tuple(br.outcome for br in picked)
        zero_hits = [i for i, s in enumerate(outcomes) if s == 0]
        if zero_hits:
            i0 = zero_hits[0]
            out.append(GhzBranch(
                attempt_outcomes=outcomes, probability=prob,
                state=picked[i0].state, source_attempt=i0))
            continue
        l, m = _first_equal_pair(outcomes)
        joint = rename_register(picked[l].state, "share", "keep")
        joint = tensor(joint, rename_register(picked[m].state, "share", "aux"))
        for distilled in phase2(joint, k, "keep", "aux", audit=audit):
            out.append(GhzBranch(
                attempt_outcomes=outcomes,
                probability=prob * distilled.probability,
                state=rename_register(distilled.state, "keep", "share"),
                source_attempt=l, pair=(l, m),
                distill_outcome=distilled.outcome))

    gates = tuple(sorted(set(audit)))
    sampled = None
    if not all_branches:
        import random
        rng = random.Random(seed)
        draw = rng.random()
        acc = 0.0
        sampled = len(out) - 1
        for i, b in enumerate(out):
            acc += b.probability
            if draw <= acc:
                sampled = i
                break
    return GhzShareResult(k=k, n=n, branches=out, cost=cost,
                          gates_used=gates, sampled_index=sampled)
