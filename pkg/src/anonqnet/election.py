"""Exact anonymous leader election and the unique-one test backing it.

The election prepares every party's coin in sqrt(1-1/n)|0> + sqrt(1/n)|1>,
then runs one exact amplification iterate whose good subspace is the strings
of Hamming weight one: the flag is computed by the unique-one procedure, the
all-zero reflection by OR-flooding.  Measuring the coins then yields exactly
one eligible party in every branch.

The unique-one procedure follows a two-test structure: an all-zeros flood
handles weight 0, and for every guess t of the weight a bank of registers
runs one amplification that, precisely when t matches the true weight (and
the weight is at least 2), leaves only inconsistent coin strings, which a
consistency check then reports.  Banks touch disjoint registers and stay
unentangled for a basis input, so the engine evolves each bank as its own
small sparse state; exactness is asserted numerically per bank and any
residue raises instead of being rounded away.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .amplify import (SubroutineFlag, amplification_steps, exact_amplify,
                      phase_angles, run_steps, Step)
from .errors import ExactnessError, SimulationError
from .qsim import (SparseState, apply_all_parties, branches, init_state,
                   layout, phase_kick, phase_kick_where)
from .runtime import CostReport, parallel, sequential
from .subroutines import (FALSE, TRUE, all_zeros_flooding,
                          consistency_from_all_zeros, run_cached)
from .topology import Topology

MARKED, UNMARKED = 1, 0
CONSISTENT, INCONSISTENT = 1, 0

#: how clean "exactly zero amplitude" must be in classifications and ancilla
#: restoration before the engine refuses to continue
RESIDUE_TOL = 1e-10


def success_probability(n: int) -> float:
    """Chance that exactly one of n fair-ish coins (heads odds 1/n) is heads."""
    if n < 2:
        raise ValueError("need at least two parties")
    return (1.0 - 1.0 / n) ** (n - 1)


def guess_success_probability(t: int) -> float:
    """Chance of seeing both outcomes among t fair coin flips."""
    if t < 2:
        raise ValueError("guess must be at least 2")
    return 1.0 - 2.0 * 0.5 ** t


def rotation_matrix(n: int) -> np.ndarray:
    """The involution sending |0> to sqrt(1-1/n)|0> + sqrt(1/n)|1>."""
    if n < 2:
        raise ValueError("need at least two parties")
    root = math.sqrt(n - 1)
    return np.array([[root, 1.0], [1.0, -root]], dtype=complex) / math.sqrt(n)


# ---------------------------------------------------------------------------
# the unique-one procedure


@dataclass
class BankReport:
    """Numerical evidence from one guess bank of the unique-one procedure."""

    guess: int
    mass_consistent: float
    mass_inconsistent: float
    max_consistent_amp: float
    max_inconsistent_amp: float
    inversion_residual: float      # mass off the restored basis state
    inversion_phase_error: float   # |final fiducial amplitude - 1|

    @property
    def purely_inconsistent(self) -> bool:
        return self.max_consistent_amp < RESIDUE_TOL

    @property
    def purely_consistent(self) -> bool:
        return self.max_inconsistent_amp < RESIDUE_TOL


@dataclass
class InputReport:
    """Diagnostics for the procedure's action on one classical input."""

    x: tuple
    zeros_flag: int
    banks: list
    flips_output: bool
    value: int
    phase_factor: complex


class _MarkedFlag(SubroutineFlag):
    """Flag whose phase is kicked only by marked parties, by 1/t each.

    When the guess t equals the number of marked parties the total collected
    phase is exact; this is what keeps the procedure exact when every party
    knows only an upper bound on the network size.
    """

    def __init__(self, *args, guess: int, mark_reg: str, **kwargs):
        super().__init__(*args, **kwargs)
        self.guess = guess
        self.mark_reg = mark_reg

    def kick(self, state: SparseState, total_angle: float) -> SparseState:
        return phase_kick_where(
            state,
            ((self.mark_reg, MARKED), (self.register, self.trigger)),
            total_angle / self.guess,
        )


class ExactlyOneProcedure:
    """Measurement-free test that the parties' bits have Hamming weight one.

    ``apply`` maps each basis component |x>|y> to |x>|y xor not H(x)> where
    H(x) is the weight-one predicate, leaving every working register back at
    its fiducial.  Applying it twice is the identity, which is also how the
    inverse is realized.
    """

    def __init__(self, topology: Topology, n_known: Optional[int] = None):
        self.topology = topology
        self.n_known = topology.n if n_known is None else n_known
        if self.n_known < topology.n:
            raise ValueError("known bound below the true party count")
        self.guesses = tuple(range(2, self.n_known + 1))
        self.zeros = all_zeros_flooding(self.n_known)
        self.cons = consistency_from_all_zeros(self.zeros)
        self._memo: dict = {}

    # -- per-guess bank ----------------------------------------------------

    def _bank_tape(self, guess: int, run_cache) -> list:
        topo = self.topology
        hadamard = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)

        def spread(s):
            return apply_all_parties(s, "coin", hadamard, control=("mark", MARKED))

        chi = _MarkedFlag(
            self.cons, topo, ("coin", "mark"), "cons_flag",
            trigger=INCONSISTENT, fiducial=CONSISTENT, run_cache=run_cache,
            guess=guess, mark_reg="mark")
        zero = _MarkedFlag(
            self.zeros, topo, ("coin",), "zero_flag",
            trigger=TRUE, fiducial=TRUE, run_cache=run_cache,
            guess=guess, mark_reg="mark")
        angles = phase_angles(guess_success_probability(guess))

        verdict = SubroutineFlag(
            self.cons, topo, ("coin", "mark"), "verdict",
            trigger=INCONSISTENT, fiducial=CONSISTENT, run_cache=run_cache)

        def local(fn):
            def wrapped(s):
                return fn(s), CostReport.zero()
            return wrapped

        tape = [Step("spread", local(spread), local(spread))]
        tape += amplification_steps(spread, spread, chi, zero, angles)
        tape.append(Step("verdict", verdict.apply, verdict.invert))
        return tape

    def _run_bank(self, x: tuple, guess: int, run_cache) -> tuple:
        n = self.topology.n
        lay = layout(n, [("mark", 2), ("coin", 2), ("cons_flag", 2),
                         ("zero_flag", 2), ("verdict", 2)])
        key = []
        for v in range(n):
            key.extend((MARKED if x[v] else UNMARKED, 0, CONSISTENT, TRUE, CONSISTENT))
        start = tuple(key)
        bank = SparseState(lay, {start: 1.0 + 0j})
        tape = self._bank_tape(guess, run_cache)
        bank, fwd_cost = run_steps(bank, tape)

        verdict_slots = lay.slots("verdict")
        mass = {CONSISTENT: 0.0, INCONSISTENT: 0.0}
        peak = {CONSISTENT: 0.0, INCONSISTENT: 0.0}
        for comp, amp in bank.amps.items():
            values = {comp[s] for s in verdict_slots}
            if len(values) > 1:
                raise ExactnessError("consistency verdict disagrees across parties")
            verdict = values.pop()
            mass[verdict] += abs(amp) ** 2
            peak[verdict] = max(peak[verdict], abs(amp))

        bank, bwd_cost = run_steps(bank, tape, backward=True)
        fid_amp = bank.amplitude(start)
        residual = bank.norm_squared() - abs(fid_amp) ** 2
        phase_err = abs(fid_amp - 1.0)
        if residual > 1e-8 or phase_err > 1e-6:
            raise ExactnessError(
                f"guess bank t={guess} failed to disentangle (residual {residual:.3e})"
            )
        report = BankReport(
            guess=guess,
            mass_consistent=mass[CONSISTENT],
            mass_inconsistent=mass[INCONSISTENT],
            max_consistent_amp=peak[CONSISTENT],
            max_inconsistent_amp=peak[INCONSISTENT],
            inversion_residual=residual,
            inversion_phase_error=phase_err,
        )
        return report, fid_amp, fwd_cost.then(bwd_cost)

    # -- whole procedure on one classical input ----------------------------

    def _evaluate(self, x: tuple, run_cache) -> tuple:
        hit = self._memo.get(x)
        if hit is not None:
            return hit
        zeros_out, zeros_cost, _ = run_cached(
            self.zeros, self.topology, tuple(int(b) for b in x), None, run_cache)
        if len(set(zeros_out)) > 1:
            raise ExactnessError("all-zeros flood disagrees across parties")
        s0 = zeros_out[0]

        reports = []
        bank_costs = []
        phase = 1.0 + 0j
        for t in self.guesses:
            report, fid_amp, cost = self._run_bank(x, t, run_cache)
            reports.append(report)
            bank_costs.append(cost)
            phase *= fid_amp

        flips = s0 == TRUE or any(r.purely_inconsistent for r in reports)
        if not flips:
            undecided = [r for r in reports if not r.purely_consistent]
            if undecided:
                worst = max(r.max_inconsistent_amp for r in undecided)
                raise ExactnessError(
                    f"unique-one outcome undetermined for input {x}: a guess bank "
                    f"kept inconsistent amplitude {worst:.3e} without deciding"
                )
        value = FALSE if flips else TRUE

        # the flood is metered twice (computing the zeros flag and undoing
        # it); the banks already include their own inversion passes
        cost = sequential(zeros_cost, zeros_cost)
        if bank_costs:
            cost = cost.then(parallel(*bank_costs))
        report = InputReport(
            x=tuple(x), zeros_flag=s0, banks=reports,
            flips_output=flips, value=value, phase_factor=phase,
        )
        self._memo[x] = (value, phase, cost, report)
        return self._memo[x]

    def apply(self, state: SparseState, x_reg: str, y_reg: str,
              run_cache: Optional[dict] = None,
              diagnostics: Optional[list] = None) -> tuple:
        """Coherently fold the weight-one predicate of x_reg into y_reg.

        Returns ``(state, cost)``; the cost is that of one execution and is
        identical for every component (the communication is oblivious).
        """
        lay = state.layout
        x_slots = lay.slots(x_reg)
        y_slots = lay.slots(y_reg)
        cost = None
        amps = {}
        for key, amp in state.amps.items():
            x = tuple(key[s] for s in x_slots)
            value, phase, one_cost, report = self._evaluate(x, run_cache)
            if cost is None:
                cost = one_cost
            elif (cost.rounds, cost.qubits_sent) != (one_cost.rounds, one_cost.qubits_sent):
                raise SimulationError("unique-one cost varied with the input")
            if diagnostics is not None:
                diagnostics.append(report)
            nk = list(key)
            if value == FALSE:
                for s in y_slots:
                    nk[s] ^= 1
            amps[tuple(nk)] = amp * phase
        return SparseState(lay, amps), cost


def exactly_one_algorithm(topology: Topology, n_known: Optional[int] = None) -> ExactlyOneProcedure:
    """Build the unique-one test for a network of known (or bounded) size."""
    return ExactlyOneProcedure(topology, n_known)


class _UniqueOneFlag:
    """Adapter exposing the unique-one procedure as an amplification flag."""

    def __init__(self, procedure: ExactlyOneProcedure, x_reg: str, y_reg: str,
                 divisor: int, run_cache: Optional[dict] = None):
        self.procedure = procedure
        self.x_reg = x_reg
        self.register = y_reg
        self.trigger = TRUE
        self.divisor = divisor
        self.run_cache = run_cache

    def apply(self, state):
        return self.procedure.apply(state, self.x_reg, self.register, self.run_cache)

    # applying the procedure twice is the identity
    invert = apply

    def kick(self, state, total_angle):
        return phase_kick(state, self.register, self.trigger, total_angle / self.divisor)


class _AllPartiesFlag(SubroutineFlag):
    def __init__(self, *args, divisor: int, **kwargs):
        super().__init__(*args, **kwargs)
        self.divisor = divisor

    def kick(self, state, total_angle):
        return phase_kick(state, self.register, self.trigger, total_angle / self.divisor)


# ---------------------------------------------------------------------------
# election results


@dataclass(frozen=True)
class ElectionBranch:
    outcomes: tuple          # final coin bit per party
    probability: float
    leaders: tuple           # parties left eligible
    winner_guess: Optional[int] = None
    guess_outcomes: Optional[tuple] = None   # ((guess, outcome tuple), ...)
    verified: Optional[tuple] = None

    @property
    def leader_count(self) -> int:
        return len(self.leaders)

    def statuses(self) -> tuple:
        return tuple("eligible" if bit == 1 else "ineligible" for bit in self.outcomes)


@dataclass
class ElectionResult:
    n: int
    branches: list
    cost: CostReport
    sampled_index: Optional[int] = None

    @property
    def sampled(self) -> Optional[ElectionBranch]:
        if self.sampled_index is None:
            return None
        return self.branches[self.sampled_index]

    def total_probability(self) -> float:
        return sum(b.probability for b in self.branches)

    def to_json(self) -> dict:
        payload = {
            "n": self.n,
            "cost": self.cost.to_json(),
            "branches": [
                {
                    "outcomes": list(b.outcomes),
                    "probability": b.probability,
                    "leader_party": b.leaders[0] if b.leader_count == 1 else None,
                    "leaders": list(b.leaders),
                    "statuses": list(b.statuses()),
                    **({"winner_guess": b.winner_guess} if b.winner_guess is not None else {}),
                }
                for b in self.branches
            ],
        }
        if self.sampled_index is not None:
            payload["sampled_index"] = self.sampled_index
        return payload


def _sample_index(probabilities, seed) -> int:
    rng = random.Random(seed)
    draw = rng.random()
    acc = 0.0
    for i, p in enumerate(probabilities):
        acc += p
        if draw <= acc:
            return i
    return len(probabilities) - 1


def _trivial_result() -> ElectionResult:
    branch = ElectionBranch(outcomes=(1,), probability=1.0, leaders=(0,))
    return ElectionResult(n=1, branches=[branch], cost=CostReport.zero(), sampled_index=0)


# ---------------------------------------------------------------------------
# the election itself


def elect(topology: Topology, *, seed: Optional[int] = None,
          all_branches: bool = False) -> ElectionResult:
    """Exact leader election when every party knows the true party count.

    Enumerates every measurement branch; exactly one party measures 1 in each
    of them.  With ``all_branches`` false a branch is additionally sampled
    with seeded randomness and exposed as ``result.sampled``.
    """
    n = topology.n
    if n == 1:
        return _trivial_result()
    run_cache: dict = {}
    lay = layout(n, [("coin", 2), ("one_flag", 2), ("zero_flag", 2)])
    state = init_state(lay, {"coin": 0, "one_flag": TRUE, "zero_flag": TRUE})
    gate = rotation_matrix(n)

    def prepare(s):
        return apply_all_parties(s, "coin", gate)

    procedure = exactly_one_algorithm(topology)
    chi = _UniqueOneFlag(procedure, "coin", "one_flag", divisor=n, run_cache=run_cache)
    zero = _AllPartiesFlag(
        all_zeros_flooding(n), topology, ("coin",), "zero_flag",
        trigger=TRUE, fiducial=TRUE, run_cache=run_cache, divisor=n)

    state = prepare(state)
    state, cost = exact_amplify(
        state, prepare, prepare, chi, zero,
        a=success_probability(n), check_success=True)

    out = []
    for br in branches(state, "coin"):
        outcome = br.outcome_vector("coin")
        leaders = tuple(p for p, bit in enumerate(outcome) if bit == 1)
        out.append(ElectionBranch(outcomes=outcome, probability=br.probability,
                                  leaders=leaders))
    sampled = None if all_branches else _sample_index([b.probability for b in out], seed)
    return ElectionResult(n=n, branches=out, cost=cost, sampled_index=sampled)


def _verify_unique(procedure: ExactlyOneProcedure, outcome: tuple,
                   run_cache: dict) -> tuple:
    """Run the unique-one procedure on a measured classical outcome."""
    n = procedure.topology.n
    lay = layout(n, [("bit", 2), ("res", 2)])
    key = []
    for v in range(n):
        key.extend((outcome[v], TRUE))
    state = SparseState(lay, {tuple(key): 1.0 + 0j})
    state, cost = procedure.apply(state, "bit", "res", run_cache)
    (final_key, _amp), = state.amps.items()
    values = {final_key[s] for s in lay.slots("res")}
    if len(values) > 1:
        raise ExactnessError("verification flag disagrees across parties")
    return values.pop() == TRUE, cost


def elect_with_bound(topology: Topology, upper_bound: int, *,
                     seed: Optional[int] = None,
                     all_branches: bool = False) -> ElectionResult:
    """Exact leader election when only an upper bound on n is known.

    The election is attempted for every guess of the party count in parallel,
    each attempt is verified with the unique-one test (which works given only
    the bound), and the smallest verified guess provides the leader.  The
    verification flags are common to all parties, so the tie-break is safe in
    an anonymous network.
    """
    n = topology.n
    if upper_bound < 2:
        raise ValueError("upper bound must be at least 2")
    if upper_bound < n:
        raise ValueError("upper bound below the true party count")
    if n == 1:
        return _trivial_result()
    run_cache: dict = {}
    procedure = exactly_one_algorithm(topology, n_known=upper_bound)

    per_guess = []
    guess_costs = []
    for guess in range(2, upper_bound + 1):
        lay = layout(n, [("coin", 2), ("one_flag", 2), ("zero_flag", 2)])
        state = init_state(lay, {"coin": 0, "one_flag": TRUE, "zero_flag": TRUE})
        gate = rotation_matrix(guess)

        def prepare(s, gate=gate):
            return apply_all_parties(s, "coin", gate)

        chi = _UniqueOneFlag(procedure, "coin", "one_flag",
                             divisor=guess, run_cache=run_cache)
        zero = _AllPartiesFlag(
            all_zeros_flooding(upper_bound), topology, ("coin",), "zero_flag",
            trigger=TRUE, fiducial=TRUE, run_cache=run_cache, divisor=guess)
        state = prepare(state)
        state, attempt_cost = exact_amplify(
            state, prepare, prepare, chi, zero,
            a=success_probability(guess), check_success=False)

        options = []
        verify_cost = None
        for br in branches(state, "coin"):
            outcome = br.outcome_vector("coin")
            ok, vcost = _verify_unique(procedure, outcome, run_cache)
            verify_cost = vcost
            options.append((outcome, br.probability, ok))
        per_guess.append(options)
        guess_costs.append(sequential(attempt_cost, verify_cost))

    cost = parallel(*guess_costs)
    combos = _expand(per_guess)

    out = []
    for picked, prob in combos:
        verified = tuple(
            guess for (guess, (_outcome, _p, ok)) in zip(range(2, upper_bound + 1), picked) if ok
        )
        if not verified:
            raise ExactnessError("no guess verified a unique leader in some branch")
        winner = verified[0]
        outcome = picked[winner - 2][0]
        leaders = tuple(p for p, bit in enumerate(outcome) if bit == 1)
        out.append(ElectionBranch(
            outcomes=outcome, probability=prob, leaders=leaders,
            winner_guess=winner,
            guess_outcomes=tuple((g, picked[g - 2][0]) for g in range(2, upper_bound + 1)),
            verified=verified,
        ))
    out.sort(key=lambda b: (b.guess_outcomes, -b.probability))
    sampled = None if all_branches else _sample_index([b.probability for b in out], seed)
    return ElectionResult(n=n, branches=out, cost=cost, sampled_index=sampled)


def _expand(per_guess):
    combos = [((), 1.0)]
    for options in per_guess:
        combos = [
            (picked + (opt,), p * opt[1])
            for picked, p in combos
            for opt in options
        ]
    return combos
