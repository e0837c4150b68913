"""Single-iteration exact amplitude amplification, assembled distributedly.

The operator is -A F0(phi) A^{-1} Fchi(theta): flag the good components and
phase them, undo the state preparation, phase the all-fiducial component,
redo the preparation, and negate.  With theta = phi = arccos(1 - 1/(2a)) the
bad-subspace amplitude of the result is exactly zero whenever the initial
good probability a is known and at least 1/4.

Flags are computed by distributed subroutines into per-party registers and
inverted afterwards; the collective phase is collected as local kicks whose
distribution over parties is the flag object's business (by default each of
the n parties contributes 1/n of the angle).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .errors import ExactnessError
from .qsim import (SparseState, apply_coherent_subroutine, phase_kick,
                   scale, uncompute_subroutine)
from .runtime import CostReport, sequential
from .subroutines import ClassicalSubroutine
from .topology import Topology


@dataclass(frozen=True)
class PhasePair:
    """The matched phase pair for one exact amplification at success odds a."""

    theta: float
    phi: float
    a: float


def phase_angles(a: float) -> PhasePair:
    """Angles that zero the bad amplitude of one generalized Grover iterate.

    Solves 1 + (e^{i phi} - 1)(a e^{i theta} + 1 - a) = 0 under the phase
    matching phi = theta: the quadratic a z^2 + (1-2a) z + a = 0 has two
    unit-modulus roots for a > 1/4; we take the one with positive imaginary
    part, theta = arccos(1 - 1/(2a)).  At a = 1/4 this degenerates to the
    plain Grover iterate (theta = pi).
    """
    if not (0.25 - 1e-12 <= a <= 1.0 + 1e-12):
        raise ValueError(f"success probability {a} outside [1/4, 1]")
    a = min(max(a, 0.25), 1.0)
    theta = math.acos(1.0 - 1.0 / (2.0 * a))
    return PhasePair(theta=theta, phi=theta, a=a)


class SubroutineFlag:
    """Computes a predicate into a per-party flag register, invertibly.

    ``kick`` collects a collective phase on the flagged components; every
    party contributes an equal share, so the register must agree across
    parties (which it does for the global predicates used here).
    """

    def __init__(self, sub: ClassicalSubroutine, topology: Topology,
                 in_regs: Sequence[str], out_reg: str, trigger: int,
                 fiducial: int, global_info=None, run_cache: Optional[dict] = None):
        self.sub = sub
        self.topology = topology
        self.in_regs = (in_regs,) if isinstance(in_regs, str) else tuple(in_regs)
        self.register = out_reg
        self.trigger = trigger
        self.fiducial = fiducial
        self.global_info = global_info
        self.run_cache = run_cache

    def apply(self, state: SparseState):
        return apply_coherent_subroutine(
            state, self.sub, self.topology, self.in_regs, self.register,
            fiducial=self.fiducial, global_info=self.global_info,
            run_cache=self.run_cache)

    def invert(self, state: SparseState):
        return uncompute_subroutine(
            state, self.sub, self.topology, self.in_regs, self.register,
            fiducial=self.fiducial, global_info=self.global_info,
            run_cache=self.run_cache)

    def kick(self, state: SparseState, total_angle: float) -> SparseState:
        return phase_kick(state, self.register, self.trigger,
                          total_angle / self.topology.n)


@dataclass(frozen=True)
class Step:
    """One reversible stage of a quantum procedure, with measured costs."""

    name: str
    forward: Callable[[SparseState], tuple]
    backward: Callable[[SparseState], tuple]


def _local(fn: Callable[[SparseState], SparseState]):
    def wrapped(state):
        return fn(state), CostReport.zero()
    return wrapped


def amplification_steps(
    prepare: Callable[[SparseState], SparseState],
    unprepare: Callable[[SparseState], SparseState],
    chi_flag,
    zero_flag,
    angles: PhasePair,
) -> list:
    """The iterate as a reversible step list (applied left to right)."""
    return [
        Step("flag_good", chi_flag.apply, chi_flag.invert),
        Step("phase_good",
             _local(lambda s: chi_flag.kick(s, angles.theta)),
             _local(lambda s: chi_flag.kick(s, -angles.theta))),
        Step("unflag_good", chi_flag.invert, chi_flag.apply),
        Step("unprepare", _local(unprepare), _local(prepare)),
        Step("flag_zero", zero_flag.apply, zero_flag.invert),
        Step("phase_zero",
             _local(lambda s: zero_flag.kick(s, angles.phi)),
             _local(lambda s: zero_flag.kick(s, -angles.phi))),
        Step("unflag_zero", zero_flag.invert, zero_flag.apply),
        Step("prepare", _local(prepare), _local(unprepare)),
        Step("negate", _local(lambda s: scale(s, -1)), _local(lambda s: scale(s, -1))),
    ]


def run_steps(state: SparseState, steps, *, backward: bool = False) -> tuple:
    costs = []
    ordered = reversed(steps) if backward else steps
    for step in ordered:
        fn = step.backward if backward else step.forward
        state, cost = fn(state)
        costs.append(cost)
    return state, sequential(*costs)


def flag_mass(state: SparseState, register: str, trigger: int) -> float:
    """Probability mass on components whose flag shows ``trigger`` everywhere.

    Also checks the flag is shared: a component with disagreeing flag values
    across parties means the flag subroutine is broken.
    """
    slots = state.layout.slots(register)
    mass = 0.0
    for key, amp in state.amps.items():
        values = {key[s] for s in slots}
        if len(values) > 1:
            raise ExactnessError(f"flag register {register!r} disagrees across parties")
        if values == {trigger}:
            mass += abs(amp) ** 2
    return mass


def exact_amplify(
    state: SparseState,
    prepare: Callable[[SparseState], SparseState],
    unprepare: Callable[[SparseState], SparseState],
    chi_flag,
    zero_flag,
    a: float,
    *,
    check_success: bool = True,
    probability_tol: float = 1e-10,
) -> tuple:
    """Apply one exact amplification iterate to ``state``.

    ``state`` must be ``prepare`` applied to the all-fiducial state, with the
    good-subspace probability equal to ``a``; afterwards the good probability
    is exactly one.  ``check_success=False`` skips the precondition check and
    applies the iterate regardless, for callers that amplify on a guess.
    Cost is exactly two executions of each flag subroutine.
    """
    angles = phase_angles(a)
    steps = amplification_steps(prepare, unprepare, chi_flag, zero_flag, angles)
    # run the first flag, optionally audit the promised success probability,
    # then run the rest
    state, c0 = steps[0].forward(state)
    if check_success:
        measured = flag_mass(state, chi_flag.register, chi_flag.trigger)
        if abs(measured - a) > probability_tol:
            raise ExactnessError(
                f"good probability {measured!r} differs from promised {a!r}"
            )
    state, rest = run_steps(state, steps[1:])
    return state, c0.then(rest)
