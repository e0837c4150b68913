"""Sparse joint-state engine over party-owned qudit registers.

Basis states are tuples with one symbol per (party, register) slot, ordered
by party index first and registration order second.  Amplitudes live in a
dict keyed by those tuples, which keeps desk-scale networks cheap as long as
algorithms avoid needless superposition.  Classical subroutines run once per
basis component with the engine checking that their communication pattern
never depends on the component.
"""
from __future__ import annotations

import cmath
import json
import math
import random
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .errors import ExactnessError, SimulationError
from .subroutines import ClassicalSubroutine, run_cached
from .topology import Topology

PRUNE_EPS = 1e-14        # amplitudes below this are floating-point dust
NORM_DRIFT_EPS = 1e-12   # renormalize when pruning shifted the norm this much
NORM_EPS = 1e-10         # hard invariant on every produced state
UNITARY_EPS = 1e-12


@dataclass(frozen=True)
class RegisterLayout:
    """Register names and dimensions, identical at every party."""

    n_parties: int
    regs: tuple  # ((name, dim), ...) in registration order

    def __post_init__(self):
        names = [name for name, _ in self.regs]
        if len(set(names)) != len(names):
            raise ValueError("duplicate register name")
        for name, dim in self.regs:
            if dim < 2:
                raise ValueError(f"register {name!r} needs dimension >= 2")

    @property
    def width(self) -> int:
        return len(self.regs)

    def reg_index(self, name: str) -> int:
        for i, (reg, _dim) in enumerate(self.regs):
            if reg == name:
                return i
        raise KeyError(f"no register named {name!r}")

    def dim(self, name: str) -> int:
        return self.regs[self.reg_index(name)][1]

    def slot(self, party: int, name: str) -> int:
        if not (0 <= party < self.n_parties):
            raise KeyError(f"no party {party}")
        return party * self.width + self.reg_index(name)

    def slots(self, name: str) -> list:
        i = self.reg_index(name)
        return [p * self.width + i for p in range(self.n_parties)]


def layout(n_parties: int, regs: Iterable) -> RegisterLayout:
    return RegisterLayout(n_parties, tuple((str(n), int(d)) for n, d in regs))


class SparseState:
    """A normalized joint state: {basis tuple: complex amplitude}."""

    __slots__ = ("layout", "amps")

    def __init__(self, layout: RegisterLayout, amps: dict, *, normalize: bool = False):
        amps = {k: v for k, v in amps.items() if abs(v) > PRUNE_EPS}
        if not amps:
            raise SimulationError("state has no support left")
        norm2 = sum(abs(v) ** 2 for v in amps.values())
        if normalize:
            scale = 1.0 / math.sqrt(norm2)
            amps = {k: v * scale for k, v in amps.items()}
        elif abs(norm2 - 1.0) > NORM_EPS:
            raise SimulationError(f"state norm drifted to {norm2!r}")
        elif abs(norm2 - 1.0) > NORM_DRIFT_EPS:
            scale = 1.0 / math.sqrt(norm2)
            amps = {k: v * scale for k, v in amps.items()}
        self.layout = layout
        self.amps = amps

    def __len__(self) -> int:
        return len(self.amps)

    def norm_squared(self) -> float:
        return sum(abs(v) ** 2 for v in self.amps.values())

    def amplitude(self, key: tuple) -> complex:
        return self.amps.get(tuple(key), 0j)

    def symbols(self, key: tuple, name: str) -> tuple:
        return tuple(key[s] for s in self.layout.slots(name))

    def components(self) -> list:
        return sorted(self.amps.items())


def init_state(lay: RegisterLayout, fiducial: Union[dict, int] = 0) -> SparseState:
    """Point state with every register at its fiducial symbol."""
    if isinstance(fiducial, int):
        fiducial = {name: fiducial for name, _dim in lay.regs}
    key = []
    for _party in range(lay.n_parties):
        for name, dim in lay.regs:
            sym = fiducial.get(name, 0)
            if not (0 <= sym < dim):
                raise ValueError(f"fiducial {sym} out of range for register {name!r}")
            key.append(sym)
    return SparseState(lay, {tuple(key): 1.0 + 0j})


def add_register(state: SparseState, name: str, dim: int, fiducial: int = 0) -> SparseState:
    """Extend the layout with a fresh register at ``fiducial`` everywhere."""
    lay = state.layout
    new_lay = RegisterLayout(lay.n_parties, lay.regs + ((name, dim),))
    if not (0 <= fiducial < dim):
        raise ValueError("fiducial out of range")
    w = lay.width
    amps = {}
    for key, amp in state.amps.items():
        new_key = []
        for p in range(lay.n_parties):
            new_key.extend(key[p * w:(p + 1) * w])
            new_key.append(fiducial)
        amps[tuple(new_key)] = amp
    return SparseState(new_lay, amps)


def drop_registers(state: SparseState, names: Sequence[str], *, tol: float = 1e-9) -> SparseState:
    """Remove registers, requiring them to factor out of the state.

    The kept/dropped split must have Schmidt rank one; the dropped factor is
    discarded and the kept factor is returned renormalized.  Raises
    ``ExactnessError`` when the cut is entangled beyond ``tol``.
    """
    lay = state.layout
    drop_idx = {lay.reg_index(n) for n in names}
    kept_regs = tuple(r for i, r in enumerate(lay.regs) if i not in drop_idx)
    if not kept_regs:
        raise ValueError("cannot drop every register")
    new_lay = RegisterLayout(lay.n_parties, kept_regs)
    w = lay.width
    keep_slots = [p * w + i for p in range(lay.n_parties) for i in range(w) if i not in drop_idx]
    drop_slots = [p * w + i for p in range(lay.n_parties) for i in range(w) if i in drop_idx]
    rows: dict = {}
    for key, amp in state.amps.items():
        kk = tuple(key[s] for s in keep_slots)
        dk = tuple(key[s] for s in drop_slots)
        rows.setdefault(kk, {})[dk] = amp
    # rank-one check against the heaviest row
    ref_key = max(rows, key=lambda kk: sum(abs(a) ** 2 for a in rows[kk].values()))
    ref = rows[ref_key]
    ref_norm = math.sqrt(sum(abs(a) ** 2 for a in ref.values()))
    beta = {dk: a / ref_norm for dk, a in ref.items()}
    amps = {}
    for kk, row in rows.items():
        alpha = sum(a * beta[dk].conjugate() for dk, a in row.items() if dk in beta)
        residual = 0.0
        for dk in set(row) | set(beta):
            residual += abs(row.get(dk, 0j) - alpha * beta.get(dk, 0j)) ** 2
        if residual > tol:
            raise ExactnessError(
                f"registers {tuple(names)} are entangled with the rest (residual {residual:.3e})"
            )
        amps[kk] = alpha
    return SparseState(new_lay, amps, normalize=True)


def rename_register(state: SparseState, old: str, new: str) -> SparseState:
    lay = state.layout
    regs = tuple((new if name == old else name, dim) for name, dim in lay.regs)
    return SparseState(RegisterLayout(lay.n_parties, regs), dict(state.amps))


def tensor(a: SparseState, b: SparseState) -> SparseState:
    """Product of two states over the same parties and disjoint registers."""
    if a.layout.n_parties != b.layout.n_parties:
        raise ValueError("party counts differ")
    la, lb = a.layout, b.layout
    new_lay = RegisterLayout(la.n_parties, la.regs + lb.regs)
    wa, wb = la.width, lb.width
    amps = {}
    for ka, va in a.amps.items():
        for kb, vb in b.amps.items():
            key = []
            for p in range(la.n_parties):
                key.extend(ka[p * wa:(p + 1) * wa])
                key.extend(kb[p * wb:(p + 1) * wb])
            amps[tuple(key)] = va * vb
    return SparseState(new_lay, amps)


def _check_unitary(matrix: np.ndarray, dim: int) -> np.ndarray:
    mat = np.asarray(matrix, dtype=complex)
    if mat.shape != (dim, dim):
        raise ValueError(f"matrix shape {mat.shape} does not match register dimension {dim}")
    if np.max(np.abs(mat.conj().T @ mat - np.eye(dim))) > UNITARY_EPS:
        raise ValueError("matrix is not unitary")
    return mat


def apply_all_parties(
    state: SparseState,
    register: str,
    matrix: np.ndarray,
    *,
    control: Optional[tuple] = None,
    parties: Optional[Iterable[int]] = None,
) -> SparseState:
    """Apply one single-qudit unitary to ``register`` at each party.

    ``control=(name, symbol)`` restricts the action at each party to the
    components where that party's control register holds ``symbol``;
    ``parties`` restricts to a subset of parties (classical gating).
    """
    lay = state.layout
    dim = lay.dim(register)
    mat = _check_unitary(matrix, dim)
    cols = [[(j, mat[j, s]) for j in range(dim) if abs(mat[j, s]) > 0.0] for s in range(dim)]
    targets = range(lay.n_parties) if parties is None else parties
    amps = state.amps
    for party in targets:
        slot = lay.slot(party, register)
        ctrl_slot = lay.slot(party, control[0]) if control else None
        out: dict = {}
        for key, amp in amps.items():
            if ctrl_slot is not None and key[ctrl_slot] != control[1]:
                out[key] = out.get(key, 0j) + amp
                continue
            s = key[slot]
            prefix, suffix = key[:slot], key[slot + 1:]
            for j, coeff in cols[s]:
                nk = prefix + (j,) + suffix
                out[nk] = out.get(nk, 0j) + coeff * amp
        amps = out
    return SparseState(lay, amps)


def phase_kick(state: SparseState, register: str, trigger: int, phase_per_party: float) -> SparseState:
    """Multiply each component by exp(i*phase) per party showing ``trigger``.

    When the register holds the same symbol at every party this realizes a
    collective phase of n times ``phase_per_party`` on the triggering
    components.
    """
    return phase_kick_where(state, ((register, trigger),), phase_per_party)


def phase_kick_where(state: SparseState, conditions, phase_per_party: float) -> SparseState:
    """Phase per party whose registers satisfy all (register, symbol) pairs."""
    if phase_per_party == 0.0:
        return state
    lay = state.layout
    conditions = tuple(conditions)
    per_party = [
        [(lay.slot(p, reg), sym) for reg, sym in conditions]
        for p in range(lay.n_parties)
    ]
    amps = {}
    for key, amp in state.amps.items():
        count = sum(
            1 for checks in per_party
            if all(key[slot] == sym for slot, sym in checks)
        )
        amps[key] = amp * cmath.exp(1j * phase_per_party * count) if count else amp
    return SparseState(state.layout, amps)


def scale(state: SparseState, factor: complex) -> SparseState:
    """Multiply every amplitude by a unit-modulus scalar."""
    if abs(abs(factor) - 1.0) > 1e-12:
        raise ValueError("scalar must have unit modulus")
    return SparseState(state.layout, {k: v * factor for k, v in state.amps.items()})


def xor_op(src: int, tgt: int) -> int:
    return tgt ^ src


def mod_add_op(k: int) -> Callable[[int, int], int]:
    def add(src: int, tgt: int) -> int:
        return (tgt + src) % k
    return add


def _check_bijective(op: Callable, src_dim: int, tgt_dim: int) -> None:
    for s in range(src_dim):
        image = {op(s, t) for t in range(tgt_dim)}
        if image != set(range(tgt_dim)):
            raise ValueError(f"operation is not a bijection on the target for source {s}")


def local_binary_op(
    state: SparseState,
    source: tuple,
    target: tuple,
    op: Union[str, Callable[[int, int], int]],
) -> SparseState:
    """Per-component reversible update of one target slot from one source slot.

    ``source`` and ``target`` are (party, register) pairs; ``op`` is "xor",
    "addmod", or a callable (src_symbol, tgt_symbol) -> new target symbol that
    is bijective in the target for every source symbol.
    """
    lay = state.layout
    s_party, s_reg = source
    t_party, t_reg = target
    s_slot, t_slot = lay.slot(s_party, s_reg), lay.slot(t_party, t_reg)
    if s_slot == t_slot:
        raise ValueError("source and target slots coincide")
    tgt_dim = lay.dim(t_reg)
    if op == "xor":
        if tgt_dim != 2 or lay.dim(s_reg) != 2:
            raise ValueError("xor needs two-level registers")
        fn = xor_op
    elif op == "addmod":
        if lay.dim(s_reg) != tgt_dim:
            raise ValueError("addmod needs equal dimensions")
        fn = mod_add_op(tgt_dim)
    elif callable(op):
        fn = op
        _check_bijective(fn, lay.dim(s_reg), tgt_dim)
    else:
        raise ValueError(f"unknown operation {op!r}")
    amps = {}
    for key, amp in state.amps.items():
        new_t = fn(key[s_slot], key[t_slot])
        if not (0 <= new_t < tgt_dim):
            raise ValueError("operation left the target dimension")
        nk = key[:t_slot] + (new_t,) + key[t_slot + 1:]
        if nk in amps:
            raise SimulationError("binary op collided two components; not reversible")
        amps[nk] = amp
    return SparseState(lay, amps)


def binary_op_all_parties(state: SparseState, source_reg: str, target_reg: str, op) -> SparseState:
    for party in range(state.layout.n_parties):
        state = local_binary_op(state, (party, source_reg), (party, target_reg), op)
    return state


# ---------------------------------------------------------------------------
# coherent classical subroutines


def _component_inputs(state: SparseState, key: tuple, in_regs: Sequence[str]) -> tuple:
    lay = state.layout
    if len(in_regs) == 1:
        slots = lay.slots(in_regs[0])
        return tuple(key[s] for s in slots)
    per_reg = [lay.slots(r) for r in in_regs]
    return tuple(
        tuple(key[slots[p]] for slots in per_reg)
        for p in range(lay.n_parties)
    )


def apply_coherent_subroutine(
    state: SparseState,
    sub: ClassicalSubroutine,
    topology: Topology,
    in_regs: Sequence[str],
    out_reg: str,
    *,
    fiducial: int = 0,
    global_info=None,
    run_cache: Optional[dict] = None,
) -> tuple:
    """Run a classical subroutine on every basis component of ``state``.

    Each party's ``out_reg`` (which must sit at ``fiducial`` in every
    component) is overwritten with that party's output for the component's
    ``in_regs`` values; amplitudes are untouched.  The communication pattern
    must be identical across components, and the returned cost is that of one
    execution.
    """
    return _coherent(state, sub, topology, in_regs, out_reg, fiducial,
                     global_info, run_cache, inverse=False)


def uncompute_subroutine(
    state: SparseState,
    sub: ClassicalSubroutine,
    topology: Topology,
    in_regs: Sequence[str],
    out_reg: str,
    *,
    fiducial: int = 0,
    global_info=None,
    run_cache: Optional[dict] = None,
) -> tuple:
    """Invert a previous coherent application, restoring ``out_reg``.

    Recomputes the subroutine per component, checks the recorded outputs
    match, and resets the register to ``fiducial``; the inverse pass is
    metered exactly like the forward pass.
    """
    return _coherent(state, sub, topology, in_regs, out_reg, fiducial,
                     global_info, run_cache, inverse=True)


def _coherent(state, sub, topology, in_regs, out_reg, fiducial, global_info,
              run_cache, inverse):
    lay = state.layout
    if topology.n != lay.n_parties:
        raise ValueError("topology and layout disagree on the party count")
    out_slots = lay.slots(out_reg)
    out_dim = lay.dim(out_reg)
    if not (0 <= fiducial < out_dim):
        raise ValueError("fiducial out of range")
    if isinstance(in_regs, str):
        in_regs = (in_regs,)
    pattern = None
    cost = None
    amps = {}
    for key, amp in state.amps.items():
        inputs = _component_inputs(state, key, in_regs)
        outputs, one_cost, one_pattern = run_cached(sub, topology, inputs, global_info, run_cache)
        if pattern is None:
            pattern, cost = one_pattern, one_cost
        elif one_pattern != pattern:
            raise SimulationError(
                f"subroutine {sub.name} has an input-dependent communication pattern"
            )
        nk = list(key)
        for p, slot in enumerate(out_slots):
            out_sym = outputs[p]
            if not (0 <= out_sym < out_dim):
                raise SimulationError(
                    f"subroutine {sub.name} produced symbol {out_sym} outside register {out_reg!r}"
                )
            if inverse:
                if key[slot] != out_sym:
                    raise ExactnessError(
                        f"uncompute mismatch in {out_reg!r}: held {key[slot]}, recomputed {out_sym}"
                    )
                nk[slot] = fiducial
            else:
                if key[slot] != fiducial:
                    raise SimulationError(
                        f"out register {out_reg!r} not at fiducial before {sub.name}"
                    )
                nk[slot] = out_sym
        nk = tuple(nk)
        if nk in amps:
            raise SimulationError("coherent subroutine collided two components")
        amps[nk] = amp
    return SparseState(lay, amps), cost


# ---------------------------------------------------------------------------
# measurement


@dataclass(frozen=True)
class MeasurementBranch:
    outcomes: dict          # (party, register) -> symbol
    probability: float
    post_state: SparseState

    def outcome_vector(self, register: str) -> tuple:
        n = self.post_state.layout.n_parties
        return tuple(self.outcomes[(p, register)] for p in range(n))


def _measure_slots(state: SparseState, targets) -> list:
    lay = state.layout
    if isinstance(targets, str):
        targets = [(p, targets) for p in range(lay.n_parties)]
    return [((p, r), lay.slot(p, r)) for p, r in targets]


def branches(state: SparseState, targets, *, min_probability: float = 1e-12) -> list:
    """All measurement branches of the named registers, exactly enumerated.

    ``targets`` is a register name (measured at every party) or an iterable
    of (party, register) pairs.  Probabilities over the full enumeration sum
    to one; branches lighter than ``min_probability`` are dropped.
    """
    pairs = _measure_slots(state, targets)
    grouped: dict = {}
    for key, amp in state.amps.items():
        outcome = tuple(key[slot] for _pr, slot in pairs)
        grouped.setdefault(outcome, {})[key] = amp
    out = []
    for outcome in sorted(grouped):
        sub = grouped[outcome]
        prob = sum(abs(v) ** 2 for v in sub.values())
        if prob < min_probability:
            continue
        post = SparseState(state.layout, sub, normalize=True)
        out.append(MeasurementBranch(
            outcomes={pr: sym for (pr, _slot), sym in zip(pairs, outcome)},
            probability=prob,
            post_state=post,
        ))
    return out


def measure(state: SparseState, targets, seed: Optional[int] = None) -> MeasurementBranch:
    """Sample one measurement branch with seeded randomness."""
    opts = branches(state, targets)
    rng = random.Random(seed)
    draw = rng.random()
    acc = 0.0
    for br in opts:
        acc += br.probability
        if draw <= acc:
            return br
    return opts[-1]


def fidelity(state: SparseState, reference: SparseState) -> float:
    """Squared overlap |<reference|state>|^2; layouts must match."""
    if state.layout != reference.layout:
        raise ValueError("layout mismatch")
    overlap = 0j
    small, big = state.amps, reference.amps
    if len(big) < len(small):
        small, big = big, small
        conj_small = False
    else:
        conj_small = True
    for key, amp in small.items():
        other = big.get(key)
        if other is not None:
            overlap += (other.conjugate() * amp) if conj_small else (amp.conjugate() * other)
    return abs(overlap) ** 2


# ---------------------------------------------------------------------------
# JSON round-trip


def dump_state(state: SparseState) -> dict:
    """JSON-ready dict with the layout and sorted amplitude entries."""
    lay = state.layout
    sep = "" if all(dim <= 10 for _n, dim in lay.regs) else ","
    entries = []
    for key, amp in state.components():
        entries.append({
            "basis": sep.join(str(s) for s in key),
            "re": float(amp.real),
            "im": float(amp.imag),
        })
    return {
        "n_parties": lay.n_parties,
        "registers": [[name, dim] for name, dim in lay.regs],
        "amplitudes": entries,
    }


def load_state(payload: dict) -> SparseState:
    lay = RegisterLayout(payload["n_parties"], tuple((n, d) for n, d in payload["registers"]))
    sep = "" if all(dim <= 10 for _n, dim in lay.regs) else ","
    amps = {}
    for entry in payload["amplitudes"]:
        text = entry["basis"]
        key = tuple(int(c) for c in (text if sep == "" else text.split(sep)))
        amps[key] = complex(entry["re"], entry["im"])
    return SparseState(lay, amps)


def state_to_json(state: SparseState) -> str:
    return json.dumps(dump_state(state), indent=2)


def state_from_json(text: str) -> SparseState:
    return load_state(json.loads(text))
