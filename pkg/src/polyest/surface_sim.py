"""Planar surface code lattice, extraction schedule and Pauli-frame Monte Carlo.

Lattice convention, on a (2d-1) x (2d-1) grid of rows i (0 = north edge) and
columns j (0 = west edge):

* data qubits sit at i + j even (d^2 + (d-1)^2 of them);
* X stabilizers at odd i / even j, weight 3 on the west and east columns;
* Z stabilizers at even i / odd j, weight 3 on the north and south rows;
* the logical X operator is the horizontal data chain of row 0, the logical
  Z operator the vertical data chain of column 0 (they intersect only at the
  northwest corner, so they anticommute; each commutes with every stabilizer).

One extraction cycle runs eight steps: syndrome initialization, a Hadamard on
X-stabilizer syndromes, four CNOT steps in N, W, E, S order from the
syndrome's point of view, a second Hadamard, and syndrome measurement.
Z-stabilizer circuits use the data qubit as CNOT control, X-stabilizer
circuits the syndrome qubit.  A missing neighbor leaves an identity of CNOT
duration in the slot.  Because every syndrome reaches in the same compass
direction per step, each data qubit meets its adjacent syndromes in the
complementary order and no qubit is touched twice in one step.

The Monte Carlo tracks X/Z Pauli frames only (CNOT propagates control-X onto
the target and target-Z onto the control; Hadamard exchanges the two bits).
Errors injected per the reduced six-rate model:

* a uniform 15-way two-qubit depolarizing flip of probability p2 after every
  executed CNOT;
* independent X and Z flips of probability 2*p1A/3 at each of the four data
  idle slots (the depolarizing-equivalent marginal of the folded idle rate);
* a classical outcome flip of probability p0X (Z stabilizers) or p0Z
  (X stabilizers) per measurement.

One noiseless readout round is appended after the noisy rounds so that every
error chain terminates in a detection event or boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .error_model import TWO_QUBIT_PAULIS

Coord = tuple[int, int]

STEP_NAMES = (
    "syn_init", "syn_had1", "cnot_n", "cnot_w", "cnot_e", "cnot_s",
    "syn_had2", "syn_meas",
)
DIRECTIONS = ("n", "w", "e", "s")
_OFFSETS = {"n": (-1, 0), "w": (0, -1), "e": (0, 1), "s": (1, 0)}
# Schedule step index of each data idle slot, in injection order.
IDLE_STEPS = (0, 1, 6, 7)


class LayoutError(ValueError):
    """Raised for invalid code distances or malformed schedules."""


class Rates(NamedTuple):
    """Reduced per-cycle error rates driving one simulation."""

    p0x: float
    p0z: float
    p1x: float
    p1z: float
    p2: float

    def validate(self) -> None:
        for name, value in zip(self._fields, self):
            if math.isnan(value) or not 0.0 <= value <= 1.0:
                raise ValueError(f"rate {name} must lie in [0, 1], got {value!r}")


class Layout:
    """Qubit coordinates, stabilizer supports and logical operators.

    Qubit ids are assigned data qubits first, then Z-stabilizer syndromes,
    then X-stabilizer syndromes, each block in sorted coordinate order.
    """

    def __init__(self, d: int):
        if not isinstance(d, int) or isinstance(d, bool) or d < 3:
            raise LayoutError(f"code distance must be an integer >= 3, got {d!r}")
        self.d = d
        self.size = 2 * d - 1
        span = range(self.size)
        self.data: tuple[Coord, ...] = tuple(
            (i, j) for i in span for j in span if (i + j) % 2 == 0
        )
        self.z_stabs: tuple[Coord, ...] = tuple(
            (i, j) for i in span for j in span if i % 2 == 0 and j % 2 == 1
        )
        self.x_stabs: tuple[Coord, ...] = tuple(
            (i, j) for i in span for j in span if i % 2 == 1 and j % 2 == 0
        )

        self.n_data = len(self.data)
        self.n_z = len(self.z_stabs)
        self.n_x = len(self.x_stabs)
        self.n_qubits = self.n_data + self.n_z + self.n_x

        self.qubit_id: dict[Coord, int] = {}
        for coord in (*self.data, *self.z_stabs, *self.x_stabs):
            self.qubit_id[coord] = len(self.qubit_id)

        self.data_ids = np.arange(self.n_data)
        self.zsyn_ids = np.arange(self.n_data, self.n_data + self.n_z)
        self.xsyn_ids = np.arange(self.n_data + self.n_z, self.n_qubits)
        self.syn_ids = np.concatenate([self.zsyn_ids, self.xsyn_ids])

        self.z_neighbors = tuple(self._neighbors(c) for c in self.z_stabs)
        self.x_neighbors = tuple(self._neighbors(c) for c in self.x_stabs)

        self.logical_x_support: tuple[Coord, ...] = tuple(
            (0, j) for j in range(0, self.size, 2)
        )
        self.logical_z_support: tuple[Coord, ...] = tuple(
            (i, 0) for i in range(0, self.size, 2)
        )
        self.logical_x_ids = np.array([self.qubit_id[c] for c in self.logical_x_support])
        self.logical_z_ids = np.array([self.qubit_id[c] for c in self.logical_z_support])

    def _neighbors(self, coord: Coord) -> tuple[Coord | None, ...]:
        i, j = coord
        out = []
        for direction in DIRECTIONS:
            di, dj = _OFFSETS[direction]
            ni, nj = i + di, j + dj
            out.append((ni, nj) if 0 <= ni < self.size and 0 <= nj < self.size else None)
        return tuple(out)


def build_layout(d: int) -> Layout:
    return Layout(d)


_layout_cache: dict[int, Layout] = {}


def get_layout(d: int) -> Layout:
    """Shared layout instance per distance; layouts are immutable in practice."""
    layout = _layout_cache.get(d)
    if layout is None:
        layout = _layout_cache.setdefault(d, Layout(d))
    return layout


@dataclass(frozen=True)
class ScheduleStep:
    name: str
    ops: tuple[tuple[str, tuple[int, ...]], ...]


@dataclass(frozen=True)
class CycleSchedule:
    steps: tuple[ScheduleStep, ...]


def build_schedule(layout: Layout) -> CycleSchedule:
    """The eight-step extraction cycle as explicit (gate, qubits) operations.

    Idle paddings are emitted for every quiescent qubit so that the
    one-op-per-qubit-per-step invariant is checkable on the schedule itself.
    """
    qid = layout.qubit_id
    z_ids = [qid[c] for c in layout.z_stabs]
    x_ids = [qid[c] for c in layout.x_stabs]
    data_ids = [qid[c] for c in layout.data]

    steps: list[ScheduleStep] = []
    steps.append(ScheduleStep("syn_init", tuple(
        [("init", (q,)) for q in z_ids + x_ids]
        + [("id_init", (q,)) for q in data_ids]
    )))
    steps.append(ScheduleStep("syn_had1", tuple(
        [("h", (q,)) for q in x_ids]
        + [("id_had", (q,)) for q in z_ids]
        + [("id_had", (q,)) for q in data_ids]
    )))
    for k, direction in enumerate(DIRECTIONS):
        ops: list[tuple[str, tuple[int, ...]]] = []
        busy: set[int] = set()
        for stab, nbrs, syn in (
            ("z", layout.z_neighbors, layout.z_stabs),
            ("x", layout.x_neighbors, layout.x_stabs),
        ):
            for idx, coord in enumerate(syn):
                nbr = nbrs[idx][k]
                s = qid[coord]
                if nbr is None:
                    ops.append(("id_cnot", (s,)))
                    busy.add(s)
                    continue
                q = qid[nbr]
                # Z-stabilizer circuits: data controls; X-stabilizer: syndrome.
                pair = (q, s) if stab == "z" else (s, q)
                ops.append(("cnot", pair))
                busy.update(pair)
        for q in data_ids:
            if q not in busy:
                ops.append(("id_cnot", (q,)))
        steps.append(ScheduleStep(f"cnot_{direction}", tuple(ops)))
    steps.append(ScheduleStep("syn_had2", tuple(
        [("h", (q,)) for q in x_ids]
        + [("id_had", (q,)) for q in z_ids]
        + [("id_had", (q,)) for q in data_ids]
    )))
    steps.append(ScheduleStep("syn_meas", tuple(
        [("meas", (q,)) for q in z_ids + x_ids]
        + [("id_meas", (q,)) for q in data_ids]
    )))

    schedule = CycleSchedule(tuple(steps))
    _check_schedule(layout, schedule)
    return schedule


def _check_schedule(layout: Layout, schedule: CycleSchedule) -> None:
    if tuple(s.name for s in schedule.steps) != STEP_NAMES:
        raise LayoutError("schedule steps out of order")
    for step in schedule.steps:
        seen: set[int] = set()
        for _, qubits in step.ops:
            for q in qubits:
                if q in seen:
                    raise LayoutError(f"qubit {q} appears twice in step {step.name}")
                seen.add(q)
        if len(seen) != layout.n_qubits:
            raise LayoutError(f"step {step.name} does not cover every qubit")


class _Compiled:
    """Index arrays extracted from a schedule for the vectorized simulator."""

    def __init__(self, layout: Layout, schedule: CycleSchedule):
        self.layout = layout
        syn_to_stab = {}
        for idx, coord in enumerate(layout.z_stabs):
            syn_to_stab[layout.qubit_id[coord]] = ("z", idx)
        for idx, coord in enumerate(layout.x_stabs):
            syn_to_stab[layout.qubit_id[coord]] = ("x", idx)

        self.cnot_ctrl: list[np.ndarray] = []
        self.cnot_tgt: list[np.ndarray] = []
        self.slot_meta: list[tuple[int, str, int, str]] = []  # (step, stab type, stab idx, direction)
        self.slot_offsets = [0]
        for k in range(4):
            step = schedule.steps[2 + k]
            ctrl, tgt = [], []
            for gate, qubits in step.ops:
                if gate != "cnot":
                    continue
                c, t = qubits
                ctrl.append(c)
                tgt.append(t)
                stab, idx = syn_to_stab[t if t in syn_to_stab else c]
                self.slot_meta.append((2 + k, stab, idx, DIRECTIONS[k]))
            self.cnot_ctrl.append(np.array(ctrl))
            self.cnot_tgt.append(np.array(tgt))
            self.slot_offsets.append(len(self.slot_meta))
        self.n_slots = len(self.slot_meta)

        # Pauli component tables aligned with TWO_QUBIT_PAULIS.
        self.xc = np.array([p[0] in "xy" for p in TWO_QUBIT_PAULIS])
        self.zc = np.array([p[0] in "yz" for p in TWO_QUBIT_PAULIS])
        self.xt = np.array([p[1] in "xy" for p in TWO_QUBIT_PAULIS])
        self.zt = np.array([p[1] in "yz" for p in TWO_QUBIT_PAULIS])


_compiled_cache: dict[int, tuple[Layout, CycleSchedule, _Compiled]] = {}


def _compiled(layout: Layout, schedule: CycleSchedule | None) -> _Compiled:
    cached = _compiled_cache.get(layout.d)
    if cached is not None and cached[0] is layout and (schedule is None or cached[1] is schedule):
        return cached[2]
    if schedule is None:
        schedule = build_schedule(layout)
    comp = _Compiled(layout, schedule)
    _compiled_cache[layout.d] = (layout, schedule, comp)
    return comp


@dataclass(frozen=True)
class FaultEffect:
    """Detection footprint of one elementary fault within a single cycle.

    Round offsets are relative to the cycle in which the fault occurs;
    translation along the time axis is the graph builder's job.  ``events_x``
    lists (Z-stabilizer index, offset) pairs (X-error detection), ``events_z``
    the analogous X-stabilizer pairs.  ``flip_x`` / ``flip_z`` say whether the
    residual data error anticommutes with the logical Z / logical X operator,
    i.e. whether the fault alone flips the stored logical qubit.
    """

    kind: str        # 'cnot' | 'idle' | 'flip'
    rate_kind: str   # 'p2' | 'idle_x' | 'idle_z' | 'flip_x' | 'flip_z'
    step: int
    site: tuple
    pauli: str
    events_x: tuple[tuple[int, int], ...]
    events_z: tuple[tuple[int, int], ...]
    flip_x: bool
    flip_z: bool

    def probability(self, rates: Rates) -> float:
        if self.rate_kind == "p2":
            return rates.p2 / 15.0
        if self.rate_kind == "idle_x":
            return 2.0 * rates.p1x / 3.0
        if self.rate_kind == "idle_z":
            return 2.0 * rates.p1z / 3.0
        if self.rate_kind == "flip_x":
            return rates.p0x
        return rates.p0z


_fault_cache: dict[int, tuple[FaultEffect, ...]] = {}


def enumerate_single_faults(
    layout: Layout, schedule: CycleSchedule | None = None
) -> tuple[FaultEffect, ...]:
    """Propagate every elementary fault of one cycle in isolation.

    Each fault is injected once in an otherwise noiseless run and followed
    for three cycles; residual data errors are static after the injection
    cycle, so all detection events land within a one-round offset (checked).
    """
    cached = _fault_cache.get(layout.d)
    if cached is not None:
        return cached
    comp = _compiled(layout, schedule)

    records: list[dict] = []
    for slot in range(comp.n_slots):
        step, stab, idx, direction = comp.slot_meta[slot]
        k = step - 2
        pos = slot - comp.slot_offsets[k]
        c = int(comp.cnot_ctrl[k][pos])
        t = int(comp.cnot_tgt[k][pos])
        for pi, pauli in enumerate(TWO_QUBIT_PAULIS):
            bits = []
            if comp.xc[pi]:
                bits.append((c, 0))
            if comp.zc[pi]:
                bits.append((c, 1))
            if comp.xt[pi]:
                bits.append((t, 0))
            if comp.zt[pi]:
                bits.append((t, 1))
            records.append(dict(
                kind="cnot", rate_kind="p2", step=step,
                site=(stab, idx, direction), pauli=pauli, bits=bits, flip=None,
            ))
    for slot_k, step in enumerate(IDLE_STEPS):
        for di in range(layout.n_data):
            q = int(layout.data_ids[di])
            records.append(dict(
                kind="idle", rate_kind="idle_x", step=step,
                site=("data", di, slot_k), pauli="x", bits=[(q, 0)], flip=None,
            ))
            records.append(dict(
                kind="idle", rate_kind="idle_z", step=step,
                site=("data", di, slot_k), pauli="z", bits=[(q, 1)], flip=None,
            ))
    for stab, count, rk in (("z", layout.n_z, "flip_x"), ("x", layout.n_x, "flip_z")):
        for idx in range(count):
            records.append(dict(
                kind="flip", rate_kind=rk, step=7,
                site=(stab, idx), pauli="flip", bits=[], flip=(stab, idx),
            ))

    n = len(records)
    frames = [np.zeros((n, layout.n_qubits), dtype=bool) for _ in range(2)]
    inject_by_step: dict[int, list[tuple[int, list]]] = {}
    for row, rec in enumerate(records):
        if rec["bits"]:
            inject_by_step.setdefault(rec["step"], []).append((row, rec["bits"]))

    out_z = np.zeros((n, 3, layout.n_z), dtype=bool)
    out_x = np.zeros((n, 3, layout.n_x), dtype=bool)
    for cycle in range(3):
        _run_cycle(comp, frames[0], frames[1], out_z[:, cycle], out_x[:, cycle],
                   inject_by_step if cycle == 0 else None)
    for row, rec in enumerate(records):
        if rec["flip"] is not None:
            stab, idx = rec["flip"]
            (out_z if stab == "z" else out_x)[row, 0, idx] ^= True

    ev_x = out_z.copy()
    ev_x[:, 1:] ^= out_z[:, :-1]
    ev_z = out_x.copy()
    ev_z[:, 1:] ^= out_x[:, :-1]

    flips_x = np.logical_xor.reduce(frames[0][:, layout.logical_z_ids], axis=1)
    flips_z = np.logical_xor.reduce(frames[1][:, layout.logical_x_ids], axis=1)

    faults = []
    for row, rec in enumerate(records):
        evx = tuple((int(s), int(t)) for t, s in np.argwhere(ev_x[row]))
        evz = tuple((int(s), int(t)) for t, s in np.argwhere(ev_z[row]))
        for events in (evx, evz):
            if len(events) > 2 or any(t > 1 for _, t in events):
                raise RuntimeError(f"fault {rec['site']} {rec['pauli']} produced {events}")
        if (flips_x[row] or flips_z[row]) and not (evx or evz):
            raise RuntimeError(f"undetected logical fault at {rec['site']}")
        faults.append(FaultEffect(
            kind=rec["kind"], rate_kind=rec["rate_kind"], step=rec["step"],
            site=rec["site"], pauli=rec["pauli"],
            events_x=evx, events_z=evz,
            flip_x=bool(flips_x[row]), flip_z=bool(flips_z[row]),
        ))
    result = tuple(faults)
    _fault_cache[layout.d] = result
    return result


def _run_cycle(comp, fx, fz, meas_z, meas_x, inject_by_step=None, noise=None, t=None):
    """Advance frames through one noiseless cycle, recording outcome flips.

    ``inject_by_step`` applies explicit fault bits (enumeration); ``noise``
    applies pre-drawn random flips (Monte Carlo).  Exactly one may be given.
    """
    layout = comp.layout
    data = layout.data_ids
    xsyn = layout.xsyn_ids
    syn = layout.syn_ids

    def idle(slot):
        if noise is not None:
            fx[:, data] ^= noise["idle_x"][:, t, slot]
            fz[:, data] ^= noise["idle_z"][:, t, slot]

    def inject(step):
        if inject_by_step is not None:
            for row, bits in inject_by_step.get(step, ()):
                for q, axis in bits:
                    (fx if axis == 0 else fz)[row, q] ^= True

    def swap_had():
        tmp = fx[:, xsyn].copy()
        fx[:, xsyn] = fz[:, xsyn]
        fz[:, xsyn] = tmp

    # step 0: syndrome init, data idle slot 0
    fx[:, syn] = False
    fz[:, syn] = False
    idle(0)
    inject(0)
    # step 1: Hadamard on X syndromes, data idle slot 1
    swap_had()
    idle(1)
    inject(1)
    # steps 2..5: CNOT sweeps
    for k in range(4):
        c = comp.cnot_ctrl[k]
        tg = comp.cnot_tgt[k]
        fx[:, tg] = fx[:, tg] ^ fx[:, c]
        fz[:, c] = fz[:, c] ^ fz[:, tg]
        if noise is not None:
            lo, hi = comp.slot_offsets[k], comp.slot_offsets[k + 1]
            occ = noise["occ"][:, t, lo:hi]
            kk = noise["kk"][:, t, lo:hi]
            fx[:, c] = fx[:, c] ^ (occ & comp.xc[kk])
            fz[:, c] = fz[:, c] ^ (occ & comp.zc[kk])
            fx[:, tg] = fx[:, tg] ^ (occ & comp.xt[kk])
            fz[:, tg] = fz[:, tg] ^ (occ & comp.zt[kk])
        inject(2 + k)
    # step 6: second Hadamard, data idle slot 2
    swap_had()
    idle(2)
    inject(6)
    # step 7: data idle slot 3, measurement
    idle(3)
    inject(7)
    meas_z[:] = fx[:, layout.zsyn_ids]
    meas_x[:] = fx[:, xsyn]
    if noise is not None:
        meas_z ^= noise["flip_z"][:, t]
        meas_x ^= noise["flip_x"][:, t]


@dataclass(frozen=True)
class SimResult:
    """Logical failure counts from one Monte Carlo run."""

    shots: int
    rounds: int
    fails_x: int
    fails_z: int

    @property
    def p_xl(self) -> float:
        return self.fails_x / (self.shots * self.rounds) if self.shots else 0.0

    @property
    def p_zl(self) -> float:
        return self.fails_z / (self.shots * self.rounds) if self.shots else 0.0

    @property
    def stderr_x(self) -> float:
        return math.sqrt(self.fails_x) / (self.shots * self.rounds) if self.shots else 0.0

    @property
    def stderr_z(self) -> float:
        return math.sqrt(self.fails_z) / (self.shots * self.rounds) if self.shots else 0.0

    @property
    def low_confidence(self) -> bool:
        return self.fails_x < 100 or self.fails_z < 100

    def merged(self, other: "SimResult") -> "SimResult":
        if other.rounds != self.rounds:
            raise ValueError("cannot merge runs with different rounds per shot")
        return SimResult(
            shots=self.shots + other.shots,
            rounds=self.rounds,
            fails_x=self.fails_x + other.fails_x,
            fails_z=self.fails_z + other.fails_z,
        )


def _draw_noise(seed: int, shot_indices: range, R: int, comp: _Compiled, rates: Rates) -> dict:
    """Pre-draw every random flip for a batch of shots.

    Each shot owns a counter-based substream keyed by (seed, shot index), so
    results are independent of batch partitioning.  The draw order within a
    shot is fixed: idle-X uniforms, idle-Z uniforms, CNOT occurrence uniforms,
    CNOT Pauli picks, outcome-flip uniforms.
    """
    layout = comp.layout
    nd, c, nz, nx = layout.n_data, comp.n_slots, layout.n_z, layout.n_x
    tx = 2.0 * rates.p1x / 3.0
    tz = 2.0 * rates.p1z / 3.0
    idle_x, idle_z, occ, kk, flip_z, flip_x = [], [], [], [], [], []
    for shot in shot_indices:
        g = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, shot))))
        idle_x.append(g.random((R, 4, nd)) < tx)
        idle_z.append(g.random((R, 4, nd)) < tz)
        occ.append(g.random((R, c)) < rates.p2)
        kk.append(g.integers(0, 15, size=(R, c), dtype=np.uint8))
        flips = g.random((R, nz + nx))
        flip_z.append(flips[:, :nz] < rates.p0x)
        flip_x.append(flips[:, nz:] < rates.p0z)
    return {
        "idle_x": np.stack(idle_x), "idle_z": np.stack(idle_z),
        "occ": np.stack(occ), "kk": np.stack(kk),
        "flip_z": np.stack(flip_z), "flip_x": np.stack(flip_x),
    }


def _simulate_batch(comp: _Compiled, rates: Rates, R: int, seed: int, shots: range):
    """Run a batch of shots; returns detection events and actual logical flips."""
    layout = comp.layout
    b = len(shots)
    noise = _draw_noise(seed, shots, R, comp, rates)
    fx = np.zeros((b, layout.n_qubits), dtype=bool)
    fz = np.zeros((b, layout.n_qubits), dtype=bool)
    det_x = np.zeros((b, R + 1, layout.n_z), dtype=bool)
    det_z = np.zeros((b, R + 1, layout.n_x), dtype=bool)
    prev_z = np.zeros((b, layout.n_z), dtype=bool)
    prev_x = np.zeros((b, layout.n_x), dtype=bool)
    out_z = np.empty_like(prev_z)
    out_x = np.empty_like(prev_x)
    for t in range(R + 1):
        if t < R:
            _run_cycle(comp, fx, fz, out_z, out_x, noise=noise, t=t)
        else:
            _run_cycle(comp, fx, fz, out_z, out_x)  # final noiseless readout
        det_x[:, t] = out_z ^ prev_z
        det_z[:, t] = out_x ^ prev_x
        prev_z, out_z = out_z, prev_z
        prev_x, out_x = out_x, prev_x
    actual_x = np.logical_xor.reduce(fx[:, layout.logical_z_ids], axis=1)
    actual_z = np.logical_xor.reduce(fz[:, layout.logical_x_ids], axis=1)
    return det_x, det_z, actual_x, actual_z


def run_monte_carlo(
    layout: Layout,
    rates: Rates,
    shots: int,
    rounds: int,
    seed: int,
    schedule: CycleSchedule | None = None,
    *,
    graphs=None,
    batch_size: int = 256,
    first_shot_index: int = 0,
) -> SimResult:
    """Estimate per-round logical X/Z failure rates by direct simulation.

    Each shot runs ``rounds`` noisy cycles plus one noiseless readout round,
    decodes both detection graphs by minimum-weight perfect matching, and
    counts a type-A failure when the correction parity disagrees with the
    accumulated frame parity across the logical-A reference cut.  Results are
    bit-identical for fixed (seed, shot range, rounds) regardless of
    ``batch_size``.
    """
    rates = Rates(*rates)
    rates.validate()
    if shots < 0 or rounds < 1:
        raise ValueError("shots must be >= 0 and rounds >= 1")
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    comp = _compiled(layout, schedule)
    if graphs is None:
        from . import matcher

        graphs = matcher.build_graphs(enumerate_single_faults(layout), rates, layout)
    graph_x, graph_z = graphs
    graph_x.prepare(rounds)
    graph_z.prepare(rounds)

    from .matcher import min_weight_perfect_matching

    fails_x = fails_z = 0
    done = 0
    while done < shots:
        b = min(batch_size, shots - done)
        lo = first_shot_index + done
        det_x, det_z, actual_x, actual_z = _simulate_batch(
            comp, rates, rounds, seed, range(lo, lo + b)
        )
        for row in range(b):
            for det, graph, actual, which in (
                (det_x, graph_x, actual_x, 0), (det_z, graph_z, actual_z, 1),
            ):
                events = [(int(s), int(t)) for t, s in np.argwhere(det[row])]
                matching = min_weight_perfect_matching(graph, events)
                if matching.correction_flip ^ bool(actual[row]):
                    if which == 0:
                        fails_x += 1
                    else:
                        fails_z += 1
        done += b
    return SimResult(shots=shots, rounds=rounds, fails_x=fails_x, fails_z=fails_z)
