"""Rotated surface-code layout and expansion of logical circuits to timed
physical operations with stable noise-location enumeration.

Layout conventions (distance d):

* data qubits at cells (r, c), 0 <= r, c < d;
* plaquette sites (i, j), 0 <= i, j <= d, supported on the in-range cells of
  {(i-1,j-1), (i-1,j), (i,j-1), (i,j)};
* interior sites carry X plaquettes when i+j is odd, Z when even;
* weight-2 X plaquettes sit on the left/right boundaries, weight-2 Z
  plaquettes on the top/bottom boundaries;
* logical X is X on row 0, logical Z is Z on column 0.

A transversal H is expanded as qubit-wise H followed by a recorded patch
rotation (cell (r, c) -> (c, d-1-r)), which maps the X plaquette set onto the
Z plaquette set and keeps the measurement schedule identical every round.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import NamedTuple

from .circuits import (
    CircuitError,
    LogicalCircuit,
    LogicalMeasurement,
    MagicInit,
    Observable,
    SyndromeExtraction,
    Timeline,
    TransversalGates,
    normalize_layers,
    timeline,
)


class UnsupportedGateError(CircuitError):
    """Gate has no physical expansion under the selected tier."""


@dataclass(frozen=True)
class SurfaceCodeSpec:
    distance: int
    layout: str = "rotated"
    schedule: str = "standard-4step"
    tier: str = "circuit"  # "circuit" | "phenomenological"
    idle_during_readout: bool = True  # idle noise while ancillas init/measure

    def __post_init__(self):
        if self.distance < 3 or self.distance % 2 == 0:
            raise CircuitError(f"distance must be odd and >= 3, got {self.distance}")
        if self.layout != "rotated":
            raise CircuitError(f"unsupported layout {self.layout!r}")
        if self.schedule != "standard-4step":
            raise CircuitError(f"unsupported schedule {self.schedule!r}")
        if self.tier not in ("circuit", "phenomenological"):
            raise CircuitError(f"unknown noise tier {self.tier!r}")


class Plaquette(NamedTuple):
    index: int
    site: tuple[int, int]
    ptype: str  # "X" | "Z"
    support: tuple[int, ...]  # local data indices
    steps: tuple[tuple[int, int], ...]  # (schedule step 1..4, local data index)


# Schedule offsets relative to site (i, j); cell (i-1, j-1) is NW.
_X_ORDER = ((-1, -1), (-1, 0), (0, -1), (0, 0))  # NW, NE, SW, SE
_Z_ORDER = ((-1, -1), (0, -1), (-1, 0), (0, 0))  # NW, SW, NE, SE


@functools.lru_cache(maxsize=None)
def patch_layout(d: int) -> "PatchLayout":
    return PatchLayout(d)


class PatchLayout:
    """Static geometry of one rotated patch of distance d."""

    def __init__(self, d: int):
        if d < 3 or d % 2 == 0:
            raise CircuitError(f"distance must be odd and >= 3, got {d}")
        self.d = d
        self.n_data = d * d
        plaquettes: list[Plaquette] = []
        site_to_index: dict[tuple[int, int], int] = {}
        for i in range(d + 1):
            for j in range(d + 1):
                ptype = "X" if (i + j) % 2 == 1 else "Z"
                interior = 1 <= i <= d - 1 and 1 <= j <= d - 1
                top, bottom = i == 0, i == d
                left, right = j == 0, j == d
                if interior:
                    pass
                elif (top or bottom) and 1 <= j <= d - 1 and ptype == "Z":
                    pass
                elif (left or right) and 1 <= i <= d - 1 and ptype == "X":
                    pass
                else:
                    continue
                order = _X_ORDER if ptype == "X" else _Z_ORDER
                support = []
                steps = []
                for step, (di, dj) in enumerate(order, start=1):
                    r, c = i + di, j + dj
                    if 0 <= r < d and 0 <= c < d:
                        support.append(r * d + c)
                        steps.append((step, r * d + c))
                idx = len(plaquettes)
                plaquettes.append(Plaquette(idx, (i, j), ptype, tuple(sorted(support)), tuple(steps)))
                site_to_index[(i, j)] = idx
        self.plaquettes = tuple(plaquettes)
        self.site_to_index = site_to_index
        self.n_stab = len(plaquettes)
        assert self.n_stab == d * d - 1
        self.logical_x_support = tuple(range(d))  # row 0: cells (0, c)
        self.logical_z_support = tuple(r * d for r in range(d))  # column 0
        # Qubit-wise rotation applied with each transversal H: (r,c) -> (c, d-1-r).
        perm = [0] * self.n_data
        for r in range(d):
            for c in range(d):
                perm[r * d + c] = c * d + (d - 1 - r)
        self.rot90_data = tuple(perm)

    def rot90_site(self, site: tuple[int, int]) -> tuple[int, int]:
        i, j = site
        return (j, self.d - i)

    def rot90_site_inv(self, site: tuple[int, int]) -> tuple[int, int]:
        i, j = site
        return (self.d - j, i)

    def logical_support(self, basis: str) -> tuple[int, ...]:
        return self.logical_x_support if basis == "X" else self.logical_z_support


class Op(NamedTuple):
    """One timed physical operation.

    kind: "init" | "g1" | "cnot" | "idle" | "meas" | "relabel"
    qubits: physical qubits acted on (for relabel: the patch data qubits in
        local-position order)
    gate: gate letter for g1, init basis for init
    operator: measured Pauli as ((qubit, "X"|"Z"), ...) for meas ops
    slot: measurement slot index for meas ops
    loc: noise location id or None
    aux: relabel permutation tau (content at local position l moves to tau[l])
    """

    kind: str
    qubits: tuple[int, ...]
    gate: str | None = None
    operator: tuple[tuple[int, str], ...] | None = None
    slot: int | None = None
    loc: int | None = None
    aux: tuple[int, ...] | None = None


class SlotInfo(NamedTuple):
    index: int
    kind: str  # "se" | "terminal" | "observable"
    qubit: int  # logical qubit
    round: int
    stab: int | None  # plaquette index for se/terminal
    basis: str


LOC_CLASS_CHOICES = {"g1": 3, "g2": 15, "init": 1, "meas": 1}


@dataclass
class PhysicalCircuit:
    """Timed physical operation list plus measurement/noise bookkeeping."""

    circuit: LogicalCircuit
    spec: SurfaceCodeSpec
    ops: tuple[Op, ...]
    num_qubits: int
    slots: tuple[SlotInfo, ...]
    meas_index: dict[tuple[int, int, int], int]  # (qubit, round, plaquette) -> slot
    observables: tuple[Observable, ...]
    obs_slots: tuple[int, ...]  # slot index per observable
    loc_kinds: tuple[str, ...]  # noise class per location id
    loc_ops: tuple[int, ...]  # op index per location id
    line: Timeline

    def __post_init__(self):
        self._qubit_ops: list[tuple[int, ...]] | None = None
        self._cache: dict = {}

    @property
    def num_slots(self) -> int:
        return len(self.slots)

    @property
    def num_locations(self) -> int:
        return len(self.loc_kinds)

    @property
    def num_observables(self) -> int:
        return len(self.observables)

    def qubit_ops(self) -> list[tuple[int, ...]]:
        """Per physical qubit, the indices of ops touching it (time order)."""
        if self._qubit_ops is None:
            per: list[list[int]] = [[] for _ in range(self.num_qubits)]
            for i, op in enumerate(self.ops):
                if op.kind == "meas":
                    for q, _ in op.operator:
                        per[q].append(i)
                elif op.kind == "relabel":
                    for q in op.qubits:
                        per[q].append(i)
                else:
                    for q in op.qubits:
                        per[q].append(i)
            self._qubit_ops = [tuple(x) for x in per]
        return self._qubit_ops


def _patch_base(tier: str, d: int, qubit: int) -> int:
    n_data = d * d
    block = n_data if tier == "phenomenological" else n_data + (n_data - 1)
    return qubit * block


def expand_to_physical(circuit: LogicalCircuit, spec: SurfaceCodeSpec) -> PhysicalCircuit:
    """Expand a logical circuit into a physical circuit for the given tier.

    Noise locations are enumerated in op order, so the mapping is a pure
    function of (circuit, spec).
    """
    if circuit.distance != spec.distance:
        raise CircuitError(
            f"circuit distance {circuit.distance} != spec distance {spec.distance}"
        )
    d = spec.distance
    lay = patch_layout(d)
    line = timeline(circuit)
    tier = spec.tier
    n_data = lay.n_data

    base = {q: _patch_base(tier, d, q) for q in range(circuit.num_qubits)}
    data_q = {q: tuple(base[q] + l for l in range(n_data)) for q in range(circuit.num_qubits)}
    if tier == "circuit":
        anc_q = {
            q: tuple(base[q] + n_data + s for s in range(lay.n_stab))
            for q in range(circuit.num_qubits)
        }
    num_qubits = _patch_base(tier, d, circuit.num_qubits)

    ops: list[Op] = []
    slots: list[SlotInfo] = []
    meas_index: dict[tuple[int, int, int], int] = {}
    obs_slots: list[int] = []
    loc_kinds: list[str] = []
    loc_ops: list[int] = []

    def loc(kind: str) -> int:
        loc_kinds.append(kind)
        loc_ops.append(len(ops))  # the op being appended right after
        return len(loc_kinds) - 1

    def add(op_kind: str, **kw) -> None:
        ops.append(Op(op_kind, **kw))

    def new_slot(kind: str, qubit: int, rnd: int, stab: int | None, basis: str) -> int:
        s = SlotInfo(len(slots), kind, qubit, rnd, stab, basis)
        slots.append(s)
        if stab is not None:
            meas_index[(qubit, rnd, stab)] = s.index
        return s.index

    def init_patch(q: int, noisy: bool) -> None:
        for ql in data_q[q]:
            l = loc("init") if noisy else None
            add("init", qubits=(ql,), gate="Z", loc=l)

    def se_round(rnd: int, live: list[int]) -> None:
        if tier == "phenomenological":
            for q in live:
                for ql in data_q[q]:
                    add("idle", qubits=(ql,), loc=loc("g1"))
                for p in lay.plaquettes:
                    op_support = tuple((data_q[q][l], p.ptype) for l in p.support)
                    s = new_slot("se", q, rnd, p.index, p.ptype)
                    add("meas", qubits=(), operator=op_support, slot=s, loc=loc("meas"))
            return
        # circuit tier: synchronized 6-step round across patches
        idle_ro = spec.idle_during_readout
        for q in live:  # ancilla preparation
            for p in lay.plaquettes:
                a = anc_q[q][p.index]
                add("init", qubits=(a,), gate=p.ptype, loc=loc("init"))
            if idle_ro:
                for ql in data_q[q]:
                    add("idle", qubits=(ql,), loc=loc("g1"))
        for step in range(1, 5):
            for q in live:
                busy: set[int] = set()
                for p in lay.plaquettes:
                    for st, cell in p.steps:
                        if st != step:
                            continue
                        a = anc_q[q][p.index]
                        dq = data_q[q][cell]
                        if a in busy or dq in busy:
                            raise CircuitError("syndrome schedule collision")
                        pair = (a, dq) if p.ptype == "X" else (dq, a)
                        add("cnot", qubits=pair, loc=loc("g2"))
                        busy.add(a)
                        busy.add(dq)
                for ql in data_q[q]:
                    if ql not in busy:
                        add("idle", qubits=(ql,), loc=loc("g1"))
                for p in lay.plaquettes:
                    a = anc_q[q][p.index]
                    if a not in busy:
                        add("idle", qubits=(a,), loc=loc("g1"))
        for q in live:  # ancilla readout
            for p in lay.plaquettes:
                a = anc_q[q][p.index]
                s = new_slot("se", q, rnd, p.index, p.ptype)
                add("meas", qubits=(), operator=((a, p.ptype),), slot=s, loc=loc("meas"))
            if idle_ro:
                for ql in data_q[q]:
                    add("idle", qubits=(ql,), loc=loc("g1"))

    def gate_layer(layer: TransversalGates, live: list[int]) -> None:
        touched: set[int] = set()
        for g in layer.gates:
            if g.kind == "S":
                raise UnsupportedGateError(
                    "transversal S has no physical expansion here; it exists only "
                    "for fixup bookkeeping"
                )
            if g.kind == "CNOT":
                qc, qt = g.qubits
                for l in range(n_data):
                    kw = {"loc": loc("g2")} if tier == "circuit" else {"loc": None}
                    add("cnot", qubits=(data_q[qc][l], data_q[qt][l]), **kw)
                touched.update(g.qubits)
            else:
                (q,) = g.qubits
                for l in range(n_data):
                    kw = {"loc": loc("g1")} if tier == "circuit" else {"loc": None}
                    add("g1", qubits=(data_q[q][l],), gate=g.kind, **kw)
                if g.kind == "H":
                    add("relabel", qubits=data_q[q], aux=lay.rot90_data)
                touched.add(q)
        if tier == "circuit":
            for q in live:
                if q not in touched:
                    for ql in data_q[q]:
                        add("idle", qubits=(ql,), loc=loc("g1"))

    def terminal_measure(q: int, basis: str, rnd: int) -> None:
        for p in lay.plaquettes:
            if p.ptype != basis:
                continue
            s = new_slot("terminal", q, rnd, p.index, basis)
            add(
                "meas",
                qubits=(),
                operator=tuple((data_q[q][l], basis) for l in p.support),
                slot=s,
                loc=None,
            )
        s = new_slot("observable", q, rnd, None, basis)
        obs_slots.append(s)
        add(
            "meas",
            qubits=(),
            operator=tuple((data_q[q][l], basis) for l in lay.logical_support(basis)),
            slot=s,
            loc=None,
        )

    # --- main walk ------------------------------------------------------
    born: set[int] = set()
    retired: set[int] = set()
    for q in range(circuit.num_qubits):
        gap, kind = line.birth[q]
        if kind == "zero":
            init_patch(q, noisy=True)
            born.add(q)

    rnd = 0
    for layer in normalize_layers(circuit):
        if isinstance(layer, SyndromeExtraction):
            se_round(rnd, sorted(born - retired))
            rnd += 1
        elif isinstance(layer, TransversalGates):
            gate_layer(layer, sorted(born - retired))
        elif isinstance(layer, MagicInit):
            init_patch(layer.qubit, noisy=False)
            born.add(layer.qubit)
        elif isinstance(layer, LogicalMeasurement):
            for q in layer.qubits:
                terminal_measure(q, layer.basis, rnd)
                retired.add(q)

    return PhysicalCircuit(
        circuit=circuit,
        spec=spec,
        ops=tuple(ops),
        num_qubits=num_qubits,
        slots=tuple(slots),
        meas_index=meas_index,
        observables=line.observables,
        obs_slots=tuple(obs_slots),
        loc_kinds=tuple(loc_kinds),
        loc_ops=tuple(loc_ops),
        line=line,
    )
