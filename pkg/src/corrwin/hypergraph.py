"""Decoding-hypergraph construction.

Checks pair each stabilizer outcome with its back-propagated predecessor
across the intervening gate layer; error events are enumerated per noise
location, propagated to (check set, logical mask) signatures, and merged into
weighted hyperedges when their signatures coincide.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .circuits import CircuitError, LogicalCircuit, timeline
from .decoders import DecodingInstance, InstanceEdge
from .noise import ErrorEvent, NoiseModel, event_offsets, event_signature
from .surface import (
    LOC_CLASS_CHOICES,
    PatchLayout,
    PhysicalCircuit,
    UnsupportedGateError,
    patch_layout,
)


@dataclass(frozen=True)
class Check:
    """Product of stabilizer outcomes whose noiseless reference value is +1."""

    id: int
    qubit: int
    round: int
    stab: int  # plaquette index within the patch
    stab_type: str  # "X" | "Z"
    refs: tuple[tuple[int, int, int], ...]  # (qubit, round, plaquette) keys
    terminal: bool = False


def _fold_layer(lay: PatchLayout, layer, elems: set) -> set:
    """Back-propagate stabilizer labels through one transversal gate layer."""
    out: set = set()
    for q, site, ptype in elems:
        images = [(q, site, ptype)]
        for g in layer.gates:
            if q not in g.qubits:
                continue
            if g.kind == "H":
                images = [(q, lay.rot90_site_inv(site), "Z" if ptype == "X" else "X")]
            elif g.kind in ("X", "Y", "Z"):
                pass
            elif g.kind == "S":
                raise UnsupportedGateError("unsupported gate in a layer: S")
            elif g.kind == "CNOT":
                c, t = g.qubits
                if ptype == "X" and q == c:
                    images = [(c, site, "X"), (t, site, "X")]
                elif ptype == "Z" and q == t:
                    images = [(t, site, "Z"), (c, site, "Z")]
            break  # a qubit appears at most once per layer
        for im in images:
            out ^= {im}
    return out


def build_checks(circuit: LogicalCircuit) -> tuple[Check, ...]:
    """Check definitions for every syndrome round and terminal measurement."""
    lay = patch_layout(circuit.distance)
    line = timeline(circuit)
    first_round = {q: line.birth[q][0] for q in line.birth}
    init_kind = {q: line.birth[q][1] for q in line.birth}

    items: list[tuple[tuple, int, int, int, str, tuple, bool]] = []

    def resolve(q: int, k: int, plq, start_elems: set, gap_layers) -> tuple | None:
        """Fold back one round; return refs or None when non-deterministic."""
        elems = set(start_elems)
        for layer in reversed(gap_layers):
            elems = _fold_layer(lay, layer, elems)
        refs = [(q, k, plq.index)]
        for q2, site, ptype in sorted(elems):
            idx = lay.site_to_index.get(site)
            if idx is None or lay.plaquettes[idx].ptype != ptype:
                raise CircuitError("stabilizer back-propagation left the plaquette set")
            if first_round[q2] <= k - 1:
                refs.append((q2, k - 1, idx))
            else:
                kind = init_kind[q2]
                if kind == "zero" and ptype == "X":
                    return None  # reference value is not deterministic
                # zero-init Z factors and all magic-state factors are +1
        return tuple(refs)

    for k in range(line.rounds):
        for q in line.live_qubits(k):
            for plq in lay.plaquettes:
                refs = resolve(q, k, plq, {(q, plq.site, plq.ptype)}, line.gaps[k])
                if refs is not None:
                    items.append(((k, 0, q, plq.index), q, k, plq.index, plq.ptype, refs, False))

    for q, (kt, basis) in sorted(line.terminal.items()):
        for plq in lay.plaquettes:
            if plq.ptype != basis:
                continue
            # no gate may touch q between its last round and the measurement
            refs = [(q, kt, plq.index)]
            if first_round[q] <= kt - 1:
                refs.append((q, kt - 1, plq.index))
            elif init_kind[q] == "zero" and basis == "X":
                continue
            items.append(((kt, 1, q, plq.index), q, kt, plq.index, basis, tuple(refs), True))

    items.sort(key=lambda it: it[0])
    return tuple(
        Check(i, q, k, plq, ptype, refs, term)
        for i, (_, q, k, plq, ptype, refs, term) in enumerate(items)
    )


# ---------------------------------------------------------------------------
# Events


def enumerate_events(phys: PhysicalCircuit, noise: NoiseModel) -> tuple[ErrorEvent, ...]:
    """One event per (noise location, nontrivial Pauli), uniform within class."""
    if noise.p <= 0.0:
        raise CircuitError("event enumeration requires p > 0")
    offs = event_offsets(phys)
    events = []
    for loc, kind in enumerate(phys.loc_kinds):
        k = LOC_CLASS_CHOICES[kind]
        pj = noise.p / k
        base = int(offs[loc])
        for c in range(k):
            events.append(ErrorEvent(id=base + c, loc=loc, kind=kind, choice=c, probability=pj))
    return tuple(events)


def _slot_maps(phys: PhysicalCircuit, checks) -> tuple[dict, dict]:
    key = ("slotmaps", id(checks))
    if key not in phys._cache:
        slot_to_checks: dict[int, list[int]] = {}
        for chk in checks:
            for ref in chk.refs:
                slot = phys.meas_index.get(ref)
                if slot is None:
                    raise CircuitError(f"check {chk.id} reference {ref} unresolved")
                slot_to_checks.setdefault(slot, []).append(chk.id)
        obs_pos = {slot: i for i, slot in enumerate(phys.obs_slots)}
        phys._cache[key] = (slot_to_checks, obs_pos)
    return phys._cache[key]


def propagate_event(phys: PhysicalCircuit, checks, event) -> tuple[frozenset, int]:
    """(flipped check ids, logical mask) for a single event; memoized."""
    eid = event.id if isinstance(event, ErrorEvent) else int(event)
    memo = phys._cache.setdefault(("prop", id(checks)), {})
    got = memo.get(eid)
    if got is None:
        slot_to_checks, obs_pos = _slot_maps(phys, checks)
        parity: dict[int, int] = {}
        mask = 0
        for s in event_signature(phys, eid):
            for cid in slot_to_checks.get(s, ()):
                parity[cid] = parity.get(cid, 0) ^ 1
            if s in obs_pos:
                mask |= 1 << obs_pos[s]
        got = (frozenset(c for c, v in parity.items() if v), mask)
        memo[eid] = got
    return got


def weight(p: float) -> float:
    """Log-odds weight of an error mechanism; positive and decreasing in p."""
    if not (0.0 < p < 0.5):
        raise CircuitError(f"weight requires 0 < p < 0.5, got {p}")
    return math.log((1.0 - p) / p)


def merged_probability(p: float, div_counts: dict[int, int]) -> float:
    """Probability of an odd number of independent events firing.

    ``div_counts[k]`` counts contributing events of probability p/k.
    """
    prod = 1.0
    for div, count in div_counts.items():
        prod *= (1.0 - 2.0 * p / div) ** count
    return 0.5 * (1.0 - prod)


@dataclass(frozen=True)
class Hyperedge:
    id: int
    vertices: tuple[int, ...]  # check ids, sorted
    mask: int  # logical-observable flip bits
    probability: float
    weight: float
    events: tuple[int, ...]
    div_counts: tuple[tuple[int, int], ...]  # (probability divisor, count)


@dataclass(frozen=True)
class DecodingHypergraph:
    checks: tuple[Check, ...]
    edges: tuple[Hyperedge, ...]
    num_observables: int
    coords: tuple[tuple[int, int], ...]  # (qubit, round) per check
    phys: PhysicalCircuit
    p: float

    @property
    def num_checks(self) -> int:
        return len(self.checks)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def incidence(self) -> tuple[tuple[int, ...], ...]:
        """check id -> incident edge ids (both directions derive from this)."""
        cache = self.phys._cache
        key = ("incidence", id(self.edges))
        if key not in cache:
            inc: list[list[int]] = [[] for _ in self.checks]
            for e in self.edges:
                for v in e.vertices:
                    inc[v].append(e.id)
            cache[key] = tuple(tuple(x) for x in inc)
        return cache[key]

    def edge_of_event(self) -> dict[int, int]:
        cache = self.phys._cache
        key = ("edge_of_event", id(self.edges))
        if key not in cache:
            cache[key] = {ev: e.id for e in self.edges for ev in e.events}
        return cache[key]

    def to_instance(self) -> DecodingInstance:
        return DecodingInstance(
            check_ids=tuple(range(len(self.checks))),
            coords=self.coords,
            edges=tuple(
                InstanceEdge(e.id, e.vertices, e.weight, e.mask, e.events) for e in self.edges
            ),
        )

    def reweight(self, p: float) -> "DecodingHypergraph":
        """Same structure re-weighted for a different physical error rate."""
        edges = []
        for e in self.edges:
            pm = merged_probability(p, dict(e.div_counts))
            if pm >= 0.5:
                raise CircuitError(f"merged probability {pm} >= 0.5 for edge {e.id}")
            edges.append(replace(e, probability=pm, weight=weight(pm)))
        return replace(self, edges=tuple(edges), p=p)


def merge_events(phys: PhysicalCircuit, checks, events) -> tuple[Hyperedge, ...]:
    """Group events with identical (check set, logical mask) into hyperedges."""
    groups: dict[tuple, list[ErrorEvent]] = {}
    for ev in events:
        chks, mask = propagate_event(phys, checks, ev)
        if not chks and mask == 0:
            continue  # acts trivially on everything tracked
        groups.setdefault((tuple(sorted(chks)), mask), []).append(ev)

    ordered = sorted(groups.items(), key=lambda kv: min(e.id for e in kv[1]))
    edges = []
    for eid, ((vertices, mask), evs) in enumerate(ordered):
        div_counts: dict[int, int] = {}
        p_ref = None
        for ev in evs:
            div = LOC_CLASS_CHOICES[ev.kind]
            div_counts[div] = div_counts.get(div, 0) + 1
            p_ref = ev.probability * div  # base physical rate
        pm = merged_probability(p_ref, div_counts)
        if pm >= 0.5:
            raise CircuitError(f"merged probability {pm} >= 0.5")
        edges.append(
            Hyperedge(
                id=eid,
                vertices=vertices,
                mask=mask,
                probability=pm,
                weight=weight(pm),
                events=tuple(sorted(e.id for e in evs)),
                div_counts=tuple(sorted(div_counts.items())),
            )
        )
    return tuple(edges)


def build_hypergraph(phys: PhysicalCircuit, noise: NoiseModel) -> DecodingHypergraph:
    """Checks + merged weighted hyperedges for a physical circuit."""
    checks = build_checks(phys.circuit)
    events = enumerate_events(phys, noise)
    edges = merge_events(phys, checks, events)
    coords = tuple((c.qubit, c.round) for c in checks)
    return DecodingHypergraph(
        checks=checks,
        edges=edges,
        num_observables=phys.num_observables,
        coords=coords,
        phys=phys,
        p=noise.p,
    )


# ---------------------------------------------------------------------------
# Window restriction


def restrict_to_window(source, window, removed_events=frozenset()) -> DecodingInstance:
    """Trim a graph or instance to a window region.

    Vertices outside the region are dropped from each edge; edges left with no
    vertex, or any contributing event in ``removed_events``, are dropped.
    """
    region = getattr(window, "region", window)
    if isinstance(source, DecodingHypergraph):
        source = source.to_instance()
    keep = [i for i, coord in enumerate(source.coords) if coord in region]
    keep_set = set(keep)
    local_of = {source.check_ids[i]: new for new, i in enumerate(keep)}
    old_global = {i: source.check_ids[i] for i in keep_set}

    edges = []
    for e in source.edges:
        if removed_events and any(ev in removed_events for ev in e.events):
            continue
        vs = tuple(
            local_of[source.check_ids[v]]
            for v in e.vertices
            if v in keep_set
        )
        if not vs:
            continue
        edges.append(InstanceEdge(e.id, vs, e.weight, e.mask, e.events))
    return DecodingInstance(
        check_ids=tuple(source.check_ids[i] for i in keep),
        coords=tuple(source.coords[i] for i in keep),
        edges=tuple(edges),
    )


# ---------------------------------------------------------------------------
# Dump format


def dump_hypergraph(graph: DecodingHypergraph) -> str:
    lines = [f"hypergraph {graph.num_checks} {graph.num_edges} {graph.num_observables}"]
    for c in graph.checks:
        lines.append(f"check {c.id} {c.qubit} {c.round} {c.stab_type}{c.stab}")
    for e in graph.edges:
        vs = ",".join(str(v) for v in e.vertices) or "-"
        mask = format(e.mask, f"0{max(1, graph.num_observables)}b")
        lines.append(f"edge {e.id} {e.probability:.9e} {e.weight:.9f} {vs} {mask} {len(e.events)}")
    return "\n".join(lines) + "\n"


def parse_hypergraph_dump(text: str) -> DecodingInstance:
    """Parse a dump back into a decodable instance (weights and masks only)."""
    lines = [l for l in text.splitlines() if l.strip()]
    head = lines[0].split()
    if head[0] != "hypergraph" or len(head) != 4:
        raise CircuitError("malformed hypergraph dump header")
    n, m = int(head[1]), int(head[2])
    coords = []
    edges = []
    for line in lines[1:]:
        parts = line.split()
        if parts[0] == "check":
            coords.append((int(parts[2]), int(parts[3])))
        elif parts[0] == "edge":
            vs = () if parts[4] == "-" else tuple(int(x) for x in parts[4].split(","))
            mask = int(parts[5], 2)
            edges.append(InstanceEdge(int(parts[1]), vs, float(parts[3]), mask, ()))
        else:
            raise CircuitError(f"malformed dump line: {line!r}")
    if len(coords) != n or len(edges) != m:
        raise CircuitError("dump header does not match body")
    return DecodingInstance(
        check_ids=tuple(range(n)), coords=tuple(coords), edges=tuple(edges)
    )
