"""Temporal and spatial window planning plus staged windowed decoding.

A window is a region of check coordinates split into a commit sub-region and
one or two buffer sub-regions.  Edges whose restriction touches the commit
region are finalised: their check flips are cancelled out of the working
syndrome and their events excluded from later windows.  Edges confined to
buffers are deferred to the next window.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import Block, CircuitError, LogicalCircuit, block_partition, timeline
from .decoders import (
    CachedDecoder,
    DecodeResult,
    DecodingInstance,
    _result,
    decode_mle,
)
from .hypergraph import DecodingHypergraph, restrict_to_window


class WindowError(CircuitError):
    pass


class ResidualSyndromeError(WindowError):
    """The working syndrome was not fully explained after the final stage."""


Coord = tuple[int, int]


@dataclass(frozen=True)
class WindowSpec:
    kind: str  # "temporal" | "spatial"
    stage: int
    index: int
    region: frozenset[Coord]
    commit: frozenset[Coord]
    buffers: tuple[frozenset[Coord], ...]
    se_rounds: tuple[int, ...] = ()  # temporal: SE rounds covered
    commit_rounds: tuple[int, ...] = ()
    block_names: tuple[str, ...] = ()  # spatial: blocks covered
    commit_blocks: tuple[str, ...] = ()

    def __post_init__(self):
        union = set(self.commit)
        for b in self.buffers:
            if union & b:
                raise WindowError("window sub-regions overlap")
            union |= b
        if union != set(self.region):
            raise WindowError("commit and buffers must partition the window region")


@dataclass(frozen=True)
class WindowPlan:
    kind: str
    stages: tuple[tuple[WindowSpec, ...], ...]
    universe: frozenset[Coord]

    def __post_init__(self):
        committed: set[Coord] = set()
        for stage in self.stages:
            regions: set[Coord] = set()
            for w in stage:
                if regions & w.region:
                    raise WindowError("windows within a stage must be disjoint")
                regions |= w.region
                overlap = committed & w.commit
                if overlap:
                    raise WindowError(f"coordinates committed twice: {sorted(overlap)[:4]}")
                committed |= w.commit
        if committed != set(self.universe):
            missing = set(self.universe) - committed
            raise WindowError(f"coordinates never committed: {sorted(missing)[:4]}")

    @property
    def windows(self) -> tuple[WindowSpec, ...]:
        return tuple(w for stage in self.stages for w in stage)


def check_coordinates(circuit: LogicalCircuit) -> frozenset[Coord]:
    """All (qubit, round) coordinates at which checks can exist."""
    line = timeline(circuit)
    coords = set()
    for k in range(line.rounds):
        for q in line.live_qubits(k):
            coords.add((q, k))
    for q, (kt, _) in line.terminal.items():
        coords.add((q, kt))
    return frozenset(coords)


# ---------------------------------------------------------------------------
# Planners


def plan_temporal(circuit: LogicalCircuit, d: int, n_c: int | None = None) -> WindowPlan:
    """Sliding windows of d+1 rounds; commit half, slide by the commit length.

    The final window commits its whole region, terminal rounds included.
    """
    line = timeline(circuit)
    rounds = line.rounds
    if rounds < 1:
        raise WindowError("temporal planning needs at least one SE round")
    n_b = (d + 1) // 2
    if n_c is None:
        n_c = n_b
    if n_c < 1:
        raise WindowError("commit region must contain at least one round")
    n_w = n_c + n_b
    universe = check_coordinates(circuit)

    specs: list[WindowSpec] = []
    a = 0
    while rounds - a > n_w:
        region = frozenset(c for c in universe if a <= c[1] < a + n_w)
        commit = frozenset(c for c in region if c[1] < a + n_c)
        specs.append(
            WindowSpec(
                "temporal",
                stage=len(specs),
                index=len(specs),
                region=region,
                commit=commit,
                buffers=(region - commit,),
                se_rounds=tuple(range(a, a + n_w)),
                commit_rounds=tuple(range(a, a + n_c)),
            )
        )
        a += n_c
    region = frozenset(c for c in universe if c[1] >= a)
    specs.append(
        WindowSpec(
            "temporal",
            stage=len(specs),
            index=len(specs),
            region=region,
            commit=region,
            buffers=(),
            se_rounds=tuple(range(a, rounds)),
            commit_rounds=tuple(range(a, rounds)),
        )
    )
    return WindowPlan("temporal", tuple((w,) for w in specs), universe)


def _spatial_setup(circuit, d, m_c, m_b):
    blocks = block_partition(circuit)
    line = timeline(circuit)
    depth = line.rounds  # one SE round per gate layer
    if depth < 1:
        raise WindowError("spatial planning needs at least one SE round")
    need = (d + 1) // 2
    if m_b is None:
        m_b = -(-need // depth)  # ceil((d+1)/2 / L)
    if m_c is None:
        m_c = m_b
    if m_b * depth < need:
        raise WindowError(
            f"buffer of {m_b} blocks at depth {depth} cannot reach the required "
            f"separation {need}"
        )
    if m_c < 1:
        raise WindowError("commit region must contain at least one block")
    return blocks, m_c, m_b


def _block_region(blocks: tuple[Block, ...], names, universe) -> frozenset[Coord]:
    qubits = {q for b in blocks if b.name in names for q in b.qubits}
    return frozenset(c for c in universe if c[0] in qubits)


def plan_spatial_feedforward(
    circuit: LogicalCircuit, d: int, m_c: int | None = None, m_b: int | None = None
) -> WindowPlan:
    """Feed-forward spatial windows sliding along the block axis."""
    blocks, m_c, m_b = _spatial_setup(circuit, d, m_c, m_b)
    universe = check_coordinates(circuit)
    nb = len(blocks)
    m_w = m_c + m_b

    specs: list[WindowSpec] = []
    a = 0
    while nb - a > m_w:
        names = tuple(b.name for b in blocks[a : a + m_w])
        commit_names = tuple(b.name for b in blocks[a : a + m_c])
        region = _block_region(blocks, names, universe)
        commit = _block_region(blocks, commit_names, universe)
        specs.append(
            WindowSpec(
                "spatial",
                stage=len(specs),
                index=len(specs),
                region=region,
                commit=commit,
                buffers=(region - commit,),
                block_names=names,
                commit_blocks=commit_names,
            )
        )
        a += m_c
    names = tuple(b.name for b in blocks[a:])
    region = _block_region(blocks, names, universe)
    specs.append(
        WindowSpec(
            "spatial",
            stage=len(specs),
            index=len(specs),
            region=region,
            commit=region,
            buffers=(),
            block_names=names,
            commit_blocks=names,
        )
    )
    return WindowPlan("spatial-ff", tuple((w,) for w in specs), universe)


def plan_spatial_parallel(
    circuit: LogicalCircuit, d: int, m_c: int | None = None, m_b: int | None = None
) -> WindowPlan:
    """Two-stage plan: disjoint buffered windows, then the residual parts."""
    blocks, m_c, m_b = _spatial_setup(circuit, d, m_c, m_b)
    universe = check_coordinates(circuit)
    nb = len(blocks)
    stride = m_c + 2 * m_b

    if nb <= stride:
        names = tuple(b.name for b in blocks)
        region = _block_region(blocks, names, universe)
        w = WindowSpec(
            "spatial", 0, 0, region, region, (), block_names=names, commit_blocks=names
        )
        return WindowPlan("spatial-parallel", ((w,),), universe)

    stage1: list[WindowSpec] = []
    committed: set[int] = set()  # block positions
    a = 0
    while a + m_b < nb:
        commit_lo = a + m_b
        commit_hi = min(commit_lo + m_c, nb)
        if commit_lo >= commit_hi:
            break
        span_hi = min(a + stride, nb)
        names = tuple(b.name for b in blocks[a:span_hi])
        commit_names = tuple(b.name for b in blocks[commit_lo:commit_hi])
        left = tuple(b.name for b in blocks[a:commit_lo])
        right = tuple(b.name for b in blocks[commit_hi:span_hi])
        region = _block_region(blocks, names, universe)
        commit = _block_region(blocks, commit_names, universe)
        buffers = tuple(
            _block_region(blocks, side, universe) for side in (left, right) if side
        )
        stage1.append(
            WindowSpec(
                "spatial",
                stage=0,
                index=len(stage1),
                region=region,
                commit=commit,
                buffers=buffers,
                block_names=names,
                commit_blocks=commit_names,
            )
        )
        committed.update(range(commit_lo, commit_hi))
        a += stride

    stage2: list[WindowSpec] = []
    run: list[int] = []
    for pos in range(nb + 1):
        if pos < nb and pos not in committed:
            run.append(pos)
            continue
        if run:
            names = tuple(blocks[i].name for i in run)
            region = _block_region(blocks, names, universe)
            stage2.append(
                WindowSpec(
                    "spatial",
                    stage=1,
                    index=len(stage2),
                    region=region,
                    commit=region,
                    buffers=(),
                    block_names=names,
                    commit_blocks=names,
                )
            )
            run = []
    stages = (tuple(stage1), tuple(stage2)) if stage2 else (tuple(stage1),)
    return WindowPlan("spatial-parallel", stages, universe)


def plan_to_text(plan: WindowPlan) -> str:
    lines = [f"plan {plan.kind} stages={len(plan.stages)}"]
    for stage_idx, stage in enumerate(plan.stages):
        for w in stage:
            if w.se_rounds:
                span = f"rounds {w.se_rounds[0]}-{w.se_rounds[-1]}"
                commit = f"commit {w.commit_rounds[0]}-{w.commit_rounds[-1]}"
            else:
                span = "blocks " + ",".join(w.block_names)
                commit = "commit " + ",".join(w.commit_blocks)
            lines.append(f"window {stage_idx}.{w.index} {w.kind} {span} {commit}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Classification and execution


def classify_hyperedge(coords, window: WindowSpec) -> str:
    """Commit/defer decision for a window-restricted edge.

    ``coords`` are the (qubit, round) coordinates of the edge's in-window
    vertices.  At least one coordinate inside the commit region commits the
    edge (covering both the fully-inside and the region-spanning cases).
    """
    coords = list(coords)
    if not coords:
        raise WindowError("edge with no in-window vertex should have been dropped")
    for c in coords:
        if c not in window.region:
            raise WindowError(f"coordinate {c} lies outside the window")
    return "commit" if any(c in window.commit for c in coords) else "defer"


class WindowRunner:
    """Reusable windowed decoder for one (graph, plan) pair."""

    def __init__(self, graph: DecodingHypergraph, plan: WindowPlan, decoder=None):
        self.graph = graph
        self.plan = plan
        self.decoder = decoder
        self._windows = []
        for stage in plan.stages:
            row = []
            for w in stage:
                inst = restrict_to_window(graph, w)
                row.append(
                    (
                        w,
                        inst,
                        CachedDecoder(inst) if decoder is None else None,
                        np.fromiter(inst.check_ids, dtype=np.int64, count=len(inst.check_ids)),
                    )
                )
            self._windows.append(row)

    def decode(self, check_bits: np.ndarray) -> DecodeResult:
        graph = self.graph
        working = np.array(check_bits, dtype=np.uint8, copy=True)
        excluded: set[int] = set()
        committed: list[int] = []
        mask = 0
        for row in self._windows:
            stage_commits: dict[int, object] = {}
            for w, inst, cached, ids in row:
                local = working[ids]
                if not local.any():
                    continue
                if cached is not None:
                    res = cached.decode(local, frozenset(excluded))
                else:
                    filtered = restrict_to_window(inst, w.region, _events_of(graph, excluded))
                    res = self.decoder(filtered, working[list(filtered.check_ids)])
                for eid in res.edges:
                    if eid in stage_commits or eid in excluded:
                        continue
                    edge = graph.edges[eid]
                    coords = [graph.coords[v] for v in edge.vertices if graph.coords[v] in w.region]
                    if classify_hyperedge(coords, w) == "commit":
                        stage_commits[eid] = edge
            for eid in sorted(stage_commits):
                edge = stage_commits[eid]
                for v in edge.vertices:
                    working[v] ^= 1
                mask ^= edge.mask
                excluded.add(eid)
                committed.append(eid)
        if working.any():
            bad = int(np.nonzero(working)[0][0])
            raise ResidualSyndromeError(
                f"unexplained syndrome after final stage (check {bad})"
            )
        committed.sort()
        objective = sum(graph.edges[e].weight for e in committed)
        return DecodeResult(tuple(committed), objective, mask, working)


def _events_of(graph: DecodingHypergraph, edge_ids) -> frozenset[int]:
    out: set[int] = set()
    for eid in edge_ids:
        out.update(graph.edges[eid].events)
    return frozenset(out)


def run_windowed_decode(
    graph: DecodingHypergraph, check_bits, plan: WindowPlan, decoder=None
) -> DecodeResult:
    """Restrict, decode, classify and commit across every stage of the plan.

    Committed edges flip their full check sets out of the working syndrome and
    their events are removed from all later windows.  A nonzero residual after
    the final stage raises ResidualSyndromeError.
    """
    bits = np.asarray(check_bits, dtype=np.uint8)
    if bits.shape != (graph.num_checks,):
        raise WindowError(f"expected {graph.num_checks} check bits")
    return WindowRunner(graph, plan, decoder).decode(bits)


def auto_split_independent(instance: DecodingInstance) -> list[DecodingInstance]:
    """Connected components of a window instance (qubit-independent parts)."""
    incident: list[list[int]] = [[] for _ in range(instance.num_checks)]
    for ei, e in enumerate(instance.edges):
        for v in e.vertices:
            incident[v].append(ei)
    seen = bytearray(instance.num_checks)
    parts = []
    for c0 in range(instance.num_checks):
        if seen[c0]:
            continue
        checks = []
        edges: set[int] = set()
        stack = [c0]
        seen[c0] = 1
        while stack:
            c = stack.pop()
            checks.append(c)
            for ei in incident[c]:
                if ei in edges:
                    continue
                edges.add(ei)
                for v in instance.edges[ei].vertices:
                    if not seen[v]:
                        seen[v] = 1
                        stack.append(v)
        checks.sort()
        local_of = {c: i for i, c in enumerate(checks)}
        parts.append(
            DecodingInstance(
                check_ids=tuple(instance.check_ids[c] for c in checks),
                coords=tuple(instance.coords[c] for c in checks),
                edges=tuple(
                    type(instance.edges[ei])(
                        instance.edges[ei].id,
                        tuple(local_of[v] for v in instance.edges[ei].vertices),
                        instance.edges[ei].weight,
                        instance.edges[ei].mask,
                        instance.edges[ei].events,
                    )
                    for ei in sorted(edges)
                ),
            )
        )
    return parts


# ---------------------------------------------------------------------------
# Gadget persistence


def s_persistence_report(circuit: LogicalCircuit, plan: WindowPlan) -> list[dict]:
    """How long each S ancilla outlives its gadget's committed T measurement.

    Returns one record per gadget with the SE-round gap between the window
    that commits the T measurement and the S-ancilla measurement, plus the
    applicable window-length bound.
    """
    line = timeline(circuit)
    report = []
    for g in line.gadgets:
        t_coord_round = g.t_measure_round
        commit_window = None
        for w in plan.windows:
            if (g.t_ancilla, t_coord_round) in w.commit:
                commit_window = w
                break
        if commit_window is None:
            raise WindowError(f"gadget {g.order}: T measurement never committed")
        if g.s_ancilla not in line.terminal:
            raise WindowError(f"gadget {g.order}: S ancilla never measured")
        s_round = line.terminal[g.s_ancilla][0]
        commit_end = max(commit_window.se_rounds) if commit_window.se_rounds else 0
        n_w = len(commit_window.se_rounds)
        report.append(
            {
                "gadget": g.order,
                "t_round": t_coord_round,
                "commit_window": commit_window.index,
                "s_round": s_round,
                "rounds_after_commit": s_round - commit_end,
                "window_length": n_w,
                "within_bound": s_round - commit_end <= n_w,
            }
        )
    return report
