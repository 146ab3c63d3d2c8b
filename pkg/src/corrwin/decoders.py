"""Exact minimum-weight parity decoding of hypergraph instances.

``decode_mle`` is a branch-and-bound search proved optimal by an admissible
bound; ``decode_bruteforce`` is the exhaustive oracle used to validate it.
Both share one tie-break rule: among equal-objective solutions the
lexicographically smallest sorted edge-id sequence wins.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_TOL = 1e-9


class DecodingError(ValueError):
    pass


class InfeasibleSyndromeError(DecodingError):
    def __init__(self, check_id):
        super().__init__(f"no hyperedge set can satisfy check {check_id}")
        self.check_id = check_id


@dataclass(frozen=True)
class InstanceEdge:
    id: int
    vertices: tuple[int, ...]  # local check indices
    weight: float
    mask: int
    events: tuple[int, ...] = ()


@dataclass(frozen=True)
class DecodingInstance:
    check_ids: tuple[int, ...]  # global check ids
    coords: tuple[tuple[int, int], ...]  # (qubit, round) per local check
    edges: tuple[InstanceEdge, ...]

    @property
    def num_checks(self) -> int:
        return len(self.check_ids)

    @property
    def num_edges(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class DecodeResult:
    edges: tuple[int, ...]  # selected hyperedge ids, sorted
    objective: float
    mask: int
    residual: np.ndarray  # leftover flipped checks (all-zero for exact solves)

    @property
    def ok(self) -> bool:
        return not self.residual.any()


def _as_bits(instance: DecodingInstance, syndrome) -> np.ndarray:
    bits = np.asarray(syndrome, dtype=np.uint8)
    if bits.shape != (instance.num_checks,):
        raise DecodingError(
            f"syndrome length {bits.shape} does not match {instance.num_checks} checks"
        )
    return bits


def _result(instance: DecodingInstance, bits: np.ndarray, chosen: list[InstanceEdge]) -> DecodeResult:
    chosen = sorted(chosen, key=lambda e: e.id)
    residual = bits.copy()
    mask = 0
    for e in chosen:
        for v in e.vertices:
            residual[v] ^= 1
        mask ^= e.mask
    objective = sum(e.weight for e in chosen)
    return DecodeResult(tuple(e.id for e in chosen), objective, mask, residual)


def _better(obj_a: float, ids_a: tuple, obj_b: float, ids_b: tuple) -> bool:
    """Is (obj_a, ids_a) preferable under the deterministic tie-break?"""
    tol = _TOL * (1.0 + abs(obj_b))
    if obj_a < obj_b - tol:
        return True
    if obj_a > obj_b + tol:
        return False
    return ids_a < ids_b


# ---------------------------------------------------------------------------
# Component decomposition


@dataclass(frozen=True)
class Component:
    instance: DecodingInstance
    syndrome: np.ndarray
    check_positions: tuple[int, ...]  # local indices into the parent instance


def _adjacency(instance: DecodingInstance, exclude: frozenset) -> list[list[int]]:
    incident: list[list[int]] = [[] for _ in range(instance.num_checks)]
    for ei, e in enumerate(instance.edges):
        if e.id in exclude:
            continue
        for v in e.vertices:
            incident[v].append(ei)
    return incident


def _component_from(instance, incident, seed_checks, seen_checks) -> tuple[list[int], list[int]]:
    """BFS over the check/edge incidence graph from the given checks."""
    comp_checks: list[int] = []
    comp_edges: set[int] = set()
    stack = list(seed_checks)
    for c in seed_checks:
        seen_checks[c] = True
    while stack:
        c = stack.pop()
        comp_checks.append(c)
        for ei in incident[c]:
            if ei in comp_edges:
                continue
            comp_edges.add(ei)
            for v in instance.edges[ei].vertices:
                if not seen_checks[v]:
                    seen_checks[v] = True
                    stack.append(v)
    return sorted(comp_checks), sorted(comp_edges)


def component_decompose(
    instance: DecodingInstance, syndrome, exclude: frozenset = frozenset()
) -> list[Component]:
    """Connected components of the incidence graph, pruned of quiet ones.

    Components without a flipped check decode to the empty set under positive
    weights, so only components containing syndrome are returned.
    """
    bits = _as_bits(instance, syndrome)
    incident = _adjacency(instance, exclude)
    seen = [False] * instance.num_checks
    out = []
    for c0 in np.nonzero(bits)[0]:
        c0 = int(c0)
        if seen[c0]:
            continue
        checks, edge_idx = _component_from(instance, incident, [c0], seen)
        local_of = {c: i for i, c in enumerate(checks)}
        sub_edges = tuple(
            InstanceEdge(
                instance.edges[ei].id,
                tuple(local_of[v] for v in instance.edges[ei].vertices),
                instance.edges[ei].weight,
                instance.edges[ei].mask,
                instance.edges[ei].events,
            )
            for ei in edge_idx
        )
        sub = DecodingInstance(
            check_ids=tuple(instance.check_ids[c] for c in checks),
            coords=tuple(instance.coords[c] for c in checks),
            edges=sub_edges,
        )
        out.append(Component(sub, bits[checks], tuple(checks)))
    return out


# ---------------------------------------------------------------------------
# Exact solvers


def _gf2_feasible(vmasks: list[int], target: int) -> int:
    """0 if target is reachable by XOR of vmasks, else the stuck low bit mask."""
    basis: dict[int, int] = {}  # leading bit -> vector
    for v in vmasks:
        while v:
            lead = v.bit_length() - 1
            if lead in basis:
                v ^= basis[lead]
            else:
                basis[lead] = v
                break
    t = target
    while t:
        lead = t.bit_length() - 1
        if lead not in basis:
            return t
        t ^= basis[lead]
    return 0


def _solve_exact(edges: list[InstanceEdge], n_checks: int, target: int):
    """Branch-and-bound minimum-weight parity cover.

    Branches on the highest-weight undecided edge incident to the lowest-index
    unsatisfied check.  The lower bound charges every unsatisfied check the
    cheapest incident weight *per covered unsatisfied check*, which stays
    admissible even when one edge explains many checks at once.
    """
    m = len(edges)
    vmask = [0] * m
    wts = [e.weight for e in edges]
    incident: list[list[int]] = [[] for _ in range(n_checks)]
    for ei, e in enumerate(edges):
        for v in e.vertices:
            vmask[ei] |= 1 << v
        for v in e.vertices:
            incident[v].append(ei)

    stuck = _gf2_feasible(vmask, target)
    if stuck:
        raise InfeasibleSyndromeError((stuck & -stuck).bit_length() - 1)

    best_obj = float("inf")
    best_sel: tuple[int, ...] | None = None
    decided = bytearray(m)
    chosen: list[int] = []

    def rec(need: int, cost: float) -> None:
        nonlocal best_obj, best_sel
        if need == 0:
            ids = tuple(sorted(edges[ei].id for ei in chosen))
            if best_sel is None or _better(cost, ids, best_obj, best_sel):
                best_obj, best_sel = cost, ids
            return
        # admissible bound over all unsatisfied checks
        bound = cost
        nn = need
        branch_edge = -1
        branch_w = -1.0
        first = True
        while nn:
            c = (nn & -nn).bit_length() - 1
            nn &= nn - 1
            cheapest = float("inf")
            for ei in incident[c]:
                if decided[ei]:
                    continue
                w = wts[ei]
                share = w / (vmask[ei] & need).bit_count()
                if share < cheapest:
                    cheapest = share
                if first and w > branch_w:
                    branch_edge, branch_w = ei, w
            if cheapest == float("inf"):
                return  # unsatisfied check with no undecided edge
            bound += cheapest
            first = False
        tol = _TOL * (1.0 + abs(best_obj)) if best_obj != float("inf") else 0.0
        if best_sel is not None and bound > best_obj + tol:
            return
        ei = branch_edge
        decided[ei] = 1
        chosen.append(ei)
        rec(need ^ vmask[ei], cost + wts[ei])
        chosen.pop()
        rec(need, cost)
        decided[ei] = 0

    rec(target, 0.0)
    assert best_sel is not None
    return [ei for ei in range(m) if edges[ei].id in set(best_sel)]


class CachedDecoder:
    """Reusable exact decoder: incidence built once, components per call.

    Each call explores only the incidence components reachable from flipped
    checks, so repeated low-weight syndromes on a large instance decode fast.
    """

    def __init__(self, instance: DecodingInstance):
        self.instance = instance
        self.incident = _adjacency(instance, frozenset())
        self._by_id = {e.id: e for e in instance.edges}

    def decode(self, syndrome, exclude: frozenset = frozenset()) -> DecodeResult:
        inst = self.instance
        bits = _as_bits(inst, syndrome)
        chosen: list[InstanceEdge] = []
        if bits.any():
            seen = bytearray(inst.num_checks)
            for c0 in np.nonzero(bits)[0]:
                c0 = int(c0)
                if seen[c0]:
                    continue
                checks, edge_idx = self._component(c0, seen, exclude)
                local_of = {c: i for i, c in enumerate(checks)}
                comp_edges = [
                    InstanceEdge(
                        inst.edges[ei].id,
                        tuple(local_of[v] for v in inst.edges[ei].vertices),
                        inst.edges[ei].weight,
                        inst.edges[ei].mask,
                        inst.edges[ei].events,
                    )
                    for ei in edge_idx
                ]
                target = 0
                for i, c in enumerate(checks):
                    if bits[c]:
                        target |= 1 << i
                try:
                    picked = _solve_exact(comp_edges, len(checks), target)
                except InfeasibleSyndromeError as err:
                    raise InfeasibleSyndromeError(inst.check_ids[checks[err.check_id]]) from None
                chosen.extend(comp_edges[ei] for ei in picked)
        # report against the full instance (component vertices are local)
        return _result(inst, bits, [self._by_id[e.id] for e in chosen])

    def _component(self, c0: int, seen: bytearray, exclude: frozenset):
        inst = self.instance
        comp_checks = []
        comp_edges: set[int] = set()
        stack = [c0]
        seen[c0] = 1
        while stack:
            c = stack.pop()
            comp_checks.append(c)
            for ei in self.incident[c]:
                if ei in comp_edges or inst.edges[ei].id in exclude:
                    continue
                comp_edges.add(ei)
                for v in inst.edges[ei].vertices:
                    if not seen[v]:
                        seen[v] = 1
                        stack.append(v)
        return sorted(comp_checks), sorted(comp_edges)


def decode_mle(instance: DecodingInstance, syndrome, exclude: frozenset = frozenset()) -> DecodeResult:
    """Exact minimum-weight parity-consistent edge set for the syndrome."""
    return CachedDecoder(instance).decode(syndrome, exclude)


def decode_bruteforce(instance: DecodingInstance, syndrome) -> DecodeResult:
    """Exhaustive scan over all edge subsets; oracle for decode_mle."""
    m = instance.num_edges
    if m > 20:
        raise DecodingError(f"brute force refused for {m} > 20 edges")
    bits = _as_bits(instance, syndrome)
    target = 0
    for i, b in enumerate(bits):
        if b:
            target |= 1 << i
    vmask = [0] * m
    for ei, e in enumerate(instance.edges):
        for v in e.vertices:
            vmask[ei] |= 1 << v

    best_obj = None
    best_ids: tuple[int, ...] | None = None
    best_members: tuple[int, ...] = ()
    if target == 0:
        best_obj, best_ids = 0.0, ()
    cur = 0
    members: set[int] = set()
    prev_gray = 0
    for s in range(1, 1 << m):
        gray = s ^ (s >> 1)
        ei = (gray ^ prev_gray).bit_length() - 1
        prev_gray = gray
        if gray >> ei & 1:
            members.add(ei)
        else:
            members.discard(ei)
        cur ^= vmask[ei]
        if cur == target:
            sel = sorted(members)
            obj = sum(instance.edges[i].weight for i in sel)
            ids = tuple(instance.edges[i].id for i in sel)
            if best_ids is None or _better(obj, ids, best_obj, best_ids):
                best_obj, best_ids, best_members = obj, ids, tuple(sel)
    if best_ids is None:
        flipped = int(np.nonzero(bits)[0][0])
        raise InfeasibleSyndromeError(flipped)
    return _result(instance, bits, [instance.edges[i] for i in best_members])


def verify_solution(instance: DecodingInstance, syndrome, result: DecodeResult) -> list[str]:
    """Check every parity constraint and the recomputed objective; [] if ok."""
    bits = _as_bits(instance, syndrome)
    by_id = {e.id: e for e in instance.edges}
    violations = []
    parity = np.zeros(instance.num_checks, dtype=np.uint8)
    mask = 0
    total = 0.0
    for eid in result.edges:
        e = by_id.get(eid)
        if e is None:
            violations.append(f"edge {eid} not in instance")
            continue
        for v in e.vertices:
            parity[v] ^= 1
        mask ^= e.mask
        total += e.weight
    for i in range(instance.num_checks):
        if parity[i] != bits[i]:
            violations.append(f"check {instance.check_ids[i]} parity violated")
    if abs(total - result.objective) > _TOL * (1.0 + abs(total)):
        violations.append(f"objective mismatch: {total} != {result.objective}")
    if mask != result.mask:
        violations.append(f"logical mask mismatch: {mask} != {result.mask}")
    return violations


def export_lp(instance: DecodingInstance, syndrome) -> str:
    """The decode program in LP text format, for external MIP cross-checks.

    Binary variables select hyperedges; integer slacks absorb even parity.
    """
    bits = _as_bits(instance, syndrome) if instance.num_checks else np.zeros(0, np.uint8)
    lines = ["\\ hypergraph MLE decode instance", "Minimize", " obj:"]
    terms = [f" {e.weight:.12g} x{e.id}" for e in instance.edges]
    if terms:
        lines[-1] = " obj:" + " +".join(terms)
    lines.append("Subject To")
    incident: dict[int, list[int]] = {}
    for e in instance.edges:
        for v in e.vertices:
            incident.setdefault(v, []).append(e.id)
    for i in range(instance.num_checks):
        lhs = " + ".join(f"x{eid}" for eid in incident.get(i, []))
        if lhs:
            lhs += f" - 2 k{i}"
        else:
            lhs = f"- 2 k{i}"
        lines.append(f" c{i}: {lhs} = {int(bits[i])}")
    lines.append("Bounds")
    for i in range(instance.num_checks):
        lines.append(f" k{i} >= 0")
    if instance.edges:
        lines.append("Binaries")
        lines.append(" " + " ".join(f"x{e.id}" for e in instance.edges))
    if instance.num_checks:
        lines.append("Generals")
        lines.append(" " + " ".join(f"k{i}" for i in range(instance.num_checks)))
    lines.append("End")
    return "\n".join(lines) + "\n"
