"""Pauli-frame noise sampling and deterministic error injection.

Errors are propagated in the Heisenberg picture as Pauli frames (phases are
never tracked): a frame is a pair of X/Z bit maps over physical qubits.  Every
measurement slot records whether its outcome is flipped relative to the
noiseless reference run.  Sampling composes precomputed per-event slot
signatures, which is exact because frame propagation is XOR-linear in the
inserted Paulis.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuits import CircuitError
from .surface import LOC_CLASS_CHOICES, PhysicalCircuit

_PAULI_1Q = (1, 2, 3)  # X, Y, Z codes; Y = X and Z components


class NoiseError(CircuitError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    """Uniform circuit noise: depolarizing after gates, flips at init/measure."""

    p: float
    tier: str = "circuit"

    def __post_init__(self):
        if not (0.0 <= self.p < 0.5):
            raise NoiseError(f"noise probability must lie in [0, 0.5), got {self.p}")
        if self.tier not in ("circuit", "phenomenological"):
            raise NoiseError(f"unknown noise tier {self.tier!r}")


@dataclass(frozen=True)
class ErrorEvent:
    """One elementary error mechanism: a specific Pauli at a specific location."""

    id: int
    loc: int
    kind: str  # "g1" | "g2" | "init" | "meas"
    choice: int
    probability: float

    def __post_init__(self):
        if not (0.0 < self.probability < 0.5):
            raise NoiseError(f"event probability must lie in (0, 0.5), got {self.probability}")


@dataclass
class ShotResult:
    """Sampled or injected shot: slot flip bits plus ground-truth logical flips."""

    syndrome: np.ndarray  # uint8 per measurement slot (1 = flipped)
    logical_flips: np.ndarray  # uint8 per tracked observable
    injected: tuple[int, ...] = ()
    check_values: dict | None = None  # filled by compose_checks
    phys: PhysicalCircuit | None = None

    def logical_mask(self) -> int:
        m = 0
        for i, b in enumerate(self.logical_flips):
            if b:
                m |= 1 << i
        return m


def event_offsets(phys: PhysicalCircuit) -> np.ndarray:
    """Prefix offsets assigning dense event ids per (location, Pauli choice)."""
    cache = phys._cache
    if "event_offsets" not in cache:
        counts = np.fromiter(
            (LOC_CLASS_CHOICES[k] for k in phys.loc_kinds), dtype=np.int64, count=phys.num_locations
        )
        offs = np.zeros(phys.num_locations + 1, dtype=np.int64)
        np.cumsum(counts, out=offs[1:])
        cache["event_offsets"] = offs
    return cache["event_offsets"]


def num_events(phys: PhysicalCircuit) -> int:
    return int(event_offsets(phys)[-1])


def _apply_pauli(fx: dict, fz: dict, q: int, code: int) -> None:
    if code & 1:  # X or Y
        fx[q] = fx.get(q, 0) ^ 1
    if code >= 2:  # Y or Z
        fz[q] = fz.get(q, 0) ^ 1


def _apply_event(kind: str, choice: int, op, fx: dict, fz: dict, flips) -> None:
    if kind == "meas":
        flips[op.slot] ^= 1
    elif kind == "g2":
        p1, p2 = divmod(choice + 1, 4)
        c, t = op.qubits
        if p1:
            _apply_pauli(fx, fz, c, p1)
        if p2:
            _apply_pauli(fx, fz, t, p2)
    elif kind == "g1":
        _apply_pauli(fx, fz, op.qubits[0], _PAULI_1Q[choice])
    elif kind == "init":
        # a flipped preparation: |0> init gains X, |+> init gains Z
        q = op.qubits[0]
        _apply_pauli(fx, fz, q, 1 if op.gate == "Z" else 3)
    else:  # pragma: no cover
        raise NoiseError(f"unknown event kind {kind!r}")


def _sweep(phys: PhysicalCircuit, events_at: dict, start: int = 0, flips=None):
    """Propagate a frame through ops[start:], applying events after their op."""
    fx: dict[int, int] = {}
    fz: dict[int, int] = {}
    if flips is None:
        flips = bytearray(phys.num_slots)
    ops = phys.ops
    for i in range(start, len(ops)):
        op = ops[i]
        k = op.kind
        if k == "cnot":
            c, t = op.qubits
            if fx.get(c):
                fx[t] = fx.get(t, 0) ^ 1
            if fz.get(t):
                fz[c] = fz.get(c, 0) ^ 1
        elif k == "g1":
            if op.gate == "H":
                q = op.qubits[0]
                x, z = fx.get(q, 0), fz.get(q, 0)
                if x != z:
                    fx[q], fz[q] = z, x
        elif k == "meas":
            b = 0
            for q, pauli in op.operator:
                b ^= fx.get(q, 0) if pauli == "Z" else fz.get(q, 0)
            if b:
                flips[op.slot] ^= 1
        elif k == "init":
            q = op.qubits[0]
            fx.pop(q, None)
            fz.pop(q, None)
        elif k == "relabel":
            qs, tau = op.qubits, op.aux
            moved = []
            for l, q in enumerate(qs):
                x = fx.pop(q, 0)
                z = fz.pop(q, 0)
                if x or z:
                    moved.append((qs[tau[l]], x, z))
            for q, x, z in moved:
                if x:
                    fx[q] = x
                if z:
                    fz[q] = z
        evs = events_at.get(i)
        if evs:
            for kind, choice in evs:
                _apply_event(kind, choice, op, fx, fz, flips)
    return flips


def _locate_event(phys: PhysicalCircuit, event_id: int) -> tuple[int, str, int]:
    """Map a dense event id to (location, noise class, Pauli choice)."""
    offs = event_offsets(phys)
    if not (0 <= event_id < offs[-1]):
        raise NoiseError(f"unknown event id {event_id}")
    loc = int(np.searchsorted(offs, event_id, side="right")) - 1
    return loc, phys.loc_kinds[loc], event_id - int(offs[loc])


def event_signature(phys: PhysicalCircuit, event_id: int) -> tuple[int, ...]:
    """Slot flips caused by a single event, memoized per physical circuit."""
    cache = phys._cache.setdefault("signatures", {})
    sig = cache.get(event_id)
    if sig is None:
        loc, kind, choice = _locate_event(phys, event_id)
        op_idx = phys.loc_ops[loc]
        flips = _sweep(phys, {op_idx: [(kind, choice)]}, start=op_idx)
        sig = tuple(i for i, b in enumerate(flips) if b)
        cache[event_id] = sig
    return sig


def inject_events(phys: PhysicalCircuit, events) -> ShotResult:
    """Deterministically propagate the listed error events through the circuit.

    ``events`` may contain ErrorEvent objects or bare event ids.
    """
    ids = []
    for ev in events:
        ids.append(ev.id if isinstance(ev, ErrorEvent) else int(ev))
    events_at: dict[int, list] = {}
    for eid in ids:
        loc, kind, choice = _locate_event(phys, eid)
        events_at.setdefault(phys.loc_ops[loc], []).append((kind, choice))
    flips = _sweep(phys, events_at)
    syndrome = np.frombuffer(bytes(flips), dtype=np.uint8).copy()
    logical = syndrome[list(phys.obs_slots)] if phys.obs_slots else np.zeros(0, np.uint8)
    return ShotResult(syndrome=syndrome, logical_flips=logical, injected=tuple(ids), phys=phys)


def sample_shot(phys: PhysicalCircuit, noise: NoiseModel, seed) -> ShotResult:
    """Sample one shot of circuit noise; deterministic in (phys, noise, seed).

    ``seed`` may be an int or a tuple such as (master_seed, shot_index); it
    keys a counter-based generator so shots are order-independent.
    """
    if noise.tier != phys.spec.tier:
        raise NoiseError(f"noise tier {noise.tier!r} != circuit tier {phys.spec.tier!r}")
    rng = np.random.Generator(np.random.Philox(key=seed))
    u = rng.random(phys.num_locations)
    syndrome = np.zeros(phys.num_slots, dtype=np.uint8)
    p = noise.p
    if p > 0.0:
        offs = event_offsets(phys)
        for loc in np.nonzero(u < p)[0]:
            loc = int(loc)
            k = LOC_CLASS_CHOICES[phys.loc_kinds[loc]]
            choice = min(int(u[loc] / p * k), k - 1)
            for s in event_signature(phys, int(offs[loc]) + choice):
                syndrome[s] ^= 1
    logical = syndrome[list(phys.obs_slots)] if phys.obs_slots else np.zeros(0, np.uint8)
    return ShotResult(syndrome=syndrome, logical_flips=logical, injected=(), phys=phys)


# ---------------------------------------------------------------------------
# Check composition


def _check_slot_arrays(phys: PhysicalCircuit, checks) -> list[tuple[int, ...]]:
    key = ("check_slots", id(checks))
    if key not in phys._cache:
        resolved = []
        for chk in checks:
            try:
                resolved.append(tuple(phys.meas_index[ref] for ref in chk.refs))
            except KeyError as e:
                raise NoiseError(
                    f"check {chk.id} references measurement {e.args[0]} absent from the circuit"
                ) from None
        phys._cache[key] = resolved
    return phys._cache[key]


def check_bits(phys: PhysicalCircuit, checks, syndrome: np.ndarray) -> np.ndarray:
    """Vectorized check composition: parity of each check's slot flips."""
    key = ("check_csr", id(checks))
    if key not in phys._cache:
        arrays = _check_slot_arrays(phys, checks)
        idx = np.fromiter((s for a in arrays for s in a), dtype=np.int64)
        bounds = np.zeros(len(arrays) + 1, dtype=np.int64)
        np.cumsum(np.fromiter((len(a) for a in arrays), dtype=np.int64, count=len(arrays)), out=bounds[1:])
        phys._cache[key] = (idx, bounds)
    idx, bounds = phys._cache[key]
    if len(idx) == 0:
        return np.zeros(len(bounds) - 1, dtype=np.uint8)
    vals = syndrome[idx]
    sums = np.add.reduceat(vals.astype(np.int64), bounds[:-1])
    sums[bounds[:-1] == bounds[1:]] = 0  # empty ranges
    return (sums % 2).astype(np.uint8)


def compose_checks(shot: ShotResult, checks) -> dict:
    """Per-check +/-1 values for one shot, keyed (qubit, round, stabilizer)."""
    if shot.phys is None:
        raise NoiseError("shot carries no physical circuit reference")
    bits = check_bits(shot.phys, checks, shot.syndrome)
    values = {}
    for chk, b in zip(checks, bits):
        values[(chk.qubit, chk.round, chk.stab)] = -1 if b else +1
    shot.check_values = values
    return values


# ---------------------------------------------------------------------------
# Shot dump format


def shot_record(index: int, seed, shot: ShotResult) -> str:
    syn = np.packbits(shot.syndrome).tobytes().hex() or "00"
    flips = "".join(str(int(b)) for b in shot.logical_flips) or "-"
    return f"{index} {seed} {syn} {flips}"


def parse_shot_record(line: str, num_slots: int) -> tuple[int, str, np.ndarray, np.ndarray]:
    parts = line.split()
    if len(parts) != 4:
        raise NoiseError(f"malformed shot record: {line!r}")
    index = int(parts[0])
    raw = np.frombuffer(bytes.fromhex(parts[2]), dtype=np.uint8)
    syndrome = np.unpackbits(raw)[:num_slots]
    flips = (
        np.zeros(0, np.uint8)
        if parts[3] == "-"
        else np.fromiter((int(c) for c in parts[3]), dtype=np.uint8)
    )
    return index, parts[1], syndrome, flips
