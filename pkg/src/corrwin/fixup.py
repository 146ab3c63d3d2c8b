"""Classical control for delayed non-Clifford fixups.

The controller chooses each S-ancilla measurement basis from the committed
T-ancilla outcome and the data qubit's Pauli frame, resolves chains of
non-commuting gadgets in order, and folds teleportation byproducts into the
frame.  Conventions fixed here (outcome -1 <-> bit 1; the Z recorded at a
Z-basis choice) are normative for this package and are pinned by the
end-to-end Pauli-level tests.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .circuits import CircuitError, LogicalCircuit, timeline


class FixupError(CircuitError):
    pass


class PrematureFeedbackError(FixupError):
    """Feedback consumed a measurement outcome that has not been committed."""


@dataclass
class FrameState:
    """Pending Pauli corrections per logical qubit (phase-free)."""

    x: dict[int, int] = field(default_factory=dict)
    z: dict[int, int] = field(default_factory=dict)

    def copy(self) -> "FrameState":
        return FrameState(dict(self.x), dict(self.z))

    def x_bit(self, qubit: int) -> int:
        return self.x.get(qubit, 0)

    def z_bit(self, qubit: int) -> int:
        return self.z.get(qubit, 0)

    def flip_x(self, qubit: int) -> None:
        self.x[qubit] = self.x.get(qubit, 0) ^ 1

    def flip_z(self, qubit: int) -> None:
        self.z[qubit] = self.z.get(qubit, 0) ^ 1

    def compose(self, other: "FrameState") -> "FrameState":
        out = self.copy()
        for q, b in other.x.items():
            if b:
                out.flip_x(q)
        for q, b in other.z.items():
            if b:
                out.flip_z(q)
        return out

    def pauli_label(self, qubit: int) -> str:
        x, z = self.x_bit(qubit), self.z_bit(qubit)
        return ("I", "X", "Z", "Y")[x + 2 * z]

    def _key(self):
        return (
            frozenset(q for q, b in self.x.items() if b),
            frozenset(q for q, b in self.z.items() if b),
        )

    def __eq__(self, other):
        if not isinstance(other, FrameState):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):  # pragma: no cover - dict fields, used in tests only
        return hash(self._key())


@dataclass(frozen=True)
class GadgetRecord:
    """One teleported-T gadget awaiting its deferred S-basis decision."""

    gadget_id: int
    data: int
    t_measure: tuple[int, int]  # (qubit, round) coordinate of the T measurement
    s_ancilla: int
    order: int


def gadget_records(circuit: LogicalCircuit) -> tuple[GadgetRecord, ...]:
    line = timeline(circuit)
    return tuple(
        GadgetRecord(g.order, g.data, (g.t_ancilla, g.t_measure_round), g.s_ancilla, g.order)
        for g in line.gadgets
    )


def choose_basis(
    gadget: GadgetRecord,
    committed_t_outcome: int,
    frame: FrameState,
    committed: bool = True,
) -> tuple[str, FrameState]:
    """Pick the S-ancilla basis for one gadget and update the frame.

    A pending X on the data qubit flips the effective T outcome (conjugating
    the teleported gate into its inverse), so the fixup decision XORs it in.
    Choosing the Z basis applies the S fixup up to a Pauli Z, recorded now;
    the outcome-dependent part arrives via ``process_s_measurement``.
    """
    if not committed:
        raise PrematureFeedbackError(
            f"gadget {gadget.gadget_id}: premature feedback, T outcome not committed"
        )
    if committed_t_outcome not in (0, 1):
        raise FixupError("outcome must be a bit")
    effective = committed_t_outcome ^ frame.x_bit(gadget.data)
    out = frame.copy()
    if effective:
        out.flip_z(gadget.data)
        return "Z", out
    return "X", out


def process_s_measurement(
    gadget: GadgetRecord, basis: str, outcome: int, frame: FrameState
) -> FrameState:
    """Fold the S-ancilla readout byproduct into the frame.

    X-basis readout leaves a Z for outcome bit 1.  Z-basis readout lands on
    the branch completing the pre-recorded Z when the bit is 0, so the extra
    Z applies on the complementary bit.
    """
    if basis not in ("X", "Z"):
        raise FixupError(f"basis must be X or Z, got {basis!r}")
    if outcome not in (0, 1):
        raise FixupError("outcome must be a bit")
    out = frame.copy()
    flip = outcome if basis == "X" else outcome ^ 1
    if flip:
        out.flip_z(gadget.data)
    return out


def sequential_resolution(
    gadgets: Sequence[GadgetRecord],
    outcomes: Iterable[tuple[int, int]],
    frame: FrameState | None = None,
) -> tuple[list[tuple[int, str]], FrameState]:
    """Fold choose_basis over an ordered gadget chain.

    ``outcomes`` yields (order index, committed T outcome bit) and must follow
    the gadget ordering exactly; a violation names the offending index.
    """
    ordered = sorted(gadgets, key=lambda g: g.order)
    frame = FrameState() if frame is None else frame.copy()
    choices: list[tuple[int, str]] = []
    expected = iter(ordered)
    for order, bit in outcomes:
        g = next(expected, None)
        if g is None or g.order != order:
            raise FixupError(f"out-of-order outcome for gadget index {order}")
        basis, frame = choose_basis(g, bit, frame)
        choices.append((g.gadget_id, basis))
    remaining = next(expected, None)
    if remaining is not None:
        raise FixupError(f"missing outcome for gadget index {remaining.order}")
    return choices, frame


def teleport_recovery(bell_outcomes: Sequence[tuple[int, int]]) -> FrameState:
    """Recovery operator for teleported qubits from (m_x, m_z) outcome pairs.

    Qubit q needs X^(m_z) Z^(m_x); the result is returned as a frame update.
    """
    frame = FrameState()
    for q, (m_x, m_z) in enumerate(bell_outcomes):
        if m_x not in (0, 1) or m_z not in (0, 1):
            raise FixupError("bell outcomes must be bits")
        if m_z:
            frame.flip_x(q)
        if m_x:
            frame.flip_z(q)
    return frame


def decision_log_line(
    gadget: GadgetRecord, outcome: int, before: FrameState, basis: str, after: FrameState
) -> str:
    """One line of the controller event log."""
    return (
        f"gadget={gadget.gadget_id} outcome={outcome} "
        f"frame_before={before.pauli_label(gadget.data)} basis={basis} "
        f"frame_after={after.pauli_label(gadget.data)}"
    )
