"""Logical-circuit IR: layer types, validation, text format, built-in examples.

A circuit is a layered sequence of transversal gate layers, syndrome-extraction
rounds, logical measurements and magic-state initialisations on a set of
surface-code logical qubits.  Layers execute in order; one syndrome-extraction
round follows each gate layer in well-formed circuits.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Union

SINGLE_QUBIT_GATES = ("H", "X", "Y", "Z", "S")
MAGIC_KINDS = ("T", "S")
BASES = ("X", "Z")


class CircuitError(ValueError):
    """Raised for structurally invalid circuits."""


class ParseError(CircuitError):
    """Syntax or semantic error in the circuit text format."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class NotSpatiallyWindowable(CircuitError):
    """Block structure violates the inter-block CNOT placement precondition."""


@dataclass(frozen=True)
class Gate:
    kind: str  # one of SINGLE_QUBIT_GATES or "CNOT"
    qubits: tuple[int, ...]

    def __post_init__(self):
        if self.kind == "CNOT":
            if len(self.qubits) != 2:
                raise CircuitError(f"CNOT takes 2 qubits, got {self.qubits}")
            if self.qubits[0] == self.qubits[1]:
                raise CircuitError("CNOT control equals target")
        elif self.kind in SINGLE_QUBIT_GATES:
            if len(self.qubits) != 1:
                raise CircuitError(f"{self.kind} takes 1 qubit, got {self.qubits}")
        else:
            raise CircuitError(f"unknown gate kind {self.kind!r}")


@dataclass(frozen=True)
class TransversalGates:
    gates: tuple[Gate, ...]

    def __post_init__(self):
        seen: set[int] = set()
        for g in self.gates:
            for q in g.qubits:
                if q in seen:
                    raise CircuitError(f"qubit {q} appears twice in one gate layer")
                seen.add(q)

    @property
    def qubits(self) -> frozenset[int]:
        return frozenset(q for g in self.gates for q in g.qubits)


@dataclass(frozen=True)
class SyndromeExtraction:
    pass


@dataclass(frozen=True)
class LogicalMeasurement:
    basis: str
    qubits: tuple[int, ...]

    def __post_init__(self):
        if self.basis not in BASES:
            raise CircuitError(f"measurement basis must be X or Z, got {self.basis!r}")
        if len(set(self.qubits)) != len(self.qubits) or not self.qubits:
            raise CircuitError("measurement qubit list must be non-empty and distinct")


@dataclass(frozen=True)
class MagicInit:
    kind: str  # "T" | "S"
    qubit: int

    def __post_init__(self):
        if self.kind not in MAGIC_KINDS:
            raise CircuitError(f"magic kind must be T or S, got {self.kind!r}")


@dataclass(frozen=True)
class GadgetT:
    """Teleported-T macro: couples data to a T ancilla and an S ancilla.

    Expands to CNOT(data -> T ancilla), a syndrome round, CNOT(data -> S
    ancilla), a syndrome round, then a Z measurement of the T ancilla.  The S
    ancilla's basis-deferred measurement is a later explicit measure layer.
    """

    data: int
    t_ancilla: int
    s_ancilla: int

    def __post_init__(self):
        if len({self.data, self.t_ancilla, self.s_ancilla}) != 3:
            raise CircuitError("gadget_t qubits must be distinct")


Layer = Union[TransversalGates, SyndromeExtraction, LogicalMeasurement, MagicInit, GadgetT]


@dataclass(frozen=True)
class Block:
    name: str
    qubits: tuple[int, ...]


class GadgetUse(NamedTuple):
    """One gadget occurrence, in circuit order."""

    order: int
    data: int
    t_ancilla: int
    s_ancilla: int
    t_measure_round: int  # round index of the T-ancilla logical measurement


class Observable(NamedTuple):
    """A tracked logical measurement outcome."""

    index: int
    qubit: int
    basis: str
    round: int  # number of SE rounds preceding the measurement


@dataclass(frozen=True)
class Timeline:
    """Round-indexed view of a circuit derived from its layer list.

    ``gaps[g]`` holds the gate layers between SE rounds g-1 and g (gap 0 sits
    before the first round, gap ``rounds`` after the last).  Magic inits and
    measurements are located by the gap they fall in.
    """

    rounds: int
    gaps: tuple[tuple[TransversalGates, ...], ...]
    birth: dict[int, tuple[int, str]]  # qubit -> (gap index, "zero"|"T"|"S")
    terminal: dict[int, tuple[int, str]]  # qubit -> (round index, basis)
    observables: tuple[Observable, ...]
    gadgets: tuple[GadgetUse, ...]

    def live_qubits(self, round_index: int) -> list[int]:
        """Qubits participating in SE round ``round_index``."""
        out = []
        for q, (g, _) in self.birth.items():
            if g > round_index:
                continue
            term = self.terminal.get(q)
            if term is not None and term[0] <= round_index:
                continue
            out.append(q)
        return sorted(out)


@dataclass(frozen=True)
class LogicalCircuit:
    num_qubits: int
    distance: int
    layers: tuple[Layer, ...]
    blocks: tuple[Block, ...] = ()

    def __post_init__(self):
        if self.num_qubits < 1:
            raise CircuitError("num_qubits must be >= 1")
        if self.distance < 3 or self.distance % 2 == 0:
            raise CircuitError(f"distance must be odd and >= 3, got {self.distance}")
        if self.blocks:
            covered: set[int] = set()
            for b in self.blocks:
                if covered & set(b.qubits):
                    raise CircuitError(f"block {b.name!r} overlaps another block")
                covered |= set(b.qubits)
            if covered != set(range(self.num_qubits)):
                raise CircuitError("blocks must partition the qubit set")
        timeline(self)  # full structural validation

    @property
    def rounds(self) -> int:
        return sum(1 for l in normalize_layers(self) if isinstance(l, SyndromeExtraction))


def normalize_layers(circuit: LogicalCircuit) -> tuple[Layer, ...]:
    """Expand gadget macros into primitive layers."""
    out: list[Layer] = []
    for layer in circuit.layers:
        if isinstance(layer, GadgetT):
            out.append(TransversalGates((Gate("CNOT", (layer.data, layer.t_ancilla)),)))
            out.append(SyndromeExtraction())
            out.append(TransversalGates((Gate("CNOT", (layer.data, layer.s_ancilla)),)))
            out.append(SyndromeExtraction())
            out.append(LogicalMeasurement("Z", (layer.t_ancilla,)))
        else:
            out.append(layer)
    return tuple(out)


def timeline(circuit: LogicalCircuit) -> Timeline:
    """Validate layer structure and index it by syndrome-extraction round."""
    layers = normalize_layers(circuit)
    n = circuit.num_qubits
    rounds = sum(1 for l in layers if isinstance(l, SyndromeExtraction))

    gaps: list[list[TransversalGates]] = [[] for _ in range(rounds + 1)]
    birth: dict[int, tuple[int, str]] = {}
    terminal: dict[int, tuple[int, str]] = {}
    observables: list[Observable] = []
    magic_seen: dict[int, str] = {}
    touched: set[int] = set()
    last_gate_gap: dict[int, int] = {}

    # Track gadget uses against the original (un-normalised) layer list.
    gadget_layers = [l for l in circuit.layers if isinstance(l, GadgetT)]

    gap = 0
    for layer in layers:
        if isinstance(layer, SyndromeExtraction):
            gap += 1
            continue
        if isinstance(layer, TransversalGates):
            for q in layer.qubits:
                if q < 0 or q >= n:
                    raise CircuitError(f"qubit {q} out of range [0, {n})")
                if q in terminal:
                    raise CircuitError(f"qubit {q} used after its measurement")
                last_gate_gap[q] = gap
                touched.add(q)
            gaps[gap].append(layer)
        elif isinstance(layer, MagicInit):
            q = layer.qubit
            if q < 0 or q >= n:
                raise CircuitError(f"qubit {q} out of range [0, {n})")
            if q in touched or q in magic_seen:
                raise CircuitError(f"minit on already-used qubit {q}")
            magic_seen[q] = layer.kind
            birth[q] = (gap, layer.kind)
        elif isinstance(layer, LogicalMeasurement):
            for q in layer.qubits:
                if q < 0 or q >= n:
                    raise CircuitError(f"qubit {q} out of range [0, {n})")
                if q in terminal:
                    raise CircuitError(f"qubit {q} measured twice")
                if q in last_gate_gap and last_gate_gap[q] >= gap:
                    raise CircuitError(
                        f"qubit {q}: gate layer not followed by syndrome extraction "
                        "before its measurement"
                    )
                terminal[q] = (gap, layer.basis)
                observables.append(Observable(len(observables), q, layer.basis, gap))
        else:  # pragma: no cover - normalize removed gadgets
            raise CircuitError(f"unexpected layer {layer!r}")

    for q in range(n):
        if q not in birth:
            birth[q] = (0, "zero")
        bg, kind = birth[q]
        if kind == "zero":
            continue
        # Magic patches must not be touched before their init layer.  Gate use
        # before birth shows up as a gate gap smaller than the birth gap only
        # when the init appears later in the same gap; catch ordering by layer
        # scan above (touched check).

    gadgets = []
    # T-ancilla measurement round: the gadget macro measures t after 2 SE rounds.
    order = 0
    for g in gadget_layers:
        if magic_seen.get(g.t_ancilla) != "T":
            raise CircuitError(f"gadget_t: qubit {g.t_ancilla} is not a T magic patch")
        if magic_seen.get(g.s_ancilla) != "S":
            raise CircuitError(f"gadget_t: qubit {g.s_ancilla} is not an S magic patch")
        t_round = terminal[g.t_ancilla][0]
        gadgets.append(GadgetUse(order, g.data, g.t_ancilla, g.s_ancilla, t_round))
        order += 1

    return Timeline(
        rounds=rounds,
        gaps=tuple(tuple(g) for g in gaps),
        birth=birth,
        terminal=terminal,
        observables=tuple(observables),
        gadgets=tuple(gadgets),
    )


# ---------------------------------------------------------------------------
# Text format


def serialize_circuit(circuit: LogicalCircuit) -> str:
    lines = [f"qubits {circuit.num_qubits}", f"distance {circuit.distance}"]
    for b in circuit.blocks:
        lines.append("block " + b.name + " " + " ".join(str(q) for q in b.qubits))
    for layer in circuit.layers:
        if isinstance(layer, SyndromeExtraction):
            lines.append("se")
        elif isinstance(layer, TransversalGates):
            parts = []
            for g in layer.gates:
                parts.append(g.kind + " " + " ".join(str(q) for q in g.qubits))
            lines.append("layer " + " ".join(parts))
        elif isinstance(layer, LogicalMeasurement):
            lines.append(f"measure {layer.basis} " + " ".join(str(q) for q in layer.qubits))
        elif isinstance(layer, MagicInit):
            lines.append(f"minit {layer.kind} {layer.qubit}")
        elif isinstance(layer, GadgetT):
            lines.append(f"gadget_t {layer.data} {layer.t_ancilla} {layer.s_ancilla}")
        else:  # pragma: no cover
            raise CircuitError(f"cannot serialize layer {layer!r}")
    return "\n".join(lines) + "\n"


def _parse_int(tok: str, line_no: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(line_no, f"expected integer {what}, got {tok!r}") from None


def _parse_layer_tokens(tokens: list[str], line_no: int) -> TransversalGates:
    gates: list[Gate] = []
    i = 0
    while i < len(tokens):
        kind = tokens[i]
        i += 1
        if kind == "CNOT":
            args = []
            while i < len(tokens) and tokens[i].lstrip("-").isdigit():
                args.append(_parse_int(tokens[i], line_no, "qubit"))
                i += 1
            if not args or len(args) % 2 != 0:
                raise ParseError(line_no, "CNOT takes pairs of qubits")
            for c, t in zip(args[::2], args[1::2]):
                if c == t:
                    raise ParseError(line_no, "control equals target")
                gates.append(Gate("CNOT", (c, t)))
        elif kind in ("H", "X", "Y", "Z"):
            args = []
            while i < len(tokens) and tokens[i].lstrip("-").isdigit():
                args.append(_parse_int(tokens[i], line_no, "qubit"))
                i += 1
            if not args:
                raise ParseError(line_no, f"{kind} needs at least one qubit")
            gates.extend(Gate(kind, (q,)) for q in args)
        else:
            raise ParseError(line_no, f"unknown gate {kind!r}")
    try:
        return TransversalGates(tuple(gates))
    except CircuitError as e:
        raise ParseError(line_no, str(e)) from None


def parse_circuit(text: str) -> LogicalCircuit:
    """Parse the line-oriented circuit format into a validated LogicalCircuit."""
    num_qubits = None
    distance = None
    blocks: list[Block] = []
    layers: list[Layer] = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        directive, args = tokens[0], tokens[1:]
        if directive == "qubits":
            if len(args) != 1:
                raise ParseError(line_no, "qubits takes one argument")
            num_qubits = _parse_int(args[0], line_no, "count")
        elif directive == "distance":
            if len(args) != 1:
                raise ParseError(line_no, "distance takes one argument")
            distance = _parse_int(args[0], line_no, "distance")
        elif directive == "block":
            if len(args) < 2:
                raise ParseError(line_no, "block takes a name and at least one qubit")
            blocks.append(Block(args[0], tuple(_parse_int(a, line_no, "qubit") for a in args[1:])))
        elif directive == "layer":
            if not args:
                raise ParseError(line_no, "empty layer")
            layers.append(_parse_layer_tokens(args, line_no))
        elif directive == "se":
            if args:
                raise ParseError(line_no, "se takes no arguments")
            layers.append(SyndromeExtraction())
        elif directive == "measure":
            if len(args) < 2 or args[0] not in BASES:
                raise ParseError(line_no, "measure takes a basis (X|Z) and qubits")
            layers.append(
                LogicalMeasurement(args[0], tuple(_parse_int(a, line_no, "qubit") for a in args[1:]))
            )
        elif directive == "minit":
            if len(args) != 2 or args[0] not in MAGIC_KINDS:
                raise ParseError(line_no, "minit takes a kind (T|S) and a qubit")
            layers.append(MagicInit(args[0], _parse_int(args[1], line_no, "qubit")))
        elif directive == "gadget_t":
            if len(args) != 3:
                raise ParseError(line_no, "gadget_t takes data, T-ancilla, S-ancilla")
            layers.append(GadgetT(*(_parse_int(a, line_no, "qubit") for a in args)))
        else:
            raise ParseError(line_no, f"unknown directive {directive!r}")

    if num_qubits is None:
        raise ParseError(0, "missing 'qubits' directive")
    if distance is None:
        raise ParseError(0, "missing 'distance' directive")
    try:
        return LogicalCircuit(num_qubits, distance, tuple(layers), tuple(blocks))
    except ParseError:
        raise
    except CircuitError as e:
        raise ParseError(0, str(e)) from None


# ---------------------------------------------------------------------------
# Built-in examples


def builtin_example(name: str, d: int) -> LogicalCircuit:
    """Construct one of the two reference circuits at distance ``d``.

    ``fig6a``: two logical qubits, 3(d+1)/2 alternating CNOT and single-qubit
    Clifford layers, one SE round per layer, terminal Z measurement.

    ``fig6b``: five logical qubits in five single-qubit blocks joined by
    transversal CNOTs only in the first and last of its (d+1)/2 gate layers.
    """
    if d % 2 == 0 or d < 3:
        raise CircuitError(f"distance must be odd and >= 3, got {d}")
    if name == "fig6a":
        depth = 3 * (d + 1) // 2
        layers: list[Layer] = []
        cnot_flip = False
        for t in range(depth):
            if t % 2 == 0:
                pair = (1, 0) if cnot_flip else (0, 1)
                layers.append(TransversalGates((Gate("CNOT", pair),)))
                cnot_flip = not cnot_flip
            else:
                layers.append(TransversalGates((Gate("H", (0,)), Gate("H", (1,)))))
            layers.append(SyndromeExtraction())
        layers.append(LogicalMeasurement("Z", (0, 1)))
        return LogicalCircuit(2, d, tuple(layers))
    if name == "fig6b":
        depth = (d + 1) // 2
        layers = []
        for t in range(depth):
            if t == 0:
                gates = (Gate("CNOT", (0, 1)), Gate("CNOT", (2, 3)))
            elif t == depth - 1:
                gates = (Gate("CNOT", (1, 2)), Gate("CNOT", (3, 4)))
            else:
                gates = tuple(Gate("H", (q,)) for q in range(5))
            layers.append(TransversalGates(gates))
            layers.append(SyndromeExtraction())
        layers.append(LogicalMeasurement("Z", (0, 1, 2, 3, 4)))
        blocks = tuple(Block(f"b{i}", (i,)) for i in range(5))
        return LogicalCircuit(5, d, tuple(layers), blocks)
    raise CircuitError(f"unknown built-in example {name!r}")


# ---------------------------------------------------------------------------
# Block partitioning


def block_partition(circuit: LogicalCircuit) -> tuple[Block, ...]:
    """Return declared blocks (or one covering block) after verifying that
    inter-block CNOTs sit only at the first/last gate layer of each block's span."""
    if not circuit.blocks:
        return (Block("all", tuple(range(circuit.num_qubits))),)

    block_of = {}
    for b in circuit.blocks:
        for q in b.qubits:
            block_of[q] = b.name

    gate_layers = [l for l in normalize_layers(circuit) if isinstance(l, TransversalGates)]
    span: dict[str, list[int]] = {}
    for t, layer in enumerate(gate_layers):
        for q in layer.qubits:
            name = block_of[q]
            if name not in span:
                span[name] = [t, t]
            else:
                span[name][1] = t

    for t, layer in enumerate(gate_layers):
        for g in layer.gates:
            if g.kind != "CNOT":
                continue
            bc, bt = block_of[g.qubits[0]], block_of[g.qubits[1]]
            if bc == bt:
                continue
            for name in (bc, bt):
                lo, hi = span[name]
                if t not in (lo, hi):
                    raise NotSpatiallyWindowable(
                        f"not spatially windowable: CNOT between blocks {bc!r} and {bt!r} "
                        f"in interior gate layer {t} of block {name!r} (span {lo}..{hi})"
                    )
    return circuit.blocks
