"""Monte Carlo experiment runner: sampling, paired decoding, CSV/JSON output.

Per-shot generators are derived from (master seed, shot index), so results are
byte-identical for any worker count.  Failure counting follows the
any-logical-qubit rule: a shot fails when the decoder's logical correction
mask differs from the ground-truth flips on any tracked observable.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from dataclasses import asdict, dataclass, replace

import numpy as np

from .circuits import CircuitError, LogicalCircuit, builtin_example, parse_circuit
from .decoders import CachedDecoder, InfeasibleSyndromeError
from .hypergraph import DecodingHypergraph, build_hypergraph
from .noise import NoiseModel, check_bits, sample_shot
from .surface import SurfaceCodeSpec, expand_to_physical
from .windows import (
    ResidualSyndromeError,
    WindowRunner,
    plan_spatial_feedforward,
    plan_spatial_parallel,
    plan_temporal,
)

MODES = ("none", "temporal", "spatial-ff", "spatial-parallel")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    circuit: str  # built-in name (fig6a, fig6b) or a DSL file path
    d: tuple[int, ...] = (3,)
    p: tuple[float, ...] = (1e-3,)
    shots: int | None = None
    min_failures: int | None = None
    mode: str = "none"
    tier: str = "circuit"
    seed: int = 0
    workers: int = 1
    batch: int = 4096
    max_shots: int = 5_000_000
    timing: bool = False

    def __post_init__(self):
        object.__setattr__(self, "d", tuple(self.d))
        object.__setattr__(self, "p", tuple(self.p))
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.tier not in ("circuit", "phenomenological"):
            raise ConfigError(f"unknown tier {self.tier!r}")
        if self.shots is None and self.min_failures is None:
            raise ConfigError("set shots or min_failures")
        if self.shots is not None and self.shots < 1:
            raise ConfigError("shots must be >= 1")
        if self.min_failures is not None and self.min_failures < 1:
            raise ConfigError("min_failures must be >= 1")
        for p in self.p:
            if not (0.0 <= p < 0.5):
                raise ConfigError(f"p must lie in [0, 0.5), got {p}")
        for d in self.d:
            if d < 3 or d % 2 == 0:
                raise ConfigError(f"d must be odd and >= 3, got {d}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


@dataclass(frozen=True)
class ResultRow:
    circuit: str
    d: int
    p: float
    mode: str
    shots: int
    failures: int
    p_fail: float
    stderr: float
    seconds: float

    @staticmethod
    def build(circuit, d, p, mode, shots, failures, seconds=0.0) -> "ResultRow":
        p_fail = failures / shots if shots else 0.0
        err = math.sqrt(p_fail * (1 - p_fail) / shots) if shots else 0.0
        return ResultRow(circuit, d, p, mode, shots, failures, p_fail, err, seconds)


@dataclass(frozen=True)
class RatioRow:
    circuit: str
    d: int
    p: float
    mode: str
    shots: int
    failures_windowed: int
    failures_unwindowed: int
    ratio: float
    stderr: float
    seconds: float

    @staticmethod
    def build(circuit, d, p, mode, shots, fw, fu, seconds=0.0) -> "RatioRow":
        if fu == 0:
            ratio = 1.0 if fw == 0 else float("inf")
            err = 0.0
        else:
            ratio = fw / fu
            err = ratio * math.sqrt((1 / fw if fw else 0.0) + 1 / fu)
        return RatioRow(circuit, d, p, mode, shots, fw, fu, ratio, err, seconds)


def load_circuit(config: ExperimentConfig, d: int) -> LogicalCircuit:
    if config.circuit in ("fig6a", "fig6b"):
        return builtin_example(config.circuit, d)
    if not os.path.exists(config.circuit):
        raise ConfigError(f"circuit {config.circuit!r} is neither built-in nor a file")
    with open(config.circuit, "r", encoding="utf-8") as f:
        circ = parse_circuit(f.read())
    if circ.distance != d:
        raise ConfigError(
            f"circuit file distance {circ.distance} does not match requested d={d}"
        )
    return circ


def _make_plan(circuit: LogicalCircuit, d: int, mode: str):
    if mode == "temporal":
        return plan_temporal(circuit, d)
    if mode == "spatial-ff":
        return plan_spatial_feedforward(circuit, d)
    if mode == "spatial-parallel":
        return plan_spatial_parallel(circuit, d)
    return None


class ShotPipeline:
    """Everything needed to sample and decode shots for one (d, p) point."""

    def __init__(self, config: ExperimentConfig, d: int, p: float, modes: tuple[str, ...]):
        self.config = config
        self.modes = modes
        self.circuit = load_circuit(config, d)
        self.spec = SurfaceCodeSpec(distance=d, tier=config.tier)
        self.phys = expand_to_physical(self.circuit, self.spec)
        self.noise = NoiseModel(p=p, tier=config.tier)
        self.graph: DecodingHypergraph | None = None
        self.decoders = {}
        if p > 0.0:
            base = build_hypergraph(self.phys, NoiseModel(p=p, tier=config.tier))
            self.graph = base
            for mode in modes:
                if mode == "none":
                    self.decoders[mode] = CachedDecoder(self.graph.to_instance())
                else:
                    plan = _make_plan(self.circuit, d, mode)
                    self.decoders[mode] = WindowRunner(self.graph, plan)

    def eval_shot(self, index: int) -> dict[str, bool]:
        """Decode one shot in every mode; True marks a logical failure."""
        shot = sample_shot(self.phys, self.noise, (self.config.seed, index))
        out = {}
        if self.graph is None:  # p = 0: nothing to decode
            truth = shot.logical_mask()
            for mode in self.modes:
                out[mode] = truth != 0
            return out
        bits = check_bits(self.phys, self.graph.checks, shot.syndrome)
        truth = shot.logical_mask()
        for mode in self.modes:
            dec = self.decoders[mode]
            try:
                if mode == "none":
                    res = dec.decode(bits)
                else:
                    res = dec.decode(bits)
                out[mode] = res.mask != truth
            except (InfeasibleSyndromeError, ResidualSyndromeError):
                out[mode] = True  # failed-to-explain counts as failure
        return out


_WORKER_PIPELINE: ShotPipeline | None = None


def _worker_init(pipeline):
    global _WORKER_PIPELINE
    _WORKER_PIPELINE = pipeline


def _worker_range(args) -> list[int]:
    start, end = args
    pipe = _WORKER_PIPELINE
    counts = [0] * len(pipe.modes)
    for i in range(start, end):
        res = pipe.eval_shot(i)
        for j, mode in enumerate(pipe.modes):
            if res[mode]:
                counts[j] += 1
    return counts


def _run_point(pipeline: ShotPipeline) -> tuple[int, dict[str, int]]:
    """Sample until the stop rule is met; deterministic in (config, modes)."""
    config = pipeline.config
    counts = {m: 0 for m in pipeline.modes}
    done = 0

    def stop() -> bool:
        if config.shots is not None and done >= config.shots:
            return True
        if config.min_failures is not None and done >= config.max_shots:
            return True
        if config.min_failures is not None and all(
            c >= config.min_failures for c in counts.values()
        ):
            return True
        return False

    pool = None
    try:
        if config.workers > 1:
            import multiprocessing as mp

            # fork inherits the pipeline through this module-level global,
            # avoiding a pickle round-trip of the whole decoding context
            _worker_init(pipeline)
            ctx = mp.get_context("fork")
            pool = ctx.Pool(config.workers)
        while not stop():
            if config.shots is not None:
                batch = min(config.batch, config.shots - done)
            else:
                batch = config.batch
            ranges = []
            per = -(-batch // config.workers)
            for w in range(config.workers):
                lo = done + w * per
                hi = min(done + batch, lo + per)
                if lo < hi:
                    ranges.append((lo, hi))
            if pool is not None:
                results = pool.map(_worker_range, ranges)
            else:
                _worker_init(pipeline)
                results = [_worker_range(r) for r in ranges]
            for res in results:
                for j, mode in enumerate(pipeline.modes):
                    counts[mode] += res[j]
            done += batch
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    return done, counts


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """Failure rates for every (d, p) of the configured circuit and mode."""
    rows = []
    for d in config.d:
        for p in config.p:
            t0 = time.monotonic()
            pipeline = ShotPipeline(config, d, p, (config.mode,))
            shots, counts = _run_point(pipeline)
            dt = time.monotonic() - t0 if config.timing else 0.0
            rows.append(
                ResultRow.build(config.circuit, d, p, config.mode, shots, counts[config.mode], dt)
            )
    rows.sort(key=lambda r: (r.d, r.p, r.mode))
    return rows


def compare_windowed(config: ExperimentConfig) -> list[RatioRow]:
    """Windowed vs unwindowed failure ratio on identical shot streams."""
    if config.mode == "none":
        raise ConfigError("compare_windowed needs a windowed mode")
    rows = []
    for d in config.d:
        for p in config.p:
            t0 = time.monotonic()
            pipeline = ShotPipeline(config, d, p, (config.mode, "none"))
            shots, counts = _run_point(pipeline)
            dt = time.monotonic() - t0 if config.timing else 0.0
            rows.append(
                RatioRow.build(
                    config.circuit, d, p, config.mode, shots, counts[config.mode], counts["none"], dt
                )
            )
    rows.sort(key=lambda r: (r.d, r.p, r.mode))
    return rows


# ---------------------------------------------------------------------------
# Output


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".10g")
    return str(x)


def render_rows(rows, fmt: str) -> str:
    if not rows:
        raise ConfigError("no rows to emit")
    fields = list(asdict(rows[0]).keys())
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(fields)
        for row in rows:
            writer.writerow([_fmt(v) for v in asdict(row).values()])
        return buf.getvalue()
    if fmt == "json":
        return json.dumps([asdict(r) for r in rows], indent=2, default=str) + "\n"
    raise ConfigError(f"unknown format {fmt!r}")


def emit_results(rows, fmt: str, path: str) -> None:
    text = render_rows(rows, fmt)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def load_config(source) -> ExperimentConfig:
    """Build an ExperimentConfig from a JSON file path or a mapping."""
    if isinstance(source, str):
        try:
            with open(source, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {source!r}: {e}") from None
    else:
        data = dict(source)
    allowed = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "d" in data and isinstance(data["d"], (int, float)):
        data["d"] = [int(data["d"])]
    if "p" in data and isinstance(data["p"], (int, float)):
        data["p"] = [float(data["p"])]
    try:
        return ExperimentConfig(**data)
    except TypeError as e:
        raise ConfigError(str(e)) from None
