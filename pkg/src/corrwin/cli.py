"""Command-line interface: simulate | decode | plan | experiment | compare | estimate.

Exit codes: 0 success, 2 configuration/usage error, 3 decode infeasibility.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .circuits import CircuitError, builtin_example, parse_circuit
from .decoders import InfeasibleSyndromeError, decode_mle, export_lp
from .estimator import FactoryModelConfig, PlatformParams, factory_space_model, report
from .harness import (
    ConfigError,
    ExperimentConfig,
    compare_windowed,
    emit_results,
    load_circuit,
    load_config,
    render_rows,
    run_experiment,
)
from .hypergraph import build_hypergraph, dump_hypergraph, parse_hypergraph_dump
from .noise import NoiseModel, sample_shot, shot_record
from .surface import SurfaceCodeSpec, expand_to_physical
from .windows import (
    ResidualSyndromeError,
    plan_spatial_feedforward,
    plan_spatial_parallel,
    plan_temporal,
    plan_to_text,
)


def _load_circuit_arg(name: str, d: int):
    if name in ("fig6a", "fig6b"):
        return builtin_example(name, d)
    with open(name, "r", encoding="utf-8") as f:
        return parse_circuit(f.read())


def _cmd_simulate(args) -> int:
    circ = _load_circuit_arg(args.circuit, args.d)
    spec = SurfaceCodeSpec(distance=circ.distance, tier=args.tier)
    phys = expand_to_physical(circ, spec)
    noise = NoiseModel(p=args.p, tier=args.tier)
    lines = []
    for i in range(args.shots):
        shot = sample_shot(phys, noise, (args.seed, i))
        lines.append(shot_record(i, f"{args.seed}:{i}", shot))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_graph(args) -> int:
    circ = _load_circuit_arg(args.circuit, args.d)
    spec = SurfaceCodeSpec(distance=circ.distance, tier=args.tier)
    phys = expand_to_physical(circ, spec)
    graph = build_hypergraph(phys, NoiseModel(p=args.p, tier=args.tier))
    text = dump_hypergraph(graph)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_decode(args) -> int:
    with open(args.graph, "r", encoding="utf-8") as f:
        instance = parse_hypergraph_dump(f.read())
    with open(args.syndrome, "r", encoding="utf-8") as f:
        raw = "".join(f.read().split())
    if len(raw) != instance.num_checks or set(raw) - {"0", "1"}:
        raise ConfigError(
            f"syndrome must be a 01-string of length {instance.num_checks}"
        )
    bits = np.fromiter((int(c) for c in raw), dtype=np.uint8)
    if args.lp:
        sys.stdout.write(export_lp(instance, bits))
        return 0
    res = decode_mle(instance, bits)
    record = {
        "edges": list(res.edges),
        "objective": res.objective,
        "mask": res.mask,
        "residual_zero": bool(res.ok),
    }
    sys.stdout.write(json.dumps(record) + "\n")
    return 0


def _cmd_plan(args) -> int:
    circ = _load_circuit_arg(args.circuit, args.d)
    if args.mode == "temporal":
        plan = plan_temporal(circ, circ.distance)
    elif args.mode == "spatial-ff":
        plan = plan_spatial_feedforward(circ, circ.distance)
    elif args.mode == "spatial-parallel":
        plan = plan_spatial_parallel(circ, circ.distance)
    else:
        raise ConfigError(f"unknown plan mode {args.mode!r}")
    sys.stdout.write(plan_to_text(plan))
    return 0


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    from dataclasses import replace

    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.workers is not None:
        kw["workers"] = args.workers
    return replace(config, **kw) if kw else config


def _cmd_experiment(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    rows = run_experiment(config)
    if args.out:
        emit_results(rows, args.format, args.out)
    else:
        sys.stdout.write(render_rows(rows, args.format))
    return 0


def _cmd_compare(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    rows = compare_windowed(config)
    if args.out:
        emit_results(rows, args.format, args.out)
    else:
        sys.stdout.write(render_rows(rows, args.format))
    return 0


def _cmd_estimate(args) -> int:
    params = PlatformParams(gamma=args.gamma, eta=args.eta, d=args.d, p=args.p, p_th=args.pth)
    if args.model:
        with open(args.model, "r", encoding="utf-8") as f:
            cfg = FactoryModelConfig(**json.load(f))
    else:
        cfg = None
    sys.stdout.write(report(params))
    if args.json:
        fm = factory_space_model(params, cfg)
        payload = {k: float(v) if not isinstance(v, bool) else v for k, v in fm.items()}
        sys.stdout.write(json.dumps(payload) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="corrwin", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="sample shots and write a shot dump")
    sim.add_argument("--circuit", required=True)
    sim.add_argument("--d", type=int, default=3)
    sim.add_argument("--p", type=float, required=True)
    sim.add_argument("--shots", type=int, required=True)
    sim.add_argument("--tier", default="circuit")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out")
    sim.set_defaults(func=_cmd_simulate)

    gr = sub.add_parser("graph", help="build and dump the decoding hypergraph")
    gr.add_argument("--circuit", required=True)
    gr.add_argument("--d", type=int, default=3)
    gr.add_argument("--p", type=float, required=True)
    gr.add_argument("--tier", default="circuit")
    gr.add_argument("--out")
    gr.set_defaults(func=_cmd_graph)

    dec = sub.add_parser("decode", help="decode a hypergraph dump + syndrome file")
    dec.add_argument("--graph", required=True)
    dec.add_argument("--syndrome", required=True)
    dec.add_argument("--lp", action="store_true", help="emit the LP program instead")
    dec.set_defaults(func=_cmd_decode)

    pl = sub.add_parser("plan", help="print a window plan")
    pl.add_argument("--circuit", required=True)
    pl.add_argument("--d", type=int, default=3)
    pl.add_argument("--mode", required=True)
    pl.set_defaults(func=_cmd_plan)

    for name, fn in (("experiment", _cmd_experiment), ("compare", _cmd_compare)):
        ex = sub.add_parser(name, help=f"run the {name} defined by a config file")
        ex.add_argument("--config", required=True)
        ex.add_argument("--seed", type=int, default=None)
        ex.add_argument("--workers", type=int, default=None)
        ex.add_argument("--out")
        ex.add_argument("--format", choices=("csv", "json"), default="csv")
        ex.set_defaults(func=fn)

    est = sub.add_parser("estimate", help="platform timing/space report")
    est.add_argument("--gamma", type=float, required=True)
    est.add_argument("--eta", type=float, required=True)
    est.add_argument("--d", type=int, default=27)
    est.add_argument("--p", type=float, default=1e-3)
    est.add_argument("--pth", type=float, default=1e-2)
    est.add_argument("--model", help="JSON file with factory model overrides")
    est.add_argument("--json", action="store_true")
    est.set_defaults(func=_cmd_estimate)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (ConfigError, CircuitError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (InfeasibleSyndromeError, ResidualSyndromeError) as e:
        print(f"decode infeasible: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
