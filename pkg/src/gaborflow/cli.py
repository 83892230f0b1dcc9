"""Command-line entry point: ``gaborflow <command> <config> [options]``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .deformation import DeformationPair, deformation_report
from .experiment import (
    HypothesisViolation,
    build_grid,
    build_nodes,
    build_spec,
    build_window,
    emit,
    format_number,
    measure_bounds,
    prepare,
    report_t0,
    run_deformation_experiment,
    steps_for,
    evolve_window,
    uniform_bounds,
)
from .flow import flow_set, gronwall_defect
from .frames import GaborSystem
from .grid import gaussian_window, stft_full

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SLICE_FAILED = 3
EXIT_NOT_A_FRAME = 4


def _out_dir(args: argparse.Namespace, cfg: ExperimentConfig) -> Path:
    out = Path(args.out if args.out is not None else cfg["output"]["directory"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _say(args: argparse.Namespace, text: str) -> None:
    if not args.quiet:
        print(text)


def _write_json(path: Path, payload: dict) -> None:
    path.write_bytes((json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8"))


def cmd_evolve(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    records = run_deformation_experiment(cfg, seed=args.seed)
    paths = emit(records, cfg, _out_dir(args, cfg))
    for p in paths:
        _say(args, f"wrote {p}")
    try:
        t0 = report_t0(records, cfg["metrics"]["threshold"])
    except HypothesisViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_A_FRAME
    min_a, max_b = uniform_bounds(records, t0)
    _say(args, f"t0 = {t0:g}; uniform bounds on [-t0, t0]: A = {min_a:.6g}, B = {max_b:.6g}")
    failed = [r for r in records if not r.ok]
    if failed:
        print(f"error: {len(failed)} slice(s) failed", file=sys.stderr)
        return EXIT_SLICE_FAILED
    return EXIT_OK


def cmd_framebounds(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    grid = build_grid(cfg)
    system = GaborSystem(build_window(cfg, grid), build_nodes(cfg, grid))
    report = measure_bounds(cfg, system, seed=args.seed)
    payload = {
        "A": report.A,
        "B": report.B,
        "condition": report.condition if report.A > 0 else None,
        "nodes": report.node_count,
        "N": report.grid_n,
        "method": report.method,
        "iterations": report.iterations,
        "converged": report.converged,
    }
    _write_json(_out_dir(args, cfg) / "framebounds.json", payload)
    _say(args, json.dumps(payload, sort_keys=True))
    if report.A == 0:
        print("error: the Gabor system is not a frame (A = 0)", file=sys.stderr)
        return EXIT_NOT_A_FRAME
    return EXIT_OK


def cmd_flow(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    grid = build_grid(cfg)
    nodes = build_nodes(cfg, grid)
    moved = flow_set(build_spec(cfg), nodes, args.t, steps_for(cfg, args.t))
    style = cfg["output"]["numbers"]
    path = _out_dir(args, cfg) / "flow.csv"
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("index", "x", "xi", "x_t", "xi_t"))
        for i, (a, b) in enumerate(zip(nodes.points, moved.points)):
            writer.writerow([i, *(format_number(v, style) for v in (*a, *b))])
    _say(args, f"wrote {path}")
    return EXIT_OK


def cmd_stft(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    setup = prepare(cfg)
    window = evolve_window(cfg, setup, args.t)
    values = np.abs(stft_full(window, gaussian_window(setup.grid)).values)
    style = cfg["output"]["numbers"]
    path = _out_dir(args, cfg) / "stft.csv"
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("x", "xi", "magnitude"))
        for m, x in enumerate(setup.grid.x):
            for k, xi in enumerate(setup.grid.xi):
                writer.writerow((format_number(x, style), format_number(xi, style), format_number(values[m, k], style)))
    _say(args, f"wrote {path}")
    return EXIT_OK


def cmd_checkdef(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    setup = prepare(cfg)
    moved = flow_set(setup.spec, setup.nodes, args.t, steps_for(cfg, args.t))
    report = deformation_report(DeformationPair(setup.nodes, moved), cfg["metrics"]["R"])
    payload = {
        "t": args.t,
        "R": report.R,
        "rel_base": report.rel_base,
        "rel_deformed": report.rel_deformed,
        "l1_defect": report.l1_defect,
        "l2_radius": report.l2_radius,
        "jitter": report.jitter,
        "lipschitz_L": setup.lipschitz_L,
        "gronwall_ratio": gronwall_defect(setup.spec, setup.nodes, args.t, setup.lipschitz_L, steps_for(cfg, args.t)),
    }
    _write_json(_out_dir(args, cfg) / "deformation.json", payload)
    _say(args, json.dumps(payload, sort_keys=True))
    return EXIT_OK


COMMANDS = {
    "evolve": (cmd_evolve, "run the time-sliced deformation experiment"),
    "framebounds": (cmd_framebounds, "frame bounds of the undeformed system"),
    "flow": (cmd_flow, "flow the nodes to time --t and write before/after points"),
    "stft": (cmd_stft, "spectrogram magnitude of the (propagated) window"),
    "checkdef": (cmd_checkdef, "deformation metrics of the flow at time --t"),
}


def _global_flags(parser: argparse.ArgumentParser, defaults: bool) -> None:
    # Subparsers use SUPPRESS so flags given before the command are not reset.
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    parser.add_argument("--out", default=d(None), help="output directory (overrides output.directory)")
    parser.add_argument("--quiet", action="store_true", default=d(False), help="suppress progress and summaries")
    parser.add_argument("--seed", type=int, default=d(0), help="seed for randomized estimators")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaborflow", description="Gabor frames under Hamiltonian deformations.")
    _global_flags(parser, True)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        _global_flags(p, False)
        p.add_argument("config", help="JSON configuration file")
        if name in ("flow", "checkdef"):
            p.add_argument("--t", type=float, required=True, help="flow time")
        elif name == "stft":
            p.add_argument("--t", type=float, default=0.0, help="propagation time of the window")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        for path, msg in exc.problems:
            print(f"config error: {path or '<file>'}: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    handler, _ = COMMANDS[args.command]
    return handler(args, cfg)


if __name__ == "__main__":
    sys.exit(main())
