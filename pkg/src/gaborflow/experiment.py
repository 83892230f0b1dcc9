"""
Hamiltonian deformation experiment: flow the nodes, propagate the window and
measure the deformed Gabor system on a grid of times.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .deformation import DeformationPair, jitter, l1_defect, l2_radius, rel_separation
from .flow import NodeSet, flow_set
from .frames import FrameReport, GaborSystem, frame_bounds_dense, frame_bounds_iterative
from .grid import GridSpec, Signal, gaussian_window, hermite_window, m1_norm, make_grid
from .hamiltonian import HamiltonianSpec, lipschitz_estimate
from .quantum import HermitianOperator, build_hamiltonian, covariance_residual, propagate_eigen, propagate_split

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "t",
    "A",
    "B",
    "condition",
    "rel_deformed",
    "l1_defect",
    "l2_radius",
    "jitter",
    "m1_drift",
    "covariance_residual",
    "lipschitz_L",
    "wall_ms",
    "status",
)


class HypothesisViolation(ValueError):
    """The undeformed system is not a frame (``A(0) = 0``)."""


@dataclass(frozen=True)
class TimeSliceRecord:
    t: float
    A: float
    B: float
    condition: float
    rel_deformed: int
    l1_defect: float
    l2_radius: float
    jitter: float
    m1_drift: float
    covariance_residual: float
    lipschitz_L: float
    wall_ms: float
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass
class Setup:
    """Objects shared by every time slice of one experiment."""

    grid: GridSpec
    window: Signal
    nodes: NodeSet
    spec: HamiltonianSpec
    hamiltonian: HermitianOperator
    lipschitz_L: float


def build_grid(cfg: ExperimentConfig) -> GridSpec:
    return make_grid(cfg["grid"]["N"], cfg["grid"]["L"])


def build_window(cfg: ExperimentConfig, grid: GridSpec) -> Signal:
    w = cfg["window"]
    g = gaussian_window(grid) if w["kind"] == "gaussian" else hermite_window(grid, w["order"])
    return g / g.norm()


def build_nodes(cfg: ExperimentConfig, grid: GridSpec) -> NodeSet:
    lat = cfg["lattice"]
    if lat["kind"] == "points":
        return NodeSet(lat["points"])
    extent = lat["extent"]
    if extent is None:
        half_x, half_xi = grid.L / 2, grid.xi_period / 2
        extent = (-half_x, half_x, -half_xi, half_xi)
    return NodeSet.rect_lattice(lat["alpha"], lat["beta"], tuple(extent))


def build_spec(cfg: ExperimentConfig) -> HamiltonianSpec:
    m11, m12, m22 = cfg["hamiltonian"]["M"]
    return HamiltonianSpec.from_entries(m11, m12, m22, cfg["hamiltonian"]["sigma"])


def lipschitz_box(cfg: ExperimentConfig, nodes: NodeSet) -> tuple[float, float, float, float]:
    """Configured box, else a square around the origin enclosing every node's orbit radius plus one."""
    box = cfg["hamiltonian"]["box"]
    if box is not None:
        return tuple(box)
    r = float(np.hypot(nodes.points[:, 0], nodes.points[:, 1]).max()) + 1.0
    return (-r, r, -r, r)


def prepare(cfg: ExperimentConfig) -> Setup:
    grid = build_grid(cfg)
    nodes = build_nodes(cfg, grid)
    spec = build_spec(cfg)
    L = lipschitz_estimate(spec, lipschitz_box(cfg, nodes), cfg["metrics"]["lipschitzSamples"])
    return Setup(grid, build_window(cfg, grid), nodes, spec, build_hamiltonian(spec, grid), L)


def time_grid(cfg: ExperimentConfig) -> list[float]:
    """Times in increasing order; ``t = 0`` is always present."""
    times = cfg["times"]
    t_max, count = times["tMax"], times["count"]
    if count == 1:
        ts = np.array([0.0])
    elif times["symmetric"]:
        ts = np.linspace(-t_max, t_max, count)
    else:
        ts = np.linspace(0.0, t_max, count)
    ts = np.where(np.abs(ts) < 1e-15 * t_max, 0.0, ts)
    return sorted(set(float(t) for t in ts) | {0.0})


def steps_for(cfg: ExperimentConfig, t: float) -> int:
    return max(1, math.ceil(abs(t) * cfg["flow"]["stepsPerUnitTime"]))


def measure_bounds(cfg: ExperimentConfig, system: GaborSystem, seed: int = 0) -> FrameReport:
    est = cfg["estimator"]
    if est["method"] == "dense":
        return frame_bounds_dense(system)
    return frame_bounds_iterative(system, est["tol"], est["maxIter"], seed=seed)


def evolve_window(cfg: ExperimentConfig, setup: Setup, t: float) -> Signal:
    if cfg["propagator"]["method"] == "eigen":
        return propagate_eigen(setup.hamiltonian, t, setup.window)
    return propagate_split(setup.spec, setup.grid, t, steps_for(cfg, t), setup.window)


def _failed(t: float, L: float, wall: float, reason: str) -> TimeSliceRecord:
    nan = math.nan
    return TimeSliceRecord(t, nan, nan, nan, -1, nan, nan, nan, nan, nan, L, wall, f"failed: {reason}")


def run_slice(cfg: ExperimentConfig, setup: Setup, t: float, seed: int = 0) -> TimeSliceRecord:
    start = time.perf_counter()
    try:
        nodes_t = flow_set(setup.spec, setup.nodes, t, steps_for(cfg, t))
        window_t = evolve_window(cfg, setup, t)
        report = measure_bounds(cfg, GaborSystem(window_t, nodes_t), seed)
        if cfg["estimator"]["method"] == "iterative" and not report.converged:
            raise ArithmeticError("iterative frame-bound estimator did not converge")
        pair = DeformationPair(setup.nodes, nodes_t)
        R = cfg["metrics"]["R"]
        residual = covariance_residual(
            setup.spec,
            setup.grid,
            cfg["metrics"]["probe"],
            t,
            setup.window,
            setup.hamiltonian,
            cfg["metrics"]["linearCovariance"],
        )
        record = TimeSliceRecord(
            t=t,
            A=report.A,
            B=report.B,
            condition=report.condition,
            rel_deformed=rel_separation(nodes_t),
            l1_defect=l1_defect(pair, R),
            l2_radius=l2_radius(pair, R),
            jitter=jitter(setup.nodes, nodes_t),
            m1_drift=m1_norm(window_t - setup.window),
            covariance_residual=residual,
            lipschitz_L=setup.lipschitz_L,
            wall_ms=(time.perf_counter() - start) * 1e3,
        )
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        log.warning("slice t=%g failed: %s", t, exc)
        return _failed(t, setup.lipschitz_L, (time.perf_counter() - start) * 1e3, str(exc))
    log.info("t=%+.4f A=%.6g B=%.6g", t, record.A, record.B)
    return record


def run_deformation_experiment(cfg: ExperimentConfig, seed: int = 0, setup: Setup | None = None) -> list[TimeSliceRecord]:
    """One record per time in :func:`time_grid`, in increasing ``t``; failed slices are flagged, not raised."""
    setup = prepare(cfg) if setup is None else setup
    return [run_slice(cfg, setup, t, seed) for t in time_grid(cfg)]


def _zero_record(records: list[TimeSliceRecord]) -> TimeSliceRecord:
    for r in records:
        if r.t == 0:
            return r
    raise ValueError("records contain no t = 0 slice")


def report_t0(records: list[TimeSliceRecord], threshold: float = 0.5) -> float:
    """
    Largest grid time ``t0`` with ``A(t) >= threshold * A(0)`` for every ``|t| <= t0``.

    Raises :class:`HypothesisViolation` when ``A(0) = 0``.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    zero = _zero_record(records)
    if not zero.ok or not zero.A > 0:
        raise HypothesisViolation("the undeformed Gabor system is not a frame (A(0) = 0)")
    t0 = 0.0
    for radius in sorted({abs(r.t) for r in records} - {0.0}):
        ring = [r for r in records if abs(r.t) == radius]
        if all(r.ok and r.A >= threshold * zero.A for r in ring):
            t0 = radius
        else:
            break
    return t0


def uniform_bounds(records: list[TimeSliceRecord], t0: float | None = None) -> tuple[float, float]:
    """Smallest ``A`` and largest ``B`` over successful slices (optionally only ``|t| <= t0``)."""
    chosen = [r for r in records if r.ok and (t0 is None or abs(r.t) <= t0)]
    if not chosen:
        return math.nan, math.nan
    return min(r.A for r in chosen), max(r.B for r in chosen)


def format_number(value: float | int, style: str = "scientific") -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.16e}" if style == "scientific" else repr(value)


def records_csv(records: list[TimeSliceRecord], style: str = "scientific", timing: bool = False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        row = asdict(r)
        if not timing:
            row["wall_ms"] = 0.0
        writer.writerow([row["status"] if c == "status" else format_number(row[c], style) for c in CSV_COLUMNS])
    return buf.getvalue()


def summary(records: list[TimeSliceRecord], cfg: ExperimentConfig) -> dict:
    threshold = cfg["metrics"]["threshold"]
    try:
        t0: float | None = report_t0(records, threshold)
    except (HypothesisViolation, ValueError):
        t0 = None
    min_a, max_b = uniform_bounds(records)
    return {
        "version": __version__,
        "config": cfg.data,
        "uniform_bounds": {"A": min_a, "B": max_b},
        "t0": t0,
        "t0_threshold": threshold,
        "calibration_C": cfg["calibration"]["C"],
        "failed_slices": sum(not r.ok for r in records),
        "slices": len(records),
    }


def emit(records: list[TimeSliceRecord], cfg: ExperimentConfig, directory: str | Path | None = None) -> list[Path]:
    """Write ``records.csv`` and ``summary.json``; output is byte-stable for identical runs."""
    out = Path(directory if directory is not None else cfg["output"]["directory"])
    out.mkdir(parents=True, exist_ok=True)
    written = []
    formats = cfg["output"]["formats"]
    if "csv" in formats:
        path = out / "records.csv"
        path.write_bytes(records_csv(records, cfg["output"]["numbers"], cfg["output"]["timing"]).encode("utf-8"))
        written.append(path)
    if "json" in formats:
        path = out / "summary.json"
        text = json.dumps(summary(records, cfg), indent=2, sort_keys=True, allow_nan=True) + "\n"
        path.write_bytes(text.encode("utf-8"))
        written.append(path)
    return written
