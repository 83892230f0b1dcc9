"""Experiment configuration: JSON loading, defaults and validation."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from . import symbol
from .frames import SAMPLING_CONSTANT

DEFAULTS: dict[str, Any] = {
    "grid": {"N": 256, "L": None},
    "window": {"kind": "gaussian", "order": 0},
    "lattice": {"kind": "rect", "alpha": 1 / math.sqrt(2), "beta": 1 / math.sqrt(2), "extent": None},
    "hamiltonian": {"M": [1.0, 0.0, 1.0], "sigma": None, "box": None},
    "times": {"tMax": 0.5, "count": 21, "symmetric": True},
    "flow": {"stepsPerUnitTime": 1000},
    "propagator": {"method": "eigen"},
    "estimator": {"method": "dense", "tol": 1e-12, "maxIter": 20000},
    "metrics": {"R": 2.0, "probe": [1.0, 0.0], "threshold": 0.5, "linearCovariance": False, "lipschitzSamples": 201},
    "calibration": {"C": SAMPLING_CONSTANT},
    "output": {"directory": "out", "formats": ["csv", "json"], "numbers": "scientific", "timing": False},
}


class ConfigError(ValueError):
    """All problems found in a configuration, each as ``(field path, message)``."""

    def __init__(self, problems: list[tuple[str, str]]):
        self.problems = problems
        super().__init__("; ".join(f"{path}: {msg}" for path, msg in problems))


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated configuration tree (defaults filled in) plus its source path."""

    data: dict[str, Any]
    source: str | None = None

    def __getitem__(self, key: str) -> Any:
        return self.data[key]


def _merge(defaults: dict, given: dict) -> dict:
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _box(v: Any) -> bool:
    return isinstance(v, list) and len(v) == 4 and all(_is_number(c) for c in v) and v[1] > v[0] and v[3] > v[2]


def validate(raw: dict[str, Any]) -> dict[str, Any]:
    """Merge defaults and check every field; raise :class:`ConfigError` listing all problems."""
    problems: list[tuple[str, str]] = []

    def need(ok: bool, path: str, msg: str) -> None:
        if not ok:
            problems.append((path, msg))

    if not isinstance(raw, dict):
        raise ConfigError([("", "top level must be an object")])
    unknown = sorted(set(raw) - set(DEFAULTS))
    for key in unknown:
        problems.append((key, "unknown section"))
    cfg = _merge(DEFAULTS, {k: v for k, v in raw.items() if k in DEFAULTS})

    grid = cfg["grid"]
    N = grid["N"]
    need(isinstance(N, int) and not isinstance(N, bool) and N % 2 == 0 and 8 <= N <= 8192, "grid.N", "must be an even integer in [8, 8192]")
    need(grid["L"] is None or (_is_number(grid["L"]) and grid["L"] > 0), "grid.L", "must be a positive number")

    window = cfg["window"]
    need(window["kind"] in ("gaussian", "hermite"), "window.kind", "must be 'gaussian' or 'hermite'")
    order = window["order"]
    need(isinstance(order, int) and not isinstance(order, bool) and 0 <= order <= 8, "window.order", "must be an integer in [0, 8]")

    lattice = cfg["lattice"]
    if lattice.get("kind") == "rect":
        for name in ("alpha", "beta"):
            need(_is_number(lattice.get(name)) and lattice.get(name) > 0, f"lattice.{name}", "must be a positive number")
        need(lattice.get("extent") is None or _box(lattice["extent"]), "lattice.extent", "must be [x0, x1, xi0, xi1] with x1 > x0, xi1 > xi0")
    elif lattice.get("kind") == "points":
        pts = lattice.get("points")
        ok = isinstance(pts, list) and len(pts) > 0 and all(isinstance(p, list) and len(p) == 2 and all(_is_number(c) for c in p) for p in pts)
        need(ok, "lattice.points", "must be a nonempty list of [x, xi] pairs")
    else:
        problems.append(("lattice.kind", "must be 'rect' or 'points'"))

    ham = cfg["hamiltonian"]
    M = ham["M"]
    need(isinstance(M, list) and len(M) == 3 and all(_is_number(m) for m in M), "hamiltonian.M", "must be [m11, m12, m22]")
    sigma = ham["sigma"]
    if sigma is not None:
        if not isinstance(sigma, str):
            problems.append(("hamiltonian.sigma", "must be an expression string"))
        else:
            try:
                symbol.parse(sigma)
            except symbol.ExprSyntaxError as exc:
                problems.append(("hamiltonian.sigma", str(exc)))
    need(ham["box"] is None or _box(ham["box"]), "hamiltonian.box", "must be [x0, x1, p0, p1] with x1 > x0, p1 > p0")

    times = cfg["times"]
    need(_is_number(times["tMax"]) and times["tMax"] > 0, "times.tMax", "must be > 0")
    need(isinstance(times["count"], int) and not isinstance(times["count"], bool) and times["count"] >= 1, "times.count", "must be an integer >= 1")
    need(isinstance(times["symmetric"], bool), "times.symmetric", "must be true or false")

    spu = cfg["flow"]["stepsPerUnitTime"]
    need(isinstance(spu, int) and not isinstance(spu, bool) and spu >= 1, "flow.stepsPerUnitTime", "must be an integer >= 1")
    need(cfg["propagator"]["method"] in ("eigen", "split"), "propagator.method", "must be 'eigen' or 'split'")

    est = cfg["estimator"]
    need(est["method"] in ("dense", "iterative"), "estimator.method", "must be 'dense' or 'iterative'")
    need(_is_number(est["tol"]) and est["tol"] > 0, "estimator.tol", "must be > 0")
    need(isinstance(est["maxIter"], int) and not isinstance(est["maxIter"], bool) and est["maxIter"] >= 1, "estimator.maxIter", "must be an integer >= 1")

    metrics = cfg["metrics"]
    need(_is_number(metrics["R"]) and metrics["R"] > 0, "metrics.R", "must be > 0")
    probe = metrics["probe"]
    need(isinstance(probe, list) and len(probe) == 2 and all(_is_number(c) for c in probe), "metrics.probe", "must be [x, xi]")
    need(_is_number(metrics["threshold"]) and 0 < metrics["threshold"] < 1, "metrics.threshold", "must lie in (0, 1)")
    need(isinstance(metrics["linearCovariance"], bool), "metrics.linearCovariance", "must be true or false")
    need(isinstance(metrics["lipschitzSamples"], int) and metrics["lipschitzSamples"] >= 4, "metrics.lipschitzSamples", "must be an integer >= 4")

    need(_is_number(cfg["calibration"]["C"]) and cfg["calibration"]["C"] > 0, "calibration.C", "must be > 0")

    out = cfg["output"]
    need(isinstance(out["directory"], str) and out["directory"] != "", "output.directory", "must be a nonempty string")
    need(isinstance(out["formats"], list) and set(out["formats"]) <= {"csv", "json"}, "output.formats", "must be a subset of ['csv', 'json']")
    need(out["numbers"] in ("scientific", "shortest"), "output.numbers", "must be 'scientific' or 'shortest'")
    need(isinstance(out["timing"], bool), "output.timing", "must be true or false")

    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a JSON configuration file, fill defaults and validate."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([("", f"cannot read {path}: {exc}")]) from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("", f"JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}")]) from exc
    return ExperimentConfig(validate(raw), str(path))


def config_from_dict(raw: dict[str, Any]) -> ExperimentConfig:
    return ExperimentConfig(validate(raw))
