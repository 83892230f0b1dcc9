"""Hamiltonian flows of phase-space points and node sets (fixed-step RK4)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._pairs import pair_blocks
from .hamiltonian import HamiltonianSpec, PhasePoint, vector_field
from .symbol import EvalError

STEPS_PER_UNIT_TIME = 1000


class FlowDivergenceError(ArithmeticError):
    """The integrated state became non-finite; ``index`` is the first bad node."""

    def __init__(self, index: int, t: float):
        super().__init__(f"flow diverged for node {index} before reaching t={t}")
        self.index = index
        self.t = t


@dataclass(frozen=True, eq=False)
class NodeSet:
    """Ordered phase-space points; node ``i`` of a deformed set is the image of node ``i``."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise ValueError("node coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, i: int) -> PhasePoint:
        return PhasePoint(*self.points[i])

    @classmethod
    def rect_lattice(cls, alpha: float, beta: float, box: tuple[float, float, float, float]) -> NodeSet:
        """Points ``(alpha j, beta k)`` inside the half-open box ``[x0, x1) x [p0, p1)``."""
        if alpha <= 0 or beta <= 0:
            raise ValueError("lattice constants must be positive")
        x0, x1, p0, p1 = box
        xs = alpha * np.arange(math.ceil(x0 / alpha - 1e-9), math.ceil(x1 / alpha - 1e-9))
        ps = beta * np.arange(math.ceil(p0 / beta - 1e-9), math.ceil(p1 / beta - 1e-9))
        X, P = np.meshgrid(xs, ps, indexing="ij")
        return cls(np.stack([X.ravel(), P.ravel()], axis=-1))


@dataclass(frozen=True)
class DistortionReport:
    cT: float
    CT: float
    T: float
    pair_count: int


def default_steps(t: float) -> int:
    return max(1, math.ceil(abs(t) * STEPS_PER_UNIT_TIME))


def _step(spec: HamiltonianSpec, z: np.ndarray, h: float) -> np.ndarray:
    k1 = vector_field(spec, z)
    k2 = vector_field(spec, z + 0.5 * h * k1)
    k3 = vector_field(spec, z + 0.5 * h * k2)
    k4 = vector_field(spec, z + h * k3)
    return z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _first_failing(spec: HamiltonianSpec, z: np.ndarray, h: float) -> int:
    """Index of the first node whose single step cannot be evaluated."""
    for i, point in enumerate(z.reshape(-1, 2)):
        try:
            _step(spec, point, h)
        except EvalError:
            return i
    return 0


def _rk4(spec: HamiltonianSpec, z: np.ndarray, t: float, steps: int) -> np.ndarray:
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if t == 0:
        return z.copy()
    h = t / steps
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(steps):
            try:
                z = _step(spec, z, h)
            except EvalError as exc:
                raise FlowDivergenceError(_first_failing(spec, z, h), t) from exc
            bad = ~np.all(np.isfinite(z.reshape(-1, 2)), axis=-1)
            if np.any(bad):
                raise FlowDivergenceError(int(np.argmax(bad)), t)
    return z


def flow_point(spec: HamiltonianSpec, z, t: float, steps: int | None = None) -> PhasePoint:
    """Integrate one point for time ``t`` (negative allowed) with classical RK4."""
    steps = default_steps(t) if steps is None else steps
    out = _rk4(spec, np.asarray(z, dtype=float), t, steps)
    return PhasePoint(float(out[0]), float(out[1]))


def flow_set(spec: HamiltonianSpec, nodes: NodeSet, t: float, steps: int | None = None) -> NodeSet:
    """Flow every node; order is preserved. All nodes are integrated together."""
    steps = default_steps(t) if steps is None else steps
    return NodeSet(_rk4(spec, np.array(nodes.points), t, steps))


def jacobian_fd(spec: HamiltonianSpec, z, t: float, steps: int | None = None, h: float = 1e-5) -> np.ndarray:
    """Fourth-order central-difference Jacobian of the time-``t`` flow map at ``z``."""
    if h <= 0:
        raise ValueError("step must be positive")
    steps = default_steps(t) if steps is None else steps
    z = np.asarray(z, dtype=float)
    offsets = np.array([2.0, 1.0, -1.0, -2.0])
    probes = []
    for axis in range(2):
        e = np.zeros(2)
        e[axis] = h
        probes.extend(z + o * e for o in offsets)
    # all eight perturbed starting points go through one vectorized integration
    out = _rk4(spec, np.array(probes), t, steps).reshape(2, 4, 2)
    cols = (-out[:, 0] + 8 * out[:, 1] - 8 * out[:, 2] + out[:, 3]) / (12 * h)
    return cols.T


def gronwall_defect(spec: HamiltonianSpec, nodes: NodeSet, t: float, L: float, steps: int | None = None) -> float:
    """
    Worst ratio ``|Phi_t(a) - Phi_t(b) - (a - b)| / (L |t| |a - b| e^{L|t|})`` over node pairs.

    Values at most 1 confirm the Gronwall bound for flows with Lipschitz constant ``L``.
    """
    if t == 0:
        return 0.0
    if L <= 0:
        raise ValueError("Lipschitz constant must be positive for t != 0")
    moved = flow_set(spec, nodes, t, steps).points
    base = nodes.points
    scale = L * abs(t) * math.exp(L * abs(t))
    worst = 0.0
    for i, j in pair_blocks(len(base)):
        d0 = base[i] - base[j]
        dist = np.hypot(d0[:, 0], d0[:, 1])
        ok = dist > 0
        if not np.any(ok):
            continue
        num = np.linalg.norm(moved[i] - moved[j] - d0, axis=-1)
        worst = max(worst, float(np.max(num[ok] / (scale * dist[ok]))))
    return worst


def distortion_constants(
    spec: HamiltonianSpec,
    nodes: NodeSet,
    T: float,
    steps_per_unit: int = STEPS_PER_UNIT_TIME,
    count: int = 21,
) -> DistortionReport:
    """
    Empirical constants ``c_T <= |Phi_t a - Phi_t b| / |a - b| <= C_T``.

    Scans ``count`` equally spaced times in ``[-T, T]`` (only ``t = 0`` when
    ``count == 1``) and every pair of distinct nodes.
    """
    if len(nodes) < 2:
        raise ValueError("need at least two nodes")
    if count < 1:
        raise ValueError("count must be >= 1")
    if count > 1 and T <= 0:
        raise ValueError("T must be positive")
    times = np.linspace(-T, T, count) if count > 1 else np.array([0.0])
    base = nodes.points
    lo, hi, pairs = math.inf, 0.0, 0
    for t in times:
        steps = max(1, math.ceil(abs(t) * steps_per_unit))
        moved = base if t == 0 else flow_set(spec, nodes, float(t), steps).points
        for i, j in pair_blocks(len(base)):
            d0 = np.linalg.norm(base[i] - base[j], axis=-1)
            ok = d0 > 0
            if t == times[0]:
                pairs += int(np.count_nonzero(ok))
            if not np.any(ok):
                continue
            ratio = np.linalg.norm(moved[i] - moved[j], axis=-1)[ok] / d0[ok]
            lo = min(lo, float(ratio.min()))
            hi = max(hi, float(ratio.max()))
    if pairs == 0:
        raise ValueError("all node pairs coincide")
    return DistortionReport(cT=lo, CT=hi, T=float(T), pair_count=pairs)
