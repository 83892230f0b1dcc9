"""Gabor systems, frame operators, frame-bound estimators and dual windows."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .deformation import rel_separation
from .flow import NodeSet
from .grid import GridSpec, Signal, m1_norm
from .quantum import HermitianOperator
from .shifts import rho_batch

ZERO_EIGENVALUE = 1e-12
DENSE_MAX_N = 1024
DENSE_SOLVE_MAX_N = 512

# Sampling-inequality constant used in the window-perturbation bounds:
# 1.2 x the largest ratio |C f| / (rel(Lambda) m1(g) |f|) seen by
# calibrate_sampling_constant(seed=0) over 200 trials at N=128.
SAMPLING_CONSTANT = 0.5010820562872983


@dataclass(frozen=True, eq=False)
class GaborSystem:
    """
    Window and nodes of ``{rho(lambda) g}``.

    The window is rescaled to unit norm; ``scale`` is the original norm.
    ``symmetric=False`` switches the atoms to the non-symmetric shifts ``pi(lambda) g``.
    """

    window: Signal
    nodes: NodeSet
    symmetric: bool = True
    scale: float = field(default=1.0, init=False)

    def __post_init__(self) -> None:
        norm = self.window.norm()
        if norm == 0:
            raise ValueError("window must be nonzero")
        if len(self.nodes) == 0:
            raise ValueError("node set must be nonempty")
        object.__setattr__(self, "scale", norm)
        if abs(norm - 1.0) > 0:
            object.__setattr__(self, "window", self.window / norm)

    @property
    def grid(self) -> GridSpec:
        return self.window.grid

    def atoms(self) -> np.ndarray:
        """``(|Lambda|, N)`` array whose rows are the shifted windows."""
        return rho_batch(self.nodes.points, self.window, self.symmetric)


@dataclass(frozen=True)
class FrameReport:
    A: float
    B: float
    node_count: int
    grid_n: int
    method: str
    iterations: int = 0
    converged: bool = True
    residuals: tuple[float, ...] = ()

    @property
    def condition(self) -> float:
        return math.inf if self.A == 0 else self.B / self.A


def analysis_matrix(sys: GaborSystem) -> np.ndarray:
    """Row ``lambda`` is ``conj(rho(lambda) g) * L/N`` so that ``(C f)_lambda = <f, rho(lambda) g>``."""
    return np.conj(sys.atoms()) * sys.grid.dx


def analyze(sys: GaborSystem, f: Signal, atoms: np.ndarray | None = None) -> np.ndarray:
    atoms = sys.atoms() if atoms is None else atoms
    return (np.conj(atoms) @ f.samples) * sys.grid.dx


def synthesize(sys: GaborSystem, coeffs: np.ndarray, atoms: np.ndarray | None = None) -> Signal:
    """``sum_lambda c_lambda rho(lambda) g``."""
    atoms = sys.atoms() if atoms is None else atoms
    return Signal(sys.grid, np.asarray(coeffs) @ atoms)


def frame_operator(sys: GaborSystem) -> HermitianOperator:
    """``S f = sum_lambda <f, rho(lambda) g> rho(lambda) g`` as an ``N x N`` matrix."""
    G = sys.atoms()
    S = (G.T @ np.conj(G)) * sys.grid.dx
    return HermitianOperator.hermitized(sys.grid, S)


def frame_bounds_dense(sys: GaborSystem) -> FrameReport:
    """Extreme eigenvalues of the frame operator; ``A`` is clamped to 0 below 1e-12."""
    N = sys.grid.N
    if N > DENSE_MAX_N:
        raise ValueError(f"dense frame bounds need N <= {DENSE_MAX_N}, got {N}")
    w = scipy.linalg.eigvalsh(frame_operator(sys).matrix)
    A = float(w[0]) if w[0] > ZERO_EIGENVALUE else 0.0
    return FrameReport(A, float(w[-1]), len(sys.nodes), N, "dense")


def _power(apply, v: np.ndarray, tol: float, max_iter: int) -> tuple[float, int, bool, list[float]]:
    v = v / np.linalg.norm(v)
    prev = None
    history = []
    for it in range(1, max_iter + 1):
        w = apply(v)
        q = float(np.real(np.vdot(v, w)))
        history.append(q)
        if prev is not None and abs(q - prev) < tol * abs(q):
            return q, it, True, history
        prev = q
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0, it, True, history
        v = w / norm
    return history[-1], max_iter, False, history


def frame_bounds_iterative(sys: GaborSystem, tol: float = 1e-12, max_iter: int = 20000, seed: int = 0) -> FrameReport:
    """
    Power-iteration estimates of the frame bounds, matrix-free.

    ``B`` is the dominant eigenvalue of ``S``; ``A = B' - lambda_max(B' I - S)``
    with ``B' = 1.01 B``. Each step applies analysis then synthesis.
    Iteration stops when successive Rayleigh quotients agree to ``tol``
    relative; otherwise the report carries ``converged=False``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    G = sys.atoms()
    Gc = np.conj(G)
    dx = sys.grid.dx

    def S(v):
        return ((Gc @ v) * dx) @ G

    rng = np.random.default_rng(seed)
    N = sys.grid.N
    start = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    B, it_b, ok_b, hist_b = _power(S, start, tol, max_iter)
    shift = 1.01 * B
    top, it_a, ok_a, hist_a = _power(lambda v: shift * v - S(v), start, tol, max_iter)
    A = shift - top
    A = A if A > ZERO_EIGENVALUE else 0.0
    return FrameReport(
        A,
        B,
        len(sys.nodes),
        N,
        "iterative",
        iterations=it_a + it_b,
        converged=ok_a and ok_b,
        residuals=(abs(hist_b[-1] - hist_b[-2]) if len(hist_b) > 1 else 0.0, abs(hist_a[-1] - hist_a[-2]) if len(hist_a) > 1 else 0.0),
    )


def _solve_frame(sys: GaborSystem, rhs: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Solve ``S u = rhs``; dense for small grids, conjugate gradients otherwise."""
    N = sys.grid.N
    if N <= DENSE_SOLVE_MAX_N:
        S = frame_operator(sys).matrix
        w = scipy.linalg.eigvalsh(S)
        if w[0] <= ZERO_EIGENVALUE * max(1.0, w[-1]):
            raise ValueError("frame operator is not invertible (lower frame bound is zero)")
        return scipy.linalg.solve(S, rhs, assume_a="her")
    G = sys.atoms()
    Gc = np.conj(G)
    dx = sys.grid.dx
    op = scipy.sparse.linalg.LinearOperator((N, N), matvec=lambda v: ((Gc @ v) * dx) @ G, dtype=np.complex128)
    u, info = scipy.sparse.linalg.cg(op, rhs, rtol=rtol, maxiter=50 * N)
    residual = np.linalg.norm(op @ u - rhs) / np.linalg.norm(rhs)
    if info != 0 or not residual <= 1e-10:
        raise ValueError(f"frame operator solve did not converge (relative residual {residual:.3g})")
    return u


def dual_window(sys: GaborSystem) -> Signal:
    """Canonical dual window ``S^{-1} g``."""
    return Signal(sys.grid, _solve_frame(sys, sys.window.samples))


def canonical_coefficients(sys: GaborSystem, f: Signal) -> np.ndarray:
    """``<f, S^{-1} rho(lambda) g> = <S^{-1} f, rho(lambda) g>``; exact inversion for any frame."""
    return analyze(sys, Signal(sys.grid, _solve_frame(sys, f.samples)))


def dual_window_coefficients(sys: GaborSystem, f: Signal, dual: Signal) -> np.ndarray:
    """``<f, rho(lambda) d>``; equals the canonical coefficients when ``S`` commutes with the shifts."""
    dual_atoms = rho_batch(sys.nodes.points, dual, sys.symmetric)
    return (np.conj(dual_atoms) @ f.samples) * sys.grid.dx


def window_perturbation_bounds(
    A: float, B: float, g: Signal, g_new: Signal, nodes: NodeSet, C: float = SAMPLING_CONSTANT
) -> tuple[float, float]:
    """
    Predicted square-root frame bounds after replacing ``g`` by ``g_new``.

    ``A`` and ``B`` are square roots of frame bounds of ``(g, nodes)``; the
    shift is ``C * m1(g - g_new) * rel(nodes)``.
    """
    delta = C * m1_norm(g - g_new) * rel_separation(nodes)
    return A - delta, B + delta


def sampling_ratio(f: Signal, g: Signal, nodes: NodeSet) -> float:
    """``|V_g f restricted to nodes| / (rel(nodes) m1(g) |f|)``."""
    sys = GaborSystem(g, nodes)
    coeffs = analyze(sys, f) * sys.scale
    return float(np.linalg.norm(coeffs) / (rel_separation(nodes) * m1_norm(g) * f.norm()))


def random_sampling_trial(rng: np.random.Generator, grid: GridSpec) -> tuple[Signal, Signal, NodeSet]:
    """
    One randomized (f, g, Lambda) configuration for the sampling-inequality suite.

    ``f`` is complex white noise, ``g`` a dilated Gaussian at a random
    phase-space position, ``Lambda`` a jittered rectangular lattice covering
    the phase-space box.
    """
    N = grid.N
    f = Signal(grid, rng.standard_normal(N) + 1j * rng.standard_normal(N))
    width = rng.uniform(0.7, 1.4)
    centre = rng.uniform(-1.0, 1.0, size=2)
    x = grid.x - centre[0]
    g = Signal(grid, np.exp(-np.pi * (x / width) ** 2 + 2j * np.pi * centre[1] * grid.x))
    alpha, beta = rng.uniform(0.5, 1.5, size=2)
    L, P = grid.L / 2, grid.xi_period / 2
    lattice = NodeSet.rect_lattice(alpha, beta, (-L, L, -P, P)).points
    jitter = rng.uniform(-0.1, 0.1, size=lattice.shape) * np.array([alpha, beta])
    return f, g, NodeSet(lattice + jitter)


def calibrate_sampling_constant(seed: int = 0, trials: int = 200, N: int = 128, safety: float = 1.2) -> tuple[float, float]:
    """Return ``(max ratio, safety * max ratio)`` over randomized sampling trials."""
    from .grid import make_grid

    grid = make_grid(N)
    rng = np.random.default_rng(seed)
    worst = max(sampling_ratio(*random_sampling_trial(rng, grid)) for _ in range(trials))
    return worst, safety * worst
