"""
Discrete Weyl quantization and Schrödinger propagators.

Quantization follows the kernel ``sigma((x+y)/2, xi) exp(2 pi i (x-y) xi)``,
so momentum acts as ``D = (2 pi i)^{-1} d/dx`` and ``[x, D] = i/(2 pi)``.
With that normalization the quantum evolution that matches the classical
flow ``Phi_t`` is ``exp(-2 pi i t H)`` (Planck constant ``1/(2 pi)``); all
propagators here use it, so ``U(t) rho(z) = rho(Phi_t z) U(t)`` for
quadratic ``H``.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import symbol
from .flow import default_steps, flow_point
from .grid import GridSpec, Signal, dft, idft, m1_norm
from .hamiltonian import HamiltonianSpec, linear_flow_exact
from .shifts import rho

TIME_SCALE = 2 * np.pi


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """
    Hermitian ``N x N`` matrix acting on grid signals.

    ``defect`` is ``max |A - A^*|`` before the ``(A + A^*)/2`` symmetrization.
    """

    grid: GridSpec
    matrix: np.ndarray
    defect: float = 0.0

    @classmethod
    def hermitized(cls, grid: GridSpec, A: np.ndarray) -> HermitianOperator:
        A = np.asarray(A, dtype=np.complex128)
        defect = float(np.abs(A - A.conj().T).max())
        return cls(grid, (A + A.conj().T) / 2, defect)

    def apply(self, f: Signal) -> Signal:
        return Signal(self.grid, self.matrix @ f.samples)

    @cached_property
    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Cached eigendecomposition ``(w, Q)`` with ``A = Q diag(w) Q^*``."""
        w, Q = np.linalg.eigh(self.matrix)
        w.setflags(write=False)
        Q.setflags(write=False)
        return w, Q


@dataclass(frozen=True, eq=False)
class Propagator:
    source: HermitianOperator
    t: float
    matrix: np.ndarray
    method: str = "eigen"

    def apply(self, f: Signal) -> Signal:
        return Signal(self.source.grid, self.matrix @ f.samples)


def weyl_quantize(sigma: Callable, grid: GridSpec) -> HermitianOperator:
    """
    Matrix of the Weyl operator of a real symbol ``sigma(x, p)`` (vectorized callable).

    ``A[m, n] = (L/N) (1/L) sum_k sigma((x_m + x_n)/2, xi_k) exp(2 pi i (x_m - x_n) xi_k)``.
    The midpoint depends only on ``m + n`` and the phase only on ``m - n``, so
    the ``2N - 1`` distinct midpoint rows are each transformed once by FFT.
    """
    N = grid.N
    s = np.arange(2 * N - 1)
    midpoints = -grid.L / 2 + s * grid.dx / 2
    values = np.asarray(sigma(midpoints[:, None], grid.xi[None, :]))
    values = np.broadcast_to(values, (2 * N - 1, N))
    if np.iscomplexobj(values):
        if np.any(values.imag != 0):
            raise ValueError("symbol must be real-valued")
        values = values.real
    if not np.all(np.isfinite(values)):
        raise ValueError("symbol has non-finite values on the grid")
    # ifft(ifftshift(row))[d] = (1/N) sum_k row_k exp(2 pi i d k / N)
    kernel = np.fft.ifft(np.fft.ifftshift(values, axes=-1), axis=-1)
    m = np.arange(N)[:, None]
    n = np.arange(N)[None, :]
    A = kernel[m + n, (m - n) % N]
    if not np.all(np.isfinite(A)):
        raise ValueError("non-finite kernel entries")
    return HermitianOperator.hermitized(grid, A)


def build_hamiltonian(spec: HamiltonianSpec, grid: GridSpec) -> HermitianOperator:
    """Weyl quantization of ``<M z, z> + sigma(z)`` on ``grid``."""
    return weyl_quantize(spec.symbol, grid)


def propagator_eigen(Hop: HermitianOperator, t: float) -> Propagator:
    """Dense ``exp(-2 pi i t H)`` from the cached eigendecomposition."""
    w, Q = Hop.eigh
    U = (Q * np.exp(-1j * TIME_SCALE * t * w)) @ Q.conj().T
    return Propagator(Hop, t, U, "eigen")


def propagate_eigen(Hop: HermitianOperator, t: float, f: Signal) -> Signal:
    """``exp(-2 pi i t H) f`` through the eigenbasis, without forming the propagator."""
    if t == 0:
        return f
    w, Q = Hop.eigh
    coeffs = Q.conj().T @ f.samples
    return Signal(f.grid, Q @ (np.exp(-1j * TIME_SCALE * t * w) * coeffs))


def separable_parts(spec: HamiltonianSpec, probes: int = 7, tol: float = 1e-12):
    """
    Split ``H`` into ``T(p) + V(x)`` or raise ``ValueError``.

    Mixed dependence of ``sigma`` is probed on a grid of axis-aligned points:
    ``sigma(x, p) - sigma(x, 0) - sigma(0, p) + sigma(0, 0)`` must vanish.
    """
    (m11, m12), (_, m22) = spec.M
    if m12 != 0:
        raise ValueError("Hamiltonian has an x*p cross term; split-step needs T(p) + V(x)")
    sigma = spec.sigma
    if sigma is not None:
        axis = np.linspace(-3.0, 3.0, probes)
        X, P = np.meshgrid(axis, axis, indexing="ij")
        mixed = (
            symbol.evaluate(sigma, X, P)
            - symbol.evaluate(sigma, X, np.zeros_like(P))
            - symbol.evaluate(sigma, np.zeros_like(X), P)
            + symbol.evaluate(sigma, 0.0, 0.0)
        )
        scale = 1.0 + np.abs(symbol.evaluate(sigma, X, P)).max()
        if np.abs(mixed).max() > tol * scale:
            raise ValueError("sigma mixes x and p; split-step needs T(p) + V(x)")

    def V(x):
        v = m11 * np.square(x)
        if sigma is not None:
            v = v + symbol.evaluate(sigma, x, np.zeros_like(x))
        return v

    def T(p):
        v = m22 * np.square(p)
        if sigma is not None:
            v = v + symbol.evaluate(sigma, np.zeros_like(p), p) - symbol.evaluate(sigma, 0.0, 0.0)
        return v

    return T, V


def propagate_split(spec: HamiltonianSpec, grid: GridSpec, t: float, steps: int, f: Signal) -> Signal:
    """Strang splitting ``e^{-i d V/2} e^{-i d T(D)} e^{-i d V/2}`` with ``d = 2 pi t / steps``."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    T, V = separable_parts(spec)
    if t == 0:
        return f
    d = TIME_SCALE * t / steps
    half_kick = np.exp(-0.5j * d * V(grid.x))
    drift = np.exp(-1j * d * T(grid.xi))
    u = f
    for _ in range(steps):
        u = Signal(grid, half_kick * u.samples)
        u = idft(Signal(grid, drift * dft(u).samples))
        u = Signal(grid, half_kick * u.samples)
    return u


def flowed_point(spec: HamiltonianSpec, z, t: float, linear: bool = False) -> np.ndarray:
    """Classical image of ``z``: exact linear map for quadratic ``H`` (or on request), RK4 otherwise."""
    if spec.is_quadratic or linear:
        return linear_flow_exact(spec.quadratic_part(), t) @ np.asarray(z, dtype=float)
    return np.array(flow_point(spec, z, t, default_steps(t)))


def covariance_residual(
    spec: HamiltonianSpec,
    grid: GridSpec,
    z,
    t: float,
    g: Signal,
    Hop: HermitianOperator | None = None,
    linear: bool = False,
) -> float:
    """
    ``|| U(t) rho(z) g - rho(Phi_t z) U(t) g || / ||g||``.

    For quadratic ``H`` this vanishes up to discretization. With a
    perturbation the node is moved by the full nonlinear flow unless
    ``linear`` asks for the quadratic part's linear map.
    """
    Hop = build_hamiltonian(spec, grid) if Hop is None else Hop
    w = flowed_point(spec, z, t, linear)
    lhs = propagate_eigen(Hop, t, rho(z, g))
    rhs = rho(w, propagate_eigen(Hop, t, g))
    return (lhs - rhs).norm() / g.norm()


def m1_continuity_curve(
    spec: HamiltonianSpec,
    grid: GridSpec,
    g: Signal,
    times: Sequence[float],
    Hop: HermitianOperator | None = None,
) -> list[tuple[float, float]]:
    """Pairs ``(t, m1_norm(U(t) g - g))`` for each requested time."""
    Hop = build_hamiltonian(spec, grid) if Hop is None else Hop
    return [(float(t), m1_norm(propagate_eigen(Hop, t, g) - g)) for t in times]
