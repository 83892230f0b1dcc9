"""Periodic position grid, signals, windows, discrete STFT and modulation norms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

MIN_N = 8
MAX_N = 8192


@dataclass(frozen=True)
class GridSpec:
    """
    Periodic sampling grid of the real line.

    Samples sit at ``x_n = -L/2 + n L/N`` and frequencies at ``xi_k = k/L`` for
    ``k = -N/2 .. N/2-1``. The phase-space box ``[-L/2, L/2) x [-N/(2L), N/(2L))``
    has area ``N`` and every grid cell has area ``1/N``.

    Parameters
    ----------
    N
        Number of samples (even).
    L
        Period length.
    """

    N: int
    L: float

    def __post_init__(self) -> None:
        if int(self.N) != self.N or self.N % 2 != 0:
            raise ValueError(f"N must be an even integer, got {self.N!r}")
        if not MIN_N <= self.N <= MAX_N:
            raise ValueError(f"N must lie in [{MIN_N}, {MAX_N}], got {self.N}")
        if not (math.isfinite(self.L) and self.L > 0):
            raise ValueError(f"L must be positive and finite, got {self.L!r}")

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def dxi(self) -> float:
        return 1.0 / self.L

    @property
    def cell_area(self) -> float:
        return 1.0 / self.N

    @property
    def xi_period(self) -> float:
        return self.N / self.L

    @cached_property
    def x(self) -> np.ndarray:
        return -self.L / 2 + np.arange(self.N) * self.dx

    @cached_property
    def k(self) -> np.ndarray:
        return np.arange(-self.N // 2, self.N // 2)

    @cached_property
    def xi(self) -> np.ndarray:
        return self.k / self.L

    @cached_property
    def _phase(self) -> np.ndarray:
        # e^{-2 pi i xi_k x_0} = (-1)^k links the centred DFT to numpy's FFT
        return np.where(self.k % 2 == 0, 1.0, -1.0)


def make_grid(N: int, L: float | None = None) -> GridSpec:
    """Build a grid; ``L`` defaults to ``sqrt(N)`` (symmetric resolution)."""
    if L is None:
        L = math.sqrt(N)
    return GridSpec(int(N) if isinstance(N, (int, np.integer)) else N, float(L))


@dataclass(frozen=True, eq=False)
class Signal:
    """Complex samples on a grid with the quadrature inner product ``(L/N) sum f conj(g)``."""

    grid: GridSpec
    samples: np.ndarray

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} samples, got shape {samples.shape}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def inner(self, other: Signal) -> complex:
        _check_same_grid(self, other)
        return complex(self.grid.dx * np.vdot(other.samples, self.samples))

    def norm(self) -> float:
        return float(math.sqrt(self.grid.dx) * np.linalg.norm(self.samples))

    def __add__(self, other: Signal) -> Signal:
        _check_same_grid(self, other)
        return Signal(self.grid, self.samples + other.samples)

    def __sub__(self, other: Signal) -> Signal:
        _check_same_grid(self, other)
        return Signal(self.grid, self.samples - other.samples)

    def __mul__(self, scalar: complex) -> Signal:
        return Signal(self.grid, self.samples * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar: complex) -> Signal:
        return Signal(self.grid, self.samples / scalar)

    def __neg__(self) -> Signal:
        return Signal(self.grid, -self.samples)


def _check_same_grid(f: Signal, g: Signal) -> None:
    if f.grid != g.grid:
        raise ValueError(f"signals live on different grids: {f.grid} vs {g.grid}")


@dataclass(frozen=True, eq=False)
class StftGrid:
    """STFT values ``V[m, k] = V_g f(x_m, xi_k)`` on the full phase-space grid."""

    grid: GridSpec
    values: np.ndarray

    @property
    def cell_area(self) -> float:
        return self.grid.cell_area


def gaussian_window(grid: GridSpec) -> Signal:
    """Sample ``2^{1/4} exp(-pi x^2)``; no renormalization."""
    return Signal(grid, 2**0.25 * np.exp(-np.pi * grid.x**2))


def hermite_window(grid: GridSpec, n: int) -> Signal:
    """
    n-th Hermite function ``H_n(sqrt(2 pi) x) exp(-pi x^2)``, normalized on the grid.

    ``H_n`` are the physicists' Hermite polynomials, evaluated by the
    three-term recurrence ``H_{k+1} = 2u H_k - 2k H_{k-1}``.
    """
    if not 0 <= n <= 8:
        raise ValueError(f"Hermite order must be in [0, 8], got {n}")
    u = math.sqrt(2 * math.pi) * grid.x
    h_prev, h = np.zeros_like(u), np.ones_like(u)
    for k in range(n):
        h_prev, h = h, 2 * u * h - 2 * k * h_prev
    f = Signal(grid, h * np.exp(-np.pi * grid.x**2))
    return f / f.norm()


def dft(f: Signal) -> Signal:
    """``F_k = (L/N) sum_n f_n exp(-2 pi i xi_k x_n)`` with ``k`` centred at zero."""
    grid = f.grid
    F = np.fft.fftshift(np.fft.fft(f.samples)) * grid._phase * grid.dx
    return Signal(grid, F)


def idft(F: Signal) -> Signal:
    """Inverse of :func:`dft`: ``f_n = (1/L) sum_k F_k exp(2 pi i xi_k x_n)``."""
    grid = F.grid
    f = np.fft.ifft(np.fft.ifftshift(F.samples * grid._phase)) / grid.dx
    return Signal(grid, f)


def _dft_rows(a: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Apply :func:`dft` to every row of a 2-d array."""
    return np.fft.fftshift(np.fft.fft(a, axis=-1), axes=-1) * grid._phase * grid.dx


def _translated_rows(g: np.ndarray, N: int) -> np.ndarray:
    """Row m holds g(x_n - x_m), the cyclic shift that places g's origin at x_m."""
    m = np.arange(N)[:, None]
    n = np.arange(N)[None, :]
    return g[(n - m + N // 2) % N]


def stft_full(f: Signal, g: Signal) -> StftGrid:
    """
    Short-time Fourier transform on every grid point.

    ``values[m, k] = sum_n (L/N) f_n conj(g(x_n - x_m)) exp(-2 pi i xi_k x_n)``,
    i.e. the inner product of ``f`` against ``g`` translated to ``x_m`` and
    modulated by ``xi_k`` (no symmetric phase).
    """
    _check_same_grid(f, g)
    if not np.any(g.samples):
        raise ValueError("window must be nonzero")
    grid = f.grid
    windowed = f.samples[None, :] * np.conj(_translated_rows(g.samples, grid.N))
    return StftGrid(grid, _dft_rows(windowed, grid))


def mixed_modulation_norm(f: Signal, p: float = 1.0, q: float = 1.0, window: Signal | None = None) -> float:
    """
    Discrete mixed ``L^{p,q}`` norm of ``V_g f`` (Gaussian ``g`` by default).

    The inner ``p``-norm runs over position with weight ``dx``, the outer
    ``q``-norm over frequency with weight ``dxi``; ``math.inf`` means maximum.
    """
    if p < 1 or q < 1:
        raise ValueError(f"p and q must be >= 1, got p={p}, q={q}")
    grid = f.grid
    g = gaussian_window(grid) if window is None else window
    V = np.abs(stft_full(f, g).values)
    if math.isinf(p):
        inner = V.max(axis=0)
    else:
        inner = (np.sum(V**p, axis=0) * grid.dx) ** (1.0 / p)
    if math.isinf(q):
        return float(inner.max())
    return float((np.sum(inner**q) * grid.dxi) ** (1.0 / q))


def m1_norm(f: Signal) -> float:
    """Riemann-sum proxy of ``||V_phi f||_{L^1}`` with the Gaussian window."""
    return mixed_modulation_norm(f, 1.0, 1.0)
