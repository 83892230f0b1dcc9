"""
Time-frequency shifts with arbitrary real arguments.

Translation multiplies the DFT by a phase ramp, modulation multiplies the
samples by a phase, so both are exactly unitary for every real shift. Both
are exactly periodic with periods ``L`` and ``N/L``, which makes reducing
node coordinates to the phase-space torus lossless up to the symmetric phase.
"""

from __future__ import annotations

import numpy as np

from .grid import GridSpec, Signal, dft, idft


def wrap(grid: GridSpec, z) -> np.ndarray:
    """Reduce points into ``[-L/2, L/2) x [-N/(2L), N/(2L))``; accepts ``(2,)`` or ``(n, 2)``."""
    z = np.asarray(z, dtype=float)
    periods = np.array([grid.L, grid.xi_period])
    out = z - periods * np.floor((z + periods / 2) / periods)
    # floor can round a point just below the upper edge onto it
    return np.where(out >= periods / 2, out - periods, out)


def translate(f: Signal, a: float) -> Signal:
    """Band-limited periodic translation ``f(. - a)``."""
    if a == 0:
        return f
    grid = f.grid
    F = dft(f).samples * np.exp(-2j * np.pi * grid.xi * a)
    return idft(Signal(grid, F))


def modulate(f: Signal, b: float) -> Signal:
    """Pointwise multiplication by ``exp(2 pi i b x_n)``."""
    if b == 0:
        return f
    return Signal(f.grid, f.samples * np.exp(2j * np.pi * b * f.grid.x))


def rho(z, f: Signal) -> Signal:
    """Symmetric shift ``exp(-pi i x xi) M_xi T_x f`` at the torus-reduced point ``z``."""
    x, xi = wrap(f.grid, z)
    if x == 0 and xi == 0:
        return f
    return modulate(translate(f, x), xi) * np.exp(-1j * np.pi * x * xi)


def pi_shift(z, f: Signal) -> Signal:
    """Non-symmetric shift ``M_xi T_x f = exp(pi i x xi) rho(z) f``."""
    x, xi = wrap(f.grid, z)
    return rho((x, xi), f) * np.exp(1j * np.pi * x * xi)


def rho_batch(points: np.ndarray, g: Signal, symmetric: bool = True) -> np.ndarray:
    """
    Rows ``rho(z_i) g`` (or ``pi(z_i) g``) for an ``(n, 2)`` array of points.

    Same arithmetic as :func:`rho`, vectorized over the nodes.
    """
    grid = g.grid
    pts = wrap(grid, np.asarray(points, dtype=float).reshape(-1, 2))
    x, xi = pts[:, :1], pts[:, 1:]
    G = dft(g).samples[None, :] * np.exp(-2j * np.pi * grid.xi[None, :] * x)
    rows = np.fft.ifft(np.fft.ifftshift(G * grid._phase, axes=-1), axis=-1) / grid.dx
    rows = rows * np.exp(2j * np.pi * xi * grid.x[None, :])
    if symmetric:
        rows = rows * np.exp(-1j * np.pi * x * xi)
    return rows
