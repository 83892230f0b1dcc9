from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_signal
from gaborflow.grid import Signal, dft, gaussian_window, make_grid, stft_full
from gaborflow.shifts import modulate, pi_shift, rho, rho_batch, translate, wrap

coord = st.floats(-100, 100, allow_nan=False)


def test_wrap_idempotent_and_fixes_inside(grid256):
    pts = np.random.default_rng(0).uniform(-50, 50, size=(200, 2))
    once = wrap(grid256, pts)
    assert np.all(once >= -8) and np.all(once < 8)
    assert np.array_equal(wrap(grid256, once), once)
    inside = np.array([[0.0, 0.0], [-8.0, -8.0], [7.9, 3.2]])
    assert np.array_equal(wrap(grid256, inside), inside)
    assert np.array_equal(wrap(grid256, [8.0, -8.0]), [-8.0, -8.0])


def test_translate(grid256, rng):
    f = random_signal(rng, grid256)
    assert translate(f, 0.0) is f
    np.testing.assert_allclose(translate(f, grid256.dx).samples, np.roll(f.samples, 1), atol=1e-12)
    for a in rng.uniform(-20, 20, 10):
        assert abs(translate(f, a).norm() - f.norm()) <= 1e-12 * f.norm()


def test_modulate(grid256, rng):
    f = random_signal(rng, grid256)
    assert modulate(f, 0.0) is f
    np.testing.assert_allclose(dft(modulate(f, 1 / grid256.L)).samples, np.roll(dft(f).samples, 1), atol=1e-12)
    assert modulate(f, 0.37).norm() == pytest.approx(f.norm(), rel=1e-15)


def test_rho_examples(grid256, phi256):
    assert rho((0, 0), phi256) is phi256
    shifted = np.abs(rho((1, 0), phi256).samples)
    np.testing.assert_allclose(shifted, 2**0.25 * np.exp(-np.pi * (grid256.x - 1) ** 2), atol=1e-10)
    defect = rho((1, 0), rho((0, 1), phi256)) + rho((1, 1), phi256)
    assert defect.norm() <= 1e-3 * phi256.norm()


def test_pi_shift(grid256, phi256, rng):
    assert np.allclose(pi_shift((0, 0), phi256).samples, phi256.samples)
    f = random_signal(rng, grid256)
    for x, xi in rng.uniform(-3, 3, size=(10, 2)):
        np.testing.assert_allclose(
            pi_shift((x, xi), phi256).samples, np.exp(1j * np.pi * x * xi) * rho((x, xi), phi256).samples, atol=1e-14
        )
        assert abs(f.inner(pi_shift((x, xi), phi256))) == pytest.approx(abs(f.inner(rho((x, xi), phi256))), rel=1e-12)


@pytest.mark.parametrize("N", [64, 256])
def test_rho_unitary(N):
    g = make_grid(N)
    rng = np.random.default_rng(N)
    f = random_signal(rng, g)
    for z in rng.uniform(-20, 20, size=(100, 2)):
        assert abs(rho(z, f).norm() - f.norm()) <= 1e-12 * f.norm()


@settings(max_examples=50, deadline=None)
@given(x=coord, xi=coord)
def test_rho_batch_matches_rho(x, xi):
    g = make_grid(32)
    f = gaussian_window(g)
    rows = rho_batch(np.array([[x, xi], [0.0, 0.0]]), f)
    np.testing.assert_allclose(rows[0], rho((x, xi), f).samples, atol=1e-12)
    np.testing.assert_allclose(rows[1], f.samples, atol=1e-15)
    rows = rho_batch(np.array([[x, xi]]), f, symmetric=False)
    np.testing.assert_allclose(rows[0], pi_shift((x, xi), f).samples, atol=1e-12)


def test_periodicity_of_shifts(grid256, phi256):
    z = np.array([1.3, -0.4])
    for period in ([grid256.L, 0], [0, grid256.xi_period]):
        a = rho(z, phi256).samples
        b = rho(z + np.array(period), phi256).samples
        assert np.allclose(np.abs(a), np.abs(b), atol=1e-12)


def test_stft_magnitude_covariance():
    g = make_grid(64)
    f = gaussian_window(g)
    f = Signal(g, f.samples * np.exp(2j * np.pi * 0.5 * g.x**2 / 4))
    V = np.abs(stft_full(f, gaussian_window(g)).values)
    for a, b in [(3, 0), (0, -5), (4, 7)]:
        shifted = np.abs(stft_full(rho((a * g.dx, b * g.dxi), f), gaussian_window(g)).values)
        assert np.max(np.abs(shifted - np.roll(V, (a, b), axis=(0, 1)))) < 1e-6


def _composition_defect(N: int, pairs: np.ndarray) -> float:
    g = make_grid(N)
    phi = gaussian_window(g)
    worst = 0.0
    for (x, xi), (y, eta) in pairs:
        lhs = rho((x, xi), rho((y, eta), phi))
        rhs = rho((x + y, xi + eta), phi) * np.exp(-1j * np.pi * (x * eta - y * xi))
        worst = max(worst, (lhs - rhs).norm())
    return worst


def test_composition_defect_small_at_256():
    rng = np.random.default_rng(8)
    directions = rng.normal(size=(30, 2, 2))
    radii = rng.uniform(0, 3, size=(30, 2, 1))
    pairs = directions / np.linalg.norm(directions, axis=-1, keepdims=True) * radii
    assert _composition_defect(256, pairs) <= 1e-3


def test_composition_defect_decreases_with_n():
    # decrease is tested until the defect reaches roundoff
    rng = np.random.default_rng(9)
    pairs = rng.uniform(-3 / math.sqrt(2), 3 / math.sqrt(2), size=(10, 2, 2))
    d = [_composition_defect(N, pairs) for N in (64, 256, 1024)]
    assert d[1] < d[0]
    assert d[2] <= max(d[1], 1e-13)
