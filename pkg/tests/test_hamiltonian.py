from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaborflow.hamiltonian import (
    J,
    HamiltonianSpec,
    PhasePoint,
    eval_H,
    lipschitz_estimate,
    linear_flow_exact,
    vector_field,
)

HO = HamiltonianSpec.from_entries(1, 0, 1)
FREE = HamiltonianSpec.from_entries(0, 0, 1)


def test_symplectic_form():
    assert np.array_equal(J @ J, -np.eye(2))
    assert np.array_equal(J.T, -J)
    with pytest.raises(ValueError):
        J[0, 0] = 1


def test_spec_symmetrizes():
    spec = HamiltonianSpec(np.array([[1.0, 2.0], [0.0, 3.0]]))
    assert np.array_equal(spec.M, [[1, 1], [1, 3]])
    assert spec.is_quadratic
    with pytest.raises(ValueError):
        HamiltonianSpec(np.eye(3))


def test_eval_h_examples():
    assert eval_H(HO, PhasePoint(1, 0)) == 1
    assert eval_H(HO, PhasePoint(3, 4)) == 25
    assert eval_H(HamiltonianSpec.from_entries(0, 0, 0, "cos(x)"), (0, 5)) == 1


def test_vector_field_examples():
    np.testing.assert_array_equal(vector_field(HO, (1, 0)), [0, -2])
    np.testing.assert_array_equal(vector_field(HO, (0, 0)), [0, 0])
    np.testing.assert_allclose(vector_field(HamiltonianSpec.from_entries(0, 0, 0, "p^2"), (0, 3)), [6, 0], atol=1e-6)


def test_vector_field_is_j_grad_h():
    rng = np.random.default_rng(3)
    spec = HamiltonianSpec.from_entries(0.7, -0.2, 1.3, "0.3*cos(x)*sin(p) + 0.1*x^3")
    h = 1e-5
    for z in rng.uniform(-3, 3, size=(100, 2)):
        gx = (eval_H(spec, z + [h, 0]) - eval_H(spec, z - [h, 0])) / (2 * h)
        gp = (eval_H(spec, z + [0, h]) - eval_H(spec, z - [0, h])) / (2 * h)
        np.testing.assert_allclose(vector_field(spec, z), J @ [gx, gp], atol=1e-6)


def test_vector_field_batches():
    z = np.array([[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]])
    np.testing.assert_array_equal(vector_field(HO, z), [vector_field(HO, p) for p in z])


def test_linear_flow_examples():
    np.testing.assert_array_equal(linear_flow_exact(HO, 0.0), np.eye(2))
    np.testing.assert_allclose(linear_flow_exact(HO, math.pi / 4), [[0, 1], [-1, 0]], atol=1e-12)
    np.testing.assert_allclose(linear_flow_exact(FREE, 1.0), [[1, 2], [0, 1]], atol=1e-12)
    with pytest.raises(ValueError):
        linear_flow_exact(HamiltonianSpec.from_entries(1, 0, 1, "cos(x)"), 0.1)


@settings(max_examples=50, deadline=None)
@given(
    m=st.tuples(*[st.floats(-2, 2)] * 3),
    t=st.floats(-5, 5),
    s=st.floats(-5, 5),
)
def test_linear_flow_group_and_symplectic(m, t, s):
    spec = HamiltonianSpec.from_entries(*m)
    Pt, Ps = linear_flow_exact(spec, t), linear_flow_exact(spec, s)
    Pts = linear_flow_exact(spec, t + s)
    assert np.max(np.abs(Pt @ Ps - Pts)) <= 1e-10 * max(1.0, np.abs(Pt).max() * np.abs(Ps).max())
    assert abs(np.linalg.det(Pt) - 1) <= 1e-10 * max(1.0, np.abs(Pt).max() ** 2)


def test_symplectic_determinant_long_times():
    spec = HamiltonianSpec.from_entries(1.0, 0.3, 0.5)
    for t in np.linspace(-10, 10, 41):
        assert abs(np.linalg.det(linear_flow_exact(spec, t)) - 1) < 1e-10


def test_energy_invariance_linear_flow():
    rng = np.random.default_rng(4)
    spec = HamiltonianSpec.from_entries(1.0, 0.4, 0.8)
    for z in rng.uniform(-3, 3, size=(20, 2)):
        for t in (-1.3, 0.2, 2.5):
            assert eval_H(spec, linear_flow_exact(spec, t) @ z) == pytest.approx(eval_H(spec, z), abs=1e-10)


def test_lipschitz_examples():
    assert abs(lipschitz_estimate(HO, (-5, 5, -5, 5)) - 2) < 1e-12
    assert lipschitz_estimate(HamiltonianSpec.from_entries(0, 0, 0), (-1, 1, -1, 1)) == 0
    est = lipschitz_estimate(HamiltonianSpec.from_entries(0, 0, 0, "cos(x)"), (-math.pi, math.pi, -math.pi, math.pi))
    assert abs(est - 1) < 1e-3
    with pytest.raises(ValueError):
        lipschitz_estimate(HO, (-1, 1, -1, 1), samples=3)
