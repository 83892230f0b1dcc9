from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import data_path
from gaborflow.config import load_config
from gaborflow.deformation import (
    DeformationPair,
    deformation_report,
    jitter,
    l1_defect,
    l2_radius,
    rel_separation,
)
from gaborflow.experiment import build_grid, build_nodes, build_spec
from gaborflow.flow import NodeSet, distortion_constants, flow_set
from gaborflow.hamiltonian import HamiltonianSpec

HO = HamiltonianSpec.from_entries(1, 0, 1)


def rel_brute_force(points: np.ndarray) -> int:
    best = 0
    for ax, ap in itertools.product(points[:, 0], points[:, 1]):
        inside = (points[:, 0] >= ax) & (points[:, 0] <= ax + 1) & (points[:, 1] >= ap) & (points[:, 1] <= ap + 1)
        best = max(best, int(inside.sum()))
    return best


def test_rel_examples():
    assert rel_separation(NodeSet(np.zeros((0, 2)))) == 0
    assert rel_separation(NodeSet.rect_lattice(1, 1, (0, 3.5, 0, 3.5))) == 4
    assert rel_separation(NodeSet([[0, 0], [0.5, 0], [2, 0]])) == 2


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40))
def test_rel_matches_brute_force(seed, n):
    rng = np.random.default_rng(seed)
    pts = np.round(rng.uniform(0, 3, size=(n, 2)) * 4) / 4
    assert rel_separation(NodeSet(pts)) == rel_brute_force(pts)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.tuples(st.integers(-40, 40), st.integers(-40, 40)))
def test_rel_translation_invariant(seed, shift):
    rng = np.random.default_rng(seed)
    pts = np.round(rng.uniform(-2, 2, size=(25, 2)) * 8) / 8
    # dyadic coordinates and shifts keep the comparisons exact
    assert rel_separation(NodeSet(pts + np.array(shift) / 8)) == rel_separation(NodeSet(pts))


def test_l1_examples():
    nodes = NodeSet.rect_lattice(1, 1, (-2, 2.5, -2, 2.5))
    assert l1_defect(DeformationPair(nodes, nodes), 2.0) == 0.0
    scaled = DeformationPair(nodes, NodeSet(1.01 * nodes.points))
    assert abs(l1_defect(scaled, 2.0) - 0.02) < 1e-12
    flowed = DeformationPair(nodes, flow_set(HO, nodes, 0.1))
    assert l1_defect(flowed, 2.0) <= 2 * 0.1 * np.exp(0.2) * 2
    with pytest.raises(ValueError):
        l1_defect(flowed, 0.0)


def test_l1_monotone_in_radius():
    nodes = NodeSet(np.random.default_rng(1).uniform(-3, 3, size=(60, 2)))
    pair = DeformationPair(nodes, flow_set(HamiltonianSpec.from_entries(1, 0, 1, "0.1*cos(x)"), nodes, 0.3))
    values = [l1_defect(pair, R) for R in (0.5, 1.0, 2.0, 4.0, 8.0)]
    assert values == sorted(values)


def test_l2_examples():
    nodes = NodeSet.rect_lattice(1, 1, (-2, 2.5, -2, 2.5))
    assert l2_radius(DeformationPair(nodes, nodes), 2.0) == 2.0
    generic = NodeSet(np.random.default_rng(2).uniform(-3, 3, size=(80, 2)))
    r = l2_radius(DeformationPair(generic, NodeSet(generic.points / 2)), 1.0)
    assert 1 < r <= 2


def test_l2_bounded_by_distortion():
    nodes = NodeSet.rect_lattice(0.75, 0.75, (-3, 3, -3, 3))
    spec = HamiltonianSpec.from_entries(1, 0.2, 0.6, "0.1*cos(x)")
    dist = distortion_constants(spec, nodes, 1.0, count=9)
    R = 2.0
    for t in np.linspace(-1, 1, 9):
        pair = DeformationPair(nodes, flow_set(spec, nodes, float(t)))
        assert l2_radius(pair, R) <= R / dist.cT + 1e-12


def test_jitter_examples():
    a = NodeSet([[0.0, 0.0], [1.0, 1.0]])
    assert jitter(a, a) == 0.0
    assert jitter(NodeSet([[0.0, 0.0]]), NodeSet([[3.0, 4.0]])) == 5.0
    nodes = NodeSet(np.random.default_rng(3).uniform(-3, 3, size=(40, 2)))
    moved = flow_set(HO, nodes, 0.05)
    assert jitter(nodes, moved) <= np.max(np.linalg.norm(moved.points - nodes.points, axis=1)) + 1e-15
    with pytest.raises(ValueError):
        jitter(a, NodeSet(np.zeros((0, 2))))


def test_pair_length_check():
    with pytest.raises(ValueError):
        DeformationPair(NodeSet([[0.0, 0.0]]), NodeSet([[0.0, 0.0], [1.0, 1.0]]))


def test_l1_vanishes_along_shrinking_times():
    cfg = load_config(data_path("baseline.json"))
    nodes = build_nodes(cfg, build_grid(cfg))
    spec = build_spec(cfg)
    values = [l1_defect(DeformationPair(nodes, flow_set(spec, nodes, t)), 2.0) for t in (0.2, 0.1, 0.05, 0.025, 0.0125)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert values[-1] < 0.1


@pytest.mark.parametrize("name", ["baseline.json", "quadratic_control.json", "minimal.json"])
def test_rel_limsup_bounded(name):
    cfg = load_config(data_path(name))
    nodes = build_nodes(cfg, build_grid(cfg))
    spec = build_spec(cfg)
    base = rel_separation(nodes)
    for t in (-0.2, -0.1, 0.05, 0.2):
        assert rel_separation(flow_set(spec, nodes, t)) <= base + 4


def test_report_bundles_metrics():
    nodes = NodeSet.rect_lattice(1, 1, (-2, 2.5, -2, 2.5))
    pair = DeformationPair(nodes, flow_set(HO, nodes, 0.1))
    rep = deformation_report(pair, 2.0)
    assert rep.rel_base == 4
    assert rep.l1_defect == l1_defect(pair, 2.0)
    assert rep.jitter == jitter(pair.base, pair.deformed)
