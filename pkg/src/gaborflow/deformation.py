"""Relative separation, Lipschitz-deformation functionals and jitter distance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import directed_hausdorff

from ._pairs import pair_blocks
from .flow import NodeSet


@dataclass(frozen=True)
class DeformationPair:
    """Index-aligned node sets: ``deformed[i]`` is the image of ``base[i]``."""

    base: NodeSet
    deformed: NodeSet

    def __post_init__(self) -> None:
        if len(self.base) != len(self.deformed):
            raise ValueError("base and deformed node sets must have equal length")


@dataclass(frozen=True)
class DeformationReport:
    rel_base: int
    rel_deformed: int
    l1_defect: float
    l2_radius: float
    jitter: float
    R: float


def rel_separation(nodes: NodeSet) -> int:
    """
    Maximal number of nodes in a closed unit square ``a + [0, 1]^2``.

    An optimal square can be slid until its left edge touches a node and its
    bottom edge touches a node of the same vertical strip, so anchors
    ``(x_i, xi_j)`` are exhaustive. Each strip is counted with a sorted sweep.
    """
    pts = nodes.points
    if len(pts) == 0:
        return 0
    order = np.argsort(pts[:, 0], kind="stable")
    xs, ps = pts[order, 0], pts[order, 1]
    best = 0
    for a in np.unique(xs):
        lo = np.searchsorted(xs, a, side="left")
        hi = np.searchsorted(xs, a + 1.0, side="right")
        if hi - lo <= best:
            continue
        strip = np.sort(ps[lo:hi])
        counts = np.searchsorted(strip, strip + 1.0, side="right") - np.arange(len(strip))
        best = max(best, int(counts.max()))
    return best


def l1_defect(pair: DeformationPair, R: float) -> float:
    """``max |(tau a - tau b) - (a - b)|`` over node pairs with ``|a - b| <= R``."""
    if R <= 0:
        raise ValueError("R must be positive")
    base, moved = pair.base.points, pair.deformed.points
    worst = 0.0
    for i, j in pair_blocks(len(base)):
        d0 = base[i] - base[j]
        near = np.hypot(d0[:, 0], d0[:, 1]) <= R
        if np.any(near):
            diff = (moved[i] - moved[j] - d0)[near]
            worst = max(worst, float(np.hypot(diff[:, 0], diff[:, 1]).max()))
    return worst


def l2_radius(pair: DeformationPair, R: float) -> float:
    """``max |a - b|`` over node pairs whose images satisfy ``|tau a - tau b| <= R``."""
    if R <= 0:
        raise ValueError("R must be positive")
    base, moved = pair.base.points, pair.deformed.points
    worst = 0.0
    for i, j in pair_blocks(len(base)):
        d1 = moved[i] - moved[j]
        near = np.hypot(d1[:, 0], d1[:, 1]) <= R
        if np.any(near):
            d0 = (base[i] - base[j])[near]
            worst = max(worst, float(np.hypot(d0[:, 0], d0[:, 1]).max()))
    return worst


def jitter(a: NodeSet, b: NodeSet) -> float:
    """Hausdorff distance between two nonempty node sets."""
    if len(a) == 0 or len(b) == 0:
        raise ValueError("jitter needs two nonempty node sets")
    return max(directed_hausdorff(a.points, b.points)[0], directed_hausdorff(b.points, a.points)[0])


def deformation_report(pair: DeformationPair, R: float) -> DeformationReport:
    return DeformationReport(
        rel_base=rel_separation(pair.base),
        rel_deformed=rel_separation(pair.deformed),
        l1_defect=l1_defect(pair, R),
        l2_radius=l2_radius(pair, R),
        jitter=jitter(pair.base, pair.deformed),
        R=R,
    )
