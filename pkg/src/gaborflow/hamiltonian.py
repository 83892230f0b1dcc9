"""Hamiltonians ``H(x, p) = <M z, z> + sigma(x, p)`` on the phase plane."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg

from . import symbol
from .symbol import Expr

J = np.array([[0.0, 1.0], [-1.0, 0.0]])
J.setflags(write=False)


class PhasePoint(NamedTuple):
    x: float
    xi: float


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """
    Quadratic form ``M`` (symmetrized on construction) plus optional symbol ``sigma``.

    ``fd_step`` is the central-difference step used for the gradient of ``sigma``;
    ``hess_step`` the one used for its Hessian.
    """

    M: np.ndarray
    sigma: Expr | None = None
    fd_step: float = 1e-5
    hess_step: float = 1e-4
    sigma_text: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        M = np.asarray(self.M, dtype=float)
        if M.shape != (2, 2) or not np.all(np.isfinite(M)):
            raise ValueError(f"M must be a finite 2x2 matrix, got {self.M!r}")
        M = (M + M.T) / 2
        M.setflags(write=False)
        object.__setattr__(self, "M", M)

    @classmethod
    def from_entries(cls, m11: float, m12: float, m22: float, sigma: str | None = None, **kwargs) -> HamiltonianSpec:
        expr = symbol.parse(sigma) if sigma else None
        return cls(np.array([[m11, m12], [m12, m22]]), expr, sigma_text=sigma, **kwargs)

    @property
    def is_quadratic(self) -> bool:
        return self.sigma is None

    def quadratic_part(self) -> HamiltonianSpec:
        return HamiltonianSpec(self.M, None, self.fd_step, self.hess_step)

    def symbol(self, x, p):
        """Phase-space symbol ``m11 x^2 + 2 m12 x p + m22 p^2 + sigma``, vectorized."""
        (m11, m12), (_, m22) = self.M
        value = m11 * np.square(x) + 2 * m12 * np.multiply(x, p) + m22 * np.square(p)
        if self.sigma is not None:
            value = value + symbol.evaluate(self.sigma, x, p)
        return value


def _as_points(z) -> np.ndarray:
    return np.asarray(z, dtype=float)


def eval_H(spec: HamiltonianSpec, z) -> float | np.ndarray:
    """``<M z, z> + sigma(z)`` for a point or an ``(..., 2)`` array of points."""
    z = _as_points(z)
    value = spec.symbol(z[..., 0], z[..., 1])
    return float(value) if np.ndim(value) == 0 else value


def vector_field(spec: HamiltonianSpec, z) -> np.ndarray:
    """
    Hamiltonian vector field ``(dH/dp, -dH/dx)``.

    The quadratic part is differentiated exactly (``grad a = 2 M z``), the
    perturbation by central differences. Accepts ``(2,)`` or ``(n, 2)`` input.
    """
    z = _as_points(z)
    grad = 2 * z @ spec.M
    if spec.sigma is not None:
        sx, sp = symbol.grad(spec.sigma, z[..., 0], z[..., 1], spec.fd_step)
        grad = grad + np.stack([sx, sp], axis=-1)
    return np.stack([grad[..., 1], -grad[..., 0]], axis=-1)


def linear_flow_exact(spec: HamiltonianSpec, t: float) -> np.ndarray:
    """Flow matrix ``exp(2 t J M)`` of a purely quadratic Hamiltonian."""
    if not spec.is_quadratic:
        raise ValueError("the exact linear flow exists only for purely quadratic Hamiltonians")
    return scipy.linalg.expm(2.0 * t * (J @ spec.M))


def hessian_H(spec: HamiltonianSpec, x, p) -> np.ndarray:
    """Hessian of H: ``2 M`` plus the finite-difference Hessian of sigma."""
    shape = np.broadcast(np.asarray(x), np.asarray(p)).shape
    H = np.broadcast_to(2 * spec.M, shape + (2, 2))
    if spec.sigma is not None:
        H = H + symbol.hessian(spec.sigma, x, p, spec.hess_step)
    return H


def lipschitz_estimate(spec: HamiltonianSpec, box: tuple[float, float, float, float], samples: int = 41) -> float:
    """
    Empirical Lipschitz constant of the vector field on ``box = (x0, x1, p0, p1)``.

    Maximum over a ``samples x samples`` grid of the spectral norm of
    ``J Hess H(z)``, the Jacobian of the vector field.
    """
    if samples < 4:
        raise ValueError("need at least 4 samples per axis")
    x0, x1, p0, p1 = box
    if not (x1 > x0 and p1 > p0):
        raise ValueError(f"empty box {box}")
    X, P = np.meshgrid(np.linspace(x0, x1, samples), np.linspace(p0, p1, samples), indexing="ij")
    jac = J @ hessian_H(spec, X, P)
    return float(np.linalg.norm(jac, ord=2, axis=(-2, -1)).max())
