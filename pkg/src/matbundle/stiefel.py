"""The non-compact Stiefel manifold of full-rank ``k x r`` matrices.

Viewed as a principal bundle over ``G_r(R^k)`` with fibre ``GL_r``.  The
chart centred at ``Z`` writes ``W = (Z + Z_perp X) G`` and is defined on all
``W`` with ``det(Z^T W) != 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, OutOfChartDomain, SingularFactor
from .grassmann import GrassmannChart, Subspace, in_domain
from .numerics import as_matrix, sigma_ratio

#: ``G`` is treated as invertible when sigma_min(G) > GL_TOL * sigma_max(G).
GL_TOL = 1e-12


def check_invertible(g, name: str = "G", tol: float = GL_TOL) -> np.ndarray:
    g = as_matrix(g, name)
    if g.shape[0] != g.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got {g.shape}")
    if sigma_ratio(g) <= tol:
        raise SingularFactor(f"{name} is numerically singular")
    return g


class StiefelCoords(NamedTuple):
    X: np.ndarray
    G: np.ndarray


class StiefelTangent(NamedTuple):
    """Tangent vector in chart coordinates."""

    dX: np.ndarray
    dG: np.ndarray


def bundle_project(w) -> Subspace:
    """Bundle projection ``W -> col(W)``."""
    return Subspace(w)


@dataclass(frozen=True, eq=False)
class StiefelChart:
    """Chart ``xi_Z`` of the Stiefel manifold; shares data with the Grassmann chart."""

    base: GrassmannChart

    @classmethod
    def at(cls, z) -> "StiefelChart":
        return cls(GrassmannChart.at(z))

    @property
    def center(self):
        return self.base.center

    @property
    def complement(self):
        return self.base.complement

    @property
    def center_pinv(self):
        return self.base.center_pinv

    @property
    def complement_pinv(self):
        return self.base.complement_pinv

    @property
    def k(self) -> int:
        return self.base.k

    @property
    def r(self) -> int:
        return self.base.r

    @property
    def dimension(self) -> int:
        """``k r = r (k - r) + r^2``."""
        return self.base.dimension + self.r * self.r

    def contains(self, w) -> bool:
        return self.base.contains(w)

    # -- chart ----------------------------------------------------------------

    def apply(self, w) -> StiefelCoords:
        """``xi_Z(W) = (Z_perp^+ W (Z^+ W)^{-1}, Z^+ W)``."""
        w = self.base._check_rep(w)
        if not in_domain(self.center, w):
            raise OutOfChartDomain("Z^T W is numerically singular")
        g = self.center_pinv @ w
        x = np.linalg.solve(g.T, (self.complement_pinv @ w).T).T
        return StiefelCoords(x, g)

    def inverse(self, coords) -> np.ndarray:
        """``xi_Z^{-1}(X, G) = (Z + Z_perp X) G``."""
        x, g = coords
        g = check_invertible(g)
        if g.shape != (self.r, self.r):
            raise DimensionMismatch(f"G must be {self.r} x {self.r}, got {g.shape}")
        return self.base.section(x) @ g

    def fiber_chart(self, w) -> tuple[Subspace, np.ndarray]:
        """Local trivialisation ``W -> (col(W), Z^+ W)``."""
        x, g = self.apply(w)
        return self.base.inverse(x), g

    def transition(self, target: "StiefelChart", coords) -> StiefelCoords:
        return target.apply(self.inverse(coords))

    # -- tangent maps ----------------------------------------------------------

    def tangent_push(self, t) -> np.ndarray:
        """Tangent map at the centre: ``(dX, dG) -> Z_perp dX + Z dG``."""
        dx, dg = t
        return self.complement @ dx + self.center @ dg

    def tangent_pull(self, zdot) -> StiefelTangent:
        """Inverse tangent map ``Zdot -> (Z_perp^+ Zdot, Z^+ Zdot)``."""
        zdot = self.base._check_rep(zdot)
        return StiefelTangent(self.complement_pinv @ zdot, self.center_pinv @ zdot)

    def tangent_split(self, zdot) -> tuple[np.ndarray, np.ndarray]:
        """Vertical part ``Z Z^+ Zdot`` and horizontal part ``Z_perp Z_perp^+ Zdot``."""
        zdot = self.base._check_rep(zdot)
        vertical = self.center @ (self.center_pinv @ zdot)
        horizontal = self.complement @ (self.complement_pinv @ zdot)
        return vertical, horizontal

    def differential(self, coords, t) -> np.ndarray:
        """Derivative of ``(X, G) -> (Z + Z_perp X) G`` at ``coords`` along ``t``."""
        x, g = coords
        dx, dg = t
        return self.complement @ dx @ g + self.base.section(x) @ dg

    def differential_matrix(self, coords) -> np.ndarray:
        """Matrix of :meth:`differential` in the standard bases, ``kr x kr``."""
        nx = self.base.dimension
        cols = []
        for i in range(self.dimension):
            e = np.zeros(self.dimension)
            e[i] = 1.0
            dx = e[:nx].reshape(self.base.coord_shape)
            dg = e[nx:].reshape(self.r, self.r)
            cols.append(self.differential(coords, (dx, dg)).ravel())
        return np.column_stack(cols)

    # -- local Lie group -------------------------------------------------------

    def group_op(self, w1, w2) -> np.ndarray:
        """``xi^{-1}(X + X', G G')``."""
        x1, g1 = self.apply(w1)
        x2, g2 = self.apply(w2)
        return self.inverse((x1 + x2, g1 @ g2))

    def group_inverse(self, w) -> np.ndarray:
        x, g = self.apply(w)
        return self.inverse((-x, np.linalg.inv(g)))

    @property
    def identity(self) -> np.ndarray:
        return self.center

    def eta(self, w) -> tuple[np.ndarray, np.ndarray]:
        """Group isomorphism ``W -> (exp(Z_perp X Z^+), G)``."""
        x, g = self.apply(w)
        return self.base.lie_exp(x), g
