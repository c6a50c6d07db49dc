"""The manifold of ``n x m`` matrices of rank exactly ``r``.

A point ``Z = U G V^T`` lives in the chart centred at ``(col U, col V)``::

    theta^{-1}(X, Y, H) = (U + U_perp X) H (V + V_perp Y)^T

The chart depends on ``U`` and ``V`` only, never on the middle factor ``G``;
tangent maps at the centre need ``G`` and take it as an explicit argument.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, OutOfChartDomain, RankDeficient, RankMismatch
from .grassmann import DOMAIN_TOL, GrassmannChart, Subspace
from .numerics import (
    as_matrix,
    factor_rank_r,
    format_matrix_blocks,
    frozen,
    numerical_rank,
    parse_matrix_blocks,
    singular_values,
)
from .stiefel import check_invertible

#: Below this sigma ratio of ``U^+ A V^{+T}`` a point is outside the chart.
HARD_DOMAIN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RankRPoint:
    """Factored rank-``r`` matrix ``U @ G @ V.T``."""

    U: np.ndarray
    G: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        u, g, v = frozen(self.U, "U"), frozen(self.G, "G"), frozen(self.V, "V")
        r = g.shape[0]
        if g.shape != (r, r) or u.shape[1] != r or v.shape[1] != r:
            raise DimensionMismatch(f"incompatible factor shapes {u.shape}, {g.shape}, {v.shape}")
        for name, f in (("U", u), ("V", v)):
            if numerical_rank(f).numerical_rank < r:
                raise RankDeficient(f"{name} is not of full column rank")
        check_invertible(g)
        object.__setattr__(self, "U", u)
        object.__setattr__(self, "G", g)
        object.__setattr__(self, "V", v)

    @classmethod
    def from_matrix(cls, a, r: int) -> "RankRPoint":
        """Factor ``A`` with a truncated SVD (orthonormal ``U``, ``V``)."""
        return cls(*factor_rank_r(a, r))

    @property
    def rank(self) -> int:
        return self.G.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.U.shape[0], self.V.shape[0])

    @property
    def matrix(self) -> np.ndarray:
        return self.U @ self.G @ self.V.T

    def to_text(self) -> str:
        return format_matrix_blocks((self.U, self.G, self.V))

    @classmethod
    def from_text(cls, text: str) -> "RankRPoint":
        blocks = parse_matrix_blocks(text)
        if len(blocks) != 3:
            raise ValueError(f"expected three matrix blocks (U, G, V), found {len(blocks)}")
        return cls(*blocks)

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path: str | os.PathLike) -> "RankRPoint":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())


def rho_project(p: RankRPoint) -> tuple[Subspace, Subspace]:
    """``U G V^T -> (col U, col V)``."""
    return Subspace(p.U), Subspace(p.V)


class FixedRankCoords(NamedTuple):
    X: np.ndarray
    Y: np.ndarray
    H: np.ndarray
    #: set by :meth:`FixedRankChart.apply` when the point sits close to the chart boundary
    near_boundary: bool = False


class FixedRankTangent(NamedTuple):
    dX: np.ndarray
    dY: np.ndarray
    dH: np.ndarray


@dataclass(frozen=True, eq=False)
class FixedRankChart:
    """Chart ``theta_Z`` built from the Grassmann charts at ``U`` and ``V``."""

    left: GrassmannChart
    right: GrassmannChart

    def __post_init__(self):
        if self.left.r != self.right.r:
            raise DimensionMismatch("left and right charts have different ranks")

    @classmethod
    def from_factors(cls, u, v) -> "FixedRankChart":
        return cls(GrassmannChart.at(u), GrassmannChart.at(v))

    @classmethod
    def at(cls, p: RankRPoint) -> "FixedRankChart":
        return cls.from_factors(p.U, p.V)

    # shorthands matching the usual notation
    U = property(lambda self: self.left.center)
    U_perp = property(lambda self: self.left.complement)
    U_pinv = property(lambda self: self.left.center_pinv)
    U_perp_pinv = property(lambda self: self.left.complement_pinv)
    V = property(lambda self: self.right.center)
    V_perp = property(lambda self: self.right.complement)
    V_pinv = property(lambda self: self.right.center_pinv)
    V_perp_pinv = property(lambda self: self.right.complement_pinv)

    @property
    def r(self) -> int:
        return self.left.r

    @property
    def shape(self) -> tuple[int, int]:
        return (self.left.k, self.right.k)

    @property
    def dimension(self) -> int:
        """``r (n + m - r)``."""
        return self.left.dimension + self.right.dimension + self.r * self.r

    def same_as(self, other: "FixedRankChart") -> bool:
        """Bitwise equality of all chart data."""
        return all(
            np.array_equal(getattr(a, f), getattr(b, f))
            for a, b in ((self.left, other.left), (self.right, other.right))
            for f in ("center", "complement", "center_pinv", "complement_pinv")
        )

    def _check_ambient(self, a, name="A") -> np.ndarray:
        a = as_matrix(a, name)
        if a.shape != self.shape:
            raise DimensionMismatch(f"{name} must have shape {self.shape}, got {a.shape}")
        return a

    def core(self, a) -> np.ndarray:
        """``U^+ A (V^+)^T``, whose invertibility decides chart membership."""
        return self.U_pinv @ self._check_ambient(a) @ self.V_pinv.T

    def boundary_ratio(self, a) -> float:
        """``sigma_min(U^+ A V^{+T}) / (||U^+||_2 ||A||_2 ||V^+||_2)``."""
        a = self._check_ambient(a)
        return self._ratio(self.U_pinv @ a @ self.V_pinv.T, a)

    def _ratio(self, h: np.ndarray, a: np.ndarray) -> float:
        scale = np.linalg.norm(self.U_pinv, 2) * np.linalg.norm(a, 2) * np.linalg.norm(self.V_pinv, 2)
        if scale == 0.0:
            return 0.0
        return float(singular_values(h)[-1] / scale)

    def contains(self, a) -> bool:
        a = self._check_ambient(a)
        return (
            numerical_rank(a).numerical_rank == self.r
            and self.boundary_ratio(a) > DOMAIN_TOL
        )

    # -- chart ----------------------------------------------------------------

    def apply(self, a, check_rank: bool = True) -> FixedRankCoords:
        """Coordinates ``(X, Y, H)`` of a rank-``r`` matrix in this chart.

        Raises
        ------
        RankMismatch
            If ``A`` does not have numerical rank ``r``.
        OutOfChartDomain
            If ``U^+ A V^{+T}`` is numerically singular (see
            :meth:`boundary_ratio`).  Between
            ``HARD_DOMAIN_TOL`` and ``DOMAIN_TOL`` the coordinates are returned
            with ``near_boundary=True`` instead.
        """
        a = self._check_ambient(a)
        if check_rank:
            got = numerical_rank(a).numerical_rank
            if got != self.r:
                raise RankMismatch(f"matrix has numerical rank {got}, chart has rank {self.r}")
        h = self.U_pinv @ a @ self.V_pinv.T
        ratio = self._ratio(h, a)
        if ratio <= HARD_DOMAIN_TOL:
            raise OutOfChartDomain("U^T A V is numerically singular")
        ht = h.T
        x = np.linalg.solve(ht, (self.U_perp_pinv @ a @ self.V_pinv.T).T).T
        y = np.linalg.solve(h, (self.V_perp_pinv @ a.T @ self.U_pinv.T).T).T
        return FixedRankCoords(x, y, h, near_boundary=ratio <= DOMAIN_TOL)

    def factors(self, coords) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(U + U_perp X, H, V + V_perp Y)``."""
        x, y, h = coords[:3]
        return self.left.section(x), as_matrix(h, "H"), self.right.section(y)

    def inverse(self, coords) -> np.ndarray:
        x, y, h = coords[:3]
        h = check_invertible(h, "H")
        if h.shape != (self.r, self.r):
            raise DimensionMismatch(f"H must be {self.r} x {self.r}, got {h.shape}")
        return self.left.section(x) @ h @ self.right.section(y).T

    def point(self, coords) -> RankRPoint:
        return RankRPoint(*self.factors(coords))

    def fiber_chart(self, a) -> tuple[Subspace, Subspace, np.ndarray]:
        """Local trivialisation ``U'H'V'^T -> (col U', col V', H')``."""
        x, y, h = self.apply(a)[:3]
        return self.left.inverse(x), self.right.inverse(y), h

    def transition(self, target: "FixedRankChart", coords) -> FixedRankCoords:
        return target.apply(self.inverse(coords), check_rank=False)

    # -- tangent maps at the centre -------------------------------------------

    def tangent_push(self, g_ref, t) -> np.ndarray:
        """``U_perp dX G V^T + U G (V_perp dY)^T + U dH V^T``."""
        g = check_invertible(g_ref, "G_ref")
        dx, dy, dh = t
        return (
            self.U_perp @ dx @ g @ self.V.T
            + self.U @ g @ (self.V_perp @ dy).T
            + self.U @ dh @ self.V.T
        )

    def tangent_pull(self, g_ref, zdot) -> FixedRankTangent:
        """Left inverse of :meth:`tangent_push`.

        Exact inverse on the tangent space; for a general ``Zdot`` the push of
        the result is the projection of ``Zdot`` onto the tangent space.
        """
        g = check_invertible(g_ref, "G_ref")
        zdot = self._check_ambient(zdot, "Zdot")
        vpt = self.V_pinv.T
        dx = np.linalg.solve(g.T, (self.U_perp_pinv @ zdot @ vpt).T).T
        dy = np.linalg.solve(g, (self.V_perp_pinv @ zdot.T @ self.U_pinv.T).T).T
        dh = self.U_pinv @ zdot @ vpt
        return FixedRankTangent(dx, dy, dh)

    def tangent_split(self, zdot, g_ref=None) -> tuple[np.ndarray, np.ndarray]:
        """Vertical part ``U (U^+ Zdot V^{+T}) V^T`` and the horizontal remainder.

        The split does not depend on the middle factor; ``g_ref`` is accepted
        for symmetry with the other tangent maps and only validated.
        """
        if g_ref is not None:
            check_invertible(g_ref, "G_ref")
        zdot = self._check_ambient(zdot, "Zdot")
        vertical = self.U @ (self.U_pinv @ zdot @ self.V_pinv.T) @ self.V.T
        return vertical, zdot - vertical

    def differential(self, coords, t) -> np.ndarray:
        """Derivative of ``theta^{-1}`` at ``coords`` applied to ``t``."""
        left, h, right = self.factors(coords)
        dx, dy, dh = t
        return (
            self.U_perp @ dx @ h @ right.T
            + left @ h @ (self.V_perp @ dy).T
            + left @ dh @ right.T
        )

    def differential_adjoint(self, coords, zbar) -> FixedRankTangent:
        """Adjoint of :meth:`differential` for the entrywise inner products.

        Maps an ambient gradient to the coordinate gradient.
        """
        left, h, right = self.factors(coords)
        zbar = self._check_ambient(zbar, "gradient")
        return FixedRankTangent(
            self.U_perp.T @ zbar @ right @ h.T,
            self.V_perp.T @ zbar.T @ left @ h,
            left.T @ zbar @ right,
        )

    def differential_matrix(self, coords) -> np.ndarray:
        """``nm x r(n+m-r)`` matrix of :meth:`differential`."""
        shapes = [self.left.coord_shape, self.right.coord_shape, (self.r, self.r)]
        cols = []
        for i in range(self.dimension):
            e = np.zeros(self.dimension)
            e[i] = 1.0
            cols.append(self.differential(coords, unflatten(e, shapes)).ravel())
        return np.column_stack(cols)

    # -- local Lie group -------------------------------------------------------

    def group_op(self, a1, a2) -> np.ndarray:
        """``theta^{-1}(X + X', Y + Y', H H')``."""
        x1, y1, h1 = self.apply(a1)[:3]
        x2, y2, h2 = self.apply(a2)[:3]
        return self.inverse((x1 + x2, y1 + y2, h1 @ h2))

    def group_inverse(self, a) -> np.ndarray:
        x, y, h = self.apply(a)[:3]
        return self.inverse((-x, -y, np.linalg.inv(h)))

    @property
    def identity(self) -> np.ndarray:
        """``U V^T``."""
        return self.U @ self.V.T

    def eta(self, a) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(exp(U_perp X U^+), exp(V_perp Y V^+), H)``."""
        x, y, h = self.apply(a)[:3]
        return self.left.lie_exp(x), self.right.lie_exp(y), h


make_chart = FixedRankChart.at


def flatten(parts) -> np.ndarray:
    return np.concatenate([np.asarray(p, dtype=np.float64).ravel() for p in parts])


def unflatten(z: np.ndarray, shapes) -> tuple[np.ndarray, ...]:
    if z.size != sum(s[0] * s[1] for s in shapes):
        raise DimensionMismatch(f"vector of length {z.size} does not match shapes {shapes}")
    out, i = [], 0
    for s in shapes:
        size = s[0] * s[1]
        out.append(z[i : i + size].reshape(s))
        i += size
    return tuple(out)
