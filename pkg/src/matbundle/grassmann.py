"""Charts and local Lie group structure of the Grassmann manifold G_r(R^k).

A subspace is stored through any full-rank ``k x r`` representative ``W``.
The chart centred at ``Z`` maps the subspace ``col(W)`` to the unique
``X`` with ``col(W) = col(Z + Z_perp X)``; its image is all of
``R^{(k-r) x r}``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionMismatch, OutOfChartDomain, RankDeficient
from .numerics import (
    as_matrix,
    frozen,
    numerical_rank,
    orthogonal_complement,
    pseudo_inverse,
    singular_values,
)

#: Chart membership requires sigma_min(Z^T W) > DOMAIN_TOL * ||Z||_2 ||W||_2.
DOMAIN_TOL = 1e-10
#: Frobenius distance between projectors below which two subspaces are equal.
SUBSPACE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Subspace:
    """An ``r``-dimensional subspace of ``R^k`` given by a representative."""

    representative: np.ndarray

    def __post_init__(self):
        w = frozen(self.representative, "representative")
        k, r = w.shape
        if r > k:
            raise DimensionMismatch(f"representative must be tall, got {w.shape}")
        rank = numerical_rank(w).numerical_rank
        if rank < r:
            raise RankDeficient(f"representative has numerical rank {rank} < {r}")
        object.__setattr__(self, "representative", w)

    @property
    def dim_ambient(self) -> int:
        return self.representative.shape[0]

    @property
    def dim(self) -> int:
        return self.representative.shape[1]

    @cached_property
    def basis(self) -> np.ndarray:
        """Orthonormal basis of the subspace."""
        q, _ = np.linalg.qr(self.representative)
        return q

    @cached_property
    def projector(self) -> np.ndarray:
        """Orthogonal projector ``W W^+`` onto the subspace."""
        return self.basis @ self.basis.T

    def distance(self, other: "Subspace") -> float:
        """Frobenius norm of the projector difference."""
        if self.representative.shape != other.representative.shape:
            return float("inf")
        return float(np.linalg.norm(self.projector - other.projector))

    def __eq__(self, other):
        if not isinstance(other, Subspace):
            return NotImplemented
        return self.distance(other) <= SUBSPACE_TOL

    __hash__ = None

    def __repr__(self):
        return f"Subspace(k={self.dim_ambient}, r={self.dim})"


def col(w) -> Subspace:
    """Column space of a full column rank matrix."""
    return Subspace(w)


def domain_ratio(center: np.ndarray, w: np.ndarray) -> float:
    """``sigma_min(Z^T W) / (||Z||_2 ||W||_2)``.

    Normalising by the factor norms rather than by ``sigma_max(Z^T W)`` keeps
    a ``W`` orthogonal to ``Z`` (where ``Z^T W`` is pure rounding noise and
    its singular value ratio is arbitrary) out of the domain.
    """
    scale = np.linalg.norm(center, 2) * np.linalg.norm(w, 2)
    if scale == 0.0:
        return 0.0
    return float(singular_values(center.T @ w)[-1] / scale)


def in_domain(center: np.ndarray, w: np.ndarray, tol: float = DOMAIN_TOL) -> bool:
    """Numerical version of ``det(Z^T W) != 0``."""
    return domain_ratio(center, w) > tol


def _right_solve(m: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``m @ inv(g)`` without forming the inverse."""
    return np.linalg.solve(g.T, m.T).T


@dataclass(frozen=True, eq=False)
class GrassmannChart:
    """Chart of ``G_r(R^k)`` centred at ``col(Z)``.

    Build with :meth:`at`; the four matrices are precomputed and read-only.
    """

    center: np.ndarray
    complement: np.ndarray
    center_pinv: np.ndarray
    complement_pinv: np.ndarray

    @classmethod
    def at(cls, z) -> "GrassmannChart":
        z = as_matrix(z, "Z")
        k, r = z.shape
        if r >= k:
            raise DimensionMismatch(f"Grassmann chart needs r < k, got k={k}, r={r}")
        comp = orthogonal_complement(z)
        return cls(
            center=frozen(z),
            complement=frozen(comp),
            center_pinv=frozen(pseudo_inverse(z)),
            # orthonormal complement: pseudo-inverse is the transpose
            complement_pinv=frozen(comp.T),
        )

    @property
    def k(self) -> int:
        return self.center.shape[0]

    @property
    def r(self) -> int:
        return self.center.shape[1]

    @property
    def coord_shape(self) -> tuple[int, int]:
        return (self.k - self.r, self.r)

    @property
    def dimension(self) -> int:
        return self.r * (self.k - self.r)

    def _check_rep(self, w) -> np.ndarray:
        w = as_matrix(w, "W")
        if w.shape != self.center.shape:
            raise DimensionMismatch(f"expected shape {self.center.shape}, got {w.shape}")
        return w

    def _check_coords(self, x) -> np.ndarray:
        x = as_matrix(x, "X")
        if x.shape != self.coord_shape:
            raise DimensionMismatch(f"expected coordinates of shape {self.coord_shape}, got {x.shape}")
        return x

    def contains(self, s) -> bool:
        """Whether a subspace (or representative) lies in the chart domain."""
        w = s.representative if isinstance(s, Subspace) else self._check_rep(s)
        return in_domain(self.center, w)

    def _require(self, w: np.ndarray) -> None:
        if not in_domain(self.center, w):
            raise OutOfChartDomain("Z^T W is numerically singular")

    def cross_section_point(self, w) -> np.ndarray:
        """The unique point ``W G_W^{-1}`` of the affine cross section in ``W GL_r``.

        ``G_W = (Z^T Z)^{-1} Z^T W``; the result ``R`` satisfies
        ``Z^T R = Z^T Z``.
        """
        w = self._check_rep(w)
        self._require(w)
        g_w = self.center_pinv @ w
        return _right_solve(w, g_w)

    def apply(self, s: Subspace) -> np.ndarray:
        """Chart coordinates ``X = Z_perp^+ (W G_W^{-1} - Z)``."""
        w = s.representative if isinstance(s, Subspace) else s
        section = self.cross_section_point(w)
        return self.complement_pinv @ (section - self.center)

    def section(self, x) -> np.ndarray:
        """The cross section point ``Z + Z_perp X``."""
        x = self._check_coords(x)
        return self.center + self.complement @ x

    def inverse(self, x) -> Subspace:
        return Subspace(self.section(x))

    def transition(self, target: "GrassmannChart", x) -> np.ndarray:
        """Coordinates in ``target`` of the subspace with coordinates ``x`` here.

        Raises OutOfChartDomain when the subspace is outside the target domain.
        """
        w = self.section(x)
        if not in_domain(target.center, w):
            raise OutOfChartDomain("subspace lies outside the target chart domain")
        g = target.center_pinv @ w
        return target.complement_pinv @ _right_solve(w, g)

    # -- local Lie group ------------------------------------------------------

    def algebra_element(self, x) -> np.ndarray:
        """``Z_perp X Z^+``, an element of the (nilpotent) Lie algebra."""
        x = self._check_coords(x)
        return self.complement @ x @ self.center_pinv

    def lie_exp(self, x) -> np.ndarray:
        """Matrix exponential of ``Z_perp X Z^+``.

        The argument squares to zero, so the series stops after the linear term.
        """
        return np.eye(self.k) + self.algebra_element(x)

    def gamma(self, s: Subspace) -> np.ndarray:
        """Group isomorphism onto ``{exp(Z_perp X Z^+)}`` inside ``GL_k``."""
        return self.lie_exp(self.apply(s))

    def group_op(self, s1: Subspace, s2: Subspace) -> Subspace:
        return self.inverse(self.apply(s1) + self.apply(s2))

    def group_inverse(self, s: Subspace) -> Subspace:
        return self.inverse(-self.apply(s))

    @property
    def identity(self) -> Subspace:
        return Subspace(self.center)


chart_center = GrassmannChart.at
