"""First-order minimisation on the fixed-rank manifold in local coordinates.

Each step is taken in the coordinates ``(X, Y, H)`` of a chart; the iterate
is then made the centre of a fresh chart (recentring), so that steps always
start from coordinates ``(0, 0, H)``.  No Riemannian metric or retraction is
involved: the coordinate gradient is the adjoint of the chart differential
applied to the Euclidean gradient.

Two search directions are available.  ``"gd"`` is steepest descent with
Armijo backtracking.  ``"cg"`` (the default) is Polak-Ribiere+ nonlinear
conjugate gradients; the previous direction is carried to the new chart by
pushing it forward through the old chart's differential and pulling it back
with the new chart's tangent map.
"""
from __future__ import annotations

import json
import logging
import math
import os
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import line_search

from .errors import LineSearchFailed, RankDeficient, SingularFactor
from .fixed_rank import (
    FixedRankChart,
    FixedRankCoords,
    FixedRankTangent,
    RankRPoint,
    flatten,
    unflatten,
)
from .numerics import as_matrix, factor_rank_r, random_orthonormal, sigma_ratio
from .stiefel import check_invertible

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Objective:
    """Smooth function on ``R^{n x m}`` with its Euclidean gradient."""

    evaluate: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]

    def __call__(self, w) -> float:
        return float(self.evaluate(w))

    def check_gradient(self, w, direction=None, h: float = 1e-6, seed=None) -> float:
        """Relative error between the gradient and a central difference quotient."""
        w = as_matrix(w)
        if direction is None:
            direction = np.random.default_rng(seed).standard_normal(w.shape)
        fd = (self(w + h * direction) - self(w - h * direction)) / (2 * h)
        exact = float(np.sum(self.gradient(w) * direction))
        return abs(fd - exact) / max(abs(exact), abs(fd), 1e-300)


def distance_objective(target) -> Objective:
    """``W -> 0.5 * ||W - A||_F^2``."""
    a = as_matrix(target, "A").copy()
    return Objective(
        evaluate=lambda w: 0.5 * float(np.sum((w - a) ** 2)),
        gradient=lambda w: w - a,
    )


@dataclass(frozen=True)
class OptimizerConfig:
    max_iters: int = 500
    #: stop once the coordinate gradient norm drops to this value
    grad_tol: float = 1e-9
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    initial_step: float = 1.0
    recenter_every: int = 1
    method: str = "cg"
    #: curvature constant of the Wolfe line search used by ``"cg"``
    wolfe_c2: float = 0.4
    max_backtracks: int = 60

    def __post_init__(self):
        if not 0.0 < self.armijo_c < 1.0:
            raise ValueError("armijo_c must lie in (0, 1)")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if not self.armijo_c < self.wolfe_c2 < 1.0:
            raise ValueError("wolfe_c2 must lie in (armijo_c, 1)")
        if self.method not in ("cg", "gd"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.max_iters < 0 or self.recenter_every < 1 or self.max_backtracks < 1:
            raise ValueError("max_iters >= 0, recenter_every >= 1 and max_backtracks >= 1 required")
        if self.initial_step <= 0 or self.grad_tol < 0:
            raise ValueError("initial_step must be positive and grad_tol non-negative")


@dataclass
class TraceRecord:
    iter: int
    f: float
    grad_norm: float
    step: float
    boundary_sigma_ratio: float


@dataclass
class OptimizerTrace:
    records: list[TraceRecord] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        """Number of steps taken (the final record is only a convergence check)."""
        return max(len(self.records) - 1, 0)

    @property
    def values(self) -> np.ndarray:
        return np.array([rec.f for rec in self.records])

    def to_jsonl(self) -> str:
        return "".join(json.dumps(asdict(rec)) + "\n" for rec in self.records)

    def write_jsonl(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_jsonl())


def coordinate_gradient(chart: FixedRankChart, coords, objective: Objective) -> FixedRankTangent:
    """Gradient of ``objective o theta^{-1}`` at ``coords``."""
    w = chart.inverse(coords)
    return chart.differential_adjoint(coords, objective.gradient(w))


def recenter(chart: FixedRankChart, coords) -> tuple[FixedRankChart, FixedRankCoords]:
    """Move the chart centre to the point with coordinates ``coords``.

    The new factors are orthonormalised with thin QR, so the represented
    matrix is unchanged and the returned coordinates are ``(0, 0, H_new)``.
    """
    left, h, right = chart.factors(coords)
    ql, rl = np.linalg.qr(left)
    qr_, rr = np.linalg.qr(right)
    h_new = rl @ h @ rr.T
    try:
        check_invertible(h_new, "H")
        new_chart = FixedRankChart.from_factors(ql, qr_)
    except (SingularFactor, RankDeficient):
        # factors drifted to (numerical) rank deficiency; start over from the matrix
        u, g, v = factor_rank_r(chart.inverse(coords), chart.r)
        new_chart, h_new = FixedRankChart.from_factors(u, v), g
    n, m = chart.shape
    r = chart.r
    return new_chart, FixedRankCoords(np.zeros((n - r, r)), np.zeros((m - r, r)), h_new)


def random_start(target, r: int, seed=None) -> RankRPoint:
    """Random orthonormal frames ``U``, ``V`` with least-squares middle factor ``U^T A V``."""
    a = as_matrix(target, "A")
    ss = np.random.SeedSequence(seed)
    su, sv = ss.spawn(2)
    u = random_orthonormal(a.shape[0], r, su)
    v = random_orthonormal(a.shape[1], r, sv)
    return RankRPoint(u, u.T @ a @ v, v)


class _ChartProblem:
    """``objective o theta^{-1}`` on flattened coordinates of one chart.

    Called many times per step, so the chart formulas are evaluated here
    directly on trusted arrays instead of through the validating public API.
    """

    def __init__(self, chart: FixedRankChart, objective: Objective):
        self.chart = chart
        self.objective = objective
        self.shapes = [chart.left.coord_shape, chart.right.coord_shape, (chart.r, chart.r)]
        self._sizes = np.cumsum([a * b for a, b in self.shapes])[:-1]

    def unflat(self, z):
        return unflatten(z, self.shapes)

    def _parts(self, z):
        x, y, h = (p.reshape(s) for p, s in zip(np.split(z, self._sizes), self.shapes))
        c = self.chart
        return c.U + c.U_perp @ x, h, c.V + c.V_perp @ y

    def value(self, z) -> float:
        left, h, right = self._parts(z)
        try:
            check_invertible(h, "H")
        except SingularFactor:
            return math.inf
        return self.objective(left @ h @ right.T)

    def grad(self, z) -> np.ndarray:
        left, h, right = self._parts(z)
        zbar = self.objective.gradient(left @ h @ right.T)
        c = self.chart
        return np.concatenate([
            (c.U_perp.T @ zbar @ right @ h.T).ravel(),
            (c.V_perp.T @ zbar.T @ left @ h).ravel(),
            (left.T @ zbar @ right).ravel(),
        ])


#: relative size of rounding noise in objective values
F_NOISE = 1e-12


def _backtrack(prob: _ChartProblem, z, d, f0, slope, step, cfg: OptimizerConfig):
    """Backtracking until sufficient decrease holds.

    A decrease only counts when it exceeds the rounding noise of ``f``.  Once
    a trial value is within noise of ``f0``, or above it while the directional
    derivative is still negative, the objective carries no more information, and the search switches to secant steps on the directional
    derivative until ``|phi'(step)| <= c2 |phi'(0)|``.
    """
    noise = F_NOISE * abs(f0)
    for _ in range(cfg.max_backtracks):
        f_new = prob.value(z + step * d)
        if f_new <= f0 + cfg.armijo_c * step * slope and f0 - f_new > noise:
            return step
        if f_new <= f0 + noise:
            return _secant(prob, z, d, f0 + noise, slope, step, cfg)
        # f went up but phi is still falling here: the rise is absolute rounding
        # error that the relative estimate above misses
        if np.isfinite(f_new) and float(prob.grad(z + step * d) @ d) < 0:
            return _secant(prob, z, d, f_new, slope, step, cfg)
        step *= cfg.backtrack_factor
    return None


def _secant(prob, z, d, f_cap, slope, step, cfg, max_steps=12):
    a_prev, dp_prev = 0.0, slope
    for _ in range(max_steps):
        dp = float(prob.grad(z + step * d) @ d)
        if abs(dp) <= cfg.wolfe_c2 * abs(slope):
            # intermediate secant iterates may overshoot; only the accepted one is capped
            return step if prob.value(z + step * d) <= f_cap else None
        denom = dp - dp_prev
        if denom == 0.0:
            return None
        nxt = step - dp * (step - a_prev) / denom
        if not (np.isfinite(nxt) and nxt > 0):
            return None
        a_prev, dp_prev, step = step, dp, nxt
    return None


def minimize(
    start: RankRPoint, objective: Objective, config: OptimizerConfig | None = None
) -> tuple[RankRPoint, OptimizerTrace]:
    """Minimise ``objective`` over rank-``r`` matrices starting from ``start``.

    Returns the final point and the iteration trace.  Terminates when the
    coordinate gradient norm reaches ``grad_tol`` or after ``max_iters`` steps.

    Raises
    ------
    LineSearchFailed
        If no step satisfying the sufficient decrease condition is found,
        even along the steepest descent direction.
    """
    cfg = config or OptimizerConfig()
    n, m = start.shape
    r = start.rank
    chart, coords = recenter(
        FixedRankChart.at(start), (np.zeros((n - r, r)), np.zeros((m - r, r)), start.G)
    )
    trace = OptimizerTrace()
    prob = _ChartProblem(chart, objective)
    z = flatten(coords[:3])
    f = prob.value(z)
    f_prev = None
    carried = None  # (direction, gradient) in current chart coordinates

    for it in range(cfg.max_iters + 1):
        g = prob.grad(z)
        gnorm = float(np.linalg.norm(g))
        h = prob.unflat(z)[2]
        record = TraceRecord(it, f, gnorm, 0.0, sigma_ratio(h))
        trace.records.append(record)
        if gnorm <= cfg.grad_tol:
            trace.converged = True
            break
        if it == cfg.max_iters:
            break

        d = -g
        if cfg.method == "cg" and carried is not None:
            d_old, g_old = carried
            beta = max(0.0, float(g @ (g - g_old)) / float(g_old @ g_old))
            cand = -g + beta * d_old
            if g @ cand < 0:
                d = cand
        slope = float(g @ d)

        step = None
        if cfg.method == "cg":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                try:
                    res = line_search(
                        prob.value, prob.grad, z, d, gfk=g, old_fval=f,
                        old_old_fval=f_prev, c1=cfg.armijo_c, c2=cfg.wolfe_c2,
                    )
                    ok = (
                        res[0] is not None
                        and res[0] > 0
                        and np.isfinite(res[3])
                        and res[3] <= f + cfg.armijo_c * res[0] * slope
                        and f - res[3] > F_NOISE * abs(f)
                    )
                    if ok:
                        step = float(res[0])
                except (FloatingPointError, ValueError, np.linalg.LinAlgError):
                    step = None
        if step is None:
            guess = cfg.initial_step / float(np.linalg.norm(d))
            if f_prev is not None and f_prev - f > F_NOISE * abs(f):
                guess = abs(4.0 * (f - f_prev) / slope)
            step = _backtrack(prob, z, d, f, slope, guess, cfg)
        if step is None and not np.array_equal(d, -g):
            d = -g
            slope = float(g @ d)
            step = _backtrack(prob, z, d, f, slope, cfg.initial_step / gnorm, cfg)
        if step is None:
            raise LineSearchFailed(
                f"no sufficient decrease after {cfg.max_backtracks} backtracks at iteration {it}"
            )
        record.step = step

        z_new = z + step * d
        f_prev, f = f, prob.value(z_new)
        if (it + 1) % cfg.recenter_every == 0:
            end = prob.unflat(z_new)
            old_prob = prob
            chart, coords = recenter(chart, end)
            prob = _ChartProblem(chart, objective)
            z = flatten(coords[:3])
            if cfg.method == "cg":
                carried = tuple(
                    flatten(chart.tangent_pull(coords.H, old_prob.chart.differential(end, old_prob.unflat(v))))
                    for v in (d, g)
                )
        else:
            z = z_new
            carried = (d, g)
        logger.debug("iter %d f=%.6e |g|=%.3e step=%.3e", it, f, gnorm, step)

    return chart.point(prob.unflat(z)), trace
