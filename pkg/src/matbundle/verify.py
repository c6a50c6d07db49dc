"""Seeded invariant suites for the three chart families and the optimizer.

Every suite draws ``trials`` independent random instances, evaluates a set of
residuals on each one, and reports the worst residual per check next to its
tolerance.  Trial seeds are spawned from the root seed, so a report depends
only on the seed, the dimensions and the number of trials.

Residuals of matrix identities are measured as ``||a - b||_F / max(1, ||b||_F)``,
i.e. absolute for quantities of unit size and relative for large ones.
"""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np

from .fixed_rank import FixedRankChart, RankRPoint
from .grassmann import GrassmannChart, Subspace
from .numerics import (
    numerical_rank,
    random_full_rank,
    random_orthonormal,
    random_rank_r,
    truncated_svd,
)
from .optimize import OptimizerConfig, distance_objective, minimize, random_start
from .stiefel import StiefelChart, bundle_project

FD_STEP = 1e-6

SUITES = ("grassmann", "stiefel", "fixedrank")


@dataclass
class Case:
    name: str
    passed: bool
    residual: float
    tolerance: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["status"] = "pass" if self.passed else "fail"
        del d["passed"]
        return d


@dataclass
class Report:
    suite: str
    seed: int
    dims: dict
    trials: int
    cases: list[Case] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases)

    def case(self, name: str) -> Case:
        for c in self.cases:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "status": "pass" if self.passed else "fail",
            "seed": self.seed,
            "dims": self.dims,
            "trials": self.trials,
            "wall_time": self.wall_time,
            "cases": [c.to_dict() for c in self.cases],
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def summary(self) -> str:
        failed = [c.name for c in self.cases if not c.passed]
        head = f"{self.suite}: {len(self.cases) - len(failed)}/{len(self.cases)} checks passed"
        tail = f" (failed: {', '.join(failed)})" if failed else ""
        return f"{head} in {self.wall_time:.2f}s{tail}"


class _Collector:
    """Keeps the worst residual seen per check."""

    def __init__(self):
        self.worst: dict[str, float] = {}
        self.tol: dict[str, float] = {}

    def add(self, name: str, residual: float, tol: float) -> None:
        residual = float(residual)
        if np.isnan(residual):
            residual = float("inf")
        self.tol[name] = tol
        self.worst[name] = max(self.worst.get(name, 0.0), residual)

    def cases(self) -> list[Case]:
        return [Case(n, self.worst[n] <= self.tol[n], self.worst[n], self.tol[n]) for n in self.worst]


def rel(a, b) -> float:
    b = np.asarray(b)
    return float(np.linalg.norm(np.asarray(a) - b) / max(1.0, np.linalg.norm(b)))


def well_conditioned(r: int, rng: np.random.Generator) -> np.ndarray:
    """Random ``r x r`` matrix with singular values in ``[0.5, 2]``."""
    p = random_orthonormal(r, r, rng)
    q = random_orthonormal(r, r, rng)
    return p @ np.diag(rng.uniform(0.5, 2.0, r)) @ q.T


def _trial_rngs(seed: int, trials: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(trials)]


def _central_difference(fun: Callable, point: tuple, direction: tuple, h: float = FD_STEP):
    plus = fun(tuple(p + h * d for p, d in zip(point, direction)))
    minus = fun(tuple(p - h * d for p, d in zip(point, direction)))
    return (plus - minus) / (2 * h)


# -- Grassmann ------------------------------------------------------------------


def _grassmann_trial(col: _Collector, k: int, r: int, rng) -> None:
    charts = [GrassmannChart.at(random_full_rank(k, r, rng)) for _ in range(3)]
    c1, c2, c3 = charts
    x = rng.standard_normal((k - r, r))
    x2 = rng.standard_normal((k - r, r))

    col.add("chart_roundtrip", rel(c1.apply(c1.inverse(x)), x), 1e-9)
    w = random_full_rank(k, r, rng)
    col.add("subspace_roundtrip", c1.inverse(c1.apply(Subspace(w))).distance(Subspace(w)), 1e-9)

    # section point of W lies on the affine cross section and spans col(W)
    sec = c1.cross_section_point(w)
    col.add("cross_section", rel(c1.center.T @ sec, c1.center.T @ c1.center), 1e-9)

    direct = c1.transition(c3, x)
    composed = c2.transition(c3, c1.transition(c2, x))
    col.add("transition_cocycle", rel(composed, direct), 1e-8)
    col.add("transition_consistency", rel(direct, c3.apply(c1.inverse(x))), 1e-9)

    a1, a2 = c1.algebra_element(x), c1.algebra_element(x2)
    col.add("nilpotency", np.linalg.norm(a1 @ a1), 1e-12)
    col.add("nilpotency_mixed", np.linalg.norm(a1 @ a2), 1e-12)
    e = c1.lie_exp(x)
    col.add("exp_on_center", rel(e @ c1.center, c1.section(x)), 1e-10)
    col.add("exp_on_complement", rel(e @ c1.complement, c1.complement), 1e-10)

    s1, s2 = c1.inverse(x), c1.inverse(x2)
    col.add("gamma_homomorphism", rel(c1.gamma(c1.group_op(s1, s2)), c1.gamma(s1) @ c1.gamma(s2)), 1e-10)
    col.add("group_identity", c1.group_op(s1, c1.identity).distance(s1), 1e-9)
    col.add("group_inverse", c1.group_op(s1, c1.group_inverse(s1)).distance(c1.identity), 1e-9)

    concat = np.hstack([e @ c1.center, c1.complement])
    col.add("concatenation_invertible", 0.0 if numerical_rank(concat).numerical_rank == k else 1.0, 0.0)
    col.add("dimension", abs(x.size - r * (k - r)) + abs(c1.dimension - r * (k - r)), 0.0)


# -- Stiefel --------------------------------------------------------------------


def _stiefel_trial(col: _Collector, k: int, r: int, rng) -> None:
    ch = StiefelChart.at(random_full_rank(k, r, rng))
    other = StiefelChart.at(random_full_rank(k, r, rng))
    x = rng.standard_normal((k - r, r))
    g = well_conditioned(r, rng)

    w = ch.inverse((x, g))
    cx, cg = ch.apply(w)
    col.add("xi_roundtrip_coords", max(rel(cx, x), rel(cg, g)), 1e-9)
    col.add("xi_roundtrip_matrix", rel(ch.inverse(ch.apply(w)), w), 1e-9)
    col.add("center_coordinates", rel(ch.inverse((np.zeros_like(x), np.eye(r))), ch.center), 1e-12)

    zdot = rng.standard_normal((k, r))
    t = (rng.standard_normal((k - r, r)), rng.standard_normal((r, r)))
    col.add("push_pull", rel(ch.tangent_push(ch.tangent_pull(zdot)), zdot), 1e-10)
    back = ch.tangent_pull(ch.tangent_push(t))
    col.add("pull_push", max(rel(back.dX, t[0]), rel(back.dG, t[1])), 1e-10)

    origin = (np.zeros((k - r, r)), np.eye(r))
    push = ch.tangent_push(t)
    fd = _central_difference(ch.inverse, origin, t)
    col.add("push_finite_difference", np.linalg.norm(fd - push) / np.linalg.norm(push), 1e-5)
    diff = ch.differential((x, g), t)
    fd = _central_difference(ch.inverse, (x, g), t)
    col.add("differential_finite_difference", np.linalg.norm(fd - diff) / np.linalg.norm(diff), 1e-5)

    vert, hor = ch.tangent_split(zdot)
    col.add("split_recombination", rel(vert + hor, zdot), 1e-10)
    col.add("split_components", max(np.linalg.norm(ch.center_pinv @ hor), np.linalg.norm(ch.complement_pinv @ vert)), 1e-10)

    w2 = ch.inverse((rng.standard_normal((k - r, r)), well_conditioned(r, rng)))
    w3 = ch.inverse((rng.standard_normal((k - r, r)), well_conditioned(r, rng)))
    col.add("group_associativity", rel(ch.group_op(ch.group_op(w, w2), w3), ch.group_op(w, ch.group_op(w2, w3))), 1e-9)
    col.add("group_identity", max(rel(ch.group_op(w, ch.identity), w), rel(ch.group_op(ch.identity, w), w)), 1e-9)
    inv = ch.group_inverse(w)
    col.add("group_inverse", max(rel(ch.group_op(w, inv), ch.identity), rel(ch.group_op(inv, w), ch.identity)), 1e-9)
    e1, e2, e12 = ch.eta(w), ch.eta(w2), ch.eta(ch.group_op(w, w2))
    col.add("eta_homomorphism", max(rel(e12[0], e1[0] @ e2[0]), rel(e12[1], e1[1] @ e2[1])), 1e-10)

    col.add("transition_reconstruction", rel(other.inverse(ch.transition(other, (x, g))), w), 1e-9)
    col.add("dimension", abs(ch.dimension - k * r) + abs(x.size + g.size - k * r), 0.0)
    col.add("differential_rank", abs(numerical_rank(ch.differential_matrix((x, g))).numerical_rank - k * r), 0.0)

    # bundle structure: col o xi^{-1} read in the Grassmann chart returns X
    col.add("bundle_consistency", rel(ch.base.apply(bundle_project(w)), x), 1e-9)
    s, gf = ch.fiber_chart(w)
    col.add("fiber_chart", max(s.distance(bundle_project(w)), rel(gf, g)), 1e-9)


# -- fixed rank -----------------------------------------------------------------


def _fixed_rank_trial(col: _Collector, n: int, m: int, r: int, rng) -> None:
    u, v = random_full_rank(n, r, rng), random_full_rank(m, r, rng)
    g = well_conditioned(r, rng)
    p = RankRPoint(u, g, v)
    ch = FixedRankChart.at(p)
    other = FixedRankChart.at(RankRPoint(random_full_rank(n, r, rng), g, random_full_rank(m, r, rng)))
    x, y = rng.standard_normal((n - r, r)), rng.standard_normal((m - r, r))
    h = well_conditioned(r, rng)

    a = ch.inverse((x, y, h))
    c = ch.apply(a)
    col.add("theta_roundtrip_coords", max(rel(c.X, x), rel(c.Y, y), rel(c.H, h)), 1e-9)
    col.add("theta_roundtrip_matrix", rel(ch.inverse(ch.apply(a)), a), 1e-9)
    zero = (np.zeros((n - r, r)), np.zeros((m - r, r)))
    col.add("center_reproduction", np.linalg.norm(ch.inverse((*zero, g)) - p.matrix), 1e-12)
    col.add("inverse_rank", abs(numerical_rank(a).numerical_rank - r), 0.0)

    t = (rng.standard_normal((n - r, r)), rng.standard_normal((m - r, r)), rng.standard_normal((r, r)))
    back = ch.tangent_pull(g, ch.tangent_push(g, t))
    col.add("pull_push", max(rel(b, s) for b, s in zip(back, t)), 1e-9)
    tangent = ch.tangent_push(g, (rng.standard_normal((n - r, r)), rng.standard_normal((m - r, r)), rng.standard_normal((r, r))))
    col.add("push_pull_on_tangent", rel(ch.tangent_push(g, ch.tangent_pull(g, tangent)), tangent), 1e-9)
    push = ch.tangent_push(g, t)
    fd = _central_difference(ch.inverse, (*zero, g), t)
    col.add("push_finite_difference", np.linalg.norm(fd - push) / np.linalg.norm(push), 1e-5)

    vert, hor = ch.tangent_split(tangent, g)
    col.add("split_recombination", rel(vert + hor, tangent), 1e-10)
    col.add("split_components", max(
        np.linalg.norm(ch.U_perp_pinv @ vert @ ch.V_perp_pinv.T),
        np.linalg.norm(ch.U_pinv @ hor @ ch.V_pinv.T),
    ), 1e-10)

    col.add("differential_rank", abs(numerical_rank(ch.differential_matrix((x, y, h))).numerical_rank - r * (n + m - r)), 0.0)
    col.add("dimension", abs(ch.dimension - r * (n + m - r)), 0.0)

    ident = ch.identity
    col.add("identity_element", max(rel(ch.group_op(a, ident), a), rel(ch.group_op(ident, a), a), rel(ident, ch.inverse((*zero, np.eye(r))))), 1e-10)
    a2 = ch.inverse((rng.standard_normal((n - r, r)), rng.standard_normal((m - r, r)), well_conditioned(r, rng)))
    a3 = ch.inverse((rng.standard_normal((n - r, r)), rng.standard_normal((m - r, r)), well_conditioned(r, rng)))
    col.add("group_associativity", rel(ch.group_op(ch.group_op(a, a2), a3), ch.group_op(a, ch.group_op(a2, a3))), 1e-9)
    inv = ch.group_inverse(a)
    col.add("group_inverse", max(rel(ch.group_op(a, inv), ident), rel(ch.group_op(inv, a), ident)), 1e-9)
    e1, e2, e12 = ch.eta(a), ch.eta(a2), ch.eta(ch.group_op(a, a2))
    col.add("eta_homomorphism", max(rel(q, l @ s) for q, l, s in zip(e12, e1, e2)), 1e-10)

    col.add("transition_reconstruction", rel(other.inverse(ch.transition(other, (x, y, h))), a), 1e-9)
    su, sv, hf = ch.fiber_chart(a)
    col.add("fiber_chart", max(su.distance(ch.left.inverse(x)), sv.distance(ch.right.inverse(y)), rel(hf, h)), 1e-9)

    # the chart never looks at G: a chart from U G' V^T must give identical bits
    twin = FixedRankChart.at(RankRPoint(u, well_conditioned(r, rng), v))
    c_twin = twin.apply(a)
    same = twin.same_as(ch) and all(np.array_equal(s, q) for s, q in zip(c[:3], c_twin[:3]))
    col.add("chart_independence", 0.0 if same else 1.0, 0.0)


# -- drivers --------------------------------------------------------------------


def _validate(n: int, m: int, k: int, r: int, trials: int) -> None:
    if r < 1:
        raise ValueError("r must be positive")
    if r >= k or r >= min(n, m):
        raise ValueError(f"need r < k and r < min(n, m), got n={n}, m={m}, k={k}, r={r}")
    if trials < 1:
        raise ValueError("trials must be positive")


def run_suite(suite: str, *, n: int = 20, m: int = 15, k: int = 12, r: int = 3,
              seed: int = 0, trials: int = 100) -> Report:
    """Run one suite (``grassmann``, ``stiefel``, ``fixedrank``) or ``all``."""
    if suite == "all":
        return combine([run_suite(s, n=n, m=m, k=k, r=r, seed=seed, trials=trials) for s in SUITES])
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    _validate(n, m, k, r, trials)
    t0 = time.perf_counter()
    col = _Collector()
    for rng in _trial_rngs(seed, trials):
        if suite == "grassmann":
            _grassmann_trial(col, k, r, rng)
        elif suite == "stiefel":
            _stiefel_trial(col, k, r, rng)
        else:
            _fixed_rank_trial(col, n, m, r, rng)
    dims = {"k": k, "r": r} if suite != "fixedrank" else {"n": n, "m": m, "r": r}
    return Report(suite, seed, dims, trials, col.cases(), time.perf_counter() - t0)


def combine(reports: Iterable[Report]) -> Report:
    reports = list(reports)
    cases = [Case(f"{rep.suite}.{c.name}", c.passed, c.residual, c.tolerance) for rep in reports for c in rep.cases]
    dims: dict = {}
    for rep in reports:
        dims.update(rep.dims)
    return Report("all", reports[0].seed, dims, reports[0].trials, cases, sum(rep.wall_time for rep in reports))


def optimizer_benchmark(*, count: int = 50, n: int = 20, m: int = 15, r: int = 3, seed: int = 0,
                        exact_rank: bool = False, config: OptimizerConfig | None = None) -> Report:
    """Low-rank approximation of ``count`` seeded random matrices.

    Each result is compared with the truncated SVD.  With ``exact_rank`` the
    targets have rank exactly ``r`` and the tolerance is 1e-8, otherwise 1e-6
    with at most ``max_iters`` iterations per run.
    """
    cfg = config or OptimizerConfig()
    t0 = time.perf_counter()
    errors, iters = [], []
    for rng in _trial_rngs(seed, count):
        a = random_rank_r(n, m, r, rng) if exact_rank else rng.standard_normal((n, m))
        start = random_start(a, r, int(rng.integers(2**63)))
        point, trace = minimize(start, distance_objective(a), cfg)
        oracle = truncated_svd(a, r)
        errors.append(np.linalg.norm(point.matrix - oracle) / np.linalg.norm(oracle))
        iters.append(trace.iterations)
    tol = 1e-8 if exact_rank else 1e-6
    cases = [
        Case("max_relative_error", max(errors) <= tol, max(errors), tol),
        Case("max_iterations", max(iters) <= cfg.max_iters, float(max(iters)), float(cfg.max_iters)),
    ]
    name = "optimizer_exact_rank" if exact_rank else "optimizer"
    return Report(name, seed, {"n": n, "m": m, "r": r, "count": count}, count, cases, time.perf_counter() - t0)
