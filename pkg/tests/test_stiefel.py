import numpy as np
import pytest
from hypothesis import given

from matbundle.errors import DimensionMismatch, OutOfChartDomain, SingularFactor
from matbundle.grassmann import Subspace
from matbundle.numerics import numerical_rank, random_full_rank
from matbundle.stiefel import StiefelChart, bundle_project, check_invertible

from .strategies import grassmann_dims, seeds, well_conditioned

K, R = 7, 3


@pytest.fixture
def chart(rng):
    return StiefelChart.at(rng.standard_normal((K, R)))


@pytest.fixture
def coords(rng):
    return rng.standard_normal((K - R, R)), well_conditioned(rng, R)


class TestChart:
    def test_center(self, chart):
        x, g = chart.apply(chart.center)
        np.testing.assert_allclose(x, 0.0, atol=1e-12)
        np.testing.assert_allclose(g, np.eye(R), atol=1e-12)
        np.testing.assert_array_equal(chart.inverse((np.zeros((K - R, R)), np.eye(R))), chart.center)

    def test_fiber_direction(self, chart, rng):
        g0 = well_conditioned(rng, R)
        x, g = chart.apply(chart.center @ g0)
        np.testing.assert_allclose(x, 0.0, atol=1e-12)
        np.testing.assert_allclose(g, g0, atol=1e-12)

    def test_section_point(self, chart, rng):
        x = rng.standard_normal((K - R, R))
        np.testing.assert_allclose(chart.inverse((x, np.eye(R))), chart.base.section(x), atol=1e-15)

    def test_roundtrip(self, chart, coords):
        w = chart.inverse(coords)
        assert chart.contains(w)
        back = chart.apply(w)
        np.testing.assert_allclose(back.X, coords[0], atol=1e-9)
        np.testing.assert_allclose(back.G, coords[1], atol=1e-9)
        np.testing.assert_allclose(chart.inverse(back), w, atol=1e-9)

    def test_singular_g(self, chart):
        with pytest.raises(SingularFactor):
            chart.inverse((np.zeros((K - R, R)), np.zeros((R, R))))

    def test_g_shape(self, chart):
        with pytest.raises(DimensionMismatch):
            chart.inverse((np.zeros((K - R, R)), np.eye(R + 1)))

    def test_outside(self, chart):
        with pytest.raises(OutOfChartDomain):
            chart.apply(chart.complement[:, :R])

    def test_dimension(self, chart):
        assert chart.dimension == K * R

    @given(grassmann_dims(), seeds)
    def test_roundtrip_property(self, dims, seed):
        k, r = dims
        rng = np.random.default_rng(seed)
        ch = StiefelChart.at(random_full_rank(k, r, rng))
        x, g = rng.standard_normal((k - r, r)), well_conditioned(rng, r)
        w = ch.inverse((x, g))
        assert ch.contains(w)
        scale = np.linalg.cond(ch.center) * max(1.0, np.linalg.norm(x))
        assert np.linalg.norm(ch.inverse(ch.apply(w)) - w) <= 1e-9 * max(1.0, np.linalg.norm(w)) * scale


class TestBundle:
    def test_fiber_invariance(self, rng):
        w = rng.standard_normal((K, R))
        assert bundle_project(w) == bundle_project(w @ well_conditioned(rng, R))

    def test_center_projects(self, chart):
        assert bundle_project(chart.center) == Subspace(chart.center)

    def test_consistent_with_grassmann_chart(self, chart, coords):
        w = chart.inverse(coords)
        assert bundle_project(w) == chart.base.inverse(coords[0])
        np.testing.assert_allclose(chart.base.apply(bundle_project(w)), coords[0], atol=1e-9)

    def test_fiber_chart(self, chart, coords):
        s, g = chart.fiber_chart(chart.inverse(coords))
        assert s == chart.base.inverse(coords[0])
        np.testing.assert_allclose(g, coords[1], atol=1e-10)

    def test_fiber_chart_at_center(self, chart):
        s, g = chart.fiber_chart(chart.center)
        assert s == Subspace(chart.center)
        np.testing.assert_allclose(g, np.eye(R), atol=1e-12)

    def test_fiber_chart_local_representation_is_identity(self, chart, coords):
        s, g = chart.fiber_chart(chart.inverse(coords))
        np.testing.assert_allclose(chart.base.apply(s), coords[0], atol=1e-10)
        np.testing.assert_allclose(g, coords[1], atol=1e-10)


class TestTangent:
    def test_vertical_generator(self, chart):
        np.testing.assert_allclose(chart.tangent_push((np.zeros((K - R, R)), np.eye(R))), chart.center)

    def test_horizontal(self, chart, rng):
        dx = rng.standard_normal((K - R, R))
        np.testing.assert_allclose(chart.tangent_push((dx, np.zeros((R, R)))), chart.complement @ dx)

    def test_pull_center(self, chart):
        t = chart.tangent_pull(chart.center)
        np.testing.assert_allclose(t.dX, 0.0, atol=1e-12)
        np.testing.assert_allclose(t.dG, np.eye(R), atol=1e-12)

    def test_pull_complement_square_case(self):
        ch = StiefelChart.at(np.random.default_rng(2).standard_normal((6, 3)))
        t = ch.tangent_pull(ch.complement)
        np.testing.assert_allclose(t.dX, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(t.dG, 0.0, atol=1e-12)

    def test_push_pull_identity(self, chart, rng):
        zdot = rng.standard_normal((K, R))
        assert np.linalg.norm(chart.tangent_push(chart.tangent_pull(zdot)) - zdot) <= 1e-10

    def test_pull_push_identity(self, chart, rng):
        t = (rng.standard_normal((K - R, R)), rng.standard_normal((R, R)))
        back = chart.tangent_pull(chart.tangent_push(t))
        assert np.linalg.norm(back.dX - t[0]) + np.linalg.norm(back.dG - t[1]) <= 1e-10

    def test_push_finite_difference(self, chart, rng):
        t = (rng.standard_normal((K - R, R)), rng.standard_normal((R, R)))
        h = 1e-6
        origin = (np.zeros((K - R, R)), np.eye(R))
        fd = (chart.inverse((origin[0] + h * t[0], origin[1] + h * t[1]))
              - chart.inverse((origin[0] - h * t[0], origin[1] - h * t[1]))) / (2 * h)
        push = chart.tangent_push(t)
        assert np.linalg.norm(fd - push) <= 1e-6 * np.linalg.norm(push)

    def test_push_linear(self, chart, rng):
        t1 = (rng.standard_normal((K - R, R)), rng.standard_normal((R, R)))
        t2 = (rng.standard_normal((K - R, R)), rng.standard_normal((R, R)))
        combo = (2 * t1[0] - t2[0], 2 * t1[1] - t2[1])
        np.testing.assert_allclose(
            chart.tangent_push(combo), 2 * chart.tangent_push(t1) - chart.tangent_push(t2), atol=1e-12
        )

    def test_split(self, chart, rng):
        zdot = rng.standard_normal((K, R))
        v, h = chart.tangent_split(zdot)
        assert np.linalg.norm(v + h - zdot) <= 1e-10
        assert np.linalg.norm(chart.center_pinv @ h) <= 1e-10
        assert np.linalg.norm(chart.complement_pinv @ v) <= 1e-10

    def test_split_pure(self, chart, rng):
        g = rng.standard_normal((R, R))
        v, h = chart.tangent_split(chart.center @ g)
        np.testing.assert_allclose(h, 0.0, atol=1e-12)
        dx = rng.standard_normal((K - R, R))
        v, h = chart.tangent_split(chart.complement @ dx)
        np.testing.assert_allclose(v, 0.0, atol=1e-12)

    def test_differential_is_isomorphism(self, chart, coords):
        assert numerical_rank(chart.differential_matrix(coords)).numerical_rank == K * R

    def test_differential_at_origin_is_push(self, chart, rng):
        t = (rng.standard_normal((K - R, R)), rng.standard_normal((R, R)))
        origin = (np.zeros((K - R, R)), np.eye(R))
        np.testing.assert_allclose(chart.differential(origin, t), chart.tangent_push(t), atol=1e-14)


class TestGroup:
    def test_identity(self, chart, coords):
        w = chart.inverse(coords)
        np.testing.assert_allclose(chart.group_op(w, chart.identity), w, atol=1e-9)
        np.testing.assert_allclose(chart.group_op(chart.identity, w), w, atol=1e-9)

    def test_inverse(self, chart, coords):
        w = chart.inverse(coords)
        inv = chart.group_inverse(w)
        np.testing.assert_allclose(chart.inverse((-coords[0], np.linalg.inv(coords[1]))), inv, atol=1e-12)
        np.testing.assert_allclose(chart.group_op(w, inv), chart.center, atol=1e-9)

    def test_associative(self, chart, rng):
        ws = [chart.inverse((rng.standard_normal((K - R, R)), well_conditioned(rng, R))) for _ in range(3)]
        lhs = chart.group_op(chart.group_op(ws[0], ws[1]), ws[2])
        rhs = chart.group_op(ws[0], chart.group_op(ws[1], ws[2]))
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)

    def test_eta_homomorphism(self, chart, rng):
        w1 = chart.inverse((rng.standard_normal((K - R, R)), well_conditioned(rng, R)))
        w2 = chart.inverse((rng.standard_normal((K - R, R)), well_conditioned(rng, R)))
        e1, e2, e12 = chart.eta(w1), chart.eta(w2), chart.eta(chart.group_op(w1, w2))
        np.testing.assert_allclose(e12[0], e1[0] @ e2[0], atol=1e-10)
        np.testing.assert_allclose(e12[1], e1[1] @ e2[1], atol=1e-10)


class TestTransition:
    def test_same_chart(self, chart, coords):
        out = chart.transition(chart, coords)
        np.testing.assert_allclose(out.X, coords[0], atol=1e-10)
        np.testing.assert_allclose(out.G, coords[1], atol=1e-10)

    def test_reparametrised(self, chart, coords):
        p = well_conditioned(np.random.default_rng(1), R)
        other = StiefelChart.at(chart.center @ p)
        out = chart.transition(other, coords)
        np.testing.assert_allclose(other.inverse(out), chart.inverse(coords), atol=1e-9)
        np.testing.assert_allclose(out.X, chart.base.transition(other.base, coords[0]), atol=1e-9)

    def test_random_overlap(self, chart, coords, rng):
        other = StiefelChart.at(rng.standard_normal((K, R)))
        np.testing.assert_allclose(other.inverse(chart.transition(other, coords)), chart.inverse(coords), atol=1e-9)

    def test_lipschitz_response(self, chart, coords, rng):
        other = StiefelChart.at(rng.standard_normal((K, R)))
        base = chart.transition(other, coords)
        dx = 1e-6 * rng.standard_normal((K - R, R))
        moved = chart.transition(other, (coords[0] + dx, coords[1]))
        assert np.linalg.norm(moved.X - base.X) <= 1e3 * np.linalg.norm(dx)


def test_check_invertible():
    with pytest.raises(DimensionMismatch):
        check_invertible(np.ones((2, 3)))
    with pytest.raises(SingularFactor):
        check_invertible(np.diag([1.0, 1e-13]))
    check_invertible(np.diag([1.0, 1e-11]))
