import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from matbundle.errors import DimensionMismatch, RankDeficient
from matbundle.numerics import (
    as_matrix,
    factor_rank_r,
    format_matrix,
    format_matrix_blocks,
    numerical_rank,
    orthogonal_complement,
    parse_matrix,
    parse_matrix_blocks,
    pseudo_inverse,
    random_full_rank,
    random_rank_r,
    read_matrix,
    truncated_svd,
    write_matrix,
)

from .strategies import grassmann_dims, seeds


class TestPseudoInverse:
    def test_frozen_examples(self, oracles):
        for case in oracles["pinv"]:
            np.testing.assert_allclose(pseudo_inverse(case["Z"]), case["P"], atol=1e-15)

    def test_random_7x3_against_normal_equations(self, oracles):
        z = np.random.default_rng(oracles["pinv_random_7x3"]["seed"]).standard_normal((7, 3))
        p = pseudo_inverse(z)
        assert np.linalg.norm(p @ z - np.eye(3)) <= 1e-12
        np.testing.assert_allclose(p, oracles["pinv_random_7x3"]["P"], atol=1e-12)

    def test_rank_deficient(self):
        with pytest.raises(RankDeficient):
            pseudo_inverse([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])

    def test_wide_matrix(self):
        with pytest.raises(DimensionMismatch):
            pseudo_inverse(np.ones((2, 3)))

    @given(grassmann_dims(), seeds)
    def test_projector_idempotent(self, dims, seed):
        k, r = dims
        z = random_full_rank(k, r, seed)
        proj = z @ pseudo_inverse(z)
        assert np.linalg.norm(proj @ proj - proj) <= 1e-9 * max(1.0, np.linalg.norm(proj))


class TestOrthogonalComplement:
    def test_basis_vector(self):
        c = orthogonal_complement([[1.0], [0.0]])
        np.testing.assert_allclose(np.abs(c), [[0.0], [1.0]], atol=1e-15)

    def test_diagonal(self):
        c = orthogonal_complement([[1.0], [1.0]])
        a = 1 / np.sqrt(2)
        assert np.allclose(c, [[a], [-a]]) or np.allclose(c, [[-a], [a]])

    def test_random_9x4(self):
        z = np.random.default_rng(3).standard_normal((9, 4))
        c = orthogonal_complement(z)
        assert c.shape == (9, 5)
        assert np.linalg.norm(z.T @ c) <= 1e-12
        assert np.linalg.svd(c, compute_uv=False).min() >= 0.99

    def test_square_rejected(self):
        with pytest.raises(DimensionMismatch):
            orthogonal_complement(np.eye(3))

    @given(grassmann_dims(), seeds)
    def test_complementary_projectors(self, dims, seed):
        k, r = dims
        z = random_full_rank(k, r, seed)
        c = orthogonal_complement(z)
        p = pseudo_inverse(z)
        assert np.linalg.norm(p @ z - np.eye(r)) <= 1e-10 * np.linalg.cond(z)
        assert np.linalg.norm(p @ c) <= 1e-10 * np.linalg.cond(z)
        assert np.linalg.norm(z @ p + c @ c.T - np.eye(k)) <= 1e-10 * np.linalg.cond(z)


class TestNumericalRank:
    def test_zero(self):
        d = numerical_rank(np.zeros((3, 3)))
        assert d.numerical_rank == 0
        assert d.tolerance_used > 0

    def test_identity(self):
        assert numerical_rank(np.eye(4)).numerical_rank == 4

    def test_outer_product(self):
        rng = np.random.default_rng(0)
        d = numerical_rank(np.outer(rng.standard_normal(6), rng.standard_normal(5)))
        assert d.numerical_rank == 1
        assert d.smallest_kept_sv > d.largest_dropped_sv

    def test_bad_tolerance(self):
        with pytest.raises(ValueError):
            numerical_rank(np.eye(2), tol_rel=1.5)

    def test_deterministic(self):
        a = np.random.default_rng(1).standard_normal((5, 4))
        assert numerical_rank(a) == numerical_rank(a)


class TestFactorRankR:
    def test_diag(self, oracles):
        u, g, v = factor_rank_r(np.diag([3.0, 2.0, 1.0]), 2)
        exp = oracles["diag321_r2"]
        np.testing.assert_allclose(np.linalg.svd(g, compute_uv=False), exp["singular_values"], atol=1e-14)
        resid = np.linalg.norm(u @ g @ v.T - np.diag([3.0, 2.0, 1.0]))
        assert resid == pytest.approx(exp["residual"], abs=1e-14)

    def test_exact_rank(self):
        a = random_rank_r(8, 6, 2, 4)
        u, g, v = factor_rank_r(a, 2)
        assert np.linalg.norm(u @ g @ v.T - a) <= 1e-10 * np.linalg.norm(a)
        np.testing.assert_allclose(u.T @ u, np.eye(2), atol=1e-14)
        np.testing.assert_allclose(v.T @ v, np.eye(2), atol=1e-14)

    def test_identity(self):
        u, g, v = factor_rank_r(np.eye(3), 3)
        np.testing.assert_allclose(u @ g @ v.T, np.eye(3), atol=1e-14)

    def test_deficient(self):
        with pytest.raises(RankDeficient):
            factor_rank_r(random_rank_r(5, 5, 2, 0), 3)

    @given(seeds, st.integers(1, 4))
    def test_matches_truncated_svd(self, seed, r):
        a = np.random.default_rng(seed).standard_normal((7, 5))
        u, g, v = factor_rank_r(a, r)
        ar = truncated_svd(a, r)
        assert np.linalg.norm(u @ g @ v.T - ar) <= 1e-10 * np.linalg.norm(ar)


class TestRandomGenerators:
    def test_full_rank(self):
        assert numerical_rank(random_full_rank(5, 2, 0)).numerical_rank == 2
        assert abs(np.linalg.det(random_full_rank(3, 3, 7))) > 1e-8

    def test_rank_r(self):
        a = random_rank_r(6, 4, 2, 1)
        assert a.shape == (6, 4)
        assert numerical_rank(a).numerical_rank == 2

    def test_reproducible(self):
        assert np.array_equal(random_rank_r(6, 4, 2, 1), random_rank_r(6, 4, 2, 1))
        assert np.array_equal(random_full_rank(5, 2, 9), random_full_rank(5, 2, 9))

    def test_bad_dims(self):
        with pytest.raises(DimensionMismatch):
            random_full_rank(2, 3, 0)
        with pytest.raises(DimensionMismatch):
            random_rank_r(3, 2, 3, 0)


class TestValidation:
    def test_non_finite(self):
        with pytest.raises(ValueError):
            as_matrix([[1.0, np.nan]])

    def test_one_dimensional(self):
        with pytest.raises(DimensionMismatch):
            as_matrix([1.0, 2.0])


class TestTextFormat:
    def test_roundtrip_full_precision(self):
        a = np.random.default_rng(5).standard_normal((4, 3)) * 1e-7
        assert np.array_equal(parse_matrix(format_matrix(a)), a)

    def test_header(self):
        assert format_matrix(np.eye(2)).splitlines()[0].split() == ["2", "2"]

    def test_file_roundtrip(self, tmp_path):
        a = np.arange(6.0).reshape(2, 3) / 7
        write_matrix(tmp_path / "a.txt", a)
        assert np.array_equal(read_matrix(tmp_path / "a.txt"), a)

    def test_stream_roundtrip(self):
        buf = io.StringIO()
        write_matrix(buf, np.eye(3))
        buf.seek(0)
        assert np.array_equal(read_matrix(buf), np.eye(3))

    def test_blocks(self):
        mats = [np.eye(2), np.ones((1, 3)), np.arange(4.0).reshape(4, 1)]
        back = parse_matrix_blocks(format_matrix_blocks(mats))
        assert all(np.array_equal(x, y) for x, y in zip(mats, back))

    @pytest.mark.parametrize("text", ["2 2\n1 2\n3\n", "2 2\n1 2\n", "x y\n", "1 1\nnan\n"])
    def test_malformed(self, text):
        with pytest.raises(ValueError):
            parse_matrix(text)
