import itertools
from functools import reduce
from math import prod

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gtn.tensor import ShapeError
from gtn.tt import (
    TensorizationPlan,
    TTOperator,
    compression,
    convolution_tensor,
    dense_param_count,
    dequantize_convolution_tensor,
    identity_tt,
    max_ranks,
    quantize_convolution_tensor,
    quantized_convolution_plan,
    random_tt,
    tt_apply,
    tt_from_matrix,
    tt_param_count,
    tt_param_count_for,
    tt_reconstruct,
)


def kron_all(mats):
    return reduce(np.kron, mats)


class TestTensorizationPlan:
    def test_valid(self):
        plan = TensorizationPlan(6, 8, (2, 3), (4, 2))
        assert plan.order == 2

    def test_bad_product(self):
        with pytest.raises(ValueError):
            TensorizationPlan(6, 8, (2, 2), (4, 2))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            TensorizationPlan(4, 4, (2, 2), (4,))


class TestTTOperator:
    def test_boundary_ranks(self):
        with pytest.raises(ShapeError):
            TTOperator((np.zeros((2, 2, 2, 1)),))

    def test_rank_mismatch(self):
        with pytest.raises(ShapeError):
            TTOperator((np.zeros((1, 2, 2, 3)), np.zeros((2, 2, 2, 1))))

    def test_properties(self):
        op = random_tt((2, 3), (4, 5), (1, 3, 1), np.random.default_rng(0))
        assert op.output_dims == (2, 3)
        assert op.input_dims == (4, 5)
        assert op.ranks == (1, 3, 1)


class TestReconstruct:
    def test_single_core(self):
        core = np.random.default_rng(1).standard_normal((1, 3, 4, 1))
        assert np.array_equal(tt_reconstruct(TTOperator((core,))), core[0, :, :, 0])

    def test_two_cores_against_loops(self):
        rng = np.random.default_rng(2)
        g1, g2 = rng.standard_normal((1, 2, 2, 2)), rng.standard_normal((2, 2, 2, 1))
        w = tt_reconstruct(TTOperator((g1, g2)))
        expected = np.zeros((4, 4))
        for k1, k2, j1, j2 in itertools.product(range(2), repeat=4):
            expected[k1 * 2 + k2, j1 * 2 + j2] = sum(
                g1[0, k1, j1, r] * g2[r, k2, j2, 0] for r in range(2)
            )
        np.testing.assert_allclose(w, expected, atol=1e-14)

    def test_rank_one_is_kronecker(self):
        rng = np.random.default_rng(3)
        mats = [rng.standard_normal((2, 3)), rng.standard_normal((3, 2)), rng.standard_normal((2, 2))]
        op = TTOperator(tuple(m.reshape(1, *m.shape, 1) for m in mats))
        np.testing.assert_allclose(tt_reconstruct(op), kron_all(mats), atol=1e-13)


class TestFromMatrix:
    def test_identity_2x2_factors(self):
        op = tt_from_matrix(np.eye(4), TensorizationPlan(4, 4, (2, 2), (2, 2)))
        assert np.max(np.abs(tt_reconstruct(op) - np.eye(4))) < 1e-12
        assert op.ranks == (1, 1, 1)

    def test_kronecker_full_ranks(self):
        rng = np.random.default_rng(4)
        mats = [rng.standard_normal((2, 3)), rng.standard_normal((3, 2)), rng.standard_normal((2, 2))]
        w = kron_all(mats)
        op = tt_from_matrix(w, TensorizationPlan.from_factors((2, 3, 2), (3, 2, 2)))
        assert np.linalg.norm(tt_reconstruct(op) - w) < 1e-10

    def test_kronecker_rank_one_cap(self):
        rng = np.random.default_rng(5)
        mats = [rng.standard_normal((2, 2)) for _ in range(3)]
        w = kron_all(mats)
        op = tt_from_matrix(w, TensorizationPlan.from_factors((2, 2, 2), (2, 2, 2)), max_ranks=1)
        assert op.ranks == (1, 1, 1, 1)
        assert np.linalg.norm(tt_reconstruct(op) - w) < 1e-10
        assert op.fit_error < 1e-10

    def test_round_trip_known_cores(self):
        rng = np.random.default_rng(6)
        src = random_tt((2, 3, 2), (2, 2, 3), (1, 2, 3, 1), rng)
        w = tt_reconstruct(src)
        op = tt_from_matrix(w, src.plan)
        np.testing.assert_allclose(tt_reconstruct(op), w, atol=1e-10)
        assert all(r <= s for r, s in zip(op.ranks, max_ranks(src.plan)))

    @settings(max_examples=40, deadline=None)
    @given(st.data())
    def test_unconstrained_random(self, data):
        n = data.draw(st.integers(1, 3))
        rows = data.draw(st.lists(st.integers(1, 3), min_size=n, max_size=n))
        cols = data.draw(st.lists(st.integers(1, 3), min_size=n, max_size=n))
        plan = TensorizationPlan.from_factors(rows, cols)
        w = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1))).standard_normal(
            (plan.matrix_rows, plan.matrix_cols)
        )
        op = tt_from_matrix(w, plan)
        assert np.linalg.norm(tt_reconstruct(op) - w) < 1e-8

    def test_monotone_in_rank_cap(self):
        rng = np.random.default_rng(7)
        plan = TensorizationPlan.from_factors((2, 2, 2, 2), (2, 2, 2, 2))
        w = rng.standard_normal((16, 16))
        errors = [tt_from_matrix(w, plan, max_ranks=r).fit_error for r in range(1, 17)]
        for a, b in zip(errors, errors[1:]):
            assert b <= a + 1e-12
        assert errors[-1] < 1e-10

    def test_monotone_per_bond(self):
        rng = np.random.default_rng(8)
        plan = TensorizationPlan.from_factors((2, 3, 2), (3, 2, 2))
        w = rng.standard_normal((12, 12))
        base = [1, 2, 3, 1]
        for bond in (1, 2):
            prev = np.inf
            for r in range(1, 8):
                caps = list(base)
                caps[bond] = r
                err = tt_from_matrix(w, plan, max_ranks=caps).fit_error
                assert err <= prev + 1e-12
                prev = err

    def test_fit_error_matches_reconstruction(self):
        rng = np.random.default_rng(9)
        plan = TensorizationPlan.from_factors((2, 2, 2), (2, 2, 2))
        w = rng.standard_normal((8, 8))
        op = tt_from_matrix(w, plan, max_ranks=2)
        np.testing.assert_allclose(op.fit_error, np.linalg.norm(tt_reconstruct(op) - w), rtol=1e-9)

    def test_eps_budget(self):
        rng = np.random.default_rng(10)
        plan = TensorizationPlan.from_factors((2, 2, 2), (2, 2, 2))
        w = rng.standard_normal((8, 8))
        for eps in (0.5, 0.1, 1e-3):
            op = tt_from_matrix(w, plan, eps=eps)
            assert op.fit_error <= eps * np.linalg.norm(w) + 1e-12

    def test_deterministic(self):
        rng = np.random.default_rng(11)
        plan = TensorizationPlan.from_factors((2, 2), (2, 2))
        w = rng.standard_normal((4, 4))
        a, b = tt_from_matrix(w, plan, max_ranks=2), tt_from_matrix(w, plan, max_ranks=2)
        for ca, cb in zip(a.cores, b.cores):
            assert np.array_equal(ca, cb)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            tt_from_matrix(np.zeros((4, 5)), TensorizationPlan(4, 4, (2, 2), (2, 2)))

    def test_bad_rank(self):
        with pytest.raises(ValueError):
            tt_from_matrix(np.eye(4), TensorizationPlan(4, 4, (2, 2), (2, 2)), max_ranks=0)


class TestApply:
    def test_identity(self):
        x = np.random.default_rng(12).standard_normal(24)
        np.testing.assert_array_equal(tt_apply(identity_tt((2, 3, 4)), x), x)

    def test_zero_input(self):
        op = random_tt((2, 2), (3, 2), (1, 2, 1), np.random.default_rng(13))
        assert not np.any(tt_apply(op, np.zeros(6)))

    @settings(max_examples=60, deadline=None)
    @given(st.data())
    def test_matches_dense(self, data):
        n = data.draw(st.integers(1, 4))
        out_dims = data.draw(st.lists(st.integers(1, 4), min_size=n, max_size=n))
        in_dims = data.draw(st.lists(st.integers(1, 4), min_size=n, max_size=n))
        ranks = [1] + data.draw(st.lists(st.integers(1, 4), min_size=n - 1, max_size=n - 1)) + [1]
        rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
        op = random_tt(out_dims, in_dims, ranks, rng)
        x = rng.standard_normal(prod(in_dims))
        dense = tt_reconstruct(op) @ x
        assert np.max(np.abs(tt_apply(op, x) - dense)) < 1e-10 * max(1.0, np.max(np.abs(dense)))

    def test_tensor_input_gives_tensor_output(self):
        rng = np.random.default_rng(14)
        op = random_tt((2, 3), (4, 2), (1, 2, 1), rng)
        x = rng.standard_normal((4, 2))
        y = tt_apply(op, x)
        assert y.shape == (2, 3)
        np.testing.assert_allclose(y.reshape(-1), tt_reconstruct(op) @ x.reshape(-1), atol=1e-12)

    def test_wrong_size(self):
        with pytest.raises(ShapeError):
            tt_apply(identity_tt((2, 2)), np.zeros(5))


class TestParamCounts:
    def test_compression_example(self):
        plan = TensorizationPlan.from_factors((2,) * 8, (2,) * 8)
        ranks = [1] + [2] * 7 + [1]
        assert dense_param_count(plan) == 65_536
        assert tt_param_count_for(plan, ranks) == 112
        assert round(100 * compression(plan, ranks), 2) == 99.83

    def test_op_count_matches_formula(self):
        op = random_tt((2,) * 8, (2,) * 8, [1] + [2] * 7 + [1], np.random.default_rng(15))
        assert tt_param_count(op) == 112

    def test_single_core_no_compression(self):
        plan = TensorizationPlan(5, 7, (5,), (7,))
        assert tt_param_count_for(plan, [1, 1]) == dense_param_count(plan) == 35

    def test_two_cores_formula(self):
        plan = TensorizationPlan.from_factors((4, 4), (4, 4))
        assert tt_param_count_for(plan, [1, 3, 1]) == 4 * 4 * 3 + 3 * 4 * 4 == 96

    def test_quantized_configuration(self):
        n = 5
        plan = TensorizationPlan.from_factors((2,) * n, (2,) * n)
        op = random_tt((2,) * n, (2,) * n, [1] + [2] * (n - 1) + [1], np.random.default_rng(16))
        assert tt_param_count(op) == tt_param_count_for(plan, op.ranks) == 2 * 4 * 2 + (n - 2) * 16
        assert all(c.shape[1:3] == (2, 2) for c in op.cores)

    def test_small_ranks_never_exceed_dense(self):
        # non-trivial factors, ranks no larger than any factor touching the bond
        for n in (1, 2, 3):
            for rows in itertools.product((2, 3), repeat=n):
                for cols in itertools.product((2, 3), repeat=n):
                    plan = TensorizationPlan.from_factors(rows, cols)
                    caps = [1] + [min(rows[b], cols[b], rows[b + 1], cols[b + 1]) for b in range(n - 1)] + [1]
                    for ranks in itertools.product(*[range(1, c + 1) for c in caps]):
                        assert tt_param_count_for(plan, ranks) <= dense_param_count(plan)

    def test_max_unfolding_ranks_can_exceed_dense(self):
        # bounding ranks by the unfolding sizes alone is not enough
        plan = TensorizationPlan.from_factors((2, 2), (2, 2))
        assert max_ranks(plan) == [1, 4, 1]
        assert tt_param_count_for(plan, max_ranks(plan)) == 32 > dense_param_count(plan) == 16


class TestConvolutionTensor:
    def test_width_one_is_identity(self):
        t = convolution_tensor(4, 1)
        np.testing.assert_array_equal(t[:, :, 0], np.eye(4))

    def test_index_rule(self):
        size, width = 5, 3
        t = convolution_tensor(size, width)
        for i, j, p in itertools.product(range(size), range(size), range(width)):
            # 1-based rule t[i, (i+p-1) mod I, p] = 1 with 0 read as I
            i1, p1 = i + 1, p + 1
            j1 = (i1 + p1 - 1) % size or size
            assert t[i, j, p] == (1.0 if j == j1 - 1 else 0.0)

    def test_one_per_row(self):
        t = convolution_tensor(7, 4)
        assert np.all(t.sum(axis=1) == 1)

    def test_kernel_contraction_is_circulant(self):
        rng = np.random.default_rng(17)
        for size, width in [(4, 2), (8, 3), (16, 5)]:
            k = rng.integers(-5, 6, size=width).astype(float)
            s = np.tensordot(convolution_tensor(size, width), k, axes=([2], [0]))
            for r in range(1, size):
                np.testing.assert_array_equal(s[r], np.roll(s[r - 1], 1))

    def test_size_must_exceed_width(self):
        with pytest.raises(ValueError):
            convolution_tensor(3, 3)


class TestQuantizedConvolution:
    @pytest.mark.parametrize("size,width", [(4, 1), (4, 2), (8, 2), (8, 4), (16, 1), (16, 2), (16, 4)])
    def test_rank_two_exact(self, size, width):
        t = convolution_tensor(size, width)
        plan = quantized_convolution_plan(size, width)
        m = quantize_convolution_tensor(t)
        op = tt_from_matrix(m, plan, max_ranks=2)
        back = dequantize_convolution_tensor(tt_reconstruct(op), size, width)
        assert np.max(np.abs(back - t)) < 1e-10
        assert max(op.ranks) <= 2
        assert all(k == 2 for k in plan.row_factors)

    def test_quantize_round_trip(self):
        t = np.random.default_rng(18).standard_normal((8, 8, 2))
        assert np.array_equal(dequantize_convolution_tensor(quantize_convolution_tensor(t), 8, 2), t)

    def test_non_power_of_two(self):
        with pytest.raises(ValueError):
            quantized_convolution_plan(12, 2)
