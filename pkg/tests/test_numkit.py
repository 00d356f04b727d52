import numpy as np
import pytest

from src.exceptions import DimensionError
from src.numkit import (
    Rng, derive_seed, ensure_finite, matvec, matvec_transposed, outer_accumulate,
    rng_next, rng_permutation, rng_uniform, uniform_init,
)


class TestSplitMix64:

    def test_reference_outputs_from_zero_seed(self):
        rng, first = rng_next(Rng(0))
        rng, second = rng_next(rng)
        assert first == 0xE220A8397B1DCDAF
        assert second == 0x6E789E6AA1B965F4

    def test_vectorised_draws_match_scalar_steps(self):
        start = Rng(0xDEADBEEF)
        vec_rng, values = start.draw_u64(6)
        rng = start
        expected = []
        for _ in range(6):
            rng, value = rng_next(rng)
            expected.append(value)
        assert [int(v) for v in values] == expected
        assert vec_rng == rng

    def test_state_is_immutable(self):
        rng = Rng(5)
        rng_next(rng)
        assert rng.state == 5

    def test_same_seed_same_stream(self):
        _, a = rng_uniform(Rng(99), 100)
        _, b = rng_uniform(Rng(99), 100)
        np.testing.assert_array_equal(a, b)

    def test_uniform_range(self):
        _, u = rng_uniform(Rng(3), 10000)
        assert u.min() >= 0.0
        assert u.max() < 1.0
        assert abs(u.mean() - 0.5) < 0.02

    def test_permutation(self):
        rng, order = rng_permutation(Rng(11), 50)
        assert sorted(order.tolist()) == list(range(50))
        _, again = rng_permutation(Rng(11), 50)
        np.testing.assert_array_equal(order, again)
        _, next_order = rng_permutation(rng, 50)
        assert not np.array_equal(order, next_order)

    def test_state_wraps_to_64_bits(self):
        assert Rng(2 ** 64 + 3).state == 3

    def test_derive_seed_is_xor(self):
        assert derive_seed(0b1010, 0b0110) == 0b1100
        assert derive_seed(42, 0) == 42

    def test_negative_count_rejected(self):
        with pytest.raises(DimensionError):
            Rng(0).draw_u64(-1)


class TestUniformInit:

    def test_shape_and_bound(self):
        M, _ = uniform_init(16, 392, 0.05, Rng(1))
        assert M.shape == (16, 392)
        assert np.all(np.abs(M) <= 0.05)

    def test_deterministic_and_advances(self):
        M1, rng1 = uniform_init(3, 4, 1.0, Rng(8))
        M2, rng2 = uniform_init(3, 4, 1.0, Rng(8))
        np.testing.assert_array_equal(M1, M2)
        M3, _ = uniform_init(3, 4, 1.0, rng1)
        assert not np.array_equal(M1, M3)

    def test_zero_bound_gives_zeros(self):
        M, _ = uniform_init(2, 2, 0.0, Rng(0))
        np.testing.assert_array_equal(M, np.zeros((2, 2)))

    @pytest.mark.parametrize("rows,cols,bound", [(0, 3, 1.0), (3, 0, 1.0), (2, 2, -0.1)])
    def test_invalid_arguments(self, rows, cols, bound):
        with pytest.raises(DimensionError):
            uniform_init(rows, cols, bound, Rng(0))


class TestKernels:

    def test_matvec_batch_matches_single(self, gen):
        M = gen.standard_normal((5, 3))
        V = gen.standard_normal((7, 3))
        batch = matvec(M, V)
        for i in range(7):
            np.testing.assert_allclose(batch[i], matvec(M, V[i]), rtol=0, atol=1e-12)

    def test_matvec_transposed(self, gen):
        M = gen.standard_normal((5, 3))
        v = gen.standard_normal(5)
        np.testing.assert_allclose(matvec_transposed(M, v), M.T @ v, atol=1e-12)

    def test_matvec_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            matvec(np.zeros((2, 3)), np.zeros(2))

    def test_outer_accumulate_sums_batch(self, gen):
        G = np.ones((3, 2))
        U = gen.standard_normal((4, 3))
        V = gen.standard_normal((4, 2))
        expected = G + 0.5 * sum(np.outer(U[i], V[i]) for i in range(4))
        np.testing.assert_allclose(outer_accumulate(G, U, V, alpha=0.5), expected, atol=1e-12)
        np.testing.assert_array_equal(G, np.ones((3, 2)))

    def test_ensure_finite(self):
        ensure_finite(np.zeros(3))
        with pytest.raises(DimensionError):
            ensure_finite(np.array([1.0, np.nan]))


class TestKernelExamples:

    def test_hand_arithmetic(self):
        M = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(matvec(M, np.ones(2)), [3.0, 7.0])
        np.testing.assert_array_equal(matvec_transposed(M, np.ones(2)), [4.0, 6.0])
        G = outer_accumulate(np.zeros((2, 2)), np.array([1.0, 0.0]), np.array([0.0, 1.0]), alpha=2.0)
        np.testing.assert_array_equal(G, [[0.0, 2.0], [0.0, 0.0]])

    @pytest.mark.parametrize("trial", range(10))
    def test_adjoint_identity(self, trial):
        gen = np.random.default_rng(100 + trial)
        M = gen.standard_normal((6, 4))
        u = gen.standard_normal(4)
        v = gen.standard_normal(6)
        assert abs(matvec_transposed(M, v) @ u - v @ matvec(M, u)) < 1e-12

    def test_outer_accumulate_additive_inverse(self, gen):
        # integer-valued entries keep every sum exact
        G = gen.integers(-5, 5, size=(3, 4)).astype(np.float64)
        u = gen.integers(-5, 5, size=3).astype(np.float64)
        v = gen.integers(-5, 5, size=4).astype(np.float64)
        back = outer_accumulate(outer_accumulate(G, u, v), u, v, alpha=-1.0)
        np.testing.assert_array_equal(back, G)
        np.testing.assert_array_equal(outer_accumulate(G, u, v, alpha=0.0), G)

    def test_uniform_init_sample_mean(self):
        M, _ = uniform_init(1, 100_000, 1.0, Rng(2024))
        assert abs(M.mean()) < 0.02
        assert M.min() >= -1.0 and M.max() <= 1.0
