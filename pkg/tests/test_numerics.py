import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multibeam.numerics import InvalidMatrix, null_space, rank, svd


def random_complex(rng, rows, cols):
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


class TestSvd:
    def test_identity(self):
        res = svd(np.eye(2))
        np.testing.assert_allclose(res.s, [1.0, 1.0])

    def test_zero_matrix(self):
        res = svd(np.zeros((3, 2)))
        np.testing.assert_allclose(res.s, [0.0, 0.0])

    def test_diagonal_analytic(self):
        # singular values of diag(3, 1) are exactly |3|, |1|
        res = svd(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(res.s, [3.0, 1.0], atol=1e-14)

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidMatrix):
            svd(np.array([[np.nan, 0.0], [0.0, 1.0]]))
        with pytest.raises(InvalidMatrix):
            svd(np.array([[np.inf + 0j, 0.0], [0.0, 1.0]]))

    @given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.integers(1, 12))
    @settings(max_examples=40, deadline=None)
    def test_reconstruction_invariant(self, seed, rows, cols):
        rng = np.random.default_rng(seed)
        a = random_complex(rng, rows, cols)
        res = svd(a)
        assert np.all(np.diff(res.s) <= 0)
        assert np.all(res.s >= 0)
        assert res.reconstruction_error(a) <= 1e-10 * max(res.s[0], 1e-300)


class TestRank:
    def test_identity(self):
        assert rank(np.eye(3)) == 3

    def test_zero(self):
        assert rank(np.zeros((4, 3))) == 0

    def test_repeated_column(self):
        # two independent columns plus a copy of the first: rank 2 by construction
        rng = np.random.default_rng(7)
        c1 = random_complex(rng, 4, 1)
        c2 = random_complex(rng, 4, 1)
        a = np.column_stack([c1, c2, c1])
        assert rank(a) == 2

    def test_tolerance_scales_with_largest(self):
        a = np.diag([1.0, 1e-12])
        assert rank(a, tol=1e-9) == 1
        assert rank(a, tol=1e-15) == 2


class TestNullSpace:
    def test_orthogonal_complement_in_c2(self):
        basis = null_space(np.array([[1.0], [0.0]], dtype=complex))
        assert basis.shape == (2, 1)
        # spans e2 up to phase
        assert abs(basis[0, 0]) < 1e-12
        assert abs(abs(basis[1, 0]) - 1.0) < 1e-12

    def test_full_rank_gives_empty_basis(self):
        rng = np.random.default_rng(1)
        a = random_complex(rng, 2, 2)
        assert null_space(a, tol=1e-9).shape == (2, 0)

    def test_dimension_and_residual(self):
        rng = np.random.default_rng(5)
        a = random_complex(rng, 4, 2)
        basis = null_space(a)
        assert basis.shape == (4, 2)
        residual = np.abs(a.conj().T @ basis)
        assert residual.max() <= 1e-9

    def test_empty_constraint_set(self):
        basis = null_space(np.zeros((3, 0)))
        np.testing.assert_allclose(basis, np.eye(3))

    @given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.integers(0, 8))
    @settings(max_examples=40, deadline=None)
    def test_rank_nullity_and_orthonormality(self, seed, rows, cols):
        rng = np.random.default_rng(seed)
        a = random_complex(rng, rows, cols)
        basis = null_space(a)
        assert rank(a) + basis.shape[1] == rows
        gram = basis.conj().T @ basis
        np.testing.assert_allclose(gram, np.eye(basis.shape[1]), atol=1e-10)
