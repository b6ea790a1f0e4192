import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from core.errors import DimensionMismatchError, NotPositiveDefiniteError
from core.hermitian_core import (
    HermitianMatrix,
    cholesky,
    conditional_variance,
    log_det,
    min_eigen_psd_check,
    schur_complement,
    solve_hermitian,
)


class TestHermitianMatrix:
    def test_symmetrizes_on_construction(self):
        a = HermitianMatrix([[1.0, 2.0], [0.0, 3.0]])
        assert_allclose(a.entries, [[1.0, 1.0], [1.0, 3.0]])

    def test_entries_are_read_only(self):
        a = HermitianMatrix.identity(2)
        with pytest.raises(ValueError):
            a.entries[0, 0] = 5.0

    def test_rejects_non_square(self):
        with pytest.raises(DimensionMismatchError):
            HermitianMatrix(np.ones((2, 3)))

    def test_diagonal_trace_and_permutation(self):
        a = HermitianMatrix([[1.0, 0.5j], [-0.5j, 4.0]])
        assert a.trace() == pytest.approx(5.0)
        assert_allclose(a.diag(), [1.0, 4.0])
        swapped = a.permuted([1, 0])
        assert_allclose(swapped.entries, [[4.0, -0.5j], [0.5j, 1.0]])
        assert HermitianMatrix.diagonal([1, 2]).is_diagonal()
        assert not a.is_diagonal()


class TestCholesky:
    def test_identity(self):
        assert_allclose(cholesky(HermitianMatrix.identity(2)), np.eye(2))

    def test_diagonal(self):
        assert_allclose(cholesky(HermitianMatrix.diagonal([4, 9])), np.diag([2.0, 3.0]))

    def test_two_by_two(self):
        lower = cholesky(HermitianMatrix([[2, 1], [1, 2]]))
        expected = [[math.sqrt(2), 0.0], [1 / math.sqrt(2), math.sqrt(1.5)]]
        assert_allclose(lower, expected, atol=1e-12)
        assert_allclose(lower @ lower.conj().T, [[2, 1], [1, 2]], atol=1e-12)

    def test_complex_factor_reconstructs(self):
        a = np.array([[3.0, 1 - 1j], [1 + 1j, 2.0]])
        lower = cholesky(a)
        assert_allclose(lower @ lower.conj().T, a, atol=1e-12)

    def test_indefinite_raises(self):
        with pytest.raises(NotPositiveDefiniteError):
            cholesky(HermitianMatrix([[1, 2], [2, 1]]))

    def test_singular_raises(self):
        with pytest.raises(NotPositiveDefiniteError):
            cholesky(HermitianMatrix([[1, 1], [1, 1]]))

    @pytest.mark.parametrize("dim", range(1, 9))
    def test_random_gram_round_trip(self, dim):
        rng = np.random.default_rng(100 + dim)
        b = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        a = b @ b.conj().T + 1e-6 * np.eye(dim)
        lower = cholesky(a)
        assert np.allclose(np.triu(lower, 1), 0.0)
        assert np.linalg.norm(lower @ lower.conj().T - a) <= 1e-9 * np.linalg.norm(a)


class TestSolveHermitian:
    def test_identity(self):
        assert_allclose(solve_hermitian(HermitianMatrix.identity(3), [1, 2, 3]), [1, 2, 3])

    def test_diagonal(self):
        assert_allclose(solve_hermitian(HermitianMatrix.diagonal([2, 4]), [2, 8]), [1, 2])

    def test_coupled(self):
        assert_allclose(solve_hermitian(HermitianMatrix([[2, 1], [1, 2]]), [3, 3]), [1, 1])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            solve_hermitian(HermitianMatrix.identity(2), [1, 2, 3])


class TestSchurComplement:
    def test_identity(self):
        assert schur_complement(HermitianMatrix.identity(3), 2) == pytest.approx(1.0)

    def test_first_index_is_the_entry(self):
        a = HermitianMatrix([[5, 1], [1, 2]])
        assert schur_complement(a, 1) == pytest.approx(5.0)

    def test_two_by_two(self):
        assert schur_complement(HermitianMatrix([[4, 2], [2, 4]]), 2) == pytest.approx(3.0)

    def test_out_of_range(self):
        with pytest.raises(DimensionMismatchError):
            schur_complement(HermitianMatrix.identity(2), 3)

    @pytest.mark.parametrize("dim", range(1, 9))
    def test_chain_rule_recovers_determinant(self, dim):
        rng = np.random.default_rng(dim)
        b = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        a = HermitianMatrix(b @ b.conj().T + np.eye(dim))
        product = np.prod([schur_complement(a, m) for m in range(1, dim + 1)])
        assert product == pytest.approx(np.linalg.det(np.asarray(a)).real, rel=1e-9)

    def test_conditional_variance_on_arbitrary_set(self):
        a = np.array([[4.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 1.0]])
        # condition relay 0 on relay 1 only
        assert conditional_variance(a, 0, [1]) == pytest.approx(3.0)
        assert conditional_variance(a, 2, [0, 1]) == pytest.approx(1.0)
        with pytest.raises(DimensionMismatchError):
            conditional_variance(a, 0, [0])


class TestPsdCheck:
    def test_identity(self):
        assert min_eigen_psd_check(HermitianMatrix.identity(2), tol=0.0)

    def test_zero_matrix(self):
        assert min_eigen_psd_check(HermitianMatrix.zeros(3), tol=1e-12)

    def test_indefinite(self):
        assert not min_eigen_psd_check(HermitianMatrix([[1, 2], [2, 1]]), tol=1e-9)

    def test_negative_tolerance_rejected(self):
        with pytest.raises(ValueError):
            min_eigen_psd_check(HermitianMatrix.identity(2), tol=-1.0)


def test_log_det_matches_numpy():
    a = np.array([[4.0, 2.0], [2.0, 4.0]])
    assert log_det(a) == pytest.approx(math.log(12.0))
