"""
Conjugate gradient solver tests.
"""
import numpy as np
import pytest
from scipy.sparse import csr_matrix, diags, identity

from engine.assembly import SparseSystem
from engine.errors import HybridFemError, NoConvergence
from engine.solver import solve_cg


def laplacian_1d(n: int) -> csr_matrix:
    return diags([-np.ones(n - 1), 2.0 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")


class TestSolveCg:
    """Plain and Jacobi-preconditioned CG."""

    def test_identity(self):
        b = np.arange(1.0, 6.0)
        result = solve_cg(identity(5, format="csr"), b)
        np.testing.assert_allclose(result.x, b)
        assert result.iterations == 1

    def test_two_by_two(self):
        A = csr_matrix(np.array([[4.0, 1.0], [1.0, 3.0]]))
        result = solve_cg(A, np.array([1.0, 2.0]))
        np.testing.assert_allclose(result.x, [1.0 / 11.0, 7.0 / 11.0], atol=1e-12)
        assert result.iterations <= 2
        assert result.residual <= 1e-10

    def test_accepts_sparse_system(self):
        A = laplacian_1d(50)
        b = np.ones(50)
        result = solve_cg(SparseSystem(A, b))
        assert np.linalg.norm(b - A @ result.x) <= 1e-10 * np.linalg.norm(b)

    def test_jacobi_preconditioner(self):
        scale = diags(np.linspace(1.0, 100.0, 40))
        A = (scale @ laplacian_1d(40) @ scale).tocsr()
        b = np.ones(40)
        plain = solve_cg(A, b)
        jacobi = solve_cg(A, b, preconditioner="jacobi")
        np.testing.assert_allclose(jacobi.x, plain.x, rtol=1e-7)

    def test_zero_rhs(self):
        result = solve_cg(laplacian_1d(10), np.zeros(10))
        np.testing.assert_array_equal(result.x, np.zeros(10))
        assert result.iterations == 0

    def test_no_convergence(self):
        with pytest.raises(NoConvergence) as info:
            solve_cg(laplacian_1d(30), np.ones(30), max_iters=2)
        assert info.value.iterations == 2
        assert info.value.residual > info.value.target
        assert isinstance(info.value, HybridFemError)
        assert "did not converge" in str(info.value)

    def test_bad_preconditioner(self):
        with pytest.raises(ValueError, match="valid: none, jacobi"):
            solve_cg(identity(3, format="csr"), np.ones(3), preconditioner="ilu")

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            solve_cg(identity(3, format="csr"), np.ones(4))

    def test_missing_rhs(self):
        with pytest.raises(ValueError):
            solve_cg(identity(3, format="csr"))

    def test_warm_start(self):
        A = laplacian_1d(20)
        b = np.ones(20)
        exact = solve_cg(A, b, rel_residual_target=1e-14).x
        result = solve_cg(A, b, x0=exact)
        assert result.iterations == 0
