import numpy as np
import pytest

from jointfreq.model import atom_vector
from jointfreq.toeplitz import (
    normalized_trace,
    project_toeplitz,
    toeplitz_adjoint,
    toeplitz_from_generator,
)


class TestToeplitzFromGenerator:
    def test_all_ones(self):
        np.testing.assert_array_equal(
            toeplitz_from_generator([1, 1, 1]), np.ones((3, 3), dtype=complex)
        )

    def test_two_atom_checkerboard(self):
        T = toeplitz_from_generator([2, 0, 2])
        expected = np.array([[2, 0, 2], [0, 2, 0], [2, 0, 2]], dtype=complex)
        np.testing.assert_array_equal(T, expected)
        assert np.trace(T).real / 3 == pytest.approx(2.0)

    def test_identity(self):
        np.testing.assert_array_equal(
            toeplitz_from_generator([1, 0, 0]), np.eye(3, dtype=complex)
        )

    def test_hermitian_with_complex_entries(self):
        u = np.array([2.0, 1 + 1j, 0.5j])
        T = toeplitz_from_generator(u)
        np.testing.assert_allclose(T, T.conj().T)
        assert T[1, 0] == u[1] and T[0, 1] == np.conj(u[1])

    def test_imaginary_head_rejected(self):
        with pytest.raises(ValueError):
            toeplitz_from_generator([1 + 1e-6j, 0.0])


class TestAdjoint:
    def test_identity_matrix(self):
        np.testing.assert_array_equal(toeplitz_adjoint(np.eye(3)), [3, 0, 0])

    def test_all_ones_toeplitz(self):
        g = toeplitz_adjoint(toeplitz_from_generator([1, 1, 1]))
        np.testing.assert_array_equal(g, [3, 2, 1])

    def test_basis_scaling(self):
        # adjoint(Toep(e_d)) counts the n-d entries of that diagonal
        n = 6
        for d in range(n):
            e = np.zeros(n, dtype=complex)
            e[d] = 1.0
            g = toeplitz_adjoint(toeplitz_from_generator(e))
            expected = np.zeros(n, dtype=complex)
            expected[d] = n - d
            np.testing.assert_allclose(g, expected, atol=1e-14)

    def test_pairing_identity(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            n = int(rng.integers(1, 10))
            u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            u[0] = u[0].real
            A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            T = 0.5 * (A + A.conj().T)
            L = np.tril_indices(n)
            lhs = np.sum(np.conj(toeplitz_from_generator(u)[L]) * T[L])
            rhs = np.vdot(u, toeplitz_adjoint(T))
            assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


class TestProjection:
    def test_projection_idempotent_on_toeplitz(self):
        u = np.array([3.0, 1 - 2j, 0.25])
        g = project_toeplitz(toeplitz_from_generator(u))
        np.testing.assert_allclose(g, u, atol=1e-14)

    def test_diagonal_averaging(self):
        np.testing.assert_allclose(project_toeplitz(np.diag([1.0, 3.0])), [2.0, 0.0])

    def test_projection_optimality_brute_force(self):
        rng = np.random.default_rng(2)
        n = 4
        A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        T = 0.5 * (A + A.conj().T)
        best = toeplitz_from_generator(project_toeplitz(T))
        d_star = np.linalg.norm(T - best)
        for _ in range(100):
            h = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            h[0] = h[0].real
            assert d_star <= np.linalg.norm(T - toeplitz_from_generator(h)) + 1e-12

    def test_linear_and_self_adjoint(self):
        rng = np.random.default_rng(3)
        n = 5
        def herm():
            A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            return 0.5 * (A + A.conj().T)
        T1, T2 = herm(), herm()
        p = lambda T: toeplitz_from_generator(project_toeplitz(T))
        np.testing.assert_allclose(p(T1 + T2), p(T1) + p(T2), atol=1e-12)
        # self-adjointness of the projection map on the Hermitian space
        lhs = np.trace(p(T1).conj().T @ T2)
        rhs = np.trace(T1.conj().T @ p(T2))
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


class TestNormalizedTrace:
    def test_checkerboard(self):
        assert normalized_trace(np.array([2.0, 0, 2])) == pytest.approx(2.0)

    def test_atomic_weight_sum(self):
        # u = sum |c_k| a(f_k) has normalized trace sum |c_k|
        n = 12
        weights = [1.5, 0.75, 2.0]
        freqs = [0.1, 0.37, 0.81]
        u = sum(w * atom_vector(f, n) for w, f in zip(weights, freqs))
        assert normalized_trace(u) == pytest.approx(sum(weights), abs=1e-12)

    def test_zero(self):
        assert normalized_trace(np.zeros(4)) == 0.0
