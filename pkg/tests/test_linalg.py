"""Bilinear form, factorization, eigensystem helpers and modal responses."""

from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg

from wavemor import (BranchCutError, DefectiveMatrixError, EigenSystem,
                     NearSingularWarning, SingularModelError,
                     SingularOperatorError, UsageError, bilinear, factorize,
                     principal_sqrt)
from wavemor.linalg import exp_action, resolvent_apply


class _MatrixOnly:
    """Minimal operator stand-in: factorize only touches .matrix."""

    def __init__(self, matrix):
        from scipy import sparse
        self.matrix = sparse.csr_matrix(matrix)


def _rng_matrix(n, seed=3):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


class TestBilinear:
    def test_matches_the_unconjugated_sum(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(7) + 1j * rng.standard_normal(7)
        y = rng.standard_normal(7) + 1j * rng.standard_normal(7)
        m = rng.standard_normal(7) + 1j * rng.standard_normal(7)
        expected = sum(m[j] * x[j] * y[j] for j in range(7))
        assert bilinear(x, y, m) == pytest.approx(expected)

    def test_is_symmetric_in_its_arguments(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(50) + 1j * rng.standard_normal(50)
        y = rng.standard_normal(50) + 1j * rng.standard_normal(50)
        m = rng.standard_normal(50) + 0j
        a, b = bilinear(x, y, m), bilinear(y, x, m)
        assert abs(a - b) <= 1e-15 * abs(a)

    def test_isotropic_vectors_exist(self):
        # <x, x> = 0 without x = 0: the form is not an inner product
        x = np.array([1.0, 1.0j])
        assert bilinear(x, x, np.ones(2, dtype=complex)) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(UsageError):
            bilinear(np.ones(3), np.ones(3), np.ones(4))


class TestFactorize:
    def test_solve_hits_direct_accuracy(self, line_op):
        fac = factorize(line_op)
        rng = np.random.default_rng(2)
        y = rng.standard_normal(line_op.n) + 1j * rng.standard_normal(line_op.n)
        x = fac.solve(y)
        resid = np.linalg.norm(line_op.matrix @ x - y) / np.linalg.norm(y)
        assert resid < 1e-13
        assert fac.fill_ratio >= 1.0

    def test_solve_counter_counts_logical_solves(self, line_op):
        fac = factorize(line_op)
        y = np.ones(line_op.n, dtype=complex)
        fac.solve(y)
        fac.solve(y)
        assert fac.solve_count == 2   # refinement passes are not counted
        fac.reset_counters()
        assert fac.solve_count == 0

    def test_refinement_can_be_disabled(self, line_op):
        fac = factorize(line_op, refine=False)
        y = np.ones(line_op.n, dtype=complex)
        x = fac.solve(y)
        assert np.linalg.norm(line_op.matrix @ x - y) < 1e-8

    def test_singular_matrix_raises(self):
        singular = np.array([[1.0, 2.0], [2.0, 4.0]])
        with pytest.raises(SingularOperatorError):
            factorize(_MatrixOnly(singular))


class TestEigenSystem:
    def test_reconstructs_the_matrix_action(self):
        g = _rng_matrix(12)
        eig = EigenSystem(g)
        v = _rng_matrix(12)[:, 0]
        np.testing.assert_allclose(
            eig.apply_function(eig.w, v), g @ v, rtol=1e-10, atol=1e-10)
        assert eig.n == 12

    def test_solve_basis_inverts_the_eigenvector_matrix(self):
        g = _rng_matrix(6)
        eig = EigenSystem(g)
        v = np.arange(6, dtype=complex)
        np.testing.assert_allclose(eig.x @ eig.solve_basis(v), v, atol=1e-12)

    def test_matrix_function_agrees_with_scipy_expm(self):
        g = 0.3 * _rng_matrix(8)
        eig = EigenSystem(g)
        np.testing.assert_allclose(eig.matrix_function(np.exp(eig.w)),
                                   scipy.linalg.expm(g), rtol=1e-9, atol=1e-11)

    def test_jordan_block_is_rejected(self):
        with pytest.raises(DefectiveMatrixError) as info:
            EigenSystem(np.array([[2.0, 1.0], [0.0, 2.0]]))
        assert info.value.eigenvalue == pytest.approx(2.0, abs=1e-6)

    def test_defective_on_the_cut_raises_the_branch_error(self):
        with pytest.raises(BranchCutError):
            EigenSystem(np.array([[-1.0, 1.0], [0.0, -1.0]]))

    def test_non_square_rejected(self):
        with pytest.raises(UsageError):
            EigenSystem(np.ones((2, 3)))


class TestPrincipalSqrt:
    def test_square_recovers_the_matrix(self):
        g = _rng_matrix(9)
        r = principal_sqrt(g)
        np.testing.assert_allclose(r @ r, g, rtol=1e-9, atol=1e-9)

    def test_eigenvalues_land_in_the_right_half_plane(self):
        g = _rng_matrix(9)
        w = np.linalg.eigvals(principal_sqrt(g))
        assert w.real.min() >= -1e-12 * np.abs(w).max()

    def test_negative_real_axis_maps_to_the_positive_imaginary_one(self):
        r = principal_sqrt(np.diag([-4.0 + 0j, -9.0]))
        np.testing.assert_allclose(np.diag(r), [2.0j, 3.0j], atol=1e-14)

    def test_agrees_with_scipy_on_a_definite_matrix(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((7, 7))
        spd = a @ a.T + 7 * np.eye(7)
        np.testing.assert_allclose(principal_sqrt(spd),
                                   scipy.linalg.sqrtm(spd), atol=1e-9)


class TestResolventAndPropagator:
    def test_resolvent_matches_a_dense_solve(self):
        g = _rng_matrix(10)
        v = _rng_matrix(10)[:, 1]
        s = 0.7 - 0.2j
        expected = np.linalg.solve(g + s * np.eye(10), v)
        np.testing.assert_allclose(resolvent_apply(g, s, v), expected,
                                   rtol=1e-9, atol=1e-9)

    def test_resolvent_warns_near_a_pole(self):
        g = np.diag([1.0 + 0j, 3.0])
        with pytest.warns(NearSingularWarning):
            resolvent_apply(g, -1.0 + 1e-12, np.ones(2, dtype=complex))

    def test_exp_action_matches_scipy(self):
        g = 0.2 * _rng_matrix(8)
        v = _rng_matrix(8)[:, 2]
        expected = scipy.linalg.expm(-1.7 * g) @ v
        np.testing.assert_allclose(exp_action(g, 1.7, v), expected,
                                   rtol=1e-9, atol=1e-10)

    def test_exp_action_rejects_negative_times(self):
        with pytest.raises(UsageError):
            exp_action(np.eye(2), -0.1, np.ones(2))


class TestModalSystem:
    def test_scalar_unit_operator_gives_sine_and_lorentzian(self):
        from wavemor import ModalSystem
        model = ModalSystem(np.array([[1.0 + 0j]]), rows=np.array([[1.0]]),
                            source=np.array([1.0]))
        t = np.linspace(0.0, 12.0, 50)
        np.testing.assert_allclose(model.time_response(t)[:, 0], np.sin(t),
                                   atol=1e-14)
        s = np.array([0.5, 2.0 + 1.0j, -0.3 + 2.5j])
        np.testing.assert_allclose(model.freq_response(s)[:, 0],
                                   1.0 / (1.0 + s ** 2), atol=1e-14)

    def test_diagonal_operator_superposes_modes(self):
        from wavemor import ModalSystem
        lam = np.array([1.0, 4.0, 9.0])
        rows = np.array([[0.2, -1.0, 0.5]])
        src = np.array([1.0, 2.0, -0.5])
        model = ModalSystem(np.diag(lam).astype(complex), rows, src)
        t = np.linspace(0.0, 5.0, 20)
        expected = sum(rows[0, j] * src[j] * np.sin(np.sqrt(lam[j]) * t)
                       / np.sqrt(lam[j]) for j in range(3))
        np.testing.assert_allclose(model.time_response(t)[:, 0], expected,
                                   atol=1e-13)

    def test_negative_times_are_silent(self):
        from wavemor import ModalSystem
        model = ModalSystem(np.array([[1.0 + 0j]]), np.array([[1.0]]),
                            np.array([1.0]))
        out = model.time_response(np.array([-2.0, -0.5, 0.5]))
        assert out[0, 0] == 0.0 and out[1, 0] == 0.0 and out[2, 0] != 0.0

    def test_zero_eigenvalue_is_refused(self):
        from wavemor import ModalSystem
        model = ModalSystem(np.array([[0.0 + 0j]]), np.array([[1.0]]),
                            np.array([1.0]))
        with pytest.raises(SingularModelError):
            model.time_response(np.array([1.0]))
        with pytest.raises(SingularModelError):
            model.freq_response(np.array([1.0 + 0j]))

    def test_sampling_next_to_a_pole_warns(self):
        from wavemor import ModalSystem
        model = ModalSystem(np.array([[1.0 + 0j]]), np.array([[1.0]]),
                            np.array([1.0]))
        with pytest.warns(NearSingularWarning):
            model.freq_response(np.array([-1.0j + 1e-13]))
