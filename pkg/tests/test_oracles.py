"""Reference solvers cross-checked against each other and closed forms.

The dense stabilized solution is re-derived here through a Schur-based
square root (scipy.linalg.sqrtm) and explicit dense solves, a completely
different code path from the eigendecomposition the package uses. The two
routes agreeing is what lets the dense oracle stand in for ground truth
everywhere else.
"""

from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg
from scipy import sparse

from wavemor import (AccuracyWarning, DenseOracle, ResponseSet,
                     SingularOperatorError, UsageError, assemble_operator,
                     assemble_source, bromwich_contour, build_grid,
                     convolve_response, courant_limit, dense_freq_solution,
                     dense_time_solution, direct_freq_solve, gaussian_wavelet,
                     homogeneous_medium, laplace_inversion_check,
                     leapfrog_reference)
from wavemor.oracles import brute_force_eks_basis

RECEIVERS = (8, 20)


class _MatrixOnly:
    def __init__(self, matrix):
        self.matrix = sparse.csr_matrix(matrix)
        self.n = matrix.shape[0]


def _schur_freq(op, b, s):
    b_mat = scipy.linalg.sqrtm(-op.matrix.toarray())
    n = op.n
    direct = np.linalg.solve(b_mat, np.linalg.solve(
        b_mat + s * np.eye(n), b))
    bc = np.conj(b_mat)
    mirror = np.linalg.solve(bc, np.linalg.solve(bc + s * np.eye(n), b))
    return -0.5 * (direct + mirror)


def _schur_time(op, b, t):
    b_mat = scipy.linalg.sqrtm(-op.matrix.toarray())
    prop = scipy.linalg.expm(-t * b_mat) @ b
    return -np.linalg.solve(b_mat, prop).real


class TestDenseOracle:
    def test_size_cap(self, line_op):
        with pytest.raises(UsageError, match="dense cap"):
            DenseOracle(line_op, dense_cap=10)

    def test_square_root_identity(self, line_op):
        assert DenseOracle(line_op).b_square_defect() < 1e-10

    def test_frequency_route_agrees_with_the_schur_route(self, line_op,
                                                         line_b):
        oracle = DenseOracle(line_op)
        s_values = np.array([0.4j, 0.1 + 0.7j, 1.0 + 0j])
        resp = dense_freq_solution(oracle, line_b, s_values, RECEIVERS)
        for row, s in zip(resp.values, s_values):
            want = _schur_freq(line_op, line_b, s)[list(RECEIVERS)]
            assert np.linalg.norm(row - want) < 1e-8 * np.linalg.norm(want)
        assert resp.meta["oracle"] == "dense-stabilized"

    def test_time_route_agrees_with_the_schur_route(self, line_op, line_b):
        oracle = DenseOracle(line_op)
        times = np.array([0.0, 1.5, 4.0])
        resp = dense_time_solution(oracle, line_b, times, RECEIVERS)
        for row, t in zip(resp.values, times):
            want = _schur_time(line_op, line_b, t)[list(RECEIVERS)]
            assert np.linalg.norm(row - want) < 1e-8 * (
                1.0 + np.linalg.norm(want))

    def test_receiver_id_handling(self, line_op, line_b):
        oracle = DenseOracle(line_op)
        resp = dense_time_solution(oracle, line_b, np.zeros(1), RECEIVERS)
        assert resp.receivers == ("r8", "r20")
        with pytest.raises(UsageError):
            dense_time_solution(oracle, line_b, np.zeros(1), RECEIVERS,
                                receiver_ids=("only-one",))


class TestDirectSolve:
    def test_matches_a_dense_shifted_solve(self, line_op, line_b):
        s = 0.4 + 0.8j
        got = direct_freq_solve(line_op, line_b, s)
        want = np.linalg.solve(
            line_op.matrix.toarray() + s * s * np.eye(line_op.n), line_b)
        assert np.linalg.norm(got - want) < 1e-10 * np.linalg.norm(want)

    def test_coincides_with_the_stabilized_formula_on_real_operators(
            self, real_op):
        # without stretching the correction is the identity: both formulas
        # reduce to (A + s^2)^{-1}
        b = assemble_source(real_op, [real_op.n // 2])
        oracle = DenseOracle(real_op)
        s = np.array([0.3 + 0.9j])
        stab = dense_freq_solution(oracle, b, s, [2, 5]).values[0]
        plain = direct_freq_solve(real_op, b, s[0])[[2, 5]]
        assert np.linalg.norm(stab - plain) < 1e-9 * np.linalg.norm(plain)

    def test_singular_shifted_matrix_raises(self):
        shim = _MatrixOnly(np.zeros((4, 4), dtype=complex))
        with pytest.raises(SingularOperatorError):
            direct_freq_solve(shim, np.ones(4, dtype=complex), 0.0)


class TestBruteForceBasis:
    def test_rejects_oversized_spaces(self, line_op, line_b):
        from wavemor import factorize
        fac = factorize(line_op)
        with pytest.raises(UsageError):
            brute_force_eks_basis(line_op, fac, line_b, 13, 2)
        with pytest.raises(UsageError):
            brute_force_eks_basis(line_op, fac, line_b, 0, 2)


class TestLeapfrog:
    def _box(self, n=60, h=0.1, c=1.0):
        grid = build_grid([n], [h], [0])
        medium = homogeneous_medium(grid, c)
        op = assemble_operator(grid, medium, None)
        b = assemble_source(op, [n // 2])
        return grid, medium, op, b.real

    def test_courant_bound_formula(self):
        grid = build_grid([10], [0.1], [0])
        med = homogeneous_medium(grid, 2.0)
        assert courant_limit(grid, med) == pytest.approx(0.99 * 2.0 / 40.0)
        grid2 = build_grid([5, 5], [0.1, 0.2], [0, 0])
        med2 = homogeneous_medium(grid2, 1.0)
        assert courant_limit(grid2, med2) == pytest.approx(
            0.99 * 2.0 / np.sqrt(500.0))

    def test_wavelet_driven_run_matches_the_modal_solution(self):
        grid, medium, op, b = self._box()
        wavelet = gaussian_wavelet(omega_c=2.0, sigma=1.0)
        dt = 0.02
        steps = 200
        lf = leapfrog_reference(grid, medium, b, dt, steps, RECEIVERS,
                                forcing=wavelet)
        modal = dense_time_solution(DenseOracle(op), b, lf.samples, RECEIVERS)
        want = convolve_response(modal, wavelet)
        err = lf.window_error(want)
        assert err < 1e-3
        finer = leapfrog_reference(grid, medium, b, dt / 2, 2 * steps,
                                   RECEIVERS, forcing=wavelet)
        sub = ResponseSet("time", lf.samples, finer.values[::2],
                          finer.receivers, finer.meta)
        assert 2.5 < err / sub.window_error(want) < 6.0   # O(dt^2)

    def test_forced_run_equals_convolved_impulse_response(self):
        grid, medium, op, b = self._box(n=40)
        dt = 0.02
        steps = 150
        f = gaussian_wavelet(omega_c=2.5, sigma=0.8)
        impulse = leapfrog_reference(grid, medium, b, dt, steps, RECEIVERS)
        forced = leapfrog_reference(grid, medium, b, dt, steps, RECEIVERS,
                                    forcing=f)
        assert convolve_response(impulse, f).window_error(forced) < 1e-10

    def test_energy_drift_is_reported_and_small(self):
        grid, medium, op, b = self._box()
        lf = leapfrog_reference(grid, medium, b, 0.02, 400, RECEIVERS,
                                track_energy=True, quiet_after=0.1)
        assert lf.meta["energy_drift"] < 1e-3

    def test_input_contracts(self):
        grid, medium, op, b = self._box(n=20)
        with pytest.raises(UsageError):
            leapfrog_reference(grid, medium, b + 1j, 0.01, 10, [5])
        with pytest.raises(UsageError):
            leapfrog_reference(grid, medium, b, 1.0, 10, [5])
        with pytest.raises(UsageError):
            leapfrog_reference(grid, medium, b, 0.01, 0, [5])


class TestBromwichContour:
    def test_default_density_and_offset(self):
        s = bromwich_contour(10.0, 3.0)
        assert s.size == 51                     # ten points per oscillation
        assert s[0] == pytest.approx(0.2)       # gamma = 2 / t_max
        assert s.imag[0] == 0.0
        assert s.imag[-1] == pytest.approx(3.0)
        d = np.diff(s.imag)
        assert np.allclose(d, d[0])

    def test_sample_count_is_odd_and_floored(self):
        assert bromwich_contour(1.0, 1.0, samples=4).size == 9
        assert bromwich_contour(1.0, 1.0, samples=10).size == 11

    def test_parameter_validation(self):
        with pytest.raises(UsageError):
            bromwich_contour(0.0, 1.0)
        with pytest.raises(UsageError):
            bromwich_contour(1.0, -2.0)


def _freq_set(s, values):
    return ResponseSet("frequency", s, np.asarray(values, dtype=complex),
                       ("rx",))


class TestLaplaceInversion:
    def test_recovers_a_sine_from_its_transform(self):
        times = np.linspace(0.0, 15.0, 301)
        want = np.sin(times)

        def run(omega_max):
            s = bromwich_contour(20.0, omega_max)
            freq = _freq_set(s, (1.0 / (1.0 + s ** 2))[:, None])
            out = laplace_inversion_check(freq, times)
            return out, np.linalg.norm(out.values[:, 0] - want) \
                / np.linalg.norm(want)

        out, rel = run(8.0)
        assert rel < 1e-2
        assert out.meta["quadrature_error_estimate"] < 1e-3
        # the 1/omega^2 tail dominates; widening the contour shrinks it
        assert run(24.0)[1] < 0.5 * rel

    def test_jump_correction_fixes_stepped_signals(self):
        s = bromwich_contour(20.0, 40.0)
        freq = _freq_set(s, (1.0 / (s + 1.0))[:, None])
        times = np.linspace(0.0, 10.0, 201)
        want = np.exp(-times)
        fixed = laplace_inversion_check(freq, times, jump=[1.0])
        raw = laplace_inversion_check(freq, times)
        err_fixed = np.linalg.norm(fixed.values[:, 0] - want)
        err_raw = np.linalg.norm(raw.values[:, 0] - want)
        assert err_fixed < 0.2 * err_raw
        assert abs(fixed.values[0, 0] - 1.0) < 1e-2   # half-step healed

    def test_under_resolved_contour_warns(self):
        s = 0.05 + 1j * np.linspace(0.0, 2.0, 9)
        freq = _freq_set(s, (1.0 / (1.0 + s ** 2))[:, None])
        with pytest.warns(AccuracyWarning, match="under-resolved"):
            laplace_inversion_check(freq, np.linspace(0.0, 5.0, 20))

    def test_contour_contracts(self):
        good = bromwich_contour(10.0, 4.0)
        vals = (1.0 / (1.0 + good ** 2))[:, None]
        times = np.zeros(1)
        with pytest.raises(UsageError, match="frequency"):
            laplace_inversion_check(
                ResponseSet("time", np.zeros(2), np.zeros((2, 1)), ("rx",)),
                times)
        with pytest.raises(UsageError, match="9"):
            laplace_inversion_check(_freq_set(good[:5], vals[:5]), times)
        tilted = good + np.linspace(0, 1e-3, good.size)
        with pytest.raises(UsageError, match="vertical"):
            laplace_inversion_check(_freq_set(tilted, vals), times)
        shifted = good + 0.5j
        with pytest.raises(UsageError, match="start"):
            laplace_inversion_check(_freq_set(shifted, vals), times)
        squished = good.copy()
        squished[3] += 0.01j
        with pytest.raises(UsageError, match="uniform"):
            laplace_inversion_check(_freq_set(squished, vals), times)
        with pytest.raises(UsageError, match="jump"):
            laplace_inversion_check(_freq_set(good, vals), times,
                                    jump=[1.0, 2.0])
