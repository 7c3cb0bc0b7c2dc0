"""Independent ground-truth solvers the reduced models are tested against.

Nothing here calls into :mod:`wavemor.krylov` or :mod:`wavemor.rom`; the
implementations use dense eigendecompositions, per-shift sparse solves, an
explicitly orthogonalized power basis, a leapfrog stepper and a contour
quadrature. Slow and simple on purpose.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .bases import ExtendedBasis, eks_column_indices
from .errors import (AccuracyWarning, BreakdownError, SingularOperatorError,
                     UsageError)
from .linalg import DENSE_CAP_DEFAULT, EigenSystem, ModalSystem, bilinear
from .operators import assemble_operator
from .response import ResponseSet

_BREAKDOWN_RTOL = 1.0e-12


class DenseOracle:
    """Dense stabilized solver for the full stretched operator."""

    def __init__(self, op, dense_cap: int = DENSE_CAP_DEFAULT):
        if op.n > dense_cap:
            raise UsageError(
                f"N = {op.n} exceeds the dense cap {dense_cap}; "
                "raise the cap or use self-convergence")
        self.m_diag = op.m_diag.copy()
        self.eig = EigenSystem(op.matrix.toarray())

    @property
    def n(self) -> int:
        return self.eig.n

    def b_matrix(self) -> np.ndarray:
        return self.eig.matrix_function(np.sqrt(-self.eig.w))

    def b_square_defect(self) -> float:
        b = self.b_matrix()
        a = self.eig.matrix
        return float(np.linalg.norm(b @ b + a) / np.linalg.norm(a))

    def modal_for(self, b, receivers) -> ModalSystem:
        receivers = list(receivers)
        rows = np.zeros((len(receivers), self.n))
        rows[np.arange(len(receivers)), receivers] = 1.0
        return ModalSystem(self.eig, rows, np.asarray(b, dtype=complex))


def _ids(receivers, receiver_ids):
    if receiver_ids is None:
        return tuple(f"r{int(r)}" for r in receivers)
    if len(receiver_ids) != len(receivers):
        raise UsageError("receiver_ids length does not match receivers")
    return tuple(receiver_ids)


def dense_time_solution(oracle: DenseOracle, b, times, receivers,
                        receiver_ids=None) -> ResponseSet:
    times = np.asarray(times, dtype=float)
    values = oracle.modal_for(b, receivers).time_response(times)
    return ResponseSet("time", times, values, _ids(receivers, receiver_ids),
                       {"oracle": "dense-stabilized", "domain": "time"})


def dense_freq_solution(oracle: DenseOracle, b, s_values, receivers,
                        receiver_ids=None) -> ResponseSet:
    s_values = np.asarray(s_values, dtype=complex)
    values = oracle.modal_for(b, receivers).freq_response(s_values)
    return ResponseSet("frequency", s_values, values,
                       _ids(receivers, receiver_ids),
                       {"oracle": "dense-stabilized", "domain": "frequency"})


def direct_freq_solve(op, b, s: complex) -> np.ndarray:
    """One shifted solve (A + s^2 I) x = b by sparse factorization.

    This is the per-frequency baseline: no stability correction, and for
    stretched operators no Laplace symmetry either.
    """
    shifted = (op.matrix + (s * s) * sp.identity(op.n, dtype=complex,
                                                 format="csr")).tocsc()
    b = np.asarray(b, dtype=complex)
    with warnings.catch_warnings():
        warnings.simplefilter("error", sla.MatrixRankWarning)
        try:
            lu = sla.splu(shifted)
        except (RuntimeError, sla.MatrixRankWarning) as exc:
            raise SingularOperatorError(
                f"shifted operator is singular at s = {s}: {exc}") from exc
    x = lu.solve(b)
    x += lu.solve(b - shifted @ x)
    resid = np.linalg.norm(shifted @ x - b) / np.linalg.norm(b)
    if resid > 1.0e-6:
        raise SingularOperatorError(
            f"shift s = {s} is too close to a resonance: refined relative "
            f"residual {resid:.2e}")
    return x


def brute_force_eks_basis(op, fac, b, k: int, i: int) -> ExtendedBasis:
    """Extended basis by explicit powers and dense Gram-Schmidt.

    Forms A^{-k+1} b ... A^{ki} b literally, orthogonalizes them in the
    basis column order with two full modified Gram-Schmidt passes, and
    projects H = D^{-1} V^T M A V densely. Affordable only when N * d is
    small; exists to cross-examine the short recurrences.
    """
    d = k * (i + 1)
    if k < 1 or i < 1 or d > op.n:
        raise UsageError(f"invalid extended space: k={k}, i={i}, N={op.n}")
    a = op.matrix
    m = op.m_diag
    powers = {0: np.asarray(b, dtype=complex)}
    for j in range(1, k * i + 1):
        powers[j] = a @ powers[j - 1]
    for p in range(1, k):
        powers[-p] = fac.lu.solve(powers[-(p - 1)])
    order = eks_column_indices(k, i)
    v = np.zeros((op.n, d), dtype=complex)
    deltas = np.zeros(d, dtype=complex)
    beta0 = float(np.linalg.norm(powers[0]))
    for col, signed in enumerate(order):
        u = powers[signed].copy()
        for _ in range(2):
            for q in range(col):
                u -= (bilinear(u, v[:, q], m) / deltas[q]) * v[:, q]
        nrm = np.linalg.norm(u)
        if nrm == 0.0:
            raise BreakdownError(f"power vector {signed} lies in the span "
                                 f"of its predecessors", step=col)
        v[:, col] = u / nrm
        deltas[col] = bilinear(v[:, col], v[:, col], m)
        if abs(deltas[col]) < _BREAKDOWN_RTOL * op.m_scale:
            raise BreakdownError(
                f"isotropic direction at column {col} (power {signed}): "
                f"|<v,v>| = {abs(deltas[col]):.3e}", step=col,
                partial={"V": v[:, :col].copy(), "deltas": deltas[:col].copy()})
    av = a @ v
    h = (v.T @ (m[:, None] * av)) / deltas[:, None]
    z = (av - v @ h)[:, -1]
    zn = float(np.linalg.norm(z))
    if zn > 1.0e-10 * op.norm_estimate():
        res_c = np.array([zn], dtype=complex)
        res_v = (z / zn)[:, None]
    else:
        res_c = np.zeros(0, dtype=complex)
        res_v = np.zeros((op.n, 0), dtype=complex)
    return ExtendedBasis(V=v, H=h, deltas=deltas, beta0=beta0,
                         residual_coeffs=res_c, residual_vectors=res_v,
                         matvec_count=0, solve_count=0,
                         reorthogonalized=True, k=k, i=i)


def courant_limit(grid, medium) -> float:
    """Safe leapfrog step: 0.99 * 2 / sqrt(bound on the largest eigenvalue)."""
    lam = 4.0 * medium.c_max ** 2 * sum(1.0 / h ** 2 for h in grid.step)
    return 0.99 * 2.0 / np.sqrt(lam)


def leapfrog_reference(grid, medium, b, dt: float, steps: int, receivers,
                       forcing=None, receiver_ids=None, quiet_after=None,
                       track_energy: bool = False) -> ResponseSet:
    """Second-order time stepping on the real (unstretched) operator.

    Dirichlet walls reflect, so callers compare only on a window that ends
    before reflections arrive (enlarging the domain buys window length).
    ``forcing`` is a scalar signature f(t) applied to b; None means the
    impulse start u(dt) = dt * b matching initial velocity b.
    """
    op = assemble_operator(grid, medium, stretching=None)
    if np.iscomplexobj(b) and np.abs(np.asarray(b).imag).max() > 0.0:
        raise UsageError("leapfrog integrates the real operator; b was complex")
    if steps < 1:
        raise UsageError("need at least one time step")
    bound = courant_limit(grid, medium)
    if dt > bound:
        raise UsageError(f"dt = {dt:.3e} exceeds the stable step {bound:.3e}")
    a = op.matrix.real.tocsr()
    m = op.m_diag.real
    b = np.asarray(b).real.astype(float)
    receivers = list(receivers)
    n = op.n
    traces = np.zeros((steps + 1, len(receivers)))
    energies = []
    u_prev = np.zeros(n)
    if forcing is None:
        u_cur = dt * b
        start = 1
        traces[1] = u_cur[receivers]
    else:
        u_cur = np.zeros(n)
        start = 0
    for nstep in range(start, steps):
        au = a @ u_cur
        rhs = -au
        if forcing is not None:
            rhs = rhs + float(forcing(nstep * dt)) * b
        u_next = 2.0 * u_cur - u_prev + dt * dt * rhs
        if track_energy:
            vel = (u_next - u_cur) / dt
            energies.append(0.5 * vel @ (m * vel)
                            + 0.5 * u_next @ (m * au))
        u_prev, u_cur = u_cur, u_next
        traces[nstep + 1] = u_cur[receivers]
    times = dt * np.arange(steps + 1)
    meta = {"oracle": "leapfrog", "domain": "time", "dt": dt, "steps": steps}
    if track_energy and energies:
        energies = np.asarray(energies)
        t_half = dt * (np.arange(start, steps) + 0.5)
        live = t_half >= (quiet_after if quiet_after is not None else 0.0)
        tracked = energies[live]
        if tracked.size:
            scale = max(abs(tracked[0]), 1.0e-300)
            meta["energy_drift"] = float(
                np.abs(tracked - tracked[0]).max() / scale)
    return ResponseSet("time", times, traces,
                       _ids(receivers, receiver_ids), meta)


def bromwich_contour(t_max: float, omega_max: float, samples=None):
    """Vertical contour s = gamma + i omega for the inversion quadrature.

    gamma = 2 / t_max keeps exp(gamma t) moderate on [0, t_max]; the default
    sample count puts ten points per oscillation of exp(i omega t_max), well
    past the exp(-7) image-damping threshold.
    """
    if t_max <= 0 or omega_max <= 0:
        raise UsageError("need t_max > 0 and omega_max > 0")
    gamma = 2.0 / t_max
    if samples is None:
        samples = int(np.ceil(10.0 * t_max * omega_max / (2.0 * np.pi))) + 2
    samples = max(int(samples), 9) | 1
    return gamma + 1.0j * np.linspace(0.0, omega_max, samples)


def laplace_inversion_check(freq_samples: ResponseSet, times,
                            jump=None) -> ResponseSet:
    """Trapezoid inversion of transfer samples on a vertical contour.

    u(t) = (exp(gamma t) / pi) * Re  integral_0^Omega  exp(i w t) u(gamma+iw) dw.

    A signal that steps at t = 0 (stability-corrected fields do, by the
    acausal layer offset) has a slowly decaying 1/s image that truncation
    handles poorly, and the reconstruction lands on the half-step at t = 0.
    Passing the step values as ``jump`` (one per receiver) moves that part
    to the exact transform jump/s and inverts only the remainder.

    Coarse by construction; the meta field ``quadrature_error_estimate``
    holds the relative change against half contour resolution, and an
    accuracy warning fires when the contour is too short or too sparse.
    """
    if freq_samples.kind != "frequency":
        raise UsageError("laplace inversion needs frequency samples")
    s = np.asarray(freq_samples.samples, dtype=complex)
    if s.size < 9:
        raise UsageError("need at least 9 contour samples")
    gamma = float(s.real[0])
    if gamma <= 0 or np.ptp(s.real) > 1.0e-12 * (1.0 + gamma):
        raise UsageError("samples must sit on a vertical contour Re s > 0")
    omega = s.imag
    if abs(omega[0]) > 1.0e-12 * omega[-1]:
        raise UsageError("contour must start at Im s = 0")
    d_omega = omega[1] - omega[0]
    if np.abs(np.diff(omega) - d_omega).max() > 1.0e-9 * d_omega:
        raise UsageError("contour must be uniformly sampled")
    times = np.asarray(times, dtype=float)
    values = freq_samples.values
    if jump is not None:
        jump = np.asarray(jump, dtype=float)
        if jump.shape != (values.shape[1],):
            raise UsageError(
                f"jump needs one value per receiver, got shape {jump.shape}")
        values = values - jump[None, :] / s[:, None]

    def invert(om, vals):
        w = np.full(om.size, om[1] - om[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        phase = np.exp(1.0j * np.outer(times, om))
        out = (phase @ (w[:, None] * vals)).real
        return (np.exp(gamma * times) / np.pi)[:, None] * out

    full = invert(omega, values)
    half = invert(omega[::2], values[::2])
    if jump is not None:
        step = np.where(times[:, None] >= 0.0, jump[None, :], 0.0)
        full = full + step
        half = half + step
    scale = np.linalg.norm(full)
    estimate = float(np.linalg.norm(full - half) / max(scale, 1.0e-300))
    period = 2.0 * np.pi / d_omega
    if gamma * period < 7.0 or estimate > 0.05:
        warnings.warn(
            f"inversion contour is under-resolved: image damping "
            f"exp(-{gamma * period:.2f}), refinement estimate {estimate:.2e}",
            AccuracyWarning, stacklevel=2)
    meta = {"oracle": "laplace-inversion", "domain": "time",
            "quadrature_error_estimate": estimate, "gamma": gamma}
    return ResponseSet("time", times, full, freq_samples.receivers, meta)
