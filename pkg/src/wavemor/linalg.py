"""Bilinear form, sparse factorization, dense matrix-function primitives.

Dense matrix functions are evaluated through a cached eigendecomposition
(diagonalizable path only); a defective matrix raises instead of silently
degrading. Everything here is small-and-dense or factorize-once sparse; the
Krylov and oracle layers build on these primitives.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla
from scipy import sparse
from scipy.sparse.linalg import splu

from .errors import (BranchCutError, DefectiveMatrixError, NearSingularWarning,
                     SingularModelError, SingularOperatorError, UsageError)

DENSE_CAP_DEFAULT = 5000


def bilinear(x: np.ndarray, y: np.ndarray, m_diag: np.ndarray) -> complex:
    """Unconjugated bilinear form sum_j m_j x_j y_j.

    Symmetric in x and y up to one rounding of the elementwise product
    (fused-multiply-add code paths keep x * y and y * x from being bitwise
    equal). No complex conjugation anywhere: vectors with ``<x, x> = 0``
    (isotropic) are possible and are exactly what the recurrence breakdown
    guard watches for.
    """
    if x.shape != y.shape or x.shape != m_diag.shape:
        raise UsageError("bilinear form needs three equally shaped vectors")
    return complex(np.sum(m_diag * (x * y)))


@dataclass
class FactorizedOperator:
    """One-time sparse LU of the stretched operator.

    ``solve`` applies the inverse with one step of iterative refinement
    (one internal residual evaluation per call; not counted as an operator
    application). ``solve_count`` counts logical inverse applications.
    """

    op: object
    lu: object
    fill_ratio: float
    refine: bool = True
    solve_count: int = field(default=0, compare=False)

    def solve(self, y: np.ndarray) -> np.ndarray:
        self.solve_count += 1
        x = self.lu.solve(y)
        if self.refine:
            r = y - self.op.matrix @ x
            x = x + self.lu.solve(r)
        return x

    def reset_counters(self) -> None:
        self.solve_count = 0


def factorize(op, refine: bool = True) -> FactorizedOperator:
    """Direct factorization of the operator matrix (complex SuperLU).

    A numerically singular pivot raises :class:`SingularOperatorError`; the
    caller may add a tiny diagonal shift and retry, but that is an explicit
    modelling decision, never done silently here.
    """
    a = sparse.csc_matrix(op.matrix)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", sparse.linalg.MatrixRankWarning)
            lu = splu(a)
    except (RuntimeError, sparse.linalg.MatrixRankWarning) as exc:
        raise SingularOperatorError(
            f"sparse factorization failed ({exc}); the operator is singular "
            "to working precision") from exc
    fill = (lu.L.nnz + lu.U.nnz) / max(a.nnz, 1)
    return FactorizedOperator(op=op, lu=lu, fill_ratio=float(fill),
                              refine=refine)


class EigenSystem:
    """Cached eigendecomposition ``G = X diag(w) X^{-1}`` of a dense matrix.

    Verifies on construction, with a few random probes, that the
    decomposition actually reconstructs G; a defective (non-diagonalizable)
    matrix fails that check and raises. An eigenvalue cluster on the
    negative real axis upgrades the error to :class:`BranchCutError`, since
    that is where the principal square root's cut lies.
    """

    def __init__(self, matrix: np.ndarray, defect_tol: float = 1.0e-6):
        g = np.asarray(matrix, dtype=complex)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise UsageError("EigenSystem needs a square matrix")
        self.matrix = g
        self.w, self.x = np.linalg.eig(g)
        self._lu = sla.lu_factor(self.x)
        self._verify(defect_tol)

    @property
    def n(self) -> int:
        return self.w.size

    def _verify(self, tol: float) -> None:
        g = self.matrix
        scale = np.abs(self.w).max()
        if scale == 0.0:
            return
        rng = np.random.default_rng(0)
        v = rng.standard_normal((self.n, 3)) + 1j * rng.standard_normal((self.n, 3))
        recon = self.x @ (self.w[:, None] * sla.lu_solve(self._lu, v))
        err = np.linalg.norm(recon - g @ v) / (scale * np.linalg.norm(v))
        if not np.isfinite(err) or err > tol:
            bad = self._closest_pair()
            if bad is not None and bad.real < 0 and \
                    abs(bad.imag) <= 1.0e-8 * (1.0 + abs(bad)):
                raise BranchCutError(
                    f"defective eigenvalue {bad} on the principal branch cut "
                    f"(reconstruction error {err:.2e})", eigenvalue=bad)
            raise DefectiveMatrixError(
                f"matrix is defective to working precision (reconstruction "
                f"error {err:.2e}, eigenvalue cluster near {bad})",
                eigenvalue=bad)

    def _closest_pair(self):
        w = np.sort_complex(self.w)
        if w.size < 2:
            return None
        gaps = np.abs(np.diff(w))
        j = int(np.argmin(gaps))
        return w[j]

    def solve_basis(self, v: np.ndarray) -> np.ndarray:
        """Coefficients of v in the eigenbasis, X^{-1} v."""
        return sla.lu_solve(self._lu, v)

    def apply_function(self, fvals: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Apply f(G) to a vector given f at the eigenvalues."""
        return self.x @ (fvals * self.solve_basis(v))

    def matrix_function(self, fvals: np.ndarray) -> np.ndarray:
        """Dense f(G) for f given at the eigenvalues."""
        return (self.x * fvals) @ sla.lu_solve(self._lu, np.eye(self.n, dtype=complex))


def as_eigensystem(matrix) -> EigenSystem:
    return matrix if isinstance(matrix, EigenSystem) else EigenSystem(matrix)


def principal_sqrt(matrix, defect_tol: float = 1.0e-6) -> np.ndarray:
    """Principal matrix square root via eigendecomposition.

    Eigenvalues are mapped by the principal scalar square root (branch cut
    on the negative real axis, nonnegative real part). Defective input
    raises; an on-cut defective eigenvalue raises :class:`BranchCutError`.
    """
    eig = EigenSystem(matrix, defect_tol=defect_tol) \
        if not isinstance(matrix, EigenSystem) else matrix
    return eig.matrix_function(np.sqrt(eig.w))


def resolvent_apply(matrix, s: complex, v: np.ndarray,
                    pole_rtol: float = 1.0e-8) -> np.ndarray:
    """Apply (G + s I)^{-1} to v through the cached eigendecomposition.

    Warns (:class:`NearSingularWarning`) when the shift sits within
    ``pole_rtol * (1 + |w|)`` of an eigenvalue ``-w``.
    """
    eig = as_eigensystem(matrix)
    dist = np.abs(eig.w + s)
    margin = pole_rtol * (1.0 + np.abs(eig.w))
    if np.any(dist < margin):
        j = int(np.argmin(dist / margin))
        warnings.warn(
            f"shift s={s} is within {dist[j]:.3e} of eigenvalue {-eig.w[j]}; "
            f"resolvent condition ~{np.abs(eig.w).max() / max(dist[j], 1e-300):.2e}",
            NearSingularWarning, stacklevel=2)
    return eig.apply_function(1.0 / (eig.w + s), v)


def exp_action(matrix, t: float, v: np.ndarray) -> np.ndarray:
    """Apply the decaying propagator exp(-t G) to v; requires t >= 0."""
    if t < 0:
        raise UsageError(f"exp_action is the forward semigroup; got t={t}")
    eig = as_eigensystem(matrix)
    return eig.apply_function(np.exp(-t * eig.w), v)


class ModalSystem:
    """Receiver responses of the stability-corrected solution formulas.

    Built from a wave-operator-like matrix ``A`` (dense, or an
    :class:`EigenSystem` of it), output row weights and a source coefficient
    vector. With ``B = (-A)^{1/2}`` (principal) it evaluates

    * time:      ``-eta(t) Re[rows @ B^{-1} exp(-B t) src]``
    * frequency: ``-1/2 [F(s) + conj(F(conj(s)))]`` with
      ``F(s) = rows @ B^{-1} (B + s I)^{-1} src``

    which keeps ``u(conj(s)) == conj(u(s))`` bit-exact and makes the value
    at real s exactly real.
    """

    def __init__(self, a_matrix, rows: np.ndarray, source: np.ndarray,
                 pole_rtol: float = 1.0e-8):
        eig = as_eigensystem(a_matrix)
        self.mu = np.sqrt(-eig.w)  # principal: Re(mu) >= 0
        self.weights = np.atleast_2d(rows) @ eig.x
        self.coeffs = eig.solve_basis(np.asarray(source, dtype=complex))
        self.pole_rtol = pole_rtol

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]

    def _guard_singular(self) -> None:
        scale = np.abs(self.mu).max()
        if scale == 0.0 or np.abs(self.mu).min() <= 1.0e-14 * scale:
            raise SingularModelError(
                "the operator has an eigenvalue at zero within tolerance; "
                "B^{-1} is undefined")

    def time_response(self, times: np.ndarray) -> np.ndarray:
        """Real (n_times, n_out) array; entries for t < 0 are zero."""
        self._guard_singular()
        times = np.asarray(times, dtype=float)
        out = np.zeros((times.size, self.n_out))
        live = times >= 0.0
        if np.any(live):
            decay = np.exp(-np.outer(self.mu, times[live]))
            modal = (self.coeffs / self.mu)[:, None] * decay
            out[live] = -(self.weights @ modal).real.T
        return out

    def _halfline(self, s_values: np.ndarray) -> np.ndarray:
        denom = self.mu[:, None] * (self.mu[:, None] + s_values[None, :])
        return self.weights @ (self.coeffs[:, None] / denom)

    def freq_response(self, s_values: np.ndarray) -> np.ndarray:
        """Complex (n_s, n_out) array of transfer values."""
        self._guard_singular()
        s_values = np.asarray(s_values, dtype=complex)
        # Poles sit at -mu and, through the mirrored term, at -conj(mu).
        dist = np.minimum(np.abs(self.mu[:, None] + s_values[None, :]),
                          np.abs(np.conj(self.mu)[:, None] + s_values[None, :]))
        margin = self.pole_rtol * (1.0 + np.abs(self.mu))[:, None]
        if np.any(dist < margin):
            worst = np.unravel_index(int(np.argmin(dist / margin)), dist.shape)
            warnings.warn(
                f"sample s={s_values[worst[1]]} lies near pole -mu="
                f"{-self.mu[worst[0]]}; response may be inaccurate",
                NearSingularWarning, stacklevel=2)
        direct = self._halfline(s_values)
        mirrored = self._halfline(np.conj(s_values))
        return -0.5 * (direct + np.conj(mirrored)).T
