"""Stability-corrected reduced-order models built from Krylov bases.

The projected matrix H is similarity-symmetrized with the principal square
roots of the bilinear self-products, S = D^{1/2} H D^{-1/2}, and the model
propagates with B_d = (-S)^{1/2} (principal branch). Eigenvalues of B_d
then sit in the closed right half plane no matter how the complex
stretching twisted the spectrum, which is the whole point: evaluation in
time can never blow up.

With c0 = beta0 * delta0^{1/2} and the rescaled basis Vt = V D^{-1/2} the
receiver traces are

    time:      u_d(t) = -eta(t) Re[c0 Vt B_d^{-1} exp(-B_d t)] e1
    frequency: u_d(s) = -1/2 [c0 Vt B_d^{-1}(B_d+sI)^{-1}
                         + conj(c0 Vt) conj(B_d)^{-1}(conj(B_d)+sI)^{-1}] e1

i.e. the complex seed prefactor rides inside the real part / the
conjugated half. Written this way the model at full dimension d = N
reproduces the dense stabilized solution exactly, and u(conj s) = conj u(s)
holds bit for bit.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .bases import ExtendedBasis
from .errors import BranchChoiceWarning, DefectiveMatrixError, UsageError
from .krylov import eks_orthogonalize, pks_lanczos
from .linalg import EigenSystem, ModalSystem, factorize
from .response import ResponseSet

_BRANCH_RTOL = 1.0e-6


@dataclass(frozen=True)
class ReducedModel:
    """Cached evaluator for one reduced order d."""

    order: int                       # d
    eig: EigenSystem                 # of S = D^{1/2} H D^{-1/2}
    modal: ModalSystem
    delta0: complex
    beta0: float
    receivers: tuple[int, ...]       # global dof index per stored row
    provenance: dict = field(default_factory=dict)

    @property
    def b_eigenvalues(self) -> np.ndarray:
        return self.modal.mu

    @property
    def spectral_radius(self) -> float:
        return float(np.abs(self.modal.mu).max())

    def b_matrix(self) -> np.ndarray:
        """B_d formed explicitly; evaluation never needs it, tests do."""
        return self.eig.matrix_function(np.sqrt(-self.eig.w))

    def b_square_defect(self) -> float:
        """Relative size of B_d^2 + S, zero in exact arithmetic."""
        b = self.b_matrix()
        s = self.eig.matrix
        return float(np.linalg.norm(b @ b + s) / np.linalg.norm(s))

    def eval_time(self, times, receivers=None, receiver_ids=None) -> ResponseSet:
        return eval_time(self, times, receivers, receiver_ids)

    def eval_freq(self, s_values, receivers=None, receiver_ids=None) -> ResponseSet:
        return eval_freq(self, s_values, receivers, receiver_ids)


def build_reduced_model(basis, receivers=None, provenance=None) -> ReducedModel:
    """Assemble the stability-corrected model from a recurrence basis.

    ``receivers``: global dof indices whose traces the model will produce;
    None keeps every dof (full-field capable, d times the memory).
    """
    d = basis.dim
    deltas = basis.deltas
    on_cut = (deltas.real < 0) & (np.abs(deltas.imag)
                                  <= _BRANCH_RTOL * np.abs(deltas))
    if np.any(on_cut):
        j = int(np.flatnonzero(on_cut)[0])
        warnings.warn(
            f"delta_{j} = {deltas[j]:.3e} lies on the negative real axis; "
            "the principal-branch scaling D^{1/2} is sensitive there",
            BranchChoiceWarning, stacklevel=2)
    sq = np.sqrt(deltas)
    s_matrix = (sq[:, None] * basis.H) / sq[None, :]
    try:
        eig = EigenSystem(s_matrix)
    except DefectiveMatrixError as exc:
        raise type(exc)(f"order-{d} reduced matrix: {exc}",
                        eigenvalue=exc.eigenvalue) from exc
    if receivers is None:
        receivers = tuple(range(basis.n))
    else:
        receivers = tuple(int(r) for r in receivers)
        if any(not 0 <= r < basis.n for r in receivers):
            raise UsageError(f"receiver index out of range [0, {basis.n})")
    c0 = basis.beta0 * sq[0]
    rows = c0 * (basis.V[list(receivers), :] / sq[None, :])
    modal = ModalSystem(eig, rows, _unit_first(d))
    prov = {"d": d, "matvecs": basis.matvec_count,
            "solves": basis.solve_count}
    if isinstance(basis, ExtendedBasis):
        prov.update(method="eks", k=basis.k, i=basis.i)
    else:
        prov.update(method="pks", m=d)
    prov.update(provenance or {})
    return ReducedModel(order=d, eig=eig, modal=modal,
                        delta0=complex(deltas[0]), beta0=basis.beta0,
                        receivers=receivers, provenance=prov)


def _unit_first(d: int) -> np.ndarray:
    e1 = np.zeros(d, dtype=complex)
    e1[0] = 1.0
    return e1


def _row_selection(model: ReducedModel, receivers, receiver_ids):
    if receivers is None:
        sel = list(range(len(model.receivers)))
        chosen = model.receivers
    else:
        chosen = tuple(int(r) for r in receivers)
        missing = [r for r in chosen if r not in model.receivers]
        if missing:
            raise UsageError(
                f"receivers {missing} were not retained at model build time")
        sel = [model.receivers.index(r) for r in chosen]
    if receiver_ids is None:
        receiver_ids = tuple(f"r{g}" for g in chosen)
    elif len(receiver_ids) != len(sel):
        raise UsageError("receiver_ids length does not match receivers")
    return sel, tuple(receiver_ids)


def eval_time(model: ReducedModel, times, receivers=None,
              receiver_ids=None) -> ResponseSet:
    """Real traces at the stored receivers; zero for t < 0, eta(0) = 1."""
    sel, ids = _row_selection(model, receivers, receiver_ids)
    times = np.asarray(times, dtype=float)
    values = model.modal.time_response(times)[:, sel]
    meta = dict(model.provenance)
    meta["domain"] = "time"
    return ResponseSet("time", times, values, ids, meta)


def eval_freq(model: ReducedModel, s_values, receivers=None,
              receiver_ids=None) -> ResponseSet:
    """Complex transfer samples; exactly real on the real s axis."""
    sel, ids = _row_selection(model, receivers, receiver_ids)
    s_values = np.asarray(s_values, dtype=complex)
    values = model.modal.freq_response(s_values)[:, sel]
    meta = dict(model.provenance)
    meta["domain"] = "frequency"
    return ResponseSet("frequency", s_values, values, ids, meta)


@dataclass(frozen=True)
class ConvergenceRow:
    order: int        # method-native: m for PKS, k for EKS
    dim: int          # reduced dimension d
    error: float      # max over samples of relative receiver-vector error
    matvecs: int
    solves: int

    def as_dict(self) -> dict:
        return {"order": self.order, "dim": self.dim, "error": self.error,
                "matvecs": self.matvecs, "solves": self.solves}


@dataclass(frozen=True)
class ConvergenceTable:
    label: str
    rows: tuple[ConvergenceRow, ...]
    meta: dict = field(default_factory=dict)

    def converged_dim(self, tol: float):
        """Smallest reduced dimension reaching ``tol``, or None."""
        hits = [r.dim for r in self.rows if r.error <= tol]
        return min(hits) if hits else None

    def as_dict(self) -> dict:
        return {"label": self.label, "meta": self.meta,
                "rows": [r.as_dict() for r in self.rows]}


def rom_error_curve(op, b, method: str, orders, s_values, oracle: ResponseSet,
                    receivers, i: int = 1, solver=None,
                    reorthogonalize: bool = True,
                    extra_meta=None) -> ConvergenceTable:
    """Frequency-domain convergence of one method against a fixed oracle.

    Each order is run from scratch so the reported matvec/solve counts are
    the instrumented cost of that row alone (the recurrences are nested, so
    results match prefix slicing of one long run; the counters would not).
    """
    method = method.lower()
    if method not in ("pks", "eks"):
        raise UsageError(f"method must be 'pks' or 'eks', got {method!r}")
    receivers = tuple(int(r) for r in receivers)
    ids = oracle.receivers
    if len(ids) != len(receivers):
        raise UsageError("oracle receivers do not match requested receivers")
    if method == "eks" and solver is None:
        solver = factorize(op)
    rows = []
    for order in sorted(orders):
        if method == "pks":
            basis = pks_lanczos(op, b, order, reorthogonalize=reorthogonalize)
        else:
            basis = eks_orthogonalize(op, b, order, i, solver=solver,
                                      reorthogonalize=reorthogonalize)
        model = build_reduced_model(basis, receivers,
                                    provenance=dict(extra_meta or {}))
        resp = eval_freq(model, s_values, receiver_ids=ids)
        err = resp.max_sample_error(oracle)
        rows.append(ConvergenceRow(order=order, dim=basis.dim, error=err,
                                   matvecs=basis.matvec_count,
                                   solves=basis.solve_count))
    label = "pks" if method == "pks" else f"eks(i={i})"
    meta = {"method": method, "i": i if method == "eks" else None}
    meta.update(extra_meta or {})
    return ConvergenceTable(label=label, rows=tuple(rows), meta=meta)
