"""Complex-orthogonal Lanczos recurrences (polynomial and extended spaces).

Both recurrences orthogonalize in the unconjugated M-weighted bilinear form,
normalize every basis vector to unit Euclidean length, and keep the
self-products ``delta_j = <v_j, v_j>`` in a separate diagonal. A vector with
``|delta|`` below ``breakdown_rtol * max|M|`` is isotropic to working
precision and raises :class:`~wavemor.errors.BreakdownError`.

The projected matrix H is assembled from the recurrence coefficients alone.
For the extended recurrence the columns belonging to the deepest forward
power of each block are never touched by a forward product; their H columns
follow from the inverse-step coefficients by solving the recurrence relation
for ``A v``, which is also where the two out-of-space residual coefficients
come from. Full re-orthogonalization (one extra pass per new vector, on by
default) is numerical hygiene only and is deliberately not folded into H.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .bases import ExtendedBasis, PolynomialBasis
from .errors import BreakdownError, UsageError
from .linalg import FactorizedOperator, bilinear, factorize

BREAKDOWN_RTOL = 1.0e-12
_COLLAPSE_RTOL = 1.0e-10


class _State:
    """Generated vectors in order of appearance, plus shared helpers."""

    def __init__(self, op, slots, reorthogonalize, breakdown_rtol):
        self.op = op
        self.m_diag = op.m_diag
        self.m_scale = op.m_scale
        self.gen = np.zeros((op.n, slots), dtype=complex)
        self.deltas = np.zeros(slots, dtype=complex)
        self.count = 0
        self.reorth = reorthogonalize
        self.rtol = breakdown_rtol

    def seed(self, b) -> float:
        b = np.asarray(b, dtype=complex)
        if b.shape != (self.op.n,):
            raise UsageError(f"seed vector must have shape ({self.op.n},)")
        beta0 = float(np.linalg.norm(b))
        if beta0 == 0.0:
            raise UsageError("seed vector is zero")
        self._push(b / beta0)
        return beta0

    def orthogonalize(self, u, target_slots) -> list[complex]:
        """Subtract the prescribed projections (coefficients returned),
        then one unrecorded full re-orthogonalization pass."""
        coeffs = []
        for t in target_slots:
            alpha = bilinear(u, self.gen[:, t], self.m_diag)
            c = alpha / self.deltas[t]
            u -= c * self.gen[:, t]
            coeffs.append(c)
        if self.reorth and self.count:
            w = self.gen[:, :self.count]
            proj = (w.T @ (self.m_diag * u)) / self.deltas[:self.count]
            u -= w @ proj
        return coeffs

    def advance(self, u, raw_norm, collapse_ok: bool):
        """Normalize u into the next slot; returns (slot, beta).

        A norm collapse means the direction lies in the span already. That
        is fine for residual-side vectors (``collapse_ok``), fatal halfway
        through the recurrence.
        """
        beta = float(np.linalg.norm(u))
        if raw_norm == 0.0 or beta <= _COLLAPSE_RTOL * raw_norm:
            if collapse_ok:
                return None, 0.0
            raise BreakdownError(
                f"recurrence hit an invariant subspace at step {self.count} "
                f"(new direction norm {beta:.2e} vs source {raw_norm:.2e})",
                step=self.count, partial=self._partial(self.count))
        self._push(u / beta)
        return self.count - 1, beta

    def _push(self, v) -> None:
        slot = self.count
        self.gen[:, slot] = v
        delta = bilinear(v, v, self.m_diag)
        self.deltas[slot] = delta
        self.count += 1
        if abs(delta) < self.rtol * self.m_scale:
            raise BreakdownError(
                f"isotropic vector at step {slot}: |<v,v>| = {abs(delta):.3e} "
                f"< {self.rtol:.1e} * max|M| = {self.rtol * self.m_scale:.3e}",
                step=slot, partial=self._partial(slot))

    def _partial(self, valid: int) -> dict:
        return {"V": self.gen[:, :valid].copy(),
                "deltas": self.deltas[:valid].copy()}


def pks_lanczos(op, b, order: int, reorthogonalize: bool = True,
                breakdown_rtol: float = BREAKDOWN_RTOL) -> PolynomialBasis:
    """Three-term complex-symmetric Lanczos for span{b, A b, ..., A^{m-1} b}.

    For a real symmetric operator with M = I this reduces to classical
    Lanczos with a real tridiagonal H. Costs exactly ``order`` operator
    applications (the last one determines the residual pair).
    """
    if not 1 <= order <= op.n:
        raise UsageError(f"order must be in [1, {op.n}], got {order}")
    mv0 = op.matvec_count
    st = _State(op, order + 1, reorthogonalize, breakdown_rtol)
    beta0 = st.seed(b)
    h = np.zeros((order, order), dtype=complex)
    res_coeffs = np.zeros(0)
    res_vectors = np.zeros((op.n, 0), dtype=complex)
    for j in range(order):
        u = op.matvec(st.gen[:, j])
        raw = float(np.linalg.norm(u))
        targets = [j] if j == 0 else [j, j - 1]
        coeffs = st.orthogonalize(u, targets)
        h[j, j] += coeffs[0]
        if j >= 1:
            h[j - 1, j] += coeffs[1]
        last = j == order - 1
        slot, beta = st.advance(u, raw, collapse_ok=last)
        if not last:
            h[j + 1, j] = beta
        elif slot is not None:
            res_coeffs = np.array([beta], dtype=complex)
            res_vectors = st.gen[:, slot:slot + 1].copy()
    return PolynomialBasis(
        V=st.gen[:, :order].copy(), H=h, deltas=st.deltas[:order].copy(),
        beta0=beta0, residual_coeffs=res_coeffs, residual_vectors=res_vectors,
        matvec_count=op.matvec_count - mv0, solve_count=0,
        reorthogonalized=reorthogonalize)


def _fwd_slot(j: int, i: int) -> int:
    """Generation slot of the forward-power vector v_j, j >= 0."""
    if j == 0:
        return 0
    p, r = divmod(j - 1, i)
    return p * (i + 1) + 1 + r


def _neg_slot(p: int, i: int) -> int:
    """Generation slot of the inverse-power vector v_{-p}, p >= 0."""
    return 0 if p == 0 else p * (i + 1)


def eks_orthogonalize(op, b, k: int, i: int, solver: FactorizedOperator = None,
                      reorthogonalize: bool = True,
                      breakdown_rtol: float = BREAKDOWN_RTOL) -> ExtendedBasis:
    """Build the extended basis mixing k inverse and k*i+1 forward powers.

    Runs k block iterations; each applies the operator i times and its
    factorized inverse once, plus one final forward product to expose the
    two-vector residual (skipped when the space is exhausted at d = N). The
    basis dimension is d = k * (i + 1).
    """
    if k < 1 or i < 1:
        raise UsageError(f"need k >= 1 and i >= 1, got k={k}, i={i}")
    d = k * (i + 1)
    if d > op.n:
        raise UsageError(f"basis dimension k*(i+1) = {d} exceeds N = {op.n}")
    if solver is None:
        solver = factorize(op)
    if solver.op is not op:
        raise UsageError("factorization belongs to a different operator")
    mv0, sv0 = op.matvec_count, solver.solve_count
    st = _State(op, d + 2, reorthogonalize, breakdown_rtol)
    beta0 = st.seed(b)
    # two spill rows plus one virtual column keep the final block on the
    # same code path as interior ones; both are dropped from the output
    h = np.zeros((d + 2, d + 1), dtype=complex)
    inverse_data = None

    def forward(src_slot, target_slots, column, collapse_ok=False):
        """One forward product with its orthogonalization; fills a column."""
        u = op.matvec(st.gen[:, src_slot])
        raw = float(np.linalg.norm(u))
        coeffs = st.orthogonalize(u, target_slots)
        slot, beta = st.advance(u, raw, collapse_ok=collapse_ok)
        for t, c in zip(target_slots, coeffs):
            h[t, column] += c
        if slot is not None:
            h[slot, column] = beta
        return coeffs, beta, slot

    def finalize_block(p):
        """Column of the block's deepest forward vector, from the inverse
        relation A^{-1} v_c = sum_q gamma_q v_q + beta_next v_{-(p+1)}."""
        t_slots, gammas, beta_next = inverse_data
        col = _fwd_slot(i * (p + 1), i)
        gamma_c = gammas[-1]
        if abs(gamma_c) <= 1.0e-14 * max(abs(g) for g in gammas):
            raise BreakdownError(
                f"inverse step lost the diagonal coefficient at block {p}",
                step=st.count, partial=st._partial(st.count))
        newcol = np.zeros(d + 2, dtype=complex)
        newcol[col] = 1.0
        for t, g in zip(t_slots[:-1], gammas[:-1]):
            newcol -= g * h[:, t]
        if beta_next != 0.0:
            newcol -= beta_next * h[:, _neg_slot(p + 1, i)]
        h[:, col] = newcol / gamma_c

    for p in range(k):
        forward(_neg_slot(p, i),
                [_fwd_slot(i * p, i), _neg_slot(p, i)],
                column=_neg_slot(p, i))
        if p >= 1:
            finalize_block(p - 1)
        if i >= 2:
            s1 = _fwd_slot(i * p + 1, i)
            forward(s1, [_fwd_slot(i * p, i), _neg_slot(p, i), s1], column=s1)
            for j in range(3, i + 1):
                src = _fwd_slot(i * p + j - 1, i)
                forward(src, [_fwd_slot(i * p + j - 2, i), src], column=src)
        # inverse step on the block's deepest forward vector
        sc = _fwd_slot(i * (p + 1), i)
        w = solver.solve(st.gen[:, sc])
        raw = float(np.linalg.norm(w))
        t_slots = [_neg_slot(p, i)] + [_fwd_slot(i * p + j, i)
                                       for j in range(1, i + 1)]
        gammas = st.orthogonalize(w, t_slots)
        slot, beta_next = st.advance(w, raw, collapse_ok=(p == k - 1))
        inverse_data = (t_slots, gammas, beta_next)

    if inverse_data[2] != 0.0:
        # literal block-(k+1) first relation; exposes the two-term residual
        forward(_neg_slot(k, i),
                [_fwd_slot(i * k, i), _neg_slot(k, i)],
                column=_neg_slot(k, i), collapse_ok=True)
    finalize_block(k - 1)
    res = h[d:d + 2, d - 1]
    keep = np.abs(res) > 0
    slots = [d + off for off in (0, 1) if keep[off]]
    return ExtendedBasis(
        V=st.gen[:, :d].copy(), H=h[:d, :d].copy(),
        deltas=st.deltas[:d].copy(), beta0=beta0,
        residual_coeffs=res[keep].copy(),
        residual_vectors=st.gen[:, slots].copy() if slots
        else np.zeros((op.n, 0), dtype=complex),
        matvec_count=op.matvec_count - mv0,
        solve_count=solver.solve_count - sv0,
        reorthogonalized=reorthogonalize, k=k, i=i)


def prefix_basis(basis, dim: int):
    """Exact leading sub-basis, residual pair included.

    Valid for any dim <= m on a polynomial basis and for block boundaries
    dim = k' * (i + 1) on an extended one; both recurrences are nested, so
    the slice equals what a fresh run at the smaller order would produce,
    bit for bit. The dropped H rows of the last kept column are exactly the
    sliced basis's residual coefficients.
    """
    d = basis.dim
    if not 1 <= dim <= d:
        raise UsageError(f"prefix dimension must be in [1, {d}], got {dim}")
    if dim == d:
        return basis
    if isinstance(basis, ExtendedBasis):
        if dim % (basis.i + 1) != 0:
            raise UsageError(
                f"extended prefixes must end on a block boundary "
                f"(multiples of {basis.i + 1}), got {dim}")
        n_res = 2
        extra = {"k": dim // (basis.i + 1), "i": basis.i}
        cls = ExtendedBasis
    else:
        n_res = 1
        extra = {}
        cls = PolynomialBasis
    rows = range(dim, min(dim + n_res, d))
    coeffs = np.array([basis.H[r, dim - 1] for r in rows], dtype=complex)
    vectors = basis.V[:, list(rows)].copy()
    keep = np.abs(coeffs) > 0
    return cls(V=basis.V[:, :dim].copy(), H=basis.H[:dim, :dim].copy(),
               deltas=basis.deltas[:dim].copy(), beta0=basis.beta0,
               residual_coeffs=coeffs[keep], residual_vectors=vectors[:, keep],
               matvec_count=basis.matvec_count, solve_count=basis.solve_count,
               reorthogonalized=basis.reorthogonalized, **extra)


@dataclass(frozen=True)
class DecompositionReport:
    """Diagnostics of A V = V H + z e_d^T and complex orthogonality."""

    residual: float            # ||A V - V H - z e_d^T||_F / (|A| ||V||_F)
    orthogonality: float       # max offdiag |V^T M V - D| / max |delta|
    column_norm_drift: float   # max | ||v_j||_2 - 1 |
    band_violation: float      # max out-of-band |D^{-1} V^T M A V|, relative
    h_agreement: float         # max |H - D^{-1} V^T M A V|, relative
    bandwidth: int

    def as_dict(self) -> dict:
        return {
            "residual": self.residual,
            "orthogonality": self.orthogonality,
            "column_norm_drift": self.column_norm_drift,
            "band_violation": self.band_violation,
            "h_agreement": self.h_agreement,
            "bandwidth": self.bandwidth,
        }


def check_decomposition(op, basis) -> DecompositionReport:
    """Measure how well a basis satisfies its defining relations.

    The band/agreement figures are measured against the explicitly formed
    projection D^{-1} V^T M A V, so they test the recurrence-built H against
    dense linear algebra rather than against its own bookkeeping.
    """
    v = basis.V
    h = basis.H
    av = op.matrix @ v
    resid = av - v @ h
    resid[:, -1] -= basis.residual_matrix_column()
    rel = np.linalg.norm(resid) / (op.norm_estimate() * np.linalg.norm(v))
    gram = v.T @ (op.m_diag[:, None] * v)
    offdiag = gram - np.diag(np.diag(gram))
    scale = float(np.abs(basis.deltas).max())
    orth = float(np.abs(offdiag).max() / scale)
    col_drift = float(np.abs(np.linalg.norm(v, axis=0) - 1.0).max())
    proj = (v.T @ (op.m_diag[:, None] * av)) / basis.deltas[:, None]
    p_scale = float(np.abs(proj).max())
    rows, cols = np.indices(proj.shape)
    outside = np.abs(rows - cols) > basis.bandwidth
    band = float(np.abs(proj[outside]).max() / p_scale) if outside.any() else 0.0
    agree = float(np.abs(h - proj).max() / p_scale)
    return DecompositionReport(residual=float(rel), orthogonality=orth,
                               column_norm_drift=col_drift,
                               band_violation=band, h_agreement=agree,
                               bandwidth=basis.bandwidth)


def save_basis(basis, path) -> None:
    """Checkpoint a basis; arrays round-trip bit-exact (raw npz storage)."""
    meta = {
        "kind": "extended" if isinstance(basis, ExtendedBasis) else "polynomial",
        "beta0": basis.beta0,
        "matvec_count": basis.matvec_count,
        "solve_count": basis.solve_count,
        "reorthogonalized": basis.reorthogonalized,
        "k": getattr(basis, "k", 0),
        "i": getattr(basis, "i", 0),
    }
    np.savez(path, V=basis.V, H=basis.H, deltas=basis.deltas,
             residual_coeffs=basis.residual_coeffs,
             residual_vectors=basis.residual_vectors,
             meta=np.array(json.dumps(meta)))


def load_basis(path):
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        common = dict(
            V=data["V"], H=data["H"], deltas=data["deltas"],
            beta0=float(meta["beta0"]),
            residual_coeffs=data["residual_coeffs"],
            residual_vectors=data["residual_vectors"],
            matvec_count=int(meta["matvec_count"]),
            solve_count=int(meta["solve_count"]),
            reorthogonalized=bool(meta["reorthogonalized"]))
    if meta["kind"] == "extended":
        return ExtendedBasis(k=int(meta["k"]), i=int(meta["i"]), **common)
    return PolynomialBasis(**common)
