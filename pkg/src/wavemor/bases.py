"""Containers for complex-orthogonal Krylov bases.

Both basis kinds hold Euclidean-unit columns V, the banded projected matrix
H built from recurrence coefficients, and the diagonal D of bilinear-form
self-products, satisfying (up to roundoff)

    A V = V H + (residual) e_d^T,      V^T M V = D (diagonal).

The dataclasses carry no algorithm; the recurrences live in
:mod:`wavemor.krylov` and an independent construction in
:mod:`wavemor.oracles`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def eks_column_indices(k: int, i: int) -> list[int]:
    """Signed power-vector order of the extended-basis columns.

    Column ``p*(i+1)`` of block ``p >= 1`` carries the inverse-power
    direction ``-p``; the remaining columns carry increasing positive
    powers. Example (k=3, i=2): [0, 1, 2, -1, 3, 4, -2, 5, 6].
    """
    order = [0] + list(range(1, i + 1))
    for p in range(1, k):
        order.append(-p)
        order.extend(range(i * p + 1, i * (p + 1) + 1))
    return order


@dataclass
class _BasisCommon:
    V: np.ndarray                 # (N, d), Euclidean-unit columns
    H: np.ndarray                 # (d, d), banded
    deltas: np.ndarray            # (d,), <v_j, v_j> in the M-bilinear form
    beta0: float                  # ||b||_2 of the seed vector
    residual_coeffs: np.ndarray   # coefficients of out-of-space directions
    residual_vectors: np.ndarray  # (N, r) unit directions, last column only
    matvec_count: int = 0
    solve_count: int = 0
    reorthogonalized: bool = True
    breakdown: bool = False
    breakdown_step: int | None = None

    @property
    def n(self) -> int:
        return self.V.shape[0]

    @property
    def dim(self) -> int:
        return self.V.shape[1]

    @property
    def delta0(self) -> complex:
        return complex(self.deltas[0])

    def residual_matrix_column(self) -> np.ndarray:
        """The out-of-space vector z with A V = V H + z e_d^T."""
        if self.residual_vectors.size == 0:
            return np.zeros(self.n, dtype=complex)
        return self.residual_vectors @ self.residual_coeffs


@dataclass
class PolynomialBasis(_BasisCommon):
    """Basis of span{b, A b, ..., A^{m-1} b}; H is tridiagonal."""

    bandwidth: int = 1


@dataclass
class ExtendedBasis(_BasisCommon):
    """Basis mixing k inverse and k*i+1 forward powers; H is pentadiagonal.

    Columns follow :func:`eks_column_indices`; dim = k * (i + 1).
    """

    k: int = 0
    i: int = 0
    bandwidth: int = 2

    def column_of(self, signed_index: int) -> int:
        j = signed_index
        if j == 0:
            return 0
        if j > 0:
            p, r = divmod(j - 1, self.i)
            return p * (self.i + 1) + 1 + r
        if -j >= self.k:
            raise IndexError(f"inverse power {j} is outside the basis")
        return -j * (self.i + 1)
