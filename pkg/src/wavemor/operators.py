"""Assembly of the complex-stretched wave operator and source vectors.

The operator discretizes ``-c^2(x) * Laplace`` on the stretched grid with
the standard 3-point (1D) / 5-point (2D) stencil and homogeneous Dirichlet
walls behind the absorbing layers. It is complex symmetric with respect to
the diagonal weight ``M`` whose entries are the products of the per-axis
complex node measures divided by the local squared speed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .errors import ConfigurationError, UsageError
from .grid import GridSpec, StretchingProfile, build_stretching
from .medium import MediumModel


@dataclass
class StretchedOperator:
    """Sparse stretched wave operator with its symmetrizing weight.

    Attributes
    ----------
    matrix : scipy.sparse.csr_matrix
        The operator, complex, shape (N, N).
    m_diag : np.ndarray
        Diagonal of the symmetrizer M; ``matrix.T @ M == M @ matrix``.
    grid, medium, stretching :
        The ingredients the operator was assembled from.
    matvec_count : int
        Number of operator applications performed through :meth:`matvec`.
    """

    matrix: sparse.csr_matrix
    m_diag: np.ndarray
    grid: GridSpec
    medium: MediumModel
    stretching: StretchingProfile
    matvec_count: int = field(default=0, compare=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def m_scale(self) -> float:
        """Magnitude scale of M, used to make tolerances dimensionless."""
        return float(np.abs(self.m_diag).max())

    def matvec(self, x: np.ndarray) -> np.ndarray:
        self.matvec_count += 1
        return self.matrix @ x

    def reset_counters(self) -> None:
        self.matvec_count = 0

    def norm_estimate(self) -> float:
        """Upper bound on the spectral norm via sqrt(norm1 * norminf)."""
        a = self.matrix
        n1 = np.abs(a).sum(axis=0).max()
        ninf = np.abs(a).sum(axis=1).max()
        return float(np.sqrt(n1 * ninf))


def _axis_difference(steps: np.ndarray) -> sparse.csr_matrix:
    """1D negative second difference for one axis, complex steps.

    Row j applies (1/m_j) * [-(u_{j+1}-u_j)/s_{j+1} + (u_j-u_{j-1})/s_j]
    with m_j the node measure; Dirichlet neighbors beyond the walls drop out.
    """
    n = steps.size - 1
    measures = 0.5 * (steps[:-1] + steps[1:])
    inv_left = 1.0 / steps[:-1]
    inv_right = 1.0 / steps[1:]
    diag = (inv_left + inv_right) / measures
    lower = -inv_left[1:] / measures[1:]
    upper = -inv_right[:-1] / measures[:-1]
    return sparse.diags([lower, diag, upper], [-1, 0, 1],
                        shape=(n, n), dtype=complex).tocsr()


def assemble_operator(grid: GridSpec, medium: MediumModel,
                      stretching: StretchingProfile) -> StretchedOperator:
    """Assemble ``-c^2 * Laplace`` on the stretched grid.

    With zero stretching the matrix is real up to dtype and, for a
    homogeneous medium on a uniform grid, symmetric with nonnegative
    spectrum. The symmetrizer diagonal is returned alongside.
    """
    if medium.n != grid.n:
        raise ConfigurationError(
            f"medium has {medium.n} nodes, grid has {grid.n}")
    if stretching is None:
        stretching = build_stretching(grid, omega0=1.0, strength=0.0)
    if stretching.ndim != grid.ndim:
        raise ConfigurationError("stretching profile does not match grid rank")
    for ax in range(grid.ndim):
        if stretching.steps[ax].size != grid.shape[ax] + 1:
            raise ConfigurationError(
                f"stretching axis {ax} has {stretching.steps[ax].size} intervals,"
                f" expected {grid.shape[ax] + 1}")
    c2 = medium.c2
    if grid.ndim == 1:
        lap = _axis_difference(stretching.steps[0])
        measures = stretching.node_measures(0)
    else:
        lx = _axis_difference(stretching.steps[0])
        ly = _axis_difference(stretching.steps[1])
        nx, ny = grid.shape
        lap = sparse.kron(lx, sparse.identity(ny, dtype=complex, format="csr")) \
            + sparse.kron(sparse.identity(nx, dtype=complex, format="csr"), ly)
        mx = stretching.node_measures(0)
        my = stretching.node_measures(1)
        measures = np.multiply.outer(mx, my).ravel()
    matrix = (sparse.diags(c2.astype(complex)) @ lap).tocsr()
    matrix.sort_indices()
    m_diag = measures / c2
    return StretchedOperator(matrix=matrix, m_diag=m_diag, grid=grid,
                             medium=medium, stretching=stretching)


def assemble_source(op: StretchedOperator, location,
                    amplitude: float = 1.0) -> np.ndarray:
    """Point source at an interior node, scaled like a discrete delta.

    The entry is ``amplitude / cell_volume`` with the (real, interior) node
    measure product as volume, so the vector converges weakly to
    ``amplitude * delta`` under refinement.
    """
    grid = op.grid
    coords = tuple(int(c) for c in np.atleast_1d(location))
    if len(coords) != grid.ndim:
        raise UsageError(f"source location needs {grid.ndim} indices")
    if not grid.in_interior(coords):
        raise UsageError(f"source location {coords} must lie in the interior")
    volume = 1.0
    for ax, c in enumerate(coords):
        measure = op.stretching.node_measures(ax)[c]
        volume *= measure.real
    b = np.zeros(grid.n, dtype=complex)
    b[grid.flat_index(coords)] = amplitude / volume
    return b


def symmetry_defect(op: StretchedOperator) -> float:
    """Max |A^T M - M A| entry, relative to max |M_pp A_pq|; should be ~eps."""
    a = op.matrix
    m = sparse.diags(op.m_diag)
    defect = (a.T @ m - m @ a).tocoo()
    scale = np.abs(m @ a).max()
    if scale == 0.0:
        return 0.0
    if defect.nnz == 0:
        return 0.0
    return float(np.abs(defect.data).max() / scale)


def dump_triplets(matrix, path) -> None:
    """Debug dump in text triplet form: ``row col re im`` per line."""
    coo = sparse.coo_matrix(matrix)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            v = complex(v)
            fh.write(f"{r} {c} {v.real!r} {v.imag!r}\n")
