"""Smallest possible sanity walk: one mode, then one absorbing line.

The scalar operator [1] has the impulse response sin(t) and the transfer
function 1/(1 + s^2), so every moving part of the stabilized evaluation can
be checked against pencil and paper before any grid shows up. The second
half assembles a short stretched line and compares a tiny reduced model
against the dense reference on a handful of shifts.
"""

import numpy as np

from wavemor import (DenseOracle, ModalSystem, assemble_operator,
                     assemble_source, build_grid, build_reduced_model,
                     build_stretching, dense_freq_solution,
                     eks_orthogonalize, factorize, homogeneous_medium)

# one degree of freedom, by hand
model = ModalSystem(np.array([[1.0 + 0j]]), rows=np.array([[1.0]]),
                    source=np.array([1.0]))
t = np.linspace(0.0, 20.0, 9)
print("t          response      sin(t)")
for tk, uk in zip(t, model.time_response(t)[:, 0]):
    print(f"{tk:8.3f}  {uk:+.8f}  {np.sin(tk):+.8f}")

s = np.array([0.5, 1.0 + 2.0j, -0.25 + 1.5j])
print("\ns                transfer            1/(1+s^2)")
for sk, uk in zip(s, model.freq_response(s)[:, 0]):
    print(f"{sk!s:14}  {uk:+.6f}  {1.0 / (1.0 + sk ** 2):+.6f}")

# now a real problem small enough to solve densely
grid = build_grid([48], [0.25], [8])
medium = homogeneous_medium(grid, 1.0)
stretching = build_stretching(grid, omega0=1.0, strength=0.8)
op = assemble_operator(grid, medium, stretching)
b = assemble_source(op, [grid.pml[0] + 24])
receivers = [grid.interior_index([12]), grid.interior_index([36])]

shifts = 1j * np.geomspace(0.4, 2.0, 24)
reference = dense_freq_solution(DenseOracle(op), b, shifts, receivers)

solver = factorize(op)
print(f"\nline with N = {op.n}; reduced vs dense on {shifts.size} shifts")
print("  k   d    rel error")
for k in (4, 8, 12, 16):
    basis = eks_orthogonalize(op, b, k, 2, solver=solver)
    reduced = build_reduced_model(basis, receivers)
    err = reduced.eval_freq(shifts).window_error(reference)
    print(f"{k:3d} {basis.dim:4d}    {err:.3e}")
