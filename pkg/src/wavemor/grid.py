"""Tensor-product grids and complex coordinate-stretching profiles.

Conventions used throughout the package:

* Each axis has ``n = interior + 2 * pml`` unknown nodes. Node ``j``
  (0-based) sits at ``x = (j + 1) * h``; homogeneous Dirichlet walls sit at
  ``x = 0`` and ``x = (n + 1) * h``, so there are ``n + 1`` intervals per
  axis. Absorbing layers occupy the outer ``pml`` nodes on each side.
* Multi-dimensional fields are flattened in C order over the axis tuple
  (last axis fastest).
* A stretching profile replaces the interval widths by complex numbers
  ``h * (1 + 1j * sigma / omega0)`` inside the absorbing layers; interior
  intervals stay purely real.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, UsageError

_SUPPORTED_DIMS = (1, 2)


@dataclass(frozen=True)
class GridSpec:
    """Static description of a tensor grid with absorbing-layer margins.

    Attributes
    ----------
    interior : tuple of int
        Interior node count per axis (physical region of interest).
    step : tuple of float
        Real grid step per axis, in meters.
    pml : tuple of int
        Absorbing-layer node count per side, per axis.
    """

    interior: tuple[int, ...]
    step: tuple[float, ...]
    pml: tuple[int, ...]

    def __post_init__(self):
        if len(self.interior) not in _SUPPORTED_DIMS:
            raise ConfigurationError(
                f"grids must be 1D or 2D, got {len(self.interior)} axes")
        if not (len(self.interior) == len(self.step) == len(self.pml)):
            raise ConfigurationError(
                "interior, step and pml must have one entry per axis")
        for n in self.interior:
            if int(n) != n or n < 1:
                raise ConfigurationError(f"interior count must be >= 1, got {n}")
        for h in self.step:
            if not (h > 0.0) or not np.isfinite(h):
                raise ConfigurationError(f"grid step must be positive, got {h}")
        for p in self.pml:
            if int(p) != p or p < 0:
                raise ConfigurationError(f"pml cell count must be >= 0, got {p}")

    @property
    def ndim(self) -> int:
        return len(self.interior)

    @property
    def shape(self) -> tuple[int, ...]:
        """Total node count per axis, absorbing layers included."""
        return tuple(n + 2 * p for n, p in zip(self.interior, self.pml))

    @property
    def n(self) -> int:
        """Total number of unknowns."""
        return int(np.prod(self.shape))

    def axis_coordinates(self, axis: int) -> np.ndarray:
        """Physical node positions along ``axis`` (wall at 0)."""
        n = self.shape[axis]
        return self.step[axis] * np.arange(1, n + 1, dtype=float)

    def flat_index(self, coords) -> int:
        """Flat index of a node given per-axis indices (C order)."""
        coords = tuple(int(c) for c in np.atleast_1d(coords))
        if len(coords) != self.ndim:
            raise UsageError(
                f"expected {self.ndim} indices, got {len(coords)}")
        for ax, (c, n) in enumerate(zip(coords, self.shape)):
            if not 0 <= c < n:
                raise UsageError(
                    f"node index {c} out of range [0, {n}) on axis {ax}")
        return int(np.ravel_multi_index(coords, self.shape))

    def in_interior(self, coords) -> bool:
        coords = tuple(int(c) for c in np.atleast_1d(coords))
        return all(p <= c < p + n for c, n, p
                   in zip(coords, self.interior, self.pml))

    def interior_index(self, coords) -> int:
        """Flat index of a node given interior-relative per-axis indices."""
        coords = tuple(int(c) for c in np.atleast_1d(coords))
        absolute = tuple(c + p for c, p in zip(coords, self.pml))
        if not self.in_interior(absolute):
            raise UsageError(
                f"interior-relative index {coords} falls outside the interior")
        return self.flat_index(absolute)


def build_grid(interior, step, pml) -> GridSpec:
    """Validate counts and steps and return a :class:`GridSpec`.

    ``interior`` and ``pml`` are per-axis sequences (or scalars for 1D);
    ``step`` likewise. Scalar ``pml`` is broadcast to every axis.
    """
    interior = tuple(int(v) for v in np.atleast_1d(interior))
    step = tuple(float(v) for v in np.atleast_1d(step))
    pml_arr = np.atleast_1d(pml)
    if pml_arr.size == 1:
        pml_t = tuple(int(pml_arr[0]) for _ in interior)
    else:
        pml_t = tuple(int(v) for v in pml_arr)
    return GridSpec(interior=interior, step=step, pml=pml_t)


@dataclass(frozen=True)
class StretchingProfile:
    """Per-axis complex interval widths implementing the absorbing layers.

    ``steps[ax]`` has length ``grid.shape[ax] + 1`` (one entry per interval,
    Dirichlet wall to Dirichlet wall). ``omega0`` is the angular frequency
    the layer is matched at; ``strength`` is the peak damping rate sigma_max
    (rad/s) reached at the outer wall by the quadratic ramp.
    """

    steps: tuple[np.ndarray, ...]
    omega0: float
    strength: float

    def __post_init__(self):
        for s in self.steps:
            if np.any(s.real <= 0):
                raise ConfigurationError("interval widths must have Re > 0")

    @property
    def ndim(self) -> int:
        return len(self.steps)

    @property
    def is_real(self) -> bool:
        return all(np.all(s.imag == 0.0) for s in self.steps)

    def node_measures(self, axis: int) -> np.ndarray:
        """Complex node measure (mean of the two adjacent interval widths)."""
        s = self.steps[axis]
        return 0.5 * (s[:-1] + s[1:])


def build_stretching(grid: GridSpec, omega0: float,
                     strength: float) -> StretchingProfile:
    """Quadratic-ramp complex stretching for the grid's absorbing layers.

    Interval ``l`` (between nodes ``l-1`` and ``l``, walls at the ends) gets
    width ``h * (1 + 1j * sigma_l / omega0)`` with
    ``sigma_l = strength * depth^2`` and ``depth`` the normalized distance of
    the interval into the layer (1 at the outer wall, 0 at the interface).
    ``strength = 0`` or ``pml = 0`` gives a purely real profile.
    """
    if strength < 0:
        raise ConfigurationError(f"stretching strength must be >= 0, got {strength}")
    if strength > 0 and not (omega0 > 0):
        raise ConfigurationError(
            f"matching frequency omega0 must be > 0, got {omega0}")
    steps = []
    for ax in range(grid.ndim):
        n = grid.shape[ax]
        p = grid.pml[ax]
        h = grid.step[ax]
        idx = np.arange(n + 1, dtype=float)
        if p == 0 or strength == 0.0:
            steps.append(np.full(n + 1, h, dtype=complex))
            continue
        depth_left = np.clip((p - idx) / p, 0.0, 1.0)
        depth_right = np.clip((idx - (n - p)) / p, 0.0, 1.0)
        sigma = strength * np.maximum(depth_left, depth_right) ** 2
        steps.append(h * (1.0 + 1j * sigma / omega0))
    return StretchingProfile(steps=tuple(steps), omega0=float(omega0),
                             strength=float(strength))


def default_pml_strength(grid: GridSpec, c_ref: float,
                         target_reflection: float = 1.0e-6) -> float:
    """Peak damping rate aiming at a given round-trip reflection at omega0.

    For the quadratic ramp the one-way amplitude attenuation at the matched
    frequency is exp(-sigma_max * L / (3 c)), L the layer depth, so the
    round-trip reflection is exp(-2 sigma_max L / (3 c)). The thinnest layer
    over all axes decides.
    """
    if not (0 < target_reflection < 1):
        raise UsageError("target_reflection must lie in (0, 1)")
    depths = [p * h for p, h in zip(grid.pml, grid.step) if p > 0]
    if not depths:
        return 0.0
    return 3.0 * c_ref * np.log(1.0 / target_reflection) / (2.0 * min(depths))
