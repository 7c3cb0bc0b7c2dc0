"""Medium models: squared wave speed sampled on a grid, plus presets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .grid import GridSpec

C_VACUUM = 2.99792458e8  # m/s


@dataclass(frozen=True)
class MediumModel:
    """Squared wave speed per node, flattened in grid C order."""

    c2: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        c2 = np.asarray(self.c2, dtype=float)
        object.__setattr__(self, "c2", c2)
        if c2.ndim != 1:
            raise ConfigurationError("c2 must be a flat per-node array")
        if not np.all(np.isfinite(c2)) or np.any(c2 <= 0):
            raise ConfigurationError("squared wave speed must be positive and finite")

    @property
    def n(self) -> int:
        return self.c2.size

    @property
    def c_min(self) -> float:
        return float(np.sqrt(self.c2.min()))

    @property
    def c_max(self) -> float:
        return float(np.sqrt(self.c2.max()))


def homogeneous_medium(grid: GridSpec, velocity: float) -> MediumModel:
    """Uniform wave speed everywhere (absorbing layers included)."""
    if not (velocity > 0):
        raise ConfigurationError(f"velocity must be positive, got {velocity}")
    return MediumModel(c2=np.full(grid.n, float(velocity) ** 2),
                       label="homogeneous")


def layered_medium(grid: GridSpec, axis: int, boundaries,
                   velocities) -> MediumModel:
    """Piecewise-constant speed in layers perpendicular to ``axis``.

    ``boundaries`` are physical positions (same origin as
    :meth:`GridSpec.axis_coordinates`) separating ``len(boundaries) + 1``
    layers with speeds ``velocities``, ordered along the axis.
    """
    boundaries = np.asarray(boundaries, dtype=float)
    velocities = np.asarray(velocities, dtype=float)
    if velocities.size != boundaries.size + 1:
        raise ConfigurationError(
            "need exactly one more velocity than layer boundaries")
    if np.any(np.diff(boundaries) <= 0):
        raise ConfigurationError("layer boundaries must be strictly increasing")
    if np.any(velocities <= 0):
        raise ConfigurationError("layer velocities must be positive")
    if not 0 <= axis < grid.ndim:
        raise ConfigurationError(f"axis {axis} out of range for {grid.ndim}D grid")
    x = grid.axis_coordinates(axis)
    layer = np.searchsorted(boundaries, x, side="right")
    c_axis = velocities[layer]
    if grid.ndim == 1:
        c2 = c_axis ** 2
    else:
        shape = grid.shape
        c = np.empty(shape, dtype=float)
        if axis == 0:
            c[:, :] = c_axis[:, None]
        else:
            c[:, :] = c_axis[None, :]
        c2 = (c ** 2).ravel()
    return MediumModel(c2=c2, label="layered")


def rod_lattice_medium(grid: GridSpec, spacing: float, rows: int, cols: int,
                       epsilon: float = 11.56, radius_fraction: float = 0.18,
                       background_velocity: float = C_VACUUM,
                       omit=()) -> MediumModel:
    """Square lattice of dielectric rods centered in the interior region.

    Rods of relative permittivity ``epsilon`` and radius
    ``radius_fraction * spacing`` sit on a ``rows x cols`` lattice with pitch
    ``spacing``; lattice sites listed in ``omit`` (pairs of row, col) are
    left at background speed, which is how waveguide channels and bends are
    carved out of the crystal.
    """
    if grid.ndim != 2:
        raise ConfigurationError("rod lattices are a 2D preset")
    if not (spacing > 0 and epsilon >= 1 and 0 < radius_fraction < 0.5):
        raise ConfigurationError("invalid rod lattice parameters")
    omit = {(int(r), int(c)) for r, c in omit}
    x = grid.axis_coordinates(0)
    y = grid.axis_coordinates(1)
    # Lattice centered in the interior box.
    x_lo = x[grid.pml[0]]
    x_hi = x[grid.pml[0] + grid.interior[0] - 1]
    y_lo = y[grid.pml[1]]
    y_hi = y[grid.pml[1] + grid.interior[1] - 1]
    cx0 = 0.5 * (x_lo + x_hi) - 0.5 * (rows - 1) * spacing
    cy0 = 0.5 * (y_lo + y_hi) - 0.5 * (cols - 1) * spacing
    c2 = np.full(grid.shape, background_velocity ** 2, dtype=float)
    radius = radius_fraction * spacing
    rod_c2 = background_velocity ** 2 / epsilon
    xx = x[:, None]
    yy = y[None, :]
    for r in range(rows):
        for c in range(cols):
            if (r, c) in omit:
                continue
            inside = (xx - (cx0 + r * spacing)) ** 2 \
                + (yy - (cy0 + c * spacing)) ** 2 <= radius ** 2
            c2[inside] = rod_c2
    return MediumModel(c2=c2.ravel(), label="rod_lattice")


MEDIUM_PRESETS = {
    "homogeneous": (homogeneous_medium,
                    "uniform speed; params: velocity"),
    "layered": (layered_medium,
                "layers normal to an axis; params: axis, boundaries, velocities"),
    "rod_lattice": (rod_lattice_medium,
                    "dielectric rod crystal; params: spacing, rows, cols, "
                    "epsilon, radius_fraction, background_velocity, omit"),
}


def medium_from_preset(name: str, grid: GridSpec, params: dict) -> MediumModel:
    if name not in MEDIUM_PRESETS:
        known = ", ".join(sorted(MEDIUM_PRESETS))
        raise ConfigurationError(f"unknown medium preset {name!r}; known: {known}")
    builder, _ = MEDIUM_PRESETS[name]
    try:
        return builder(grid, **params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for preset {name!r}: {exc}") from exc
