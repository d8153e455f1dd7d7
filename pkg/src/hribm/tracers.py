"""Passive strain-measurement particles.

Tracers ride the flow exactly like bacteria (same grid-kernel
interpolation, same position update) but exert no forces.  They are laid
out in three vertically aligned layers just below the top wall so the
shear strain can be read off with a centered difference in y.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hribm.grid import GridSpec


class DegenerateLayers(ValueError):
    """Two tracer layers collapsed in y; the strain difference is singular."""


@dataclass
class TracerSet:
    """Positions S and initial positions S0, grouped as (3, n_columns, 3).

    Layer 0 is the highest (y_L - gamma), layer 2 the lowest; tracers with
    the same column index stay vertically associated for the finite
    difference even as they advect.
    """

    S: np.ndarray    # (3, n_columns, 3)
    S0: np.ndarray

    @property
    def n_columns(self) -> int:
        return self.S.shape[1]

    @property
    def positions_flat(self) -> np.ndarray:
        return self.S.reshape(-1, 3)

    def set_positions_flat(self, pos: np.ndarray) -> None:
        self.S[...] = pos.reshape(self.S.shape)

    @property
    def displacement(self) -> np.ndarray:
        return self.S - self.S0

    def copy(self) -> "TracerSet":
        return TracerSet(S=self.S.copy(), S0=self.S0.copy())


def make_tracers(grid: GridSpec, gamma: float, n_per_side: int = 8) -> TracerSet:
    """Three layers at y_L - gamma, y_L - gamma - h, y_L - gamma - 2h."""
    heights = np.array([grid.y_L - gamma - m * grid.h for m in range(3)])
    if heights.min() <= 0:
        raise ValueError("tracer layers would sit below the bottom wall")
    xs = (np.arange(n_per_side) + 0.5) * grid.x_L / n_per_side
    zs = (np.arange(n_per_side) + 0.5) * grid.z_L / n_per_side
    cols = np.array([(x, z) for x in xs for z in zs])
    S = np.empty((3, len(cols), 3))
    for layer, y in enumerate(heights):
        S[layer, :, 0] = cols[:, 0]
        S[layer, :, 1] = y
        S[layer, :, 2] = cols[:, 1]
    return TracerSet(S=S, S0=S.copy())
