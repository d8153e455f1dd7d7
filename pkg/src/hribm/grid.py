"""Staggered-grid fields, boundary conditions, and difference operators.

The domain is a rectangular box, periodic in x and z, with no-slip walls at
y = 0 and y = y_L.  Velocities live on cell faces (MAC arrangement) so the
discrete divergence and gradient are exact adjoints and the projection has
no spurious pressure modes; pressure, density, and viscosity live at cell
centers.  All operators are second-order centered differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Tuple

import numpy as np

from hribm import _stencils


@dataclass(frozen=True)
class GridSpec:
    """Uniform staggered grid: equal spacing h in all three directions."""

    nx: int
    ny: int
    nz: int
    h: float

    def __post_init__(self):
        if self.h <= 0.0:
            raise ValueError("h must be positive")
        if self.ny < 8:
            raise ValueError("ny must be at least 8")
        if self.nx < 4 or self.nz < 4:
            raise ValueError("periodic axes need at least 4 cells")

    @property
    def extents(self) -> Tuple[float, float, float]:
        return (self.nx * self.h, self.ny * self.h, self.nz * self.h)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def x_L(self) -> float:
        return self.nx * self.h

    @property
    def y_L(self) -> float:
        return self.ny * self.h

    @property
    def z_L(self) -> float:
        return self.nz * self.h

    def cell_centers(self, axis: int) -> np.ndarray:
        n = (self.nx, self.ny, self.nz)[axis]
        return (np.arange(n) + 0.5) * self.h


@dataclass
class FluidState:
    """Eulerian unknowns: face velocities plus cell-centered P, rho, mu."""

    grid: GridSpec
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    P: np.ndarray
    rho: np.ndarray
    mu: np.ndarray
    time: float = 0.0

    @classmethod
    def zeros(cls, grid: GridSpec) -> "FluidState":
        nx, ny, nz = grid.shape
        return cls(
            grid=grid,
            u=np.zeros((nx, ny, nz)),
            v=np.zeros((nx, ny + 1, nz)),
            w=np.zeros((nx, ny, nz)),
            P=np.zeros((nx, ny, nz)),
            rho=np.ones((nx, ny, nz)),
            mu=np.ones((nx, ny, nz)),
        )

    def copy(self) -> "FluidState":
        return FluidState(
            grid=self.grid,
            u=self.u.copy(),
            v=self.v.copy(),
            w=self.w.copy(),
            P=self.P.copy(),
            rho=self.rho.copy(),
            mu=self.mu.copy(),
            time=self.time,
        )

    def check_material_bounds(self, mu_max: float, rho_max: float, tol: float = 1e-12):
        if self.mu.min() < 1.0 - tol or self.mu.max() > mu_max + tol:
            raise ValueError(
                f"viscosity left [1, {mu_max}]: range [{self.mu.min()}, {self.mu.max()}]"
            )
        if self.rho.min() < 1.0 - tol or self.rho.max() > rho_max + tol:
            raise ValueError(
                f"density left [1, {rho_max}]: range [{self.rho.min()}, {self.rho.max()}]"
            )


def _zero_vec(t: float) -> np.ndarray:
    return np.zeros(3)


@dataclass
class BoundaryConditions:
    """Wall velocities as functions of (nondimensional) time.

    Both walls move only tangentially; the wall-normal component must be
    zero or the pressure problem loses solvability.
    """

    u_bottom: Callable[[float], np.ndarray] = _zero_vec
    u_top: Callable[[float], np.ndarray] = _zero_vec

    def wall_values(self, t: float) -> Tuple[float, float, float, float]:
        """(ubx, ubz, utx, utz) tangential wall velocities at time t."""
        ub = np.asarray(self.u_bottom(t), dtype=np.float64)
        ut = np.asarray(self.u_top(t), dtype=np.float64)
        if abs(ub[1]) > 0.0 or abs(ut[1]) > 0.0:
            raise ValueError("wall-normal velocity must vanish at both walls")
        return float(ub[0]), float(ub[2]), float(ut[0]), float(ut[2])

    @staticmethod
    def static_walls() -> "BoundaryConditions":
        return BoundaryConditions()


# ----------------------------------------------------------------------
# first-order (in the operator sense) building blocks; all O(h^2) accurate
# ----------------------------------------------------------------------

def divergence(u: np.ndarray, v: np.ndarray, w: np.ndarray, h: float) -> np.ndarray:
    """Cell-centered divergence of a face velocity field."""
    du = (np.roll(u, -1, axis=0) - u) / h
    dv = (v[:, 1:, :] - v[:, :-1, :]) / h
    dw = (np.roll(w, -1, axis=2) - w) / h
    return du + dv + dw


def gradient(P: np.ndarray, h: float):
    """Face-centered gradient of a cell field.

    The y component is returned on the full v-face lattice with wall rows
    set to zero (dP/dy = 0 there, which is the wall condition the pressure
    solve enforces).
    """
    gx = (P - np.roll(P, 1, axis=0)) / h
    gy = np.zeros((P.shape[0], P.shape[1] + 1, P.shape[2]))
    gy[:, 1:-1, :] = (P[:, 1:, :] - P[:, :-1, :]) / h
    gz = (P - np.roll(P, 1, axis=2)) / h
    return gx, gy, gz


# edge-centered viscosity averages (arithmetic; 2-cell averages at walls) ---

def mu_z_edges(mu: np.ndarray) -> np.ndarray:
    """Viscosity at z-edges (i h, j h, (k+.5)h), shape (nx, ny+1, nz)."""
    nx, ny, nz = mu.shape
    mx = 0.5 * (mu + np.roll(mu, 1, axis=0))
    ez = np.empty((nx, ny + 1, nz))
    ez[:, 1:ny, :] = 0.5 * (mx[:, :-1, :] + mx[:, 1:, :])
    ez[:, 0, :] = mx[:, 0, :]
    ez[:, ny, :] = mx[:, ny - 1, :]
    return ez


def mu_y_edges(mu: np.ndarray) -> np.ndarray:
    """Viscosity at y-edges (i h, (j+.5)h, k h), shape (nx, ny, nz)."""
    mx = 0.5 * (mu + np.roll(mu, 1, axis=0))
    return 0.5 * (mx + np.roll(mx, 1, axis=2))


def mu_x_edges(mu: np.ndarray) -> np.ndarray:
    """Viscosity at x-edges ((i+.5)h, j h, k h), shape (nx, ny+1, nz)."""
    nx, ny, nz = mu.shape
    mz = 0.5 * (mu + np.roll(mu, 1, axis=2))
    ex = np.empty((nx, ny + 1, nz))
    ex[:, 1:ny, :] = 0.5 * (mz[:, :-1, :] + mz[:, 1:, :])
    ex[:, 0, :] = mz[:, 0, :]
    ex[:, ny, :] = mz[:, ny - 1, :]
    return ex


def viscous_stress_divergence(
    u: np.ndarray,
    v: np.ndarray,
    w: np.ndarray,
    mu: np.ndarray,
    h: float,
    walls: Tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0),
    edges=None,
    out=None,
):
    """div[ mu (grad u + (grad u)^T) ] at every velocity face.

    ``walls`` carries the tangential wall velocities (ubx, ubz, utx, utz)
    used to build the Dirichlet ghosts; the wall rows of the y component
    are boundary data and come back as zeros.  Viscosity at faces and
    edges is the arithmetic mean of the adjacent cell values; repeated
    applications with the same mu can pass precomputed ``edges``
    (ez, ey, ex) and reusable ``out`` arrays.
    """
    if edges is None:
        edges = (mu_z_edges(mu), mu_y_edges(mu), mu_x_edges(mu))
    ez, ey, ex = edges
    if out is None:
        out = (np.empty_like(u), np.zeros_like(v), np.empty_like(w))
    fu, fv, fw = out
    fv[:, 0, :] = 0.0
    fv[:, -1, :] = 0.0
    ubx, ubz, utx, utz = walls
    _stencils.stress_divergence_fast(u, v, w, mu, ez, ey, ex, h, ubx, ubz, utx, utz, fu, fv, fw)
    return fu, fv, fw


def advection(
    u: np.ndarray,
    v: np.ndarray,
    w: np.ndarray,
    h: float,
    walls: Tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0),
):
    """Skew-symmetric advection 0.5 (u . D(u) + D(u u)) at velocity faces."""
    au = np.zeros_like(u)
    av = np.zeros_like(v)
    aw = np.zeros_like(w)
    ubx, ubz, utx, utz = walls
    _stencils.advect(u, v, w, h, ubx, ubz, utx, utz, au, av, aw)
    return au, av, aw


# face-averaged material coefficients --------------------------------------

def density_at_u_faces(rho: np.ndarray) -> np.ndarray:
    return 0.5 * (rho + np.roll(rho, 1, axis=0))


def density_at_v_faces(rho: np.ndarray) -> np.ndarray:
    """Interior v faces only, shape (nx, ny-1, nz)."""
    return 0.5 * (rho[:, 1:, :] + rho[:, :-1, :])


def density_at_w_faces(rho: np.ndarray) -> np.ndarray:
    return 0.5 * (rho + np.roll(rho, 1, axis=2))


def dot_fields(a, b) -> float:
    """Inner product over a (u, v, w) field triple."""
    return float(
        np.vdot(a[0], b[0]) + np.vdot(a[1], b[1]) + np.vdot(a[2], b[2])
    )


def norm_fields(a) -> float:
    return float(np.sqrt(dot_fields(a, a)))
