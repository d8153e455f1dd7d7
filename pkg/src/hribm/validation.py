"""Oscillating-channel validation and convergence-order measurement.

With homogeneous fluid properties, walls at y = 0 (fixed) and y = y_L
oscillating as (0, 0, sin(nu t)), the Navier-Stokes problem has the exact
solution

    u_z(y, t) = |sinh(k y (1+i)) / sinh(k y_L (1+i))|
                * sin(nu t + arg(sinh(k y (1+i)) / sinh(k y_L (1+i)))),
    k = sqrt(nu rho / (2 mu)),

which exercises the solver but not the immersed machinery.  Convergence
factors are log2 ratios of successive solution differences under time-step
or mesh halving, so the factor reads directly as the observed order.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from hribm.biofilm import SpreadParams, build_connections, generate_synthetic_biofilm
from hribm.grid import BoundaryConditions, FluidState, GridSpec
from hribm.params import SimParams
from hribm.solvers import SolverConfig
from hribm.stepper import SimState, initialize, run


class ZeroDifference(ValueError):
    """Successive solutions are identical; no order can be measured."""


def analytic_channel(y: float, t: float, nu: float, rho: float, mu: float, y_L: float) -> float:
    """Exact oscillating-channel z velocity; SI arguments (y in meters)."""
    if not 0.0 <= y <= y_L * (1 + 1e-12):
        raise ValueError("y outside the channel")
    k = math.sqrt(nu * rho / (2.0 * mu))
    ratio = cmath.sinh(k * y * (1 + 1j)) / cmath.sinh(k * y_L * (1 + 1j))
    return abs(ratio) * math.sin(nu * t + cmath.phase(ratio))


def channel_profile(grid: GridSpec, t: float, nu: float, rho: float, mu: float, L: float) -> np.ndarray:
    """Analytic w field sampled at the cell-center heights of ``grid``."""
    y_L = grid.y_L * L
    vals = np.array(
        [analytic_channel((j + 0.5) * grid.h * L, t, nu, rho, mu, y_L) for j in range(grid.ny)]
    )
    return np.broadcast_to(vals[None, :, None], grid.shape).copy()


# ---------------------------------------------------------------------------
# staggered-field interpolation between grid levels (trilinear)
# ---------------------------------------------------------------------------

def _interp_axis_periodic(pos: np.ndarray, n: int):
    i0 = np.floor(pos).astype(np.int64)
    frac = pos - i0
    return i0 % n, (i0 + 1) % n, frac


def _trilinear(field_ext, px, py, pz, nx, nz):
    """Trilinear sample of a y-ghost-extended array at fractional indices."""
    ix0, ix1, fx = _interp_axis_periodic(px, nx)
    iz0, iz1, fz = _interp_axis_periodic(pz, nz)
    iy0 = np.floor(py).astype(np.int64)
    fy = py - iy0
    iy1 = iy0 + 1
    # broadcastable gather
    X0 = ix0[:, None, None]
    X1 = ix1[:, None, None]
    Y0 = iy0[None, :, None]
    Y1 = iy1[None, :, None]
    Z0 = iz0[None, None, :]
    Z1 = iz1[None, None, :]
    FX = fx[:, None, None]
    FY = fy[None, :, None]
    FZ = fz[None, None, :]
    f = field_ext
    out = (
        f[X0, Y0, Z0] * (1 - FX) * (1 - FY) * (1 - FZ)
        + f[X1, Y0, Z0] * FX * (1 - FY) * (1 - FZ)
        + f[X0, Y1, Z0] * (1 - FX) * FY * (1 - FZ)
        + f[X0, Y0, Z1] * (1 - FX) * (1 - FY) * FZ
        + f[X1, Y1, Z0] * FX * FY * (1 - FZ)
        + f[X1, Y0, Z1] * FX * (1 - FY) * FZ
        + f[X0, Y1, Z1] * (1 - FX) * FY * FZ
        + f[X1, Y1, Z1] * FX * FY * FZ
    )
    return out


def interpolate_state(coarse: FluidState, fine_grid: GridSpec, walls=(0.0, 0.0, 0.0, 0.0)):
    """Trilinear interpolation of the staggered fields onto a finer grid.

    The tangential components get one mirrored-linear ghost row per wall
    (built from ``walls``) so fine points below the first coarse center
    are handled at second order.
    """
    cg = coarse.grid
    r = cg.h / fine_grid.h
    ubx, ubz, utx, utz = walls

    def extend_cell_y(fld, lo, hi):
        ext = np.empty((fld.shape[0], fld.shape[1] + 2, fld.shape[2]))
        ext[:, 1:-1, :] = fld
        ext[:, 0, :] = 2.0 * lo - fld[:, 0, :]
        ext[:, -1, :] = 2.0 * hi - fld[:, -1, :]
        return ext

    # u faces: positions (i, j+.5, k+.5) in units of the local h
    ue = extend_cell_y(coarse.u, ubx, utx)
    fi = np.arange(fine_grid.nx) / r
    fj = (np.arange(fine_grid.ny) + 0.5) / r - 0.5 + 1.0  # +1 for the ghost row
    fk = (np.arange(fine_grid.nz) + 0.5) / r - 0.5
    u_f = _trilinear(ue, fi, fj, fk, cg.nx, cg.nz)

    we = extend_cell_y(coarse.w, ubz, utz)
    fi = (np.arange(fine_grid.nx) + 0.5) / r - 0.5
    fk = np.arange(fine_grid.nz) / r
    w_f = _trilinear(we, fi, fj, fk, cg.nx, cg.nz)

    # v faces: genuine wall nodes at both ends, no ghosts needed
    fi = (np.arange(fine_grid.nx) + 0.5) / r - 0.5
    fjv = np.arange(fine_grid.ny + 1) / r
    fjv = np.clip(fjv, 0.0, cg.ny - 1e-12)
    fk = (np.arange(fine_grid.nz) + 0.5) / r - 0.5
    v_f = _trilinear(coarse.v, fi, fjv, fk, cg.nx, cg.nz)
    return u_f, v_f, w_f


def field_l2(u, v, w) -> float:
    return float(
        np.sqrt(np.vdot(u, u).real + np.vdot(v, v).real + np.vdot(w, w).real)
    )


def convergence_factor(norm_coarse_pair: float, norm_fine_pair: float) -> float:
    """log2 of the ratio of successive solution differences."""
    if norm_fine_pair == 0.0 or norm_coarse_pair == 0.0:
        raise ZeroDifference("successive solutions are identical")
    return math.log2(norm_coarse_pair / norm_fine_pair)


@dataclass
class ConvergenceReport:
    """Levels, successive-difference norms, and the resulting factors."""

    kind: str                      # "temporal" or "spatial"
    labels: List[str]
    norm_diffs: List[float]        # len = levels - 1
    factors: List[float]           # len = levels - 2
    error_vs_analytic: Optional[float] = None

    def write_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["level", "norm_diff", "factor"])
            for i, label in enumerate(self.labels):
                nd = f"{self.norm_diffs[i - 1]:.10g}" if i >= 1 else ""
                fa = f"{self.factors[i - 2]:.10g}" if i >= 2 else ""
                w.writerow([label, nd, fa])


def _report(kind, labels, solutions, error=None) -> ConvergenceReport:
    diffs = []
    for a, b in zip(solutions[:-1], solutions[1:]):
        diffs.append(field_l2(*(bb - aa for aa, bb in zip(a, b))))
    factors = []
    for d0, d1 in zip(diffs[:-1], diffs[1:]):
        factors.append(convergence_factor(d0, d1))
    return ConvergenceReport(kind, list(labels), diffs, factors, error)


# ---------------------------------------------------------------------------
# channel drivers
# ---------------------------------------------------------------------------

VALIDATION_RHO = 998.0   # kg/m^3
VALIDATION_MU = 1.0      # Pa s; homogeneous test fluid, not water


@dataclass
class ChannelConfig:
    """Oscillating-channel run, optionally with an immersed biofilm."""

    nu: float = 1.0                         # rad/s
    ny: int = 32
    extents: Tuple[float, float, float] = (0.25, 1.0, 0.25)
    nu_dt: float = 1.0 / 500.0              # nu * dt
    t_final_nu: float = 0.2                 # run to t = t_final_nu / nu seconds
    mu_si: float = VALIDATION_MU
    rho_si: float = VALIDATION_RHO
    biofilm_seed: Optional[int] = None      # None = fluid only
    d0: float = 0.159
    cutoff: float = 0.162
    f_max: float = 1.3223e-9
    spread: SpreadParams = field(default_factory=SpreadParams)
    solver: SolverConfig = field(
        default_factory=lambda: SolverConfig(rel_tol=1e-12, smoother="sgs")
    )

    def grid(self) -> GridSpec:
        h = self.extents[1] / self.ny
        return GridSpec(int(round(self.extents[0] / h)), self.ny, int(round(self.extents[2] / h)), h)

    def params(self) -> SimParams:
        dt = self.nu_dt / self.nu
        return SimParams(dt=dt, u0=1.0, nu=self.nu, mu0=self.mu_si, rho0=self.rho_si)


def run_channel(config: ChannelConfig) -> SimState:
    """March the oscillating channel to t_final and return the state."""
    g = config.grid()
    params = config.params()
    fluid = FluidState.zeros(g)
    fluid.w = channel_profile(g, 0.0, config.nu, config.rho_si, config.mu_si, params.L)
    bio = None
    spread = config.spread
    if config.biofilm_seed is not None:
        X = generate_synthetic_biofilm(
            (g.x_L, g.y_L, g.z_L), d0=config.d0, seed=config.biofilm_seed,
            y_margin=2.0 * config.spread.omega,
        )
        bio = build_connections(X, config.cutoff, config.f_max, params, d0=config.d0)
    else:
        spread = None
    state = initialize(fluid, bio, params, spread)

    def u_top(t):
        return np.array([0.0, 0.0, math.sin(config.nu * t)])

    bc = BoundaryConditions(u_top=u_top)
    n_steps = int(round(config.t_final_nu / config.nu_dt))
    run(state, params, bc, n_steps, (), spread, config.solver)
    return state


def _final_fields(state: SimState):
    return (state.fluid.u.copy(), state.fluid.v.copy(), state.fluid.w.copy())


def analytic_error(state: SimState, config: ChannelConfig) -> float:
    """Max-norm error of w against the exact profile at the final time."""
    g = state.fluid.grid
    params = config.params()
    exact = channel_profile(
        g, state.fluid.time * params.t0, config.nu, config.rho_si, config.mu_si, params.L
    )
    return float(np.abs(state.fluid.w - exact).max())


def temporal_convergence(config: ChannelConfig, halvings: int = 2):
    """Runs at dt, dt/2, ... on one grid; factor = observed temporal order.

    Returns (velocity_report, position_report); the latter is None for
    fluid-only runs.
    """
    labels = []
    fields = []
    states = []
    for lev in range(halvings + 1):
        c = ChannelConfig(**{**config.__dict__, "nu_dt": config.nu_dt / 2 ** lev})
        labels.append(f"nu_dt=1/{round(1.0 / c.nu_dt)}")
        s = run_channel(c)
        states.append(s)
        fields.append(_final_fields(s))
    err = analytic_error(states[-1], config) if config.biofilm_seed is None else None
    rep = _report("temporal", labels, fields, err)
    rep_x = _position_report(labels, states) if config.biofilm_seed is not None else None
    return rep, rep_x


def spatial_convergence(config: ChannelConfig, halvings: int = 2):
    """Runs at h, h/2, ...; successive differences taken on the finer grid.

    Returns (velocity_report, position_report); the latter is None for
    fluid-only runs.
    """
    labels = []
    states = []
    configs = []
    for lev in range(halvings + 1):
        c = ChannelConfig(**{**config.__dict__, "ny": config.ny * 2 ** lev})
        labels.append(f"h=1/{c.grid().ny // round(c.extents[1])}" if c.extents[1] == int(c.extents[1]) else f"ny={c.ny}")
        states.append(run_channel(c))
        configs.append(c)
    diffs = []
    for coarse, fine, cf in zip(states[:-1], states[1:], configs[1:]):
        walls = (0.0, 0.0, 0.0, math.sin(config.nu * fine.fluid.time))
        ui, vi, wi = interpolate_state(coarse.fluid, fine.fluid.grid, walls)
        diffs.append(
            field_l2(fine.fluid.u - ui, fine.fluid.v - vi, fine.fluid.w - wi)
        )
    factors = [convergence_factor(a, b) for a, b in zip(diffs[:-1], diffs[1:])]
    err = analytic_error(states[-1], configs[-1]) if config.biofilm_seed is None else None
    rep = ConvergenceReport("spatial", labels, diffs, factors, err)
    rep_x = _position_report(labels, states) if config.biofilm_seed is not None else None
    return rep, rep_x


def _position_report(labels, states) -> ConvergenceReport:
    xs = [s.biofilm.X for s in states]
    diffs = [float(np.linalg.norm(b - a)) for a, b in zip(xs[:-1], xs[1:])]
    factors = [convergence_factor(a, b) for a, b in zip(diffs[:-1], diffs[1:])]
    return ConvergenceReport("positions", list(labels), diffs, factors)
