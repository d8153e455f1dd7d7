"""The full solution cycle: one implicit projection step plus the
Lagrangian updates and field spreading.

Per step, in order: (1) viscous solve for u*, (2) pressure solve,
(3) gradient correction, (4) grid-kernel velocity interpolation,
(5) position update X += (dt/St) U with the adhesion constraints,
(6) spring forces, (7) spreading of force, density, and viscosity with
the hydrodynamic-radius kernel.  Tracers advect in step (4)-(5) with the
same interpolation as the bacteria.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from hribm.biofilm import (
    BiofilmState,
    SpreadParams,
    classify_adhesion,
    interpolate_velocity,
    spread_force,
    spread_material_fields,
    spring_forces,
)
from hribm.grid import BoundaryConditions, FluidState, GridSpec, divergence
from hribm.params import SimParams
from hribm.solvers import SolverConfig, correct_velocity, solve_pressure, solve_viscous
from hribm.tracers import TracerSet

CHECKPOINT_VERSION = 1


class BlowUp(FloatingPointError):
    """Velocity magnitude exploded; the time step is too large."""


@dataclass
class SimState:
    fluid: FluidState
    biofilm: Optional[BiofilmState] = None
    tracers: Optional[TracerSet] = None
    step_index: int = 0
    force: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = None
    plate_force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    monitors: dict = field(default_factory=dict)

    def copy(self) -> "SimState":
        return SimState(
            fluid=self.fluid.copy(),
            biofilm=self.biofilm.copy() if self.biofilm is not None else None,
            tracers=self.tracers.copy() if self.tracers is not None else None,
            step_index=self.step_index,
            force=tuple(f.copy() for f in self.force) if self.force is not None else None,
            plate_force=self.plate_force.copy(),
            monitors=dict(self.monitors),
        )


def _update_lagrangian_fields(state: SimState, spread_params: SpreadParams) -> None:
    """Steps (6)-(7): forces, their spreading, and the material halos."""
    bio = state.biofilm
    if bio is None:
        state.force = None
        return
    F = spring_forces(bio)
    state.force = spread_force(bio, spread_params.omega, state.fluid.grid, forces=F)
    state.plate_force = F[bio.adhered_top].sum(axis=0) if bio.adhered_top.size else np.zeros(3)
    rho, mu = spread_material_fields(bio, spread_params, state.fluid.grid)
    state.fluid.rho = rho
    state.fluid.mu = mu
    mon = state.monitors
    mon["mu_min"] = min(mon.get("mu_min", np.inf), float(mu.min()))
    mon["mu_max"] = max(mon.get("mu_max", 0.0), float(mu.max()))
    mon["rho_min"] = min(mon.get("rho_min", np.inf), float(rho.min()))
    mon["rho_max"] = max(mon.get("rho_max", 0.0), float(rho.max()))
    total = np.abs(F).sum()
    if total > 0.0:
        balance = float(np.abs(F.sum(axis=0)).max()) / total
        mon["force_balance_max"] = max(mon.get("force_balance_max", 0.0), balance)


def initialize(
    fluid: FluidState,
    biofilm: Optional[BiofilmState],
    params: SimParams,
    spread_params: Optional[SpreadParams] = None,
    tracers: Optional[TracerSet] = None,
    adhesion_gamma: Optional[float] = None,
) -> SimState:
    """Classify adhesion from the initial positions and spread the fields."""
    state = SimState(fluid=fluid, biofilm=biofilm, tracers=tracers)
    if biofilm is not None:
        if adhesion_gamma is not None:
            top, bottom = classify_adhesion(biofilm.X, adhesion_gamma, fluid.grid.y_L)
            biofilm.adhered_top = top
            biofilm.adhered_bottom = bottom
        _update_lagrangian_fields(state, spread_params or SpreadParams())
    return state


def step(
    state: SimState,
    params: SimParams,
    bc: BoundaryConditions,
    spread_params: Optional[SpreadParams] = None,
    solver_config: Optional[SolverConfig] = None,
) -> SimState:
    """Advance one time step in place and return the state."""
    spread_params = spread_params or SpreadParams()
    solver_config = solver_config or SolverConfig()
    fluid = state.fluid
    g = fluid.grid
    dt = params.dt
    t_old = fluid.time
    t_new = t_old + dt
    walls_old = bc.wall_values(t_old)
    walls_new = bc.wall_values(t_new)

    u_star, v_star, w_star = solve_viscous(
        fluid, state.force, dt, params, walls_new, solver_config, walls_old=walls_old
    )
    P = solve_pressure(
        u_star, v_star, w_star, fluid.rho, dt, params, g, solver_config, p0=fluid.P
    )
    u, v, w = correct_velocity(u_star, v_star, w_star, P, fluid.rho, dt, params, g)

    div_star = float(np.linalg.norm(divergence(u_star, v_star, w_star, g.h)))
    div_new = float(np.abs(divergence(u, v, w, g.h)).max())
    vmax = max(np.abs(u).max(), np.abs(v).max(), np.abs(w).max())
    vel_scale = max(vmax, max(abs(x) for x in walls_new), 1e-30)
    # divergence relative to the natural scale (velocity / h)
    state.monitors["div_rel"] = div_new * g.h / vel_scale
    state.monitors["div_rel_max"] = max(
        state.monitors.get("div_rel_max", 0.0), state.monitors["div_rel"]
    )
    # the projection contract: |D u_n| <= 10 rel_tol ||D u*||, meaningful
    # only while the uncorrected divergence is above roundoff
    if div_star > 1e3 * np.finfo(float).eps * vel_scale / g.h:
        state.monitors["div_contract"] = div_new / div_star

    wall_scale = max(1.0, max(abs(x) for x in walls_new))
    if vmax > 1e3 * wall_scale:
        raise BlowUp(
            f"max |u| = {vmax:.3e} exceeds {1e3 * wall_scale:.1e} at t = {t_new:.4g}"
        )

    rho_old = fluid.rho
    fluid.u, fluid.v, fluid.w, fluid.P = u, v, w, P
    fluid.time = t_new

    bio = state.biofilm
    if bio is not None:
        U = interpolate_velocity(u, v, w, bio.X, g, walls_new)
        if bio.adhered_top.size:
            U[bio.adhered_top, 2] = walls_new[3]  # ride the top plate in z
        if bio.adhered_bottom.size:
            U[bio.adhered_bottom] = 0.0           # bottom attachment is rigid
        bio.X = bio.X + (dt / params.St) * U
    if state.tracers is not None:
        pos = state.tracers.positions_flat
        Ut = interpolate_velocity(u, v, w, pos, g, walls_new)
        state.tracers.set_positions_flat(pos + (dt / params.St) * Ut)

    _update_lagrangian_fields(state, spread_params)

    # continuity is enforced as div u = 0 even though rho varies; log the
    # resulting mass defect as a diagnostic, never as a correction
    if bio is not None:
        rho_u = 0.5 * (fluid.rho + np.roll(fluid.rho, 1, axis=0))
        rho_w = 0.5 * (fluid.rho + np.roll(fluid.rho, 1, axis=2))
        rho_v = np.zeros_like(v)
        rho_v[:, 1:-1, :] = 0.5 * (fluid.rho[:, 1:, :] + fluid.rho[:, :-1, :])
        defect = (fluid.rho - rho_old) / dt + divergence(rho_u * u, rho_v * v, rho_w * w, g.h)
        state.monitors["mass_defect"] = float(np.abs(defect).mean() * g.h ** 3 * defect.size)

    state.step_index += 1
    return state


@dataclass
class Recorder:
    """Collects fn(state) every ``stride`` steps (after the step runs)."""

    name: str
    stride: int
    fn: Callable[[SimState], object]
    records: List = field(default_factory=list)

    def record_if_due(self, state: SimState) -> None:
        if state.step_index % self.stride == 0:
            self.records.append(self.fn(state))


def run(
    state: SimState,
    params: SimParams,
    bc: BoundaryConditions,
    n_steps: int,
    recorders: Sequence[Recorder] = (),
    spread_params: Optional[SpreadParams] = None,
    solver_config: Optional[SolverConfig] = None,
) -> Tuple[SimState, dict]:
    """Apply ``step`` n_steps times, firing recorders at their strides."""
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    for _ in range(n_steps):
        try:
            step(state, params, bc, spread_params, solver_config)
        except Exception as exc:
            exc.step_index = state.step_index  # type: ignore[attr-defined]
            raise
        for rec in recorders:
            rec.record_if_due(state)
    return state, {rec.name: rec.records for rec in recorders}


# ---------------------------------------------------------------------------
# checkpointing: a versioned array dump sufficient for bitwise restart
# ---------------------------------------------------------------------------

def save_checkpoint(path, state: SimState) -> None:
    fluid = state.fluid
    payload = {
        "version": np.int64(CHECKPOINT_VERSION),
        "grid": np.array([fluid.grid.nx, fluid.grid.ny, fluid.grid.nz], dtype=np.int64),
        "h": np.float64(fluid.grid.h),
        "u": fluid.u, "v": fluid.v, "w": fluid.w,
        "P": fluid.P, "rho": fluid.rho, "mu": fluid.mu,
        "time": np.float64(fluid.time),
        "step_index": np.int64(state.step_index),
        "plate_force": state.plate_force,
    }
    bio = state.biofilm
    if bio is not None:
        payload.update(
            bio_X=bio.X, bio_X0=bio.X0,
            bio_si=bio.springs_i, bio_sj=bio.springs_j,
            bio_rest=bio.rest_length, bio_k=bio.stiffness,
            bio_top=bio.adhered_top, bio_bottom=bio.adhered_bottom,
            bio_d0=np.float64(bio.d0),
        )
    if state.force is not None:
        payload.update(force_u=state.force[0], force_v=state.force[1], force_w=state.force[2])
    if state.tracers is not None:
        payload.update(tracer_S=state.tracers.S, tracer_S0=state.tracers.S0)
    np.savez(path, **payload)


def load_checkpoint(path) -> SimState:
    data = np.load(path)
    if int(data["version"]) != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {int(data['version'])}")
    nx, ny, nz = (int(x) for x in data["grid"])
    grid = GridSpec(nx, ny, nz, float(data["h"]))
    fluid = FluidState(
        grid=grid,
        u=data["u"], v=data["v"], w=data["w"],
        P=data["P"], rho=data["rho"], mu=data["mu"],
        time=float(data["time"]),
    )
    bio = None
    if "bio_X" in data:
        bio = BiofilmState(
            X=data["bio_X"], X0=data["bio_X0"],
            springs_i=data["bio_si"], springs_j=data["bio_sj"],
            rest_length=data["bio_rest"], stiffness=data["bio_k"],
            adhered_top=data["bio_top"], adhered_bottom=data["bio_bottom"],
            d0=float(data["bio_d0"]),
        )
    force = None
    if "force_u" in data:
        force = (data["force_u"], data["force_v"], data["force_w"])
    tracers = None
    if "tracer_S" in data:
        tracers = TracerSet(S=data["tracer_S"], S0=data["tracer_S0"])
    return SimState(
        fluid=fluid,
        biofilm=bio,
        tracers=tracers,
        step_index=int(data["step_index"]),
        force=force,
        plate_force=data["plate_force"],
    )
