"""Implicit solves of the projection step.

Step 1 solves the fully coupled backward-Euler viscous system

    rho (St/dt) u* - (1/Re) div[ mu (grad u* + (grad u*)^T) ] = rhs

for all three face-velocity components at once with conjugate gradients,
preconditioned by one multigrid V-cycle per component on the operator's
same-component block.  Step 2 solves the variable-density pressure Poisson
equation with multigrid-preconditioned CG; step 3 applies the gradient
correction with the identical face coefficients so the corrected field's
divergence equals the Poisson residual exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from hribm import _stencils
from hribm import grid as gridmod
from hribm.grid import GridSpec, divergence, gradient, viscous_stress_divergence
from hribm.multigrid import (
    LevelCoefficients,
    ScalarMultigrid,
    build_operator,
    coefficient_hierarchy,
)
from hribm.params import SimParams


class NonConvergence(RuntimeError):
    """Iterative solve ran out of iterations; dt or coefficients suspect."""

    def __init__(self, what: str, iterations: int, residual: float):
        super().__init__(f"{what} did not converge: {iterations} iterations, residual {residual:.3e}")
        self.iterations = iterations
        self.residual = residual


class IncompatibleRHS(ValueError):
    """Pressure right-hand side has a nonzero mean: broken boundary data."""


@dataclass
class SolverConfig:
    rel_tol: float = 1e-9
    max_iter: int = 400
    mg_levels: int = 0          # 0 = coarsen as far as possible
    pre_sweeps: int = 2
    post_sweeps: int = 2
    cycle: str = "V"            # "V" or "fmg"
    jacobi_weight: float = 0.8
    smoother: str = "jacobi"    # "jacobi" (orderless), "rbgs", or "sgs"
    rel_tol_pressure: Optional[float] = None   # defaults to rel_tol

    def __post_init__(self):
        if self.rel_tol <= 0.0:
            raise ValueError("rel_tol must be positive")
        if self.cycle not in ("V", "fmg"):
            raise ValueError("cycle must be 'V' or 'fmg'")
        if self.smoother not in ("jacobi", "rbgs", "sgs"):
            raise ValueError("smoother must be 'jacobi', 'rbgs', or 'sgs'")


def _pcg_scalar(op, mg: ScalarMultigrid, b, x0, tol_abs, max_iter, project=False):
    """Flexible PCG on one scalar block; returns (x, iterations, residual)."""
    x = x0.copy()
    r = b - op.apply(x)
    if project:
        r -= r.mean()
    rn = float(np.linalg.norm(r))
    if rn <= tol_abs:
        return x, 0, rn
    z = mg.precondition(r)
    p = z.copy()
    rz = float(np.vdot(r, z))
    for it in range(1, max_iter + 1):
        q = op.apply(p)
        pq = float(np.vdot(p, q))
        if pq <= 0.0:
            raise NonConvergence("pressure CG (indefinite direction)", it, rn)
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        if project:
            r -= r.mean()
        rn = float(np.linalg.norm(r))
        if rn <= tol_abs:
            return x, it, rn
        z_new = mg.precondition(r)
        rz_new = float(np.vdot(r, z_new))
        beta = float(np.vdot(r, z_new - z)) / rz  # Polak-Ribiere: robust to
        z = z_new                                 # slightly nonsymmetric M
        rz = rz_new
        p = z + beta * p
    raise NonConvergence("pressure CG", max_iter, rn)


# ---------------------------------------------------------------------------
# viscous solve
# ---------------------------------------------------------------------------

class _CoupledViscous:
    """Matrix-free coupled operator and its block preconditioner."""

    def __init__(self, gridspec: GridSpec, mu, rho, mass_scale, inv_re, config: SolverConfig):
        self.grid = gridspec
        self.mu = np.ascontiguousarray(mu)
        self.inv_re = inv_re
        self.edges = (gridmod.mu_z_edges(mu), gridmod.mu_y_edges(mu), gridmod.mu_x_edges(mu))
        self.m_u = mass_scale * gridmod.density_at_u_faces(rho)
        self.m_v = mass_scale * gridmod.density_at_v_faces(rho)
        self.m_w = mass_scale * gridmod.density_at_w_faces(rho)
        levels = coefficient_hierarchy(
            gridspec.nx, gridspec.ny, gridspec.nz, gridspec.h, mu, rho,
            max_levels=config.mg_levels,
        )
        kw = dict(
            pre_sweeps=config.pre_sweeps,
            post_sweeps=config.post_sweeps,
            jacobi_weight=config.jacobi_weight,
            smoother=config.smoother,
        )
        self.mg = {
            c: ScalarMultigrid(
                [build_operator(lc, c, mass_scale, inv_re) for lc in levels], **kw
            )
            for c in ("u", "v", "w")
        }
        nx, ny, nz = gridspec.shape
        self._vfull = np.zeros((nx, ny + 1, nz))
        self._work = (
            np.empty((nx, ny, nz)),
            np.zeros((nx, ny + 1, nz)),
            np.empty((nx, ny, nz)),
        )

    def apply(self, fields, out) -> None:
        """out <- A(fields); ``out`` is a (u, v_int, w) triple."""
        u, v_int, w = fields
        vf = self._vfull
        vf[:, 1:-1, :] = v_int
        ez, ey, ex = self.edges
        _stencils.viscous_matvec(
            u, vf, w, self.mu, ez, ey, ex, self.inv_re,
            self.m_u, self.m_v, self.m_w, self.grid.h,
            out[0], out[1], out[2],
        )

    def precondition(self, r, out) -> None:
        for z, mg, rr in zip(out, (self.mg["u"], self.mg["v"], self.mg["w"]), r):
            z[...] = 0.0
            mg.vcycle(z, rr)


def _triple_dot(a, b) -> float:
    return float(np.vdot(a[0], b[0]) + np.vdot(a[1], b[1]) + np.vdot(a[2], b[2]))


def _triple_norm(a) -> float:
    return float(np.sqrt(max(_triple_dot(a, a), 0.0)))


def solve_viscous(
    state,
    f,
    dt: float,
    params: SimParams,
    walls: Tuple[float, float, float, float],
    config: Optional[SolverConfig] = None,
    walls_old: Optional[Tuple[float, float, float, float]] = None,
):
    """Backward-Euler viscous update: returns (u*, v*, w*).

    ``state`` supplies u, v, w, rho, mu at the previous level; ``f`` is the
    face force triple (or None); ``walls`` the tangential wall velocities
    at the new time level, ``walls_old`` those at the previous level (used
    by the explicit advection term; defaults to ``walls``).
    """
    config = config or SolverConfig()
    g = state.grid
    mass_scale = params.St / dt
    inv_re = 1.0 / params.Re
    op = _CoupledViscous(g, state.mu, state.rho, mass_scale, inv_re, config)

    if walls_old is None:
        walls_old = walls
    au, av, aw = gridmod.advection(state.u, state.v, state.w, g.h, walls_old)
    rho_u = gridmod.density_at_u_faces(state.rho)
    rho_v = gridmod.density_at_v_faces(state.rho)
    rho_w = gridmod.density_at_w_faces(state.rho)
    b_u = rho_u * (mass_scale * state.u - au)
    b_v = rho_v * (mass_scale * state.v[:, 1:-1, :] - av[:, 1:-1, :])
    b_w = rho_w * (mass_scale * state.w - aw)
    if f is not None:
        b_u = b_u + params.C2 * f[0]
        b_v = b_v + params.C2 * f[1][:, 1:-1, :]
        b_w = b_w + params.C2 * f[2]

    # move the inhomogeneous wall data to the right-hand side
    zu = np.zeros_like(state.u)
    zv = np.zeros_like(state.v)
    zw = np.zeros_like(state.w)
    cu, cv, cw = viscous_stress_divergence(zu, zv, zw, state.mu, g.h, walls)
    b = (b_u + inv_re * cu, b_v + inv_re * cv[:, 1:-1, :], b_w + inv_re * cw)

    bn = _triple_norm(b)
    if bn == 0.0:
        return np.zeros_like(state.u), np.zeros_like(state.v), np.zeros_like(state.w)
    tol = config.rel_tol * bn

    def fresh():
        return (
            np.empty_like(state.u),
            np.empty((g.nx, g.ny - 1, g.nz)),
            np.empty_like(state.w),
        )

    # warm start: the previous velocity with its projection undone (u* of
    # the new step carries the pressure kick that correct_velocity removed)
    gx, gy, gz = gradient(state.P, g.h)
    irho = 1.0 / state.rho
    kick = (params.C1 / params.St) * dt
    x = (
        state.u + kick * 0.5 * (irho + np.roll(irho, 1, axis=0)) * gx,
        state.v[:, 1:-1, :]
        + kick * 0.5 * (irho[:, 1:, :] + irho[:, :-1, :]) * gy[:, 1:-1, :],
        state.w + kick * 0.5 * (irho + np.roll(irho, 1, axis=2)) * gz,
    )
    r = fresh()
    q = fresh()
    z = fresh()
    z_prev = fresh()
    tmp = fresh()
    op.apply(x, r)
    for rr, bb in zip(r, b):
        np.subtract(bb, rr, out=rr)
    rn = _triple_norm(r)
    it = 0
    if rn > tol:
        op.precondition(r, z)
        p = tuple(zz.copy() for zz in z)
        rz = _triple_dot(r, z)
        for it in range(1, config.max_iter + 1):
            op.apply(p, q)
            alpha = rz / _triple_dot(p, q)
            for xx, pp, rr, qq, tt in zip(x, p, r, q, tmp):
                np.multiply(pp, alpha, out=tt)
                xx += tt
                np.multiply(qq, alpha, out=tt)
                rr -= tt
            rn = _triple_norm(r)
            if rn <= tol:
                break
            z, z_prev = z_prev, z
            op.precondition(r, z)
            # Polak-Ribiere form: tolerant of the mild asymmetry of the
            # multigrid preconditioner
            rz_new = _triple_dot(r, z)
            beta = (rz_new - _triple_dot(r, z_prev)) / rz
            rz = rz_new
            for pp, zz in zip(p, z):
                pp *= beta
                pp += zz
        else:
            raise NonConvergence("viscous solve", config.max_iter, rn / bn)

    u_star = x[0]
    w_star = x[2]
    v_star = np.zeros_like(state.v)
    v_star[:, 1:-1, :] = x[1]
    return u_star, v_star, w_star


# ---------------------------------------------------------------------------
# pressure solve and correction
# ---------------------------------------------------------------------------

def _pressure_mg(gridspec: GridSpec, rho, config: SolverConfig):
    levels = coefficient_hierarchy(
        gridspec.nx, gridspec.ny, gridspec.nz, gridspec.h,
        np.ones_like(rho), rho, max_levels=config.mg_levels,
    )
    ops = [build_operator(lc, "p") for lc in levels]
    mg = ScalarMultigrid(
        ops,
        pre_sweeps=config.pre_sweeps,
        post_sweeps=config.post_sweeps,
        jacobi_weight=config.jacobi_weight,
        singular=True,
        smoother=config.smoother,
    )
    return ops[0], mg


def solve_pressure(
    u_star,
    v_star,
    w_star,
    rho,
    dt: float,
    params: SimParams,
    gridspec: GridSpec,
    config: Optional[SolverConfig] = None,
    p0: Optional[np.ndarray] = None,
):
    """Solve D((1/rho) G P) = (St/C1) D(u*)/dt; returns mean-zero P."""
    config = config or SolverConfig()
    rhs = (params.St / params.C1) * divergence(u_star, v_star, w_star, gridspec.h) / dt
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        return np.zeros_like(rhs)
    # norm of the constant-mode component of the rhs
    mean_norm = abs(float(rhs.mean())) * np.sqrt(rhs.size)
    if mean_norm > 1e-10 * rhs_norm:
        raise IncompatibleRHS(
            f"mean(rhs) = {rhs.mean():.3e} exceeds compatibility tolerance; "
            "check the no-penetration wall conditions"
        )
    op, mg = _pressure_mg(gridspec, rho, config)
    b = -(rhs - rhs.mean())  # operator is assembled as -D((1/rho)G .)
    x0 = np.zeros_like(rhs) if p0 is None else (p0 - p0.mean())
    if config.cycle == "fmg":
        x0 = mg.fmg(b.copy())
        x0 -= x0.mean()
    tol = config.rel_tol_pressure or config.rel_tol
    P, _, _ = _pcg_scalar(
        op, mg, b, x0, tol * float(np.linalg.norm(b)), config.max_iter,
        project=True,
    )
    P -= P.mean()
    return P


def correct_velocity(u_star, v_star, w_star, P, rho, dt: float, params: SimParams, gridspec: GridSpec):
    """u^n = u* - (C1/St) (dt/rho) G P with matched face coefficients."""
    gx, gy, gz = gradient(P, gridspec.h)
    irho = 1.0 / rho
    bu = 0.5 * (irho + np.roll(irho, 1, axis=0))
    bw = 0.5 * (irho + np.roll(irho, 1, axis=2))
    scale = (params.C1 / params.St) * dt
    u = u_star - scale * bu * gx
    w = w_star - scale * bw * gz
    v = v_star.copy()
    v[:, 1:-1, :] -= scale * 0.5 * (irho[:, 1:, :] + irho[:, :-1, :]) * gy[:, 1:-1, :]
    return u, v, w
