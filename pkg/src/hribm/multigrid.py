"""Geometric multigrid for the scalar elliptic blocks.

Every implicit system in the time step is (a block of) an operator

    A(x) = m x - div(beta grad x)

on one staggered sub-lattice: cell-centered in x and z (periodic), and in
y either cell-centered with ghost walls (u, w, pressure) or node-centered
with genuine wall nodes (interior v faces).  The operator is encoded by
link coefficients: ``bx``/``bz`` couple periodic neighbors, ``by`` carries
ny+1 rows whose first and last are the wall links (zero for Neumann,
pre-doubled for half-cell Dirichlet ghosts).

Coarse operators are rediscretized from full-weighting-restricted
coefficient fields; smoothing is damped Jacobi (weight 0.8), which keeps
results independent of any sweep ordering; the coarsest level is solved
directly from a densely assembled matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from hribm import _stencils
from hribm.grid import mu_x_edges, mu_y_edges, mu_z_edges


@dataclass
class LevelCoefficients:
    """Material fields restricted to one grid level."""

    nx: int
    ny: int
    nz: int
    h: float
    mu: np.ndarray
    rho: np.ndarray


def coefficient_hierarchy(
    nx: int, ny: int, nz: int, h: float, mu: np.ndarray, rho: np.ndarray,
    min_periodic: int = 4, max_levels: int = 0,
) -> List[LevelCoefficients]:
    """Coarsen (mu, rho) by factors of two while every axis allows it."""
    levels = [LevelCoefficients(nx, ny, nz, h, np.ascontiguousarray(mu), np.ascontiguousarray(rho))]
    while True:
        lc = levels[-1]
        if max_levels and len(levels) >= max_levels:
            break
        if lc.nx % 2 or lc.ny % 2 or lc.nz % 2:
            break
        cnx, cny, cnz = lc.nx // 2, lc.ny // 2, lc.nz // 2
        if cnx < min_periodic or cnz < min_periodic or cny < 2:
            break
        cmu = np.empty((cnx, cny, cnz))
        crho = np.empty((cnx, cny, cnz))
        _stencils.restrict_avg8(lc.mu, cmu)
        _stencils.restrict_avg8(lc.rho, crho)
        levels.append(LevelCoefficients(cnx, cny, cnz, 2.0 * lc.h, cmu, crho))
    return levels


# ---------------------------------------------------------------------------
# scalar level operator
# ---------------------------------------------------------------------------

@dataclass
class ScalarOperator:
    """A(x) = m x + (1/h^2) sum beta (x - x_nbr) on one level."""

    m: np.ndarray
    bx: np.ndarray
    by: np.ndarray
    bz: np.ndarray
    h: float
    ymode: str  # "cell" or "node"
    diag: np.ndarray = field(init=False)

    def __post_init__(self):
        for name in ("m", "bx", "by", "bz"):
            setattr(self, name, np.ascontiguousarray(getattr(self, name)))
        self.diag = np.empty_like(self.m)
        _stencils.scalar_diag(self.m, self.bx, self.by, self.bz, 1.0 / self.h ** 2, self.diag)

    @property
    def shape(self):
        return self.m.shape

    def apply(self, x: np.ndarray, out: Optional[np.ndarray] = None) -> np.ndarray:
        if out is None:
            out = np.empty_like(x)
        _stencils.scalar_apply(x, self.m, self.bx, self.by, self.bz, 1.0 / self.h ** 2, out)
        return out

    def dense_matrix(self) -> np.ndarray:
        """Assembled dense form of A (coarsest-level direct solves, tests)."""
        n = int(np.prod(self.shape))
        A = np.zeros((n, n))
        _stencils.assemble_dense(self.m, self.bx, self.by, self.bz, 1.0 / self.h ** 2, A)
        return A


def build_operator(
    lc: LevelCoefficients,
    component: str,
    mass_scale: float = 0.0,
    visc_scale: float = 1.0,
) -> ScalarOperator:
    """Construct the scalar block for one unknown family on one level.

    ``component`` is "u", "v", "w" (the same-component couplings of the
    symmetric stress, viscosity scaled by ``visc_scale`` = 1/Re, mass
    m = mass_scale * rho at the face) or "p" (links = averaged 1/rho,
    Neumann walls, no mass).
    """
    mu, rho = lc.mu, lc.rho
    nx, ny, nz = mu.shape
    if component == "p":
        irho = 1.0 / rho
        bx = 0.5 * (irho + np.roll(irho, -1, axis=0))
        bz = 0.5 * (irho + np.roll(irho, -1, axis=2))
        by = np.zeros((nx, ny + 1, nz))
        by[:, 1:ny, :] = 0.5 * (irho[:, :-1, :] + irho[:, 1:, :])
        m = np.zeros_like(mu)
        return ScalarOperator(m, bx, by, bz, lc.h, "cell")
    if component == "u":
        bx = 2.0 * mu
        by = mu_z_edges(mu)
        by[:, 0, :] *= 2.0
        by[:, ny, :] *= 2.0
        bz = np.roll(mu_y_edges(mu), -1, axis=2)
        m = mass_scale * 0.5 * (rho + np.roll(rho, 1, axis=0))
    elif component == "w":
        bz = 2.0 * mu
        bx = np.roll(mu_y_edges(mu), -1, axis=0)
        by = mu_x_edges(mu)
        by[:, 0, :] *= 2.0
        by[:, ny, :] *= 2.0
        m = mass_scale * 0.5 * (rho + np.roll(rho, 1, axis=2))
    elif component == "v":
        # interior y nodes: shape (nx, ny-1, nz); walls are real nodes
        by = 2.0 * mu  # row j couples nodes j and j+1 through cell j
        bx = np.roll(mu_z_edges(mu), -1, axis=0)[:, 1:ny, :]
        bz = np.roll(mu_x_edges(mu), -1, axis=2)[:, 1:ny, :]
        m = mass_scale * 0.5 * (rho[:, 1:, :] + rho[:, :-1, :])
        return ScalarOperator(m, bx * visc_scale, by * visc_scale, bz * visc_scale, lc.h, "node")
    else:
        raise ValueError(f"unknown component {component!r}")
    return ScalarOperator(m, bx * visc_scale, by * visc_scale, bz * visc_scale, lc.h, "cell")


# ---------------------------------------------------------------------------
# the V-cycle
# ---------------------------------------------------------------------------

class ScalarMultigrid:
    """V-cycle solver/preconditioner for one scalar block.

    ``singular=True`` marks the all-Neumann pressure operator: the coarse
    direct solve is regularized with a rank-one mean penalty and every
    cycle re-projects the constant mode out.
    """

    def __init__(
        self,
        ops: List[ScalarOperator],
        pre_sweeps: int = 2,
        post_sweeps: int = 2,
        jacobi_weight: float = 0.8,
        singular: bool = False,
        smoother: str = "jacobi",
    ):
        if not ops:
            raise ValueError("need at least one level")
        if smoother not in ("jacobi", "rbgs", "sgs"):
            raise ValueError("smoother must be 'jacobi', 'rbgs', or 'sgs'")
        self.ops = ops
        self.pre = pre_sweeps
        self.post = post_sweeps
        self.omega = jacobi_weight
        self.singular = singular
        self.smoother = smoother
        self.ymode = ops[0].ymode
        self._tmp = [np.empty(op.shape) for op in ops]
        self._res = [np.empty(op.shape) for op in ops]
        self._rhs = [np.empty(op.shape) for op in ops]
        self._sol = [np.empty(op.shape) for op in ops]
        self._coarse_inv: Optional[np.ndarray] = None

    # -- pieces ----------------------------------------------------------

    DENSE_COARSE_CAP = 256

    def _coarse_solve(self, b: np.ndarray) -> np.ndarray:
        op = self.ops[-1]
        n = int(np.prod(op.shape))
        if n > self.DENSE_COARSE_CAP:
            # bigger leftover grids (odd dimensions stopped the chain):
            # a fixed stack of symmetric GS pairs is cheaper than a dense
            # factorization and plenty for a preconditioner cycle
            x = np.zeros(op.shape)
            invh2 = 1.0 / op.h ** 2
            for _ in range(12):
                _stencils.sgs_sweep(x, b, op.diag, op.bx, op.by, op.bz, invh2, False)
                _stencils.sgs_sweep(x, b, op.diag, op.bx, op.by, op.bz, invh2, True)
            if self.singular:
                x -= x.mean()
            return x
        if self._coarse_inv is None:
            A = op.dense_matrix()
            if self.singular:
                scale = float(np.mean(np.abs(np.diag(A)))) or 1.0
                A = A + scale * np.full((n, n), 1.0 / n)
            self._coarse_inv = np.linalg.inv(A)
        x = self._coarse_inv @ b.reshape(-1)
        x = x.reshape(op.shape)
        if self.singular:
            x -= x.mean()
        return x

    def _smooth(self, level: int, x, b, sweeps: int, reverse: bool = False) -> None:
        op = self.ops[level]
        invh2 = 1.0 / op.h ** 2
        if self.smoother == "rbgs":
            colors = (1, 0) if reverse else (0, 1)
            for _ in range(sweeps):
                for color in colors:
                    _stencils.rbgs_sweep(x, b, op.diag, op.bx, op.by, op.bz, invh2, color)
            return
        if self.smoother == "sgs":
            # forward pre-sweeps, backward post-sweeps: symmetric cycle
            for _ in range(sweeps):
                _stencils.sgs_sweep(x, b, op.diag, op.bx, op.by, op.bz, invh2, reverse)
            return
        tmp = self._tmp[level]
        for _ in range(sweeps):
            op.apply(x, tmp)
            x += self.omega * (b - tmp) / op.diag

    def _restrict(self, level: int, fine: np.ndarray, coarse: np.ndarray) -> None:
        if self.ymode == "cell":
            wlo, whi = self._bweights(level)
            _stencils.restrict_cell(fine, coarse, wlo, whi)
        else:
            _stencils.restrict_node_y(fine, coarse)

    def _prolong_add(self, level: int, coarse: np.ndarray, x_fine: np.ndarray) -> None:
        fine = self._tmp[level]
        if self.ymode == "cell":
            wlo, whi = self._bweights(level)
            _stencils.prolong_cell(coarse, fine, wlo, whi)
        else:
            _stencils.prolong_node_y(coarse, fine)
        x_fine += fine

    def _bweights(self, level: int) -> Tuple[float, float]:
        # Dirichlet ghost (wall link present) -> error vanishes at the wall
        # midpoint, weight 1/2; Neumann -> mirror ghost, weight 1.
        op = self.ops[level]
        wlo = 0.5 if op.by[:, 0, :].any() else 1.0
        whi = 0.5 if op.by[:, -1, :].any() else 1.0
        return wlo, whi

    # -- cycles ----------------------------------------------------------

    def vcycle(self, x: np.ndarray, b: np.ndarray, level: int = 0) -> np.ndarray:
        """One V(pre, post) cycle improving x in place; returns x."""
        if level == len(self.ops) - 1:
            x[...] = self._coarse_solve(b)
            return x
        op = self.ops[level]
        self._smooth(level, x, b, self.pre)
        op.apply(x, self._tmp[level])
        res = self._res[level]
        np.subtract(b, self._tmp[level], out=res)
        if self.singular and level == 0:
            res -= res.mean()
        cb = self._rhs[level + 1]
        self._restrict(level, res, cb)
        cx = self._sol[level + 1]
        cx[...] = 0.0
        self.vcycle(cx, cb, level + 1)
        self._prolong_add(level, cx, x)
        self._smooth(level, x, b, self.post, reverse=True)
        if self.singular and level == 0:
            x -= x.mean()
        return x

    def fmg(self, b: np.ndarray) -> np.ndarray:
        """Full-multigrid initial guess followed by one V-cycle per level."""
        rhs = [b]
        for level in range(len(self.ops) - 1):
            cb = np.empty(self.ops[level + 1].shape)
            self._restrict(level, rhs[-1], cb)
            rhs.append(cb)
        x = self._coarse_solve(rhs[-1])
        for level in range(len(self.ops) - 2, -1, -1):
            fine = np.empty(self.ops[level].shape)
            if self.ymode == "cell":
                wlo, whi = self._bweights(level)
                _stencils.prolong_cell(x, fine, wlo, whi)
            else:
                _stencils.prolong_node_y(x, fine)
            x = fine
            self.vcycle(x, rhs[level], level)
        return x

    def precondition(self, r: np.ndarray) -> np.ndarray:
        """One V-cycle from a zero start (linear in r)."""
        z = np.zeros_like(r)
        return self.vcycle(z, r)
