"""Lagrangian side: bacterium network, spreading, and interpolation.

Bacterium positions are carried in units of L (10 um).  Hookean links
connect every pair of bacteria closer than the connection cutoff at t = 0;
each link's stiffness is the force constant F_max divided by its rest
length, so all links snap back with the same maximum force scale.

Unit convention for Lagrangian forces: one code unit of force equals
f0 * L^3 / d0^3 newtons (the force a unit Eulerian force density exerts
over one Lagrangian volume element).  With that unit, the spreading rule
f = (1/d0^3) sum F delta(x - X, omega) yields the force density in f0
units exactly, and the plate traction F/(d0^3 A) converts to pascals by
the factor f0 * L.  Configured force constants are given in newtons and
divided by the unit on construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

from hribm import _stencils
from hribm.grid import GridSpec
from hribm.params import SimParams, lagrangian_force_unit

MICRONS_PER_LENGTH_UNIT = 10.0


class DuplicatePosition(ValueError):
    """Two bacteria coincide; the network would contain a zero-length link."""


class CoincidentEndpoints(FloatingPointError):
    """Two connected bacteria collapsed onto each other during a run."""


class PackingFailure(RuntimeError):
    """Random sequential adsorption could not reach the requested count."""


@dataclass(frozen=True)
class SpreadParams:
    """Kernel radius and material increments anchored at each bacterium.

    ``rho_b`` is the density increment above water (total peaks at
    rho0 * (1 + rho_b)); ``mu_b`` is the viscosity ceiling in units of
    mu0.  ``F_max`` is the spring force constant in newtons.
    """

    omega: float = 0.033
    mu_b: float = 250.0
    rho_b: float = 0.12
    F_max: float = 1.3223e-9

    def __post_init__(self):
        for name in ("omega", "mu_b", "rho_b", "F_max"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass
class BiofilmState:
    """Positions, rest configuration, and the Hookean link network."""

    X: np.ndarray                  # (N, 3) current positions, units of L
    X0: np.ndarray                 # (N, 3) rest positions
    springs_i: np.ndarray          # (M,) first endpoint (i < j)
    springs_j: np.ndarray          # (M,) second endpoint
    rest_length: np.ndarray        # (M,)
    stiffness: np.ndarray          # (M,) k_ij in code force units per L
    adhered_top: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    adhered_bottom: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    d0: float = 0.159

    @property
    def n_bacteria(self) -> int:
        return self.X.shape[0]

    @property
    def n_springs(self) -> int:
        return self.springs_i.shape[0]

    def copy(self) -> "BiofilmState":
        return BiofilmState(
            X=self.X.copy(),
            X0=self.X0.copy(),
            springs_i=self.springs_i.copy(),
            springs_j=self.springs_j.copy(),
            rest_length=self.rest_length.copy(),
            stiffness=self.stiffness.copy(),
            adhered_top=self.adhered_top.copy(),
            adhered_bottom=self.adhered_bottom.copy(),
            d0=self.d0,
        )

    def mobile_mask(self) -> np.ndarray:
        """True for bacteria whose spring loads act on the fluid."""
        mask = np.ones(self.n_bacteria, dtype=bool)
        mask[self.adhered_top] = False
        mask[self.adhered_bottom] = False
        return mask


# ---------------------------------------------------------------------------
# network construction
# ---------------------------------------------------------------------------

def _cell_list_pairs(X: np.ndarray, cutoff: float, periodic_extent=None):
    """All index pairs (i < j) with |X_i - X_j| <= cutoff via a uniform cell list."""
    n = X.shape[0]
    if n < 2 or cutoff <= 0.0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    lo = X.min(axis=0) - 1e-12
    cell = np.maximum(np.floor((X - lo) / cutoff).astype(np.int64), 0)
    order = np.lexsort((cell[:, 2], cell[:, 1], cell[:, 0]))
    buckets: dict = {}
    for idx in order:
        buckets.setdefault(tuple(cell[idx]), []).append(idx)
    out_i, out_j = [], []
    c2 = cutoff * cutoff
    offsets = [(a, b, c) for a in (-1, 0, 1) for b in (-1, 0, 1) for c in (-1, 0, 1)]
    for key, members in buckets.items():
        for off in offsets:
            nb = (key[0] + off[0], key[1] + off[1], key[2] + off[2])
            if nb not in buckets:
                continue
            if nb < key:
                continue
            others = buckets[nb]
            for a_pos, a in enumerate(members):
                start = a_pos + 1 if nb == key else 0
                for b in others[start:]:
                    d = X[a] - X[b]
                    dist2 = float(d @ d)
                    if dist2 <= c2:
                        i, j = (a, b) if a < b else (b, a)
                        out_i.append(i)
                        out_j.append(j)
    if not out_i:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    pairs = np.unique(np.stack([out_i, out_j], axis=1), axis=0)
    return pairs[:, 0], pairs[:, 1]


def build_connections(
    X0: np.ndarray,
    cutoff: float,
    f_max_newtons: float,
    params: SimParams,
    d0: float = 0.159,
) -> BiofilmState:
    """Link every pair of rest positions within ``cutoff`` of each other.

    Stiffness of link (i, j) is F_max / rest_length (F_max converted from
    newtons to code force units, see the module docstring).
    """
    X0 = np.ascontiguousarray(np.asarray(X0, dtype=np.float64))
    si, sj = _cell_list_pairs(X0, cutoff)
    rest = np.linalg.norm(X0[si] - X0[sj], axis=1) if si.size else np.empty(0)
    if si.size and rest.min() < 1e-12:
        k = int(np.argmin(rest))
        raise DuplicatePosition(f"bacteria {si[k]} and {sj[k]} coincide")
    f_max_code = f_max_newtons / lagrangian_force_unit(params, d0)
    stiffness = np.where(rest > 0, f_max_code / rest, 0.0) if si.size else np.empty(0)
    return BiofilmState(
        X=X0.copy(),
        X0=X0,
        springs_i=si,
        springs_j=sj,
        rest_length=rest,
        stiffness=stiffness,
        d0=d0,
    )


def spring_forces(state: BiofilmState) -> np.ndarray:
    """Per-bacterium total Hookean force, code units (newtons / force unit).

    Pairwise force on endpoint i of link (i, j):

        F_i = -k_ij Lambda_ij (X_i - X_j),
        Lambda_ij = (|X_i - X_j| - rest) / |X_i - X_j|

    so a stretched link pulls its endpoints together.  The force-density
    division by d0^3 happens at the spreading and traction stages.
    """
    F = np.zeros_like(state.X)
    if state.n_springs == 0:
        return F
    d = state.X[state.springs_i] - state.X[state.springs_j]
    length = np.linalg.norm(d, axis=1)
    if length.min() < 1e-12:
        k = int(np.argmin(length))
        raise CoincidentEndpoints(
            f"bacteria {state.springs_i[k]} and {state.springs_j[k]} coincide"
        )
    lam = (length - state.rest_length) / length
    pair = (state.stiffness * lam)[:, None] * d
    np.add.at(F, state.springs_i, -pair)
    np.add.at(F, state.springs_j, pair)
    return F


def classify_adhesion(X: np.ndarray, gamma: float, y_L: float):
    """Index sets of bacteria adhered to the top and bottom walls."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    y = np.asarray(X)[:, 1]
    top = np.nonzero(y >= y_L - gamma)[0]
    bottom = np.nonzero(y <= gamma)[0]
    return top, bottom


# ---------------------------------------------------------------------------
# Lagrangian -> Eulerian spreading
# ---------------------------------------------------------------------------

def spread_force(
    state: BiofilmState,
    omega: float,
    grid: GridSpec,
    forces: Optional[np.ndarray] = None,
):
    """Spread spring force densities to the staggered force field.

    f = (1/d0^3) sum_s F_s delta(x - X_s, omega), each component landing
    on its own face lattice.  Bacteria adhered to either wall are skipped:
    their loads act on the plates, not on the fluid.  Support sticking out
    of the y walls is truncated without renormalization.
    """
    if forces is None:
        forces = spring_forces(state)
    nx, ny, nz = grid.shape
    fu = np.zeros((nx, ny, nz))
    fv = np.zeros((nx, ny + 1, nz))
    fw = np.zeros((nx, ny, nz))
    mask = state.mobile_mask()
    if not mask.any():
        return fu, fv, fw
    pos = np.ascontiguousarray(state.X[mask])
    F = forces[mask]
    scale = 1.0 / state.d0 ** 3
    _stencils.spread(pos, np.ascontiguousarray(F[:, 0]), fu, grid.h, omega, 0.0, 0.5, 0.5, scale)
    _stencils.spread(pos, np.ascontiguousarray(F[:, 1]), fv, grid.h, omega, 0.5, 0.0, 0.5, scale)
    _stencils.spread(pos, np.ascontiguousarray(F[:, 2]), fw, grid.h, omega, 0.5, 0.5, 0.0, scale)
    return fu, fv, fw


def spread_material_fields(
    state: BiofilmState,
    spread_params: SpreadParams,
    grid: GridSpec,
):
    """Cell-centered density and viscosity from the bacterium halos.

    mu  = min(1 + sum omega^3 (mu_b - 1) delta, mu_b)   in  [1, mu_b]
    rho = 1 + min(sum omega^3 rho_b delta, rho_b)       in  [1, 1 + rho_b]
    """
    nx, ny, nz = grid.shape
    omega = spread_params.omega
    halo = np.zeros((nx, ny, nz))
    pos = np.ascontiguousarray(state.X)
    ones = np.ones(state.n_bacteria)
    _stencils.spread(pos, ones, halo, grid.h, omega, 0.5, 0.5, 0.5, omega ** 3)
    mu = np.minimum(1.0 + (spread_params.mu_b - 1.0) * halo, spread_params.mu_b)
    rho = 1.0 + np.minimum(spread_params.rho_b * halo, spread_params.rho_b)
    return rho, mu


def interpolate_velocity(
    u: np.ndarray,
    v: np.ndarray,
    w: np.ndarray,
    X: np.ndarray,
    grid: GridSpec,
    walls: Tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0),
) -> np.ndarray:
    """Grid-kernel interpolation U_s = sum u delta(x - X_s, h) h^3.

    Uses the grid-width kernel (the spreading kernel's radius omega plays
    no role here).  Near the walls the tangential components are read
    through mirrored ghosts built from the wall velocities in ``walls``.
    """
    pos = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if pos.ndim == 1:
        pos = pos[None, :]
    out = np.empty_like(pos)
    ubx, ubz, utx, utz = walls
    _stencils.interpolate(pos, u, v, w, grid.h, ubx, ubz, utx, utz, out)
    return out


# ---------------------------------------------------------------------------
# synthetic position data and file IO
# ---------------------------------------------------------------------------

def generate_synthetic_biofilm(
    extents: Sequence[float],
    d0: float = 0.159,
    min_separation: float = 0.13,
    seed: int = 0,
    y_margin: float = 0.0,
    count: Optional[int] = None,
    max_attempts_per_point: int = 2000,
    y_strata: int = 0,
) -> np.ndarray:
    """Random sequential adsorption at mean Lagrangian density 1/d0^3.

    Draws uniform positions in the box, rejecting any closer than
    ``min_separation`` to an accepted point, until count = volume/d0^3
    points are placed.  The y coordinate is stratified (``y_strata``
    slabs, auto-chosen by default) with proportional quotas so thin
    horizontal bands - in particular the wall-adhesion bands - carry
    nearly the same population for every seed; within a slab the draw is
    uniform, so the density stays uniform.  ``y_margin`` keeps points
    away from the walls (use 2*omega when adhesion is not wanted).
    Deterministic in ``seed``.
    """
    ex, ey, ez = (float(e) for e in extents)
    if min_separation >= d0 and count is None:
        raise ValueError("min_separation must be below the mean spacing d0")
    n = count if count is not None else int(round(ex * ey * ez / d0 ** 3))
    span = ey - 2 * y_margin
    if span <= 0:
        raise ValueError("y_margin leaves no room for bacteria")
    rng = np.random.default_rng(seed)
    if y_strata <= 0:
        y_strata = max(1, min(n // 8, int(round(span / 0.04))))
    # proportional quotas by largest remainder, then a fixed shuffle
    quota = np.full(y_strata, n // y_strata)
    quota[: n - int(quota.sum())] += 1
    slots = np.repeat(np.arange(y_strata), quota)
    slots = slots[rng.permutation(n)]
    dy = span / y_strata
    pts = np.empty((n, 3))
    placed = 0
    attempts_left = max_attempts_per_point * n
    min2 = min_separation ** 2
    while placed < n:
        if attempts_left <= 0:
            raise PackingFailure(
                f"placed {placed}/{n} points before exhausting the rejection budget; "
                "lower min_separation or the target count"
            )
        attempts_left -= 1
        cand = rng.random(3)
        cand[0] *= ex
        stratum = slots[placed]
        cand[1] = y_margin + (stratum + cand[1]) * dy
        cand[2] *= ez
        if placed:
            d = pts[:placed] - cand
            if (np.einsum("ij,ij->i", d, d) < min2).any():
                continue
        pts[placed] = cand
        placed += 1
    return pts


def mean_nearest_neighbor_distance(X: np.ndarray) -> float:
    d = X[:, None, :] - X[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
    np.fill_diagonal(dist, np.inf)
    return float(dist.min(axis=1).mean())


def write_positions(path, X: np.ndarray, header: str = "") -> None:
    """Plain-text position file: one `x,y,z` line per bacterium, micrometers."""
    lines = []
    if header:
        for h in header.splitlines():
            lines.append(f"# {h}")
    for p in np.asarray(X) * MICRONS_PER_LENGTH_UNIT:
        lines.append(f"{p[0]:.9g},{p[1]:.9g},{p[2]:.9g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_positions(path) -> np.ndarray:
    """Read a micrometer position file back into units of L."""
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"malformed position line: {line!r}")
        rows.append([float(p) for p in parts])
    return np.asarray(rows, dtype=np.float64) / MICRONS_PER_LENGTH_UNIT
