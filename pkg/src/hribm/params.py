"""Reference scales and nondimensional groups.

All field quantities inside the solver are nondimensional: lengths in units
of L, velocities in units of u0, time in units of t0, pressure in P0,
viscosity in mu0, density in rho0, Eulerian force density in f0.  The four
groups Re, St, C1, C2 are always derived from the scales, never set
directly, so a parameter set can never be internally inconsistent.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

# Reference scales shared by every production scenario (water at the
# 10-micrometer scale; pressure and force-density scales are unity in SI).
WATER_DENSITY = 998.0          # kg/m^3
WATER_VISCOSITY = 1.0e-3       # Pa s
LENGTH_SCALE = 1.0e-5          # m   (1 length unit = 10 um)
TIME_SCALE = 1.0               # s
PRESSURE_SCALE = 1.0           # Pa
FORCE_DENSITY_SCALE = 1.0      # N/m^3


@dataclass(frozen=True)
class SimParams:
    """Scales, the derived nondimensional groups, and the time step.

    ``nu`` is the angular frequency (rad/s) of whatever boundary forcing the
    scenario applies; it is 0 for unforced runs.
    """

    dt: float                      # nondimensional time step (units of t0)
    u0: float                      # velocity scale, m/s
    nu: float = 0.0                # forcing angular frequency, rad/s
    t0: float = TIME_SCALE
    L: float = LENGTH_SCALE
    P0: float = PRESSURE_SCALE
    f0: float = FORCE_DENSITY_SCALE
    mu0: float = WATER_VISCOSITY
    rho0: float = WATER_DENSITY

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        for name in ("u0", "t0", "L", "P0", "f0", "mu0", "rho0"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")

    # The groups are recomputed on access so they can never drift out of
    # sync with the scales they are defined by.
    @property
    def Re(self) -> float:
        return self.rho0 * self.L * self.u0 / self.mu0

    @property
    def St(self) -> float:
        return self.L / (self.t0 * self.u0)

    @property
    def C1(self) -> float:
        return self.P0 / (self.rho0 * self.u0 ** 2)

    @property
    def C2(self) -> float:
        return self.f0 * self.L / (self.rho0 * self.u0 ** 2)

    def with_dt(self, dt: float) -> "SimParams":
        return replace(self, dt=dt)

    # -- unit conversions used by the measurement layer ------------------

    def stress_scale_fluid(self) -> float:
        """Pa per unit of nondimensional mu * du/dy (Newton's viscosity law)."""
        return self.mu0 * self.u0 / self.L

    def velocity_to_si(self, u_hat: float) -> float:
        return u_hat * self.u0

    def time_to_si(self, t_hat: float) -> float:
        return t_hat * self.t0


def lagrangian_force_unit(params: SimParams, d0: float) -> float:
    """Newtons represented by one code unit of Lagrangian force.

    Spring forces are carried in units of f0 * L^3 / d0^3: the force that a
    unit Lagrangian force density exerts over one Lagrangian volume element.
    With this unit the spreading rule f = (1/d0^3) * sum F * delta and the
    plate traction sigma = F/(d0^3 A) * f0 * L are both dimensionally exact.
    """
    return params.f0 * params.L ** 3 / d0 ** 3
