"""Immersed-boundary biofilm simulation with heterogeneous rheology.

Subpackages:

* :mod:`hribm.kernels`   smoothed delta kernels and their identity checks
* :mod:`hribm.grid`      staggered grid, fields, difference operators
* :mod:`hribm.multigrid` geometric multigrid building blocks
* :mod:`hribm.solvers`   implicit viscous and pressure solves
* :mod:`hribm.biofilm`   spring network, spreading, interpolation
* :mod:`hribm.stepper`   the full solution cycle
* :mod:`hribm.rheology`  stress/strain measurement and scenario drivers
* :mod:`hribm.validation` analytic channel flow and convergence factors
* :mod:`hribm.cli`       configuration and command-line entry points
"""

from hribm.params import SimParams

__all__ = ["SimParams"]
__version__ = "0.1.0"
