"""Numerical laboratory for concentrated vortices of the generalized
surface quasi-geostrophic equation.

The package covers four layers of the same story:

* ``pointvortex`` -- the fractional point-vortex dynamics, its conserved
  quantities and trajectory integration;
* ``equilibria`` -- traveling/rotating relative equilibria, Newton solving
  with gauge fixing, nondegeneracy certificates, continuation in the
  fractional order;
* ``plasma`` / ``linop`` -- the radial ground state of the fractional
  plasma problem and the angular-mode spectral analysis of its linearized
  operator;
* ``ansatz`` -- the desingularization approximation built from scaled
  ground states, its error field and the epsilon-scaling law.
"""

from . import ansatz, constants, equilibria, linop, plasma, pointvortex

__all__ = [
    "ansatz",
    "constants",
    "equilibria",
    "linop",
    "plasma",
    "pointvortex",
]

__version__ = "0.1.0"
