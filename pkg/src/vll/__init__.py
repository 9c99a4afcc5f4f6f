"""Numerical laboratory for a 2-D buoyant flow with vertical viscosity.

Subpackages:
  grid      -- stretched half-plane grid and discrete operators
  fields    -- field/state containers, initial data, projection, wall BCs
  elliptic  -- Neumann pressure solves and the two-part pressure split
  solver    -- inviscid / viscous / linearized time integration
  blayer    -- boundary-layer expansion, inner profiles, defect fields
  norms     -- conormal norms, energy and maximum-principle audits
  study     -- vanishing-viscosity convergence harness and rate fits
  cli       -- command-line front end
"""

from .errors import BlowupError, CFLError, ConfigError, GridSizingError, SolveError

__version__ = "0.1.0"

__all__ = [
    "BlowupError",
    "CFLError",
    "ConfigError",
    "GridSizingError",
    "SolveError",
    "__version__",
]
