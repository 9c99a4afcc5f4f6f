"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration problems
(including grid sizing) exit 2, numerical failures exit 3.
"""


class ConfigError(ValueError):
    """Invalid configuration: bad key, bad type, or inconsistent values."""


class GridSizingError(ConfigError):
    """The requested grid cannot satisfy the layer-resolution guarantee."""


class CFLError(RuntimeError):
    """Advective CFL bound violated at some step."""


class BlowupError(RuntimeError):
    """Non-finite values detected during time stepping."""


class SolveError(RuntimeError):
    """A linear solve failed or left an unacceptable residual."""
