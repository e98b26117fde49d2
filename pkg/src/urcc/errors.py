"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid user configuration (CLI exit code 2)."""


class NumericalContractError(RuntimeError):
    """A numerical invariant was violated at run time (CLI exit code 3)."""


class ZeroStrengthError(NumericalContractError):
    """Total strength vanished at a sampled time; the caller should redraw the time."""
