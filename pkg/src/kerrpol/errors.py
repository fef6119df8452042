"""Exception hierarchy.

Every error carries an ``exit_code`` so the command-line front end can map
failures onto its stable contract: 1 for usage/config problems, 2 for
domain or physics violations.
"""


class KerrpolError(Exception):
    exit_code = 2


class DimensionError(KerrpolError, ValueError):
    """Mode index or vector length does not fit the state."""


class ParameterError(KerrpolError, ValueError):
    """A physical parameter is non-finite or out of its allowed range."""

    exit_code = 1


class ConfigError(KerrpolError, ValueError):
    exit_code = 1


class LinearizationError(KerrpolError, ValueError):
    """Linearized Stokes propagation requested around a zero mean field."""


class UndefinedReferenceError(KerrpolError, ValueError):
    """The shot-noise reference |<S3>| vanishes."""


class TruncationError(KerrpolError, ValueError):
    """Fock truncation too small for the requested amplitude."""


class InfeasibleTargetError(KerrpolError, ValueError):
    """Calibration target cannot be reached under the configured losses."""


class CorrectionError(KerrpolError, ValueError):
    """Input lies below a noise or loss floor and cannot be corrected."""
