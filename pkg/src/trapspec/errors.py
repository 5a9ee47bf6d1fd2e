"""Exception hierarchy. The CLI maps these onto exit codes."""


class TrapspecError(Exception):
    """Base class for all library errors."""


class DomainError(TrapspecError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigError(TrapspecError, ValueError):
    """Invalid construction parameters or run configuration (CLI exit 2)."""


class NumericError(TrapspecError, RuntimeError):
    """A numerical procedure failed to converge (CLI exit 3).

    ``diagnostics`` carries whatever partial data the caller may want
    (e.g. the scattering-length convergence history).
    """

    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class ResonanceError(NumericError):
    """A quantity sits at a pole (unitarity limit, |a| -> infinity)."""


class GridMismatchError(TrapspecError, ValueError):
    """Two states do not share a quadrature grid; no silent re-gridding."""
