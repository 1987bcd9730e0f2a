"""Exception hierarchy shared by all modules."""


class SquidTipError(Exception):
    """Base class for all errors raised by the package."""


class ParameterError(SquidTipError, ValueError):
    """Physical parameters outside their valid domain."""


class DiscretizationError(SquidTipError, ValueError):
    """Grid too coarse, too small, or not containing both wells."""


class NumericalError(SquidTipError, RuntimeError):
    """Eigensolver or integrator failed to meet its accuracy contract."""


class ParityError(NumericalError):
    """An eigenstate is neither even nor odd about the half-flux point."""


class BasisError(SquidTipError, ValueError):
    """Two eigenbases cannot be related (different grids or truncations)."""


class StepSizeError(NumericalError):
    """Time step too coarse for the direct integrator."""


class EstimationError(NumericalError):
    """Not enough signal in a trajectory to estimate a period."""


class DesignError(NumericalError):
    """Requested rotation cannot be reached within the pulse budget."""

    def __init__(self, message: str, max_theta: float):
        super().__init__(message)
        self.max_theta = max_theta


class ConfigError(SquidTipError, ValueError):
    """Malformed or invalid run configuration."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.key = key


class PreconditionError(SquidTipError, ValueError):
    """Input lacks data an operation depends on (e.g. parity labels)."""
