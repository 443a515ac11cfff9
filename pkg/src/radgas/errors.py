"""Exception hierarchy shared by the simulator modules."""


class RadgasError(Exception):
    """Base class for all errors raised by this package."""


class GridError(RadgasError, ValueError):
    """Invalid grid dimensions or mismatched field shapes."""


class GridMismatch(GridError):
    pass


class FluxError(RadgasError, ValueError):
    pass


class EndpointError(RadgasError, ValueError):
    """Endpoint states violate ``u_minus < u_plus <= 0``."""


class BisectionFailed(RadgasError):
    pass


class SingularDerivative(RadgasError):
    pass


class TruncationTooShort(RadgasError):
    pass


class WindowEmpty(RadgasError, ValueError):
    pass


class NonPositiveValue(RadgasError, ValueError):
    pass


class GridTooLarge(RadgasError, ValueError):
    pass


class NonPeriodicGrid(RadgasError, ValueError):
    pass


class NaNDetected(RadgasError, FloatingPointError):
    def __init__(self, t):
        super().__init__(f"non-finite values detected at t={t!r}")
        self.t = t


class StepTooLarge(RadgasError, ValueError):
    pass


class AmplitudeTooLarge(RadgasError, ValueError):
    pass


class TruncationError(RadgasError, ValueError):
    """Sampled field does not decay before the edge of the domain."""


class ConfigError(RadgasError):
    pass


class ParseError(ConfigError):
    def __init__(self, lineno, msg):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class ValidationError(ConfigError):
    pass


class CheckpointError(RadgasError):
    pass


class BadMagic(CheckpointError):
    pass


class ShapeMismatch(CheckpointError):
    pass


class TruncatedFile(CheckpointError):
    pass
