"""Exception hierarchy. Every error raised by the package derives from GeophaseError."""


class GeophaseError(Exception):
    pass


class DimMismatch(GeophaseError, ValueError):
    pass


class NotHermitian(GeophaseError, ValueError):
    pass


class NotUnitary(GeophaseError, ValueError):
    pass


class NoConvergence(GeophaseError, RuntimeError):
    pass


class BandCrossing(GeophaseError, RuntimeError):
    pass


class NotCyclic(GeophaseError, ValueError):
    pass


# build_frame(require_cyclic=True) on an open path
NotCyclicWhenRequired = NotCyclic


class ExcessLeakage(GeophaseError, RuntimeError):
    pass


class OrthogonalEndpoint(GeophaseError, ValueError):
    pass


class DegeneracyDrift(GeophaseError, RuntimeError):
    pass


class AntipodalStep(GeophaseError, ValueError):
    pass


class OutOfFrameRange(GeophaseError, ValueError):
    pass


class GridMismatch(GeophaseError, ValueError):
    pass


class PositivityBreach(GeophaseError, RuntimeError):
    pass


class NonFinite(GeophaseError, FloatingPointError):
    pass


class SecularResonance(GeophaseError, ValueError):
    pass


class NegativeRate(GeophaseError, ValueError):
    pass


class NegativeDensity(GeophaseError, ValueError):
    pass


class InvalidState(GeophaseError, ValueError):
    pass


class ConfigError(GeophaseError, ValueError):
    """Malformed model configuration; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
