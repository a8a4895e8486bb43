"""Exception hierarchy shared by all fpstates modules."""


class FPStatesError(Exception):
    """Base class; the CLI turns these into machine-readable error records."""


class InvalidParams(FPStatesError, ValueError):
    pass


class EmptySpectrum(FPStatesError, ValueError):
    pass


class MassGapViolation(FPStatesError, ValueError):
    pass


class NotSorted(FPStatesError, ValueError):
    pass


class SpectrumMismatch(FPStatesError, ValueError):
    pass


class IndexOutOfRange(FPStatesError, IndexError):
    pass


class InvalidInterval(FPStatesError, ValueError):
    pass


class QuadratureFailure(FPStatesError, RuntimeError):
    pass


class BelowMassGap(FPStatesError, ValueError):
    pass


class NonPositiveSoftening(FPStatesError, ValueError):
    """Raised when f^(0) has the wrong sign for the requested construction."""


class CutoffMismatch(FPStatesError, ValueError):
    pass


class InsufficientModes(FPStatesError, ValueError):
    pass


class InvalidSubslab(FPStatesError, ValueError):
    pass


class PointOutsideSlab(FPStatesError, ValueError):
    pass


class TooManyModes(FPStatesError, ValueError):
    pass


class ModeMismatch(FPStatesError, ValueError):
    pass


class UnknownPreset(FPStatesError, KeyError):
    pass


class ConfigError(FPStatesError, ValueError):
    pass
