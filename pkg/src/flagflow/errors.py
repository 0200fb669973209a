"""Exception hierarchy for flagflow."""


class FlagFlowError(Exception):
    """Base class for all errors raised by this package."""


class NonSquareInput(FlagFlowError, ValueError):
    pass


class SpecMismatch(FlagFlowError, ValueError):
    pass


class ClusterAmbiguity(FlagFlowError):
    """Eigenvalue clustering did not produce a consistent Jordan structure."""


class NotHyperbolic(FlagFlowError):
    """Complex or defective spectrum where a real-diagonalizable element was required."""


class NoPositiveRoot(FlagFlowError):
    """The hyperbolic part vanishes in every factor, so there is no decay rate."""


class SingularBasis(FlagFlowError, ValueError):
    pass


class NotOnComponent(FlagFlowError):
    pass


class InconsistentProfile(FlagFlowError, ValueError):
    pass


class EmptyFiber(FlagFlowError):
    pass


class StepTooCoarse(FlagFlowError):
    """Richardson comparison of the monodromy failed at the requested step count."""


class DimensionTooLarge(FlagFlowError):
    pass


class ConfigError(FlagFlowError, ValueError):
    pass
