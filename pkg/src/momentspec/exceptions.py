"""Exception hierarchy for momentspec."""


__all__ = [
    "SpectralEstimationError",
    "DimensionMismatch",
    "NotHermitian",
    "NotPositiveDefinite",
    "NotPSD",
    "ConvergenceFailure",
    "InvalidFilterBank",
    "NotSchurStable",
    "RankDeficientB",
    "NotReachable",
    "GridMismatch",
    "NotStable",
    "DimensionMismatchWithTheory",
    "NotAdmissible",
    "SolverDivergence",
    "Infeasible",
    "MaxIterations",
    "NotCompanionForm",
    "NormalizationFailure",
    "DegreeMismatch",
    "ConfigError",
]


class SpectralEstimationError(Exception):
    """Base class for all errors raised by momentspec."""


class DimensionMismatch(SpectralEstimationError, ValueError):
    pass


class NotHermitian(SpectralEstimationError, ValueError):
    pass


class NotPositiveDefinite(SpectralEstimationError, ValueError):
    pass


class NotPSD(SpectralEstimationError, ValueError):
    pass


class ConvergenceFailure(SpectralEstimationError, RuntimeError):
    pass


# filter bank assumptions
class InvalidFilterBank(SpectralEstimationError, ValueError):
    pass


class NotSchurStable(InvalidFilterBank):
    pass


class RankDeficientB(InvalidFilterBank):
    pass


class NotReachable(InvalidFilterBank):
    pass


class GridMismatch(SpectralEstimationError, ValueError):
    pass


class NotStable(SpectralEstimationError, ValueError):
    pass


class DimensionMismatchWithTheory(SpectralEstimationError, RuntimeError):
    """Computed rank of Range Gamma differs from m(2n - m)."""


class NotAdmissible(SpectralEstimationError, ValueError):
    """G* Lambda G fails to be positive definite somewhere on the grid."""


class SolverDivergence(SpectralEstimationError, RuntimeError):
    pass


class Infeasible(SpectralEstimationError, ValueError):
    pass


class MaxIterations(SpectralEstimationError, RuntimeError):
    pass


class NotCompanionForm(SpectralEstimationError, ValueError):
    pass


class NormalizationFailure(SpectralEstimationError, RuntimeError):
    pass


class DegreeMismatch(SpectralEstimationError, ValueError):
    pass


class ConfigError(SpectralEstimationError, ValueError):
    pass
