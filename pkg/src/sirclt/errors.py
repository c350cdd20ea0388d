"""Exception types raised across the package."""


class SirCltError(Exception):
    """Base class for all package errors."""


class BranchFailure(SirCltError, ValueError):
    """Stieltjes transform requested on the spectral cut."""


class SingularDerivative(SirCltError, ArithmeticError):
    pass


class NonConvergent(SirCltError, ArithmeticError):
    """Node doubling changed a quadrature result by more than the tolerance."""

    def __init__(self, msg, value=None, error=None):
        super().__init__(msg)
        self.value = value
        self.error = error


class IllConditioned(SirCltError, ArithmeticError):
    pass


class NoConvergence(SirCltError, ArithmeticError):
    pass


class NegativeVariance(SirCltError, ArithmeticError):
    pass


class ZeroSignature(SirCltError, ValueError):
    pass


class ZeroReceiver(SirCltError, ValueError):
    pass


class SolveFailure(SirCltError, ArithmeticError):
    pass


class DegenerateKrylov(SirCltError, ArithmeticError):
    """Krylov sequence lost rank before reaching the requested dimension.

    ``basis`` holds the orthonormal columns found so far.
    """

    def __init__(self, msg, basis=None, rank=0):
        super().__init__(msg)
        self.basis = basis
        self.rank = rank


class EigFailure(SirCltError, ArithmeticError):
    pass


class XNotSpread(SirCltError, ValueError):
    """Weight vector too concentrated for the eigenvector CLT."""


class PredictionUnavailable(SirCltError, ValueError):
    pass


class DegenerateVariance(SirCltError, ValueError):
    pass


class ConfigError(SirCltError, ValueError):
    pass


class TrialFailure(SirCltError):
    """A single Monte Carlo trial failed; carries seed and trial index."""

    def __init__(self, seed, trial, cause):
        super().__init__(f"trial {trial} (seed {seed}) failed: {cause!r}")
        self.seed = seed
        self.trial = trial
        self.cause = cause
