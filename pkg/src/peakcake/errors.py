"""Exception hierarchy for peakcake."""


class CakeError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CakeError, ValueError):
    """An argument lies outside the cake or outside the allowed range."""


class NonNormalizable(DomainError):
    """No positive slope brings the density's total mass to 1."""


class CoverageFailed(DomainError):
    """The agents' supports leave part of the cake unwanted."""


class Unreachable(CakeError):
    """A cut query asked for more value than remains to the right."""


class RecoveryError(CakeError):
    """Two quantile answers could not be turned into a valuation."""


class RecoveryAmbiguous(RecoveryError):
    def __init__(self, candidates):
        self.candidates = list(candidates)
        super().__init__(f"{len(self.candidates)} parameter pairs fit the quantiles: {self.candidates}")


class InvalidAllocation(CakeError, ValueError):
    """Pieces overlap or fail to cover [0, 1]."""


class ShapeMismatch(CakeError, ValueError):
    """Instance and allocation disagree on the number of agents."""


class PrereqViolated(CakeError):
    """A mechanism or audit was called on an instance outside its domain."""


class EqualPeaks(PrereqViolated):
    pass


class EmptySegment(CakeError):
    """A positive-length segment has no interested agent."""


class SolverFailure(CakeError):
    """The LP solver did not reach an optimal solution."""


class GenerationFailed(CakeError):
    """Rejection sampling ran out of budget."""
