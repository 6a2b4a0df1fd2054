"""Exception hierarchy shared by all cmpg modules."""


class CmpgError(Exception):
    """Base class for all domain errors raised by this package."""


class GameFormatError(CmpgError):
    """Game or strategy document is syntactically or semantically invalid.

    ``location`` names the offending field/transition when known.
    """

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        if location:
            message = f"{message} (at {location})"
        super().__init__(message)


class SupportError(CmpgError):
    """A distribution puts mass on an action outside the legal action set."""


class UnichainError(CmpgError):
    """An induced Markov chain has more than one recurrent class."""


class IterationLimitError(CmpgError):
    """An iterative solver exceeded its iteration cap without converging."""


class NodeBudgetError(CmpgError):
    """Branch-and-bound search exceeded its node budget before certifying
    optimality."""


class InconsistentOracleError(CmpgError):
    """A comparison oracle returned answers inconsistent with any fixed
    real number."""
