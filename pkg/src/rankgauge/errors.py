"""Exception hierarchy shared by all rankgauge modules."""


class RankGaugeError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(RankGaugeError, ValueError):
    pass


class EmptyInput(InvalidInput):
    pass


class NonFiniteValue(InvalidInput):
    pass


class NonPositiveSigma(InvalidInput):
    pass


class DuplicateId(InvalidInput):
    pass


class TooFewSamples(InvalidInput):
    pass


class TooFewItems(InvalidInput):
    pass


class ConvergenceFailure(RankGaugeError, ArithmeticError):
    pass


class ResolutionExhausted(RankGaugeError):
    """The Monte-Carlo resolution (number of simulated samples) is too coarse.

    Carries ``required_K`` when a rough lower bound on the needed sample count
    is known.
    """

    def __init__(self, message, required_K=None):
        super().__init__(message)
        self.required_K = required_K
