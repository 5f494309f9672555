"""Exception types raised across the package."""


class GepError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(GepError, ValueError):
    pass


class NotSymmetric(GepError, ValueError):
    pass


class NotSpd(GepError, ValueError):
    """Matrix is not symmetric positive definite (or failed the eigenvalue check)."""


class RankDeficient(GepError, ValueError):
    pass


class NonPositiveDenominator(GepError, ArithmeticError):
    """A clipped B-norm denominator was <= 0; B is not SPD or rho is misconfigured."""


class ConfigInvalid(GepError, ValueError):
    pass


class StreamExhausted(GepError, RuntimeError):
    """The data source cannot supply the rows a draw needs."""


class NotConverged(GepError, RuntimeError):
    pass
