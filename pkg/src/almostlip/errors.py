"""Exception hierarchy. Everything derives from :class:`AlmostLipError`."""


class AlmostLipError(Exception):
    pass


class DomainError(AlmostLipError, ValueError):
    """Argument outside the mathematical domain of a function."""


class InsufficientDataError(AlmostLipError, ValueError):
    pass


class InvalidMetricError(AlmostLipError, ValueError):
    pass


class OracleTooLargeError(AlmostLipError, ValueError):
    pass


class OracleUnavailableError(AlmostLipError, ValueError):
    pass


class DegenerateInputError(AlmostLipError, ValueError):
    pass


class ConditioningError(AlmostLipError, RuntimeError):
    """Rejection sampler acceptance rate collapsed."""


class UsageError(AlmostLipError, ValueError):
    pass


class InvariantViolation(AlmostLipError, RuntimeError):
    """A constructed object failed its own post-construction check."""
