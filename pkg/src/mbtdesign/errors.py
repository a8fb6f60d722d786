"""Exception hierarchy.

Configuration problems derive from :class:`ConfigError`; everything raised
because an intermediate quantity is non-physical beyond repair derives from
:class:`NumericalError`. The CLI maps the two families to distinct exit codes.
"""


class MBDesignError(Exception):
    """Base class for all package errors."""


class ConfigError(MBDesignError, ValueError):
    pass


class NumericalError(MBDesignError, ArithmeticError):
    pass


class NotHermitian(NumericalError):
    pass


class TooNegative(NumericalError):
    pass


class NotUnitary(NumericalError):
    pass


class InvalidState(NumericalError):
    pass


class NonPhysicalChi(NumericalError):
    pass


class SingularCalibration(NumericalError):
    pass


class DimensionMismatch(ConfigError):
    pass


class AngleCountMismatch(ConfigError):
    pass


class LengthMismatch(ConfigError):
    pass


class EmptyCounts(ConfigError):
    pass


class UnsupportedOrder(ConfigError):
    pass


class EmptyFilteredSample(ConfigError):
    pass


class BadProbability(ConfigError):
    pass


class MissingColumn(ConfigError):
    pass


class Unreachable(ConfigError):
    pass


class OddLinkCount(ConfigError):
    pass


class EvenN(ConfigError):
    pass
