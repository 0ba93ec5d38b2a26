"""Exception hierarchy shared by all staticprop modules."""

import numpy as np


class StaticPropError(Exception):
    """Base class for every error raised by this package."""


# numerics
class NotHermitianInWeight(StaticPropError, ValueError):
    pass


class DecompositionFailure(StaticPropError, np.linalg.LinAlgError):
    pass


class IllConditioned(StaticPropError, np.linalg.LinAlgError):
    pass


class BadInterval(StaticPropError, ValueError):
    pass


# model
class InvalidField(StaticPropError, ValueError):
    pass


class LengthMismatch(StaticPropError, ValueError):
    pass


# block system
class NotPositive(StaticPropError, ValueError):
    pass


class KernelDetected(StaticPropError, ValueError):
    pass


class SpectrumHit(StaticPropError, ValueError):
    pass


# propagators
class GridTooCoarse(StaticPropError, ValueError):
    pass


# absorption / wick
class BadConstants(StaticPropError, ValueError):
    pass


class GapViolated(StaticPropError, ValueError):
    pass


class ContractionViolated(StaticPropError, AssertionError):
    pass


class BoundViolated(StaticPropError, AssertionError):
    pass


class SpectrumNearContour(StaticPropError, ValueError):
    pass


class AngleOutOfRange(StaticPropError, ValueError):
    pass


# cli
class ParseError(StaticPropError, ValueError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class ValidationError(StaticPropError, ValueError):
    pass
