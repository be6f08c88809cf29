#!/usr/bin/env python3
"""
Error families for the bilateral-gamma toolkit

Every exception raised by the library derives from BGChaosError. Each family
carries the process exit code that run_experiment.py uses when the error
reaches the command line.
"""


class BGChaosError(Exception):
    """Base class for all library errors"""
    exit_code = 1


class ConfigInvalid(BGChaosError):
    """Missing files, malformed flags, JSON or kernel files"""
    exit_code = 2


# Parameter family

class ParameterError(BGChaosError, ValueError):
    exit_code = 3


class NonPositiveParameter(ParameterError):
    pass


class OrderOutOfRange(ParameterError):
    pass


class DomainError(ParameterError):
    pass


class DimMismatch(ParameterError):
    pass


class IndexOutOfRange(ParameterError):
    pass


class NotSymmetric(ParameterError):
    pass


class DiagonalNotZero(ParameterError):
    pass


# Bound family

class BoundError(BGChaosError):
    exit_code = 4


class BoundInapplicable(BoundError):
    """The standing assumption of the bound (e.g. a1*a2 > 1 + |a1 - a2|) fails"""
    pass


class NegativeRadicand(BoundError):
    """The second-moment expression under a square root came out negative"""
    pass


class MeanNotZero(BoundError):
    pass


# Numerical family

class NumericalError(BGChaosError, ArithmeticError):
    exit_code = 5


class EigenFailure(NumericalError):
    pass


class GridTooCoarse(NumericalError):
    pass


class QuadratureNotConverged(NumericalError):
    pass


class RouteMismatch(NumericalError):
    """Two independent evaluation routes of the same quantity disagree"""
    pass


# Sampling family

class SamplingError(BGChaosError):
    exit_code = 6


class TooFewSamples(SamplingError):
    pass


class EmptyInput(SamplingError):
    pass


class EmptyDictionary(SamplingError):
    pass
