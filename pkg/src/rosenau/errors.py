"""Domain errors raised by the toolkit."""

from __future__ import annotations


class RosenauError(ValueError):
    """Base class for every domain error; the CLI maps it to exit status 1."""


class NonConvexFlux(RosenauError):
    pass


class BadInterval(RosenauError):
    pass


class NegativeAlpha(RosenauError):
    pass


class OutOfInterval(RosenauError):
    pass


class AlphaBelowHalf(RosenauError):
    pass


class ZeroDelta(RosenauError):
    pass


class NonFiniteState(RosenauError):
    pass


class InvalidConfig(RosenauError):
    pass


class RadicandNegative(RosenauError):
    pass


class BracketFailure(RosenauError):
    pass
