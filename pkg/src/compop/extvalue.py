"""Nonnegative exact rationals extended with infinity.

Arithmetic follows the conventions of extended-value measure theory:

    0 * inf = 0          x * inf = inf   (x > 0)
    x + inf = inf        x / 0   = inf   (x > 0)
    x / inf = 0          (x finite)
    x ** 0  = 1          for every x, including 0 and inf
    inf ** n = inf       (n >= 1)

0/0 and inf/inf are not given a value: they raise UndefinedOperationError.
Values are immutable; finite values are exact rationals in reduced form.
"""
from __future__ import annotations

from typing import Union

from ._rat import RatType, as_rat, rat, render_rat
from .errors import UndefinedOperationError

_RatLike = Union[int, str, RatType]


class ExtValue:
    """A point of the extended nonnegative half-line [0, inf]."""

    __slots__ = ("_v",)

    def __init__(self, value: "_RatLike | ExtValue | None"):
        if isinstance(value, ExtValue):
            self._v = value._v
            return
        if value is None:
            self._v = None
            return
        if isinstance(value, str) and value.strip() in ("inf", "infinity"):
            self._v = None
            return
        v = as_rat(value)
        if v < 0:
            raise ValueError(f"extended values are nonnegative, got {v}")
        self._v = v

    # -- structure ---------------------------------------------------------

    @property
    def is_infinite(self) -> bool:
        return self._v is None

    @property
    def is_zero(self) -> bool:
        return self._v is not None and self._v == 0

    def as_rat(self):
        """The underlying rational; raises on infinity."""
        if self._v is None:
            raise UndefinedOperationError("infinite value has no rational form")
        return self._v

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: "ExtValue") -> "ExtValue":
        other = _coerce(other)
        if self._v is None or other._v is None:
            return INF
        return ExtValue(self._v + other._v)

    __radd__ = __add__

    def __mul__(self, other: "ExtValue") -> "ExtValue":
        other = _coerce(other)
        if self._v is None:
            return ZERO if other._v == 0 else INF
        if other._v is None:
            return ZERO if self._v == 0 else INF
        return ExtValue(self._v * other._v)

    __rmul__ = __mul__

    def __truediv__(self, other: "ExtValue") -> "ExtValue":
        other = _coerce(other)
        if self._v is None:
            if other._v is None:
                raise UndefinedOperationError("inf/inf is undefined")
            return INF
        if other._v is None:
            return ZERO
        if other._v == 0:
            if self._v == 0:
                raise UndefinedOperationError("0/0 is undefined")
            return INF
        return ExtValue(self._v / other._v)

    def __pow__(self, exponent: int) -> "ExtValue":
        if not isinstance(exponent, int) or exponent < 0:
            raise ValueError("only powers with exponents in Z+ are defined")
        if exponent == 0:
            return ONE
        if self._v is None:
            return INF
        return ExtValue(self._v ** exponent)

    # -- order and identity --------------------------------------------------

    def __eq__(self, other) -> bool:
        if isinstance(other, ExtValue):
            return self._v == other._v
        if isinstance(other, (int, RatType)):
            return self._v is not None and self._v == other
        return NotImplemented

    def __lt__(self, other) -> bool:
        other = _coerce(other)
        if self._v is None:
            return False
        if other._v is None:
            return True
        return self._v < other._v

    def __le__(self, other) -> bool:
        other = _coerce(other)
        return self == other or self < other

    def __gt__(self, other) -> bool:
        return not self <= _coerce(other)

    def __ge__(self, other) -> bool:
        return not self < _coerce(other)

    def __hash__(self):
        return hash(("ExtValue", "inf")) if self._v is None else hash(self._v)

    def __bool__(self) -> bool:
        return self._v is None or self._v != 0

    def __repr__(self) -> str:
        return f"ExtValue({str(self)!r})"

    def __str__(self) -> str:
        return "inf" if self._v is None else render_rat(self._v)

    def __float__(self) -> float:
        return float("inf") if self._v is None else float(self._v)


def _coerce(value) -> ExtValue:
    return value if isinstance(value, ExtValue) else ExtValue(value)


def exv(value: "_RatLike | ExtValue | None") -> ExtValue:
    """Shorthand constructor: exv(3), exv('1/2'), exv(None) == INF."""
    return _coerce(value)


INF = ExtValue(None)
ZERO = ExtValue(rat(0))
ONE = ExtValue(rat(1))


def ext_sum(values) -> ExtValue:
    """Sum of extended values (empty sum is 0)."""
    total = ZERO
    for v in values:
        total = total + v
    return total


def geometric_tail(coeff: ExtValue, ratio, start: int) -> ExtValue:
    """sum_{n >= start} coeff * ratio**n, exactly.

    ratio is a positive rational. Divergent series (ratio >= 1 with a
    nonzero coefficient) evaluate to inf, matching extended-value measure
    arithmetic rather than raising.
    """
    ratio = as_rat(ratio)
    if ratio <= 0:
        raise ValueError("geometric ratio must be positive")
    if coeff.is_zero:
        return ZERO
    if coeff.is_infinite or ratio >= 1:
        return INF
    return ExtValue(coeff.as_rat() * ratio ** start / (1 - ratio))
