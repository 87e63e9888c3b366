"""Exact rational backend.

Uses gmpy2.mpq when available (roughly 8x faster on small operands),
falling back to fractions.Fraction. Both types are kept behind the
``rat``/``as_rat``/``parse_rat`` helpers so the rest of the package never
constructs rationals directly.
"""
from __future__ import annotations

from fractions import Fraction

try:
    from gmpy2 import mpq as _mpq

    _HAVE_GMPY2 = True

    def rat(num: int = 0, den: int = 1):
        return _mpq(num, den)

except ImportError:  # pragma: no cover - exercised only without gmpy2
    _HAVE_GMPY2 = False

    def rat(num: int = 0, den: int = 1):
        return Fraction(num, den)


RatType = type(rat(0))

ZERO = rat(0)
ONE = rat(1)


def as_rat(value):
    """Coerce an int, Fraction, mpq or digit string to the backend type."""
    if isinstance(value, RatType):
        return value
    if isinstance(value, (int, Fraction)):
        return rat(value.numerator if isinstance(value, Fraction) else value,
                   value.denominator if isinstance(value, Fraction) else 1)
    if isinstance(value, str):
        return parse_rat(value)
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def parse_rat(text: str):
    """Parse ``p/q`` or ``p`` (exact integers) into a rational."""
    body = text.strip()
    num, slash, den = body.partition("/")
    try:
        if slash:
            return rat(int(num), int(den))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed rational {text!r}") from exc
    try:
        return rat(int(body))
    except ValueError as exc:
        raise ValueError(f"malformed rational {text!r}") from exc


def render_rat(value) -> str:
    """Inverse of parse_rat: ``p/q`` with the ``/q`` dropped for integers."""
    return str(value)
