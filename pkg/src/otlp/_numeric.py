"""Exact-number helpers: decimal parsing and formatting for Fractions."""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational


def to_fraction(value) -> Fraction:
    """Parse ``value`` as an exact rational.

    Strings are read as written (``"0.98"`` -> ``49/50``). Floats go through
    their shortest repr so that ``0.1`` means one tenth, not the binary
    neighbour of one tenth.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite number: {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise ValueError("empty number")
        try:
            frac = Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a number: {value!r}") from exc
        return frac
    raise TypeError(f"cannot interpret {value!r} as a number")


def format_fraction(value: Fraction) -> str:
    """Render a Fraction as an exact decimal string when one exists."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return repr(float(value))
    digits = max(twos, fives)
    scaled = value.numerator * 10**digits // value.denominator
    sign = "-" if scaled < 0 else ""
    text = str(abs(scaled)).rjust(digits + 1, "0")
    whole, frac = text[:-digits], text[-digits:].rstrip("0")
    return f"{sign}{whole}.{frac}" if frac else f"{sign}{whole}"


def lcm_of_denominators(values) -> int:
    out = 1
    for v in values:
        out = math.lcm(out, Fraction(v).denominator)
    return out


def json_number(value):
    """Fraction -> int when integral, else float; floats pass through."""
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return value.numerator
        return float(value)
    return value
