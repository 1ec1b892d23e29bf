"""Exact rationals extended with +/- infinity.

Bounds are either a ``Fraction`` or ``math.inf``; the two compare correctly
against each other, so no wrapper type is needed.
"""
from __future__ import annotations

import math
import re
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Union

INF = math.inf

ExtRational = Union[Fraction, float]

_RATIO = re.compile(r"^\s*([+-]?\d+)\s*/\s*(\d+)\s*$")


def parse_rational(value) -> Fraction:
    """Parse ``int``, ``"p/q"``, ``"12"`` or a finite decimal like ``"0.25"``.

    Floats are refused: they are almost never the value the user meant.
    """
    if isinstance(value, bool):
        raise ValueError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise ValueError(f"float {value!r} is not accepted; write it as a string or p/q")
    if not isinstance(value, str):
        raise ValueError(f"not a rational: {value!r}")
    m = _RATIO.match(value)
    if m:
        den = int(m.group(2))
        if den == 0:
            raise ValueError(f"zero denominator in {value!r}")
        return Fraction(int(m.group(1)), den)
    try:
        d = Decimal(value.strip())
    except InvalidOperation:
        raise ValueError(f"not a rational: {value!r}") from None
    if not d.is_finite():
        raise ValueError(f"not a finite rational: {value!r}")
    return Fraction(d)


def parse_ext(value) -> ExtRational:
    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "infinity"):
        return INF
    if isinstance(value, float) and math.isinf(value):
        return value
    return parse_rational(value)


def fmt_ext(value: ExtRational) -> str:
    """Render as ``"p/q"``, ``"p"``, ``"inf"`` or ``"-inf"``."""
    if isinstance(value, float):
        if value == INF:
            return "inf"
        if value == -INF:
            return "-inf"
        raise ValueError(f"finite float {value!r} has no exact rendering")
    return str(Fraction(value))


def is_inf(value: ExtRational) -> bool:
    return isinstance(value, float) and math.isinf(value)
