"""Exact fraction parsing and rendering ("p/q" strings)."""
from __future__ import annotations

import re
from fractions import Fraction

_FRAC_RE = re.compile(r"^[+-]?\d+(/\d+)?$")


def parse_fraction(text) -> Fraction:
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    s = str(text).strip()
    if not _FRAC_RE.match(s):
        raise ValueError(f"not a fraction string: {text!r} (expected p/q)")
    num, _, den = s.partition("/")
    if den and int(den) == 0:
        raise ValueError(f"zero denominator in {text!r}")
    return Fraction(int(num), int(den) if den else 1)


def fmt(x) -> str:
    """Render a probability. Fractions become 'p/q', floats use repr."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def to_decimal(x, digits: int = 12) -> str:
    return f"{float(x):.{digits}g}"
