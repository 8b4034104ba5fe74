"""Exact scalar helpers.

Scalars are either ``fractions.Fraction`` (exact backend) or ``float``.
These helpers parse the rational-string wire format, format values back,
and do the small amount of number theory the constructions need.
"""

import math
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence, Union

Scalar = Union[Fraction, float]
Point = tuple


def parse_scalar(value) -> Fraction:
    """Parse ``"p/q"``, an integer, a decimal string or a JSON number exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError(f"not a number: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"not finite: {value!r}")
        return Fraction(Decimal(repr(value)))
    text = str(value).strip()
    try:
        if "/" in text:
            num, den = text.split("/", 1)
            return Fraction(int(num), int(den))
        return Fraction(Decimal(text))
    except (ValueError, ZeroDivisionError, InvalidOperation) as exc:
        raise ValueError(f"not a rational string: {value!r}") from exc


def format_scalar(value: Scalar):
    """Exact values become ``"p/q"`` strings, floats stay floats."""
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, int):
        return str(value)
    return float(value)


def is_exact(values: Iterable) -> bool:
    return all(isinstance(v, (Fraction, int)) and not isinstance(v, bool) for v in values)


def to_float(value: Scalar) -> float:
    return float(value)


def lcm_of_denominators(values: Iterable[Fraction]) -> int:
    return reduce(math.lcm, (Fraction(v).denominator for v in values), 1)


def sup_distance(a: Sequence[Scalar], b: Sequence[Scalar]) -> Scalar:
    """Sup-over-coordinates distance between two points."""
    return max((abs(x - y) for x, y in zip(a, b)), default=0)


def add_points(a: Point, b: Point) -> Point:
    return tuple(x + y for x, y in zip(a, b))


def scale_point(c: Scalar, a: Point) -> Point:
    return tuple(c * x for x in a)


def weighted_sum(weights: Sequence[Scalar], points: Sequence[Point], n: int) -> Point:
    total = [Fraction(0)] * n
    for w, p in zip(weights, points):
        for i in range(n):
            total[i] += w * p[i]
    return tuple(total)


def simplest_between(lo: Fraction, hi: Fraction) -> Fraction:
    """Rational with the smallest denominator strictly inside (lo, hi)."""
    lo, hi = Fraction(lo), Fraction(hi)
    if lo >= hi:
        raise ValueError(f"empty interval ({lo}, {hi})")
    fl = math.floor(lo)
    if fl + 1 < hi:
        return Fraction(fl + 1)
    # Stern-Brocot descent on the fractional parts.
    lo_p, lo_q, hi_p, hi_q = 0, 1, 1, 0
    a, b = lo - fl, hi - fl
    while True:
        med = Fraction(lo_p + hi_p, lo_q + hi_q)
        if med <= a:
            lo_p, lo_q = med.numerator, med.denominator
        elif med >= b:
            hi_p, hi_q = med.numerator, med.denominator
        else:
            return fl + med


def snap(value: Scalar, step: Fraction) -> Fraction:
    """Nearest multiple of ``step`` (ties to even)."""
    return round(Fraction(value) / step) * step
