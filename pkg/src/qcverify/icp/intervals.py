"""Outward-rounded interval arithmetic for the branch-and-prune search.

Every operation widens its result by one ulp per endpoint (plus a small
absolute pad for the libm-backed trig functions), so interval
enclosures remain sound and an exhausted search genuinely proves
unsatisfiability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

INF = math.inf
_TRIG_PAD = 1e-15


def _down(x: float) -> float:
    return x if x == -INF or x == INF else math.nextafter(x, -INF)


def _up(x: float) -> float:
    return x if x == -INF or x == INF else math.nextafter(x, INF)


@dataclass(frozen=True, slots=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    def width(self) -> float:
        return self.hi - self.lo

    def mid(self) -> float:
        if self.lo == -INF and self.hi == INF:
            return 0.0
        if self.lo == -INF:
            return self.hi - 1.0
        if self.hi == INF:
            return self.lo + 1.0
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def is_point(self) -> bool:
        return self.lo == self.hi


ENTIRE = Interval(-INF, INF)


def point(x: float) -> Interval:
    return Interval(x, x)


def make(lo: float, hi: float) -> Interval:
    return Interval(lo, hi)


def add(a: Interval, b: Interval) -> Interval:
    return Interval(_down(a.lo + b.lo), _up(a.hi + b.hi))


def sub(a: Interval, b: Interval) -> Interval:
    return Interval(_down(a.lo - b.hi), _up(a.hi - b.lo))


def neg(a: Interval) -> Interval:
    return Interval(-a.hi, -a.lo)


def _mul_bound(x: float, y: float) -> float:
    # IEEE: inf * 0 is nan; interval convention treats it as 0
    if (x == 0.0 and (y == INF or y == -INF)) or (y == 0.0 and (x == INF or x == -INF)):
        return 0.0
    return x * y


def mul(a: Interval, b: Interval) -> Interval:
    products = [
        _mul_bound(a.lo, b.lo),
        _mul_bound(a.lo, b.hi),
        _mul_bound(a.hi, b.lo),
        _mul_bound(a.hi, b.hi),
    ]
    return Interval(_down(min(products)), _up(max(products)))


def inverse(a: Interval) -> Interval:
    if a.lo <= 0.0 <= a.hi:
        return ENTIRE
    return Interval(_down(1.0 / a.hi), _up(1.0 / a.lo))


def div(a: Interval, b: Interval) -> Interval:
    if b.lo <= 0.0 <= b.hi:
        return ENTIRE
    return mul(a, inverse(b))


def intersect(a: Interval, b: Interval) -> Interval | None:
    lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
    if lo > hi:
        return None
    return Interval(lo, hi)


def hull(a: Interval, b: Interval) -> Interval:
    return Interval(min(a.lo, b.lo), max(a.hi, b.hi))


_TWO_PI = 2.0 * math.pi
PI_INTERVAL = Interval(_down(math.pi), _up(math.pi))


def sin(a: Interval) -> Interval:
    if a.width() >= _TWO_PI or a.lo == -INF or a.hi == INF:
        return Interval(-1.0, 1.0)
    lo = math.sin(a.lo)
    hi = math.sin(a.hi)
    values = [lo, hi]
    # critical points at pi/2 + k*pi
    k_min = math.ceil((a.lo - math.pi / 2) / math.pi)
    k_max = math.floor((a.hi - math.pi / 2) / math.pi)
    for k in range(k_min, k_max + 1):
        values.append(1.0 if k % 2 == 0 else -1.0)
    out_lo = max(-1.0, _down(min(values) - _TRIG_PAD))
    out_hi = min(1.0, _up(max(values) + _TRIG_PAD))
    return Interval(out_lo, out_hi)


def cos(a: Interval) -> Interval:
    if a.width() >= _TWO_PI or a.lo == -INF or a.hi == INF:
        return Interval(-1.0, 1.0)
    values = [math.cos(a.lo), math.cos(a.hi)]
    k_min = math.ceil(a.lo / math.pi)
    k_max = math.floor(a.hi / math.pi)
    for k in range(k_min, k_max + 1):
        values.append(1.0 if k % 2 == 0 else -1.0)
    out_lo = max(-1.0, _down(min(values) - _TRIG_PAD))
    out_hi = min(1.0, _up(max(values) + _TRIG_PAD))
    return Interval(out_lo, out_hi)


def asin_range(target: Interval) -> Interval:
    """Principal-branch preimage of sin over [-pi/2, pi/2]."""
    lo = math.asin(max(-1.0, min(1.0, target.lo)))
    hi = math.asin(max(-1.0, min(1.0, target.hi)))
    return Interval(_down(lo - _TRIG_PAD), _up(hi + _TRIG_PAD))


def acos_range(target: Interval) -> Interval:
    """Principal-branch preimage of cos over [0, pi] (decreasing)."""
    lo = math.acos(max(-1.0, min(1.0, target.hi)))
    hi = math.acos(max(-1.0, min(1.0, target.lo)))
    return Interval(_down(lo - _TRIG_PAD), _up(hi + _TRIG_PAD))
