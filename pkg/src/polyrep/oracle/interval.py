"""Outward-rounded interval arithmetic and axis-aligned boxes.

Every arithmetic step rounds the lower end down and the upper end up with
``math.nextafter``, so the true result of the real operation on any points of
the operands is always enclosed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from ..poly import Polynomial, DimensionMismatch

_INF = math.inf


def _down(v: float) -> float:
    return math.nextafter(v, -_INF)


def _up(v: float) -> float:
    return math.nextafter(v, _INF)


def _lo_of(v) -> float:
    """Largest float not exceeding the exact value ``v``."""
    if isinstance(v, Fraction):
        f = float(v)
        return f if Fraction(f) <= v else _down(f)
    return float(v)


def _hi_of(v) -> float:
    if isinstance(v, Fraction):
        f = float(v)
        return f if Fraction(f) >= v else _up(f)
    return float(v)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("interval endpoint is NaN")
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, v) -> Interval:
        return cls(_lo_of(v), _hi_of(v))

    @classmethod
    def of(cls, v) -> Interval:
        if isinstance(v, Interval):
            return v
        return cls.point(v)

    @property
    def width(self) -> float:
        return _up(self.hi - self.lo)

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, v) -> bool:
        return self.lo <= v <= self.hi

    def __add__(self, other) -> Interval:
        o = Interval.of(other)
        return Interval(_down(self.lo + o.lo), _up(self.hi + o.hi))

    __radd__ = __add__

    def __neg__(self) -> Interval:
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other) -> Interval:
        return self + (-Interval.of(other))

    def __rsub__(self, other) -> Interval:
        return Interval.of(other) - self

    def __mul__(self, other) -> Interval:
        o = Interval.of(other)
        cands = []
        for a in (self.lo, self.hi):
            for b in (o.lo, o.hi):
                if (a == 0 and math.isinf(b)) or (b == 0 and math.isinf(a)):
                    cands.append(0.0)
                else:
                    cands.append(a * b)
        lo, hi = min(cands), max(cands)
        return Interval(_down(lo), _up(hi))

    __rmul__ = __mul__

    def __truediv__(self, other) -> Interval:
        o = Interval.of(other)
        if o.lo <= 0 <= o.hi:
            raise ZeroDivisionError("interval division by an interval containing zero")
        cands = [a / b for a in (self.lo, self.hi) for b in (o.lo, o.hi)]
        return Interval(_down(min(cands)), _up(max(cands)))

    def __rtruediv__(self, other) -> Interval:
        return Interval.of(other) / self

    def __pow__(self, e: int) -> Interval:
        if not isinstance(e, int) or e < 0:
            raise ValueError("only nonnegative integer powers are supported")
        if e == 0:
            return Interval(1.0, 1.0)
        if e % 2 == 0 and self.lo < 0 < self.hi:
            m = max(-self.lo, self.hi)
            return Interval(0.0, _pow_up(m, e))
        if e % 2 == 0 and self.hi <= 0:
            return Interval(_pow_down(-self.hi, e), _pow_up(-self.lo, e))
        if e % 2 == 0:
            return Interval(_pow_down(self.lo, e), _pow_up(self.hi, e))
        # odd power is monotone
        lo = _pow_down(self.lo, e) if self.lo >= 0 else -_pow_up(-self.lo, e)
        hi = _pow_up(self.hi, e) if self.hi >= 0 else -_pow_down(-self.hi, e)
        return Interval(lo, hi)

    def sqrt(self) -> Interval:
        if self.lo < 0:
            raise ValueError("sqrt of an interval with negative part")
        return Interval(max(0.0, _down(math.sqrt(self.lo))), _up(math.sqrt(self.hi)))

    def log(self) -> Interval:
        """Natural log, padded by a few ulps around libm's result."""
        if self.lo <= 0:
            raise ValueError("log of an interval reaching zero")
        return Interval(_pad_down(math.log(self.lo)), _pad_up(math.log(self.hi)))

    def exp(self) -> Interval:
        lo = _pad_down(math.exp(self.lo)) if self.lo > -745 else 0.0
        return Interval(max(lo, 0.0), _pad_up(math.exp(self.hi)) if self.hi < 709 else _INF)

    def certainly_lt(self, other) -> bool:
        return self.hi < Interval.of(other).lo

    def certainly_le(self, other) -> bool:
        return self.hi <= Interval.of(other).lo

    def __repr__(self) -> str:
        return f"[{self.lo!r}, {self.hi!r}]"


_LIBM_ULPS = 4


def _pad_down(v: float) -> float:
    for _ in range(_LIBM_ULPS):
        v = _down(v)
    return v


def _pad_up(v: float) -> float:
    for _ in range(_LIBM_ULPS):
        v = _up(v)
    return v


def _pow_up(x: float, e: int) -> float:
    """Upper bound on ``x**e`` for ``x >= 0`` by repeated rounded-up products."""
    r = 1.0
    b = x
    while e:
        if e & 1:
            r = _up(r * b)
        e >>= 1
        if e:
            b = _up(b * b)
    return r


def _pow_down(x: float, e: int) -> float:
    r = 1.0
    b = x
    while e:
        if e & 1:
            r = _down(r * b)
        e >>= 1
        if e:
            b = _down(b * b)
    return max(r, 0.0)


def ipow(base: Interval, e: int) -> Interval:
    return base ** e


def binom(n: int, k: int) -> Interval:
    return Interval.point(Fraction(math.comb(n, k)))


@dataclass(frozen=True)
class Box:
    """Axis-aligned box; one interval per coordinate."""

    intervals: tuple[Interval, ...]

    def __post_init__(self):
        if not self.intervals:
            raise ValueError("a box needs at least one coordinate")

    @classmethod
    def from_bounds(cls, lo: Sequence[float], hi: Sequence[float]) -> Box:
        if len(lo) != len(hi):
            raise DimensionMismatch("lower and upper corners differ in length")
        return cls(tuple(Interval(float(a), float(b)) for a, b in zip(lo, hi)))

    @classmethod
    def cube(cls, dim: int, radius: float, center: Sequence[float] | None = None) -> Box:
        c = [0.0] * dim if center is None else [float(v) for v in center]
        return cls.from_bounds([v - radius for v in c], [v + radius for v in c])

    @property
    def dim(self) -> int:
        return len(self.intervals)

    @property
    def lo(self) -> np.ndarray:
        return np.array([iv.lo for iv in self.intervals])

    @property
    def hi(self) -> np.ndarray:
        return np.array([iv.hi for iv in self.intervals])

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    @property
    def widths(self) -> np.ndarray:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        return all(iv.contains(v) for iv, v in zip(self.intervals, x))

    def max_norm(self) -> float:
        """Upper bound on the Euclidean norm of any point in the box."""
        acc = Interval(0.0, 0.0)
        for iv in self.intervals:
            m = max(abs(iv.lo), abs(iv.hi))
            acc = acc + Interval(m, m) ** 2
        return acc.sqrt().hi

    def pad(self, amount: float) -> Box:
        return Box.from_bounds(self.lo - amount, self.hi + amount)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(n, self.dim))

    def to_list(self) -> list[list[float]]:
        return [[iv.lo, iv.hi] for iv in self.intervals]


def interval_evaluate(p: Polynomial, box: Box) -> Interval:
    """Natural interval extension of ``p`` over ``box`` (outward rounded)."""
    if box.dim != p.dim:
        raise DimensionMismatch("box and polynomial dimensions differ")
    total = Interval(0.0, 0.0)
    for e, c in p.sorted_terms():
        term = Interval.point(c)
        for iv, k in zip(box.intervals, e):
            if k:
                term = term * (iv ** k)
        total = total + term
    return total


def hull(values: Iterable[Interval]) -> Interval:
    vals = list(values)
    return Interval(min(v.lo for v in vals), max(v.hi for v in vals))
