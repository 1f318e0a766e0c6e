"""Sparse multivariate polynomials over the reals.

A polynomial in ``d`` variables is a map from exponent tuples to nonzero
coefficients.  Coefficients are either Python floats or
:class:`fractions.Fraction` (exact mode); mixing the two falls back to floats.

    x1**2 + 2*x1*x2  ->  {(2, 0): 1, (1, 1): 2}

The zero polynomial has an empty term map.  Values are immutable.
"""

from __future__ import annotations

import contextlib
import json
import math
from decimal import Decimal
from fractions import Fraction
from functools import cached_property
from numbers import Rational, Real
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

Exponent = tuple[int, ...]
Coefficient = float | Fraction

DEFAULT_DEGREE_CAP = 64
_degree_cap = DEFAULT_DEGREE_CAP


class DimensionMismatch(ValueError):
    """Raised when polynomials (or a point) live in different dimensions."""


class DegreeCapExceeded(ArithmeticError):
    """Raised when an operation would produce a polynomial above the degree cap."""

    def __init__(self, degree: int, cap: int):
        super().__init__(f"result degree {degree} exceeds the degree cap {cap}")
        self.degree = degree
        self.cap = cap


def get_degree_cap() -> int:
    return _degree_cap


def set_degree_cap(cap: int) -> None:
    global _degree_cap
    if cap < 0:
        raise ValueError("degree cap must be nonnegative")
    _degree_cap = int(cap)


@contextlib.contextmanager
def degree_cap(cap: int) -> Iterator[None]:
    """Temporarily change the total-degree cap."""
    old = get_degree_cap()
    set_degree_cap(cap)
    try:
        yield
    finally:
        set_degree_cap(old)


def _check_cap(degree: int) -> None:
    if degree > _degree_cap:
        raise DegreeCapExceeded(degree, _degree_cap)


def _coerce(c) -> Coefficient:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, bool):
        return Fraction(int(c))
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, Rational):
        return Fraction(c.numerator, c.denominator)
    if isinstance(c, Decimal):
        return Fraction(c)
    if isinstance(c, (Real, np.floating)):
        return float(c)
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


def _add_coeffs(a: Coefficient, b: Coefficient) -> Coefficient:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a + b
    return float(a) + float(b)


def _mul_coeffs(a: Coefficient, b: Coefficient) -> Coefficient:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a * b
    return float(a) * float(b)


def grlex_key(e: Exponent) -> tuple:
    """Sort key putting higher total degree first, then lexicographically larger."""
    return (-sum(e), tuple(-k for k in e))


class Polynomial:
    """An immutable sparse polynomial in ``dim`` variables."""

    def __init__(self, dim: int, terms: Mapping[Sequence[int], object] | None = None):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = int(dim)
        clean: dict[Exponent, Coefficient] = {}
        for e, c in (terms or {}).items():
            e = tuple(int(k) for k in e)
            if len(e) != self.dim:
                raise DimensionMismatch(f"exponent {e} has length {len(e)}, expected {self.dim}")
            if any(k < 0 for k in e):
                raise ValueError(f"negative exponent in {e}")
            c = _coerce(c)
            if e in clean:
                c = _add_coeffs(clean[e], c)
            clean[e] = c
        self._terms = {e: c for e, c in clean.items() if c != 0}

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, dim: int) -> Polynomial:
        return cls(dim)

    @classmethod
    def constant(cls, dim: int, value) -> Polynomial:
        return cls(dim, {(0,) * dim: value})

    @classmethod
    def variable(cls, dim: int, index: int) -> Polynomial:
        if not 0 <= index < dim:
            raise IndexError(f"variable index {index} out of range for dim={dim}")
        e = [0] * dim
        e[index] = 1
        return cls(dim, {tuple(e): 1})

    @classmethod
    def variables(cls, dim: int) -> list[Polynomial]:
        return [cls.variable(dim, i) for i in range(dim)]

    @classmethod
    def norm_squared(cls, dim: int, center: Sequence | None = None) -> Polynomial:
        """``||x - center||**2`` (``center`` defaults to the origin)."""
        out = cls.zero(dim)
        for i, xi in enumerate(cls.variables(dim)):
            c = 0 if center is None else center[i]
            out = out + (xi - c) * (xi - c)
        return out

    @classmethod
    def _raw(cls, dim: int, terms: dict[Exponent, Coefficient]) -> Polynomial:
        obj = cls.__new__(cls)
        obj.dim = dim
        obj._terms = {e: c for e, c in terms.items() if c != 0}
        return obj

    # -- basic queries ----------------------------------------------------
    @property
    def terms(self) -> dict[Exponent, Coefficient]:
        return dict(self._terms)

    def items(self) -> Iterable[tuple[Exponent, Coefficient]]:
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        """Total degree; ``-1`` for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def degree_in(self, i: int) -> int:
        return max((e[i] for e in self._terms), default=0)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(c, Fraction) for c in self._terms.values())

    def coefficient(self, e: Sequence[int]) -> Coefficient:
        return self._terms.get(tuple(e), 0)

    def constant_term(self) -> Coefficient:
        return self._terms.get((0,) * self.dim, 0)

    def max_abs_coefficient(self) -> float:
        return max((abs(float(c)) for c in self._terms.values()), default=0.0)

    def sorted_terms(self) -> list[tuple[Exponent, Coefficient]]:
        return sorted(self._terms.items(), key=lambda t: grlex_key(t[0]))

    def to_float(self) -> Polynomial:
        return Polynomial._raw(self.dim, {e: float(c) for e, c in self._terms.items()})

    def to_exact(self) -> Polynomial:
        """Exact copy; float coefficients convert to their exact binary value."""
        return Polynomial._raw(self.dim, {e: Fraction(c) for e, c in self._terms.items()})

    # -- arithmetic -------------------------------------------------------
    def _check_dim(self, other: Polynomial) -> None:
        if self.dim != other.dim:
            raise DimensionMismatch(f"dimensions differ: {self.dim} vs {other.dim}")

    def _lift(self, other) -> Polynomial:
        if isinstance(other, Polynomial):
            self._check_dim(other)
            return other
        return Polynomial.constant(self.dim, other)

    def __add__(self, other) -> Polynomial:
        other = self._lift(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = _add_coeffs(out[e], c) if e in out else c
        return Polynomial._raw(self.dim, out)

    __radd__ = __add__

    def __neg__(self) -> Polynomial:
        return Polynomial._raw(self.dim, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> Polynomial:
        return self + (-self._lift(other))

    def __rsub__(self, other) -> Polynomial:
        return self._lift(other) - self

    def __mul__(self, other) -> Polynomial:
        if not isinstance(other, Polynomial):
            c = _coerce(other)
            if c == 0:
                return Polynomial.zero(self.dim)
            return Polynomial._raw(self.dim, {e: _mul_coeffs(v, c) for e, v in self._terms.items()})
        self._check_dim(other)
        if self.is_zero() or other.is_zero():
            return Polynomial.zero(self.dim)
        _check_cap(self.degree + other.degree)
        out: dict[Exponent, Coefficient] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                v = _mul_coeffs(c1, c2)
                out[e] = _add_coeffs(out[e], v) if e in out else v
        return Polynomial._raw(self.dim, out)

    __rmul__ = __mul__

    def __truediv__(self, other) -> Polynomial:
        c = _coerce(other)
        if isinstance(c, Fraction):
            return self * (1 / c)
        return self * (1.0 / c)

    def __pow__(self, e: int) -> Polynomial:
        return power(self, e)

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.dim == other.dim and self._terms == other._terms
        if isinstance(other, (int, float, Fraction)):
            return self == Polynomial.constant(self.dim, other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.dim, frozenset(self._terms.items())))

    def scale(self, c) -> Polynomial:
        return self * c

    # -- evaluation -------------------------------------------------------
    def __call__(self, x) -> Coefficient:
        return evaluate(self, x)

    @cached_property
    def exponent_matrix(self) -> np.ndarray:
        if not self._terms:
            return np.zeros((0, self.dim), dtype=np.int64)
        return np.array(list(self._terms.keys()), dtype=np.int64)

    @cached_property
    def coefficient_vector(self) -> np.ndarray:
        return np.array([float(c) for c in self._terms.values()], dtype=float)

    def evaluate_many(self, points) -> np.ndarray:
        """Evaluate at each row of an ``(N, dim)`` array (float arithmetic)."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.shape[1] != self.dim:
            raise DimensionMismatch(f"points have dimension {pts.shape[1]}, expected {self.dim}")
        if not self._terms:
            return np.zeros(pts.shape[0])
        E = self.exponent_matrix
        out = np.zeros(pts.shape[0])
        # per-variable power tables keep this O(N * T * d)
        tables = []
        for i in range(self.dim):
            m = int(E[:, i].max())
            tables.append(pts[:, i : i + 1] ** np.arange(m + 1)[None, :])
        mono = np.ones((pts.shape[0], E.shape[0]))
        for i in range(self.dim):
            mono *= tables[i][:, E[:, i]]
        out = mono @ self.coefficient_vector
        return out

    def __repr__(self) -> str:
        return f"Polynomial({self.dim}, {format_polynomial(self)!r})"

    def __str__(self) -> str:
        return format_polynomial(self)


def evaluate(p: Polynomial, x) -> Coefficient:
    """Value of ``p`` at the point ``x``.

    Exact when ``p`` has Fraction coefficients and ``x`` has rational entries.
    """
    x = tuple(x)
    if len(x) != p.dim:
        raise DimensionMismatch(f"point has dimension {len(x)}, expected {p.dim}")
    exact = p.is_exact and all(isinstance(v, (int, Fraction)) for v in x)
    total: Coefficient = Fraction(0) if exact else 0.0
    for e, c in p.sorted_terms():
        term = c if exact else float(c)
        for xi, k in zip(x, e):
            if k:
                term = term * (xi if exact else float(xi)) ** k
        total = total + term
    return total


def add(p: Polynomial, q: Polynomial) -> Polynomial:
    return p + q


def multiply(p: Polynomial, q: Polynomial) -> Polynomial:
    return p * q


def power(p: Polynomial, e: int) -> Polynomial:
    """``p**e`` by repeated squaring; ``power(p, 0) == 1``."""
    if e < 0:
        raise ValueError("exponent must be nonnegative")
    if e == 0:
        return Polynomial.constant(p.dim, 1)
    if not p.is_zero():
        _check_cap(p.degree * e)
    result = None
    base = p
    while e:
        if e & 1:
            result = base if result is None else result * base
        e >>= 1
        if e:
            base = base * base
    return result


def affine_substitute(p: Polynomial, center: Sequence, scale) -> Polynomial:
    """Return ``p(center + scale * x)``."""
    if len(center) != p.dim:
        raise DimensionMismatch("center dimension differs from polynomial dimension")
    if scale <= 0:
        raise ValueError("scale must be positive")
    xs = Polynomial.variables(p.dim)
    images = [xs[i] * scale + center[i] for i in range(p.dim)]
    return compose(p, images)


def compose(p: Polynomial, images: Sequence[Polynomial]) -> Polynomial:
    """Substitute ``x_i -> images[i]`` into ``p``."""
    if len(images) != p.dim:
        raise DimensionMismatch("need one image polynomial per variable")
    dim = images[0].dim
    out = Polynomial.zero(dim)
    cache: dict[tuple[int, int], Polynomial] = {}

    def pw(i: int, k: int) -> Polynomial:
        if (i, k) not in cache:
            cache[(i, k)] = power(images[i], k)
        return cache[(i, k)]

    for e, c in p.items():
        term = Polynomial.constant(dim, c)
        for i, k in enumerate(e):
            if k:
                term = term * pw(i, k)
        out = out + term
    return out


def format_polynomial(p: Polynomial, names: Sequence[str] | None = None) -> str:
    if p.is_zero():
        return "0"
    names = names or [f"x{i + 1}" for i in range(p.dim)]
    parts = []
    for e, c in p.sorted_terms():
        mono = "*".join(
            n if k == 1 else f"{n}^{k}" for n, k in zip(names, e) if k
        )
        cs = str(c)
        if mono:
            parts.append(mono if c == 1 else f"-{mono}" if c == -1 else f"{cs}*{mono}")
        else:
            parts.append(cs)
    return " + ".join(parts).replace("+ -", "- ")


# -- JSON -------------------------------------------------------------------

def _coef_to_json(c: Coefficient):
    if isinstance(c, Fraction):
        if c.denominator == 1:
            return str(c.numerator)
        # finite decimal if the denominator is 2^a 5^b
        d = c.denominator
        for p in (2, 5):
            while d % p == 0:
                d //= p
        if d == 1:
            return str(Decimal(c.numerator) / Decimal(c.denominator))
        return f"{c.numerator}/{c.denominator}"
    if not math.isfinite(c):
        raise ValueError("non-finite coefficient cannot be serialized")
    return c


def _coef_from_json(v) -> Coefficient:
    if isinstance(v, bool):
        raise ValueError("boolean is not a coefficient")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return v
    if isinstance(v, str):
        return Fraction(v.strip())
    raise ValueError(f"bad coefficient {v!r}")


def to_dict(p: Polynomial) -> dict:
    return {
        "dim": p.dim,
        "terms": [{"e": list(e), "c": _coef_to_json(c)} for e, c in p.sorted_terms()],
    }


def from_dict(data: Mapping) -> Polynomial:
    try:
        dim = int(data["dim"])
        raw = data["terms"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed polynomial object: {exc}") from exc
    terms: dict[Exponent, Coefficient] = {}
    for t in raw:
        e = tuple(t["e"])
        if any((not isinstance(k, int)) or isinstance(k, bool) or k < 0 for k in e):
            raise ValueError(f"exponents must be nonnegative integers: {e}")
        if len(e) != dim:
            raise ValueError(f"exponent {e} does not match dim={dim}")
        if e in terms:
            raise ValueError(f"duplicate exponent vector {e}")
        terms[e] = _coef_from_json(t["c"])
    return Polynomial(dim, terms)


def dumps(p: Polynomial) -> str:
    return json.dumps(to_dict(p))


def loads(text: str) -> Polynomial:
    return from_dict(json.loads(text))
