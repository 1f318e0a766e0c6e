"""Structured polynomial expressions.

Outputs such as ``sigma - g**l * h**m`` have total degrees in the hundreds,
far past what an expanded term map can hold or evaluate stably. An
expression tree keeps the factored form: it evaluates pointwise with the
structure intact and expands to a :class:`Polynomial` only on request (and
only under the degree cap).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from . import poly as _poly
from .poly import DegreeCapExceeded, DimensionMismatch, Polynomial


class PolyExpr:
    dim: int

    # structure ------------------------------------------------------------
    @property
    def degree(self) -> int:
        raise NotImplementedError

    def degree_in(self, i: int) -> int:
        raise NotImplementedError

    def evaluate_many(self, points) -> np.ndarray:
        raise NotImplementedError

    def expand(self) -> Polynomial:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __call__(self, x) -> float:
        return float(self.evaluate_many(np.asarray(x, dtype=float)[None, :])[0])

    def try_expand(self) -> Polynomial | None:
        if self.degree > _poly.get_degree_cap():
            return None
        try:
            return self.expand()
        except DegreeCapExceeded:
            return None

    # arithmetic -----------------------------------------------------------
    def __add__(self, other) -> PolyExpr:
        return Sum((self, as_expr(other, self.dim)))

    __radd__ = __add__

    def __neg__(self) -> PolyExpr:
        return Scale(Fraction(-1), self)

    def __sub__(self, other) -> PolyExpr:
        return Sum((self, -as_expr(other, self.dim)))

    def __rsub__(self, other) -> PolyExpr:
        return Sum((as_expr(other, self.dim), -self))

    def __mul__(self, other) -> PolyExpr:
        if isinstance(other, (int, float, Fraction)):
            return Scale(other, self)
        return Product((self, as_expr(other, self.dim)))

    def __rmul__(self, other) -> PolyExpr:
        if isinstance(other, (int, float, Fraction)):
            return Scale(other, self)
        return Product((as_expr(other, self.dim), self))

    def __pow__(self, e: int) -> PolyExpr:
        return Power(self, e)


def as_expr(obj, dim: int | None = None) -> PolyExpr:
    if isinstance(obj, PolyExpr):
        return obj
    if isinstance(obj, Polynomial):
        return Leaf(obj)
    if dim is None:
        raise TypeError("a dimension is needed to lift a constant")
    return Leaf(Polynomial.constant(dim, obj))


class Leaf(PolyExpr):
    def __init__(self, poly: Polynomial):
        self.poly = poly
        self.dim = poly.dim

    @property
    def degree(self) -> int:
        return max(self.poly.degree, 0)

    def degree_in(self, i: int) -> int:
        return self.poly.degree_in(i)

    def evaluate_many(self, points) -> np.ndarray:
        return self.poly.evaluate_many(points)

    def expand(self) -> Polynomial:
        return self.poly

    def to_dict(self) -> dict:
        return {"op": "poly", "poly": _poly.to_dict(self.poly)}

    def __repr__(self) -> str:
        return f"Leaf({self.poly})"


class Sum(PolyExpr):
    def __init__(self, terms: Sequence[PolyExpr]):
        terms = tuple(terms)
        if not terms:
            raise ValueError("empty sum")
        dims = {t.dim for t in terms}
        if len(dims) != 1:
            raise DimensionMismatch("summands differ in dimension")
        self.terms = terms
        self.dim = terms[0].dim

    @property
    def degree(self) -> int:
        return max(t.degree for t in self.terms)

    def degree_in(self, i: int) -> int:
        return max(t.degree_in(i) for t in self.terms)

    def evaluate_many(self, points) -> np.ndarray:
        out = self.terms[0].evaluate_many(points)
        for t in self.terms[1:]:
            out = out + t.evaluate_many(points)
        return out

    def expand(self) -> Polynomial:
        out = Polynomial.zero(self.dim)
        for t in self.terms:
            out = out + t.expand()
        return out

    def to_dict(self) -> dict:
        return {"op": "sum", "args": [t.to_dict() for t in self.terms]}


class Product(PolyExpr):
    def __init__(self, factors: Sequence[PolyExpr]):
        factors = tuple(factors)
        if not factors:
            raise ValueError("empty product")
        if len({f.dim for f in factors}) != 1:
            raise DimensionMismatch("factors differ in dimension")
        self.factors = factors
        self.dim = factors[0].dim

    @property
    def degree(self) -> int:
        return sum(f.degree for f in self.factors)

    def degree_in(self, i: int) -> int:
        return sum(f.degree_in(i) for f in self.factors)

    def evaluate_many(self, points) -> np.ndarray:
        out = self.factors[0].evaluate_many(points)
        for f in self.factors[1:]:
            out = out * f.evaluate_many(points)
        return out

    def expand(self) -> Polynomial:
        out = Polynomial.constant(self.dim, 1)
        for f in self.factors:
            out = out * f.expand()
        return out

    def to_dict(self) -> dict:
        return {"op": "prod", "args": [f.to_dict() for f in self.factors]}


class Power(PolyExpr):
    def __init__(self, base: PolyExpr, exponent: int):
        if not isinstance(exponent, (int, np.integer)) or exponent < 0:
            raise ValueError("exponent must be a nonnegative integer")
        self.base = base
        self.exponent = int(exponent)
        self.dim = base.dim

    @property
    def degree(self) -> int:
        return self.base.degree * self.exponent

    def degree_in(self, i: int) -> int:
        return self.base.degree_in(i) * self.exponent

    def evaluate_many(self, points) -> np.ndarray:
        b = self.base.evaluate_many(points)
        return b ** self.exponent

    def expand(self) -> Polynomial:
        return _poly.power(self.base.expand(), self.exponent)

    def to_dict(self) -> dict:
        return {"op": "pow", "exp": self.exponent, "arg": self.base.to_dict()}


class Scale(PolyExpr):
    def __init__(self, factor, arg: PolyExpr):
        self.factor = _poly._coerce(factor)
        self.arg = arg
        self.dim = arg.dim

    @property
    def degree(self) -> int:
        return self.arg.degree

    def degree_in(self, i: int) -> int:
        return self.arg.degree_in(i)

    def evaluate_many(self, points) -> np.ndarray:
        return float(self.factor) * self.arg.evaluate_many(points)

    def expand(self) -> Polynomial:
        return self.arg.expand().scale(self.factor)

    def to_dict(self) -> dict:
        return {"op": "scale", "c": _poly._coef_to_json(self.factor), "arg": self.arg.to_dict()}


def from_dict(data: dict) -> PolyExpr:
    op = data.get("op")
    if op == "poly":
        return Leaf(_poly.from_dict(data["poly"]))
    if op == "sum":
        return Sum([from_dict(a) for a in data["args"]])
    if op == "prod":
        return Product([from_dict(a) for a in data["args"]])
    if op == "pow":
        return Power(from_dict(data["arg"]), int(data["exp"]))
    if op == "scale":
        return Scale(_poly._coef_from_json(data["c"]), from_dict(data["arg"]))
    raise ValueError(f"unknown expression node {op!r}")


def evaluate(obj, points) -> np.ndarray:
    """Evaluate a polynomial or expression at an ``(N, d)`` array of points."""
    return obj.evaluate_many(points)


def leading_scale(obj) -> float:
    """Largest coefficient magnitude used for output normalization.

    Expandable objects use their own coefficients. For large expressions the
    first summand stands in, so the scale is always positive and finite.
    """
    if isinstance(obj, Polynomial):
        return obj.max_abs_coefficient()
    p = obj.try_expand()
    if p is not None:
        return p.max_abs_coefficient()
    node = obj
    while True:
        if isinstance(node, Sum):
            node = node.terms[0]
        elif isinstance(node, Scale):
            return abs(float(node.factor)) * leading_scale(node.arg)
        else:
            p = node.try_expand()
            return p.max_abs_coefficient() if p is not None else 1.0
