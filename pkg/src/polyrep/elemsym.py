"""Elementary symmetric functions of numbers and of polynomial systems.

Everything goes through one recurrence: multiply ``prod (t + y_i)`` out one
factor at a time, keeping the coefficients of ``t^(s-1), ..., t^0``. The same
loop runs over numbers (floats or Fractions) and over polynomials.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from numbers import Rational
from typing import Sequence

import numpy as np

from .poly import DimensionMismatch, Polynomial


def _exact(v):
    if isinstance(v, Rational) and not isinstance(v, bool):
        return Fraction(v)
    return v


def elem_sym_values(y: Sequence) -> list:
    """``[sigma_1(y), ..., sigma_s(y)]``.

    Integer and Fraction entries are combined exactly; floats in floating
    point.
    """
    y = [_exact(v) for v in y]
    if not y:
        raise ValueError("need at least one value")
    # e[k] holds sigma_k of the prefix processed so far; e[0] = 1
    e = [Fraction(1)] + [Fraction(0)] * len(y)
    for i, v in enumerate(y, start=1):
        for k in range(i, 0, -1):
            e[k] = e[k] + v * e[k - 1]
    return e[1:]


def elem_sym_array(Y: np.ndarray) -> np.ndarray:
    """Row-wise sigma vectors for an ``(N, s)`` float array; shape ``(N, s)``."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[1] == 0:
        raise ValueError("expected a nonempty (N, s) array")
    N, s = Y.shape
    e = np.zeros((N, s + 1))
    e[:, 0] = 1.0
    for i in range(s):
        e[:, 1:i + 2] = e[:, 1:i + 2] + Y[:, i:i + 1] * e[:, 0:i + 1]
    return e[:, 1:]


def elem_sym_bruteforce(y: Sequence, k: int):
    """Subset-sum definition of sigma_k; reference for small s."""
    y = [_exact(v) for v in y]
    total = 0
    for idx in itertools.combinations(range(len(y)), k):
        prod = 1
        for i in idx:
            prod = prod * y[i]
        total = total + prod
    return total


def nonneg_via_sigma(y: Sequence) -> bool:
    """True iff every sigma_k(y) >= 0, which happens iff every y_i >= 0."""
    return all(v >= 0 for v in elem_sym_values(y))


def pos_via_sigma(y: Sequence) -> bool:
    """True iff every sigma_k(y) > 0, which happens iff every y_i > 0."""
    return all(v > 0 for v in elem_sym_values(y))


def elem_sym_compose_all(system: Sequence[Polynomial]) -> list[Polynomial]:
    """``[sigma_1(p(x)), ..., sigma_s(p(x))]`` as polynomials."""
    if not system:
        raise ValueError("need at least one polynomial")
    d = system[0].dim
    if any(p.dim != d for p in system):
        raise DimensionMismatch("polynomials differ in dimension")
    one = Polynomial.constant(d, 1)
    e = [one] + [Polynomial.zero(d)] * len(system)
    for i, p in enumerate(system, start=1):
        for k in range(i, 0, -1):
            e[k] = e[k] + p * e[k - 1]
    return e[1:]


def elem_sym_compose(system: Sequence[Polynomial], k: int) -> Polynomial:
    """The polynomial ``sigma_k(p_1(x), ..., p_s(x))`` for ``1 <= k <= s``."""
    s = len(system)
    if not 1 <= k <= s:
        raise ValueError(f"k must lie in 1..{s}")
    if not system:
        raise ValueError("need at least one polynomial")
    d = system[0].dim
    if any(p.dim != d for p in system):
        raise DimensionMismatch("polynomials differ in dimension")
    # only e[0..k] are needed for sigma_k
    e = [Polynomial.constant(d, 1)] + [Polynomial.zero(d)] * k
    for i, p in enumerate(system, start=1):
        for j in range(min(i, k), 0, -1):
            e[j] = e[j] + p * e[j - 1]
    return e[k]


def vieta_coefficients(y: Sequence) -> list:
    """Coefficients of ``prod (t + y_i)`` from ``t^s`` down to ``t^0``,
    expanded by convolution (independent of the recurrence above)."""
    coeffs = [Fraction(1)]
    for v in (_exact(v) for v in y):
        nxt = coeffs + [0]
        for i, c in enumerate(coeffs):
            nxt[i + 1] = nxt[i + 1] + c * v
        coeffs = nxt
    return coeffs


def sigma_sign_tests(Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``(nonneg_via_sigma, pos_via_sigma)`` over the rows of ``Y``.

    Exact for float input: the recurrence's rounding error on ``sigma_k`` is
    at most a small multiple of ``sigma_k(|y|)``, so only rows where some
    ``sigma_k`` falls inside that band are redone in rationals.
    """
    Y = np.asarray(Y, dtype=float)
    S = elem_sym_array(Y)
    s = Y.shape[1]
    band = 8.0 * (s + 1) * np.finfo(float).eps * elem_sym_array(np.abs(Y)) + 1e-300
    nonneg = (S >= 0).all(axis=1)
    pos = (S > 0).all(axis=1)
    for i in np.flatnonzero((np.abs(S) <= band).any(axis=1)):
        exact = elem_sym_values([Fraction(float(v)) for v in Y[i]])
        nonneg[i] = all(v >= 0 for v in exact)
        pos[i] = all(v > 0 for v in exact)
    return nonneg, pos
