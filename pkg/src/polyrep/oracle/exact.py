"""Exact rational Bernstein certificates for tight bounds.

Float enclosures always carry a positive rounding pad, so a bound that is
attained exactly (``p <= 1`` on a facet where ``p = 1``) can never be closed
by them. This module redoes the check in rational arithmetic: on each box it
looks for multipliers ``nu >= 0`` (from a float LP, then rationalized) such
that ``F - sum nu_i c_i`` has nonnegative exact Bernstein coefficients.
Meant for low-degree polynomials and a few hundred boxes.
"""

from __future__ import annotations

import math
from fractions import Fraction
from math import comb
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from ..poly import Polynomial
from .verdict import Verdict


def _tensor(p: Polynomial, degs: Sequence[int]) -> np.ndarray:
    A = np.empty(tuple(n + 1 for n in degs), dtype=object)
    A.fill(Fraction(0))
    for e, c in p.items():
        A[e] = Fraction(c)
    return A


def _apply(A: np.ndarray, axis: int, mat: np.ndarray) -> np.ndarray:
    moved = np.moveaxis(A, axis, -1)
    out = moved.dot(mat.T)
    return np.moveaxis(out, -1, axis)


def _shift_matrix(n: int, a: Fraction, w: Fraction) -> np.ndarray:
    # coefficients in t of (a + w t)^i, column i
    S = np.empty((n + 1, n + 1), dtype=object)
    S.fill(Fraction(0))
    for i in range(n + 1):
        for j in range(i + 1):
            S[j, i] = comb(i, j) * a ** (i - j) * w ** j
    return S


def _bernstein_matrix(n: int) -> np.ndarray:
    W = np.empty((n + 1, n + 1), dtype=object)
    W.fill(Fraction(0))
    for j in range(n + 1):
        for i in range(j + 1):
            W[j, i] = Fraction(comb(j, i), comb(n, i))
    return W


def bernstein_exact(p: Polynomial, lo: Sequence[Fraction], hi: Sequence[Fraction],
                    degs: Sequence[int]) -> np.ndarray:
    """Exact Bernstein coefficients of ``p`` on the box, at degrees ``degs``."""
    A = _tensor(p, degs)
    for k, n in enumerate(degs):
        a, w = Fraction(lo[k]), Fraction(hi[k]) - Fraction(lo[k])
        A = _apply(A, k, _shift_matrix(n, a, w))
        A = _apply(A, k, _bernstein_matrix(n))
    return A


def _rationalize(nu: np.ndarray) -> list[list[Fraction]]:
    exact = [Fraction(float(v)) for v in nu]
    simple = [Fraction(float(v)).limit_denominator(1 << 20) for v in nu]
    return [simple, exact]


def _lp(bf: np.ndarray, B: np.ndarray) -> np.ndarray | None:
    m = B.shape[1]
    # rows scaled to unit size so tiny violations are not lost in LP tolerances
    scale = np.where(bf != 0, np.abs(bf), np.abs(B).max(axis=1))
    scale = np.where(scale > 0, scale, 1.0)
    bf = bf / scale
    B = B / scale[:, None]
    A = np.hstack([B, np.ones((bf.size, 1))])
    big = 1e8 * max(1.0, float(np.abs(bf).max()))
    res = linprog(c=np.r_[np.zeros(m), -1.0], A_ub=A, b_ub=bf,
                  bounds=[(0, big)] * m + [(None, None)], method="highs")
    if res.status != 0:
        return None
    return np.maximum(res.x[:m], 0.0)


def _simplest_dyadic(lo: Fraction, hi: Fraction) -> Fraction:
    """Dyadic rational with the coarsest denominator strictly inside ``(lo, hi)``.

    Splitting there makes points such as 0 or -1, where bounds tend to be
    tight, into box corners.
    """
    for k in range(-8, 64):
        step = Fraction(2) ** -k
        c = math.ceil(lo / step) * step
        if c == lo:
            c += step
        if c < hi:
            return c
    return (lo + hi) / 2


def _single_multiplier(bf: np.ndarray, bcs: list[np.ndarray]) -> bool:
    """Try ``F - nu * c_i`` with the smallest ``nu`` fixing the negative entries."""
    neg = [j for j, v in enumerate(bf) if v < 0]
    for bc in bcs:
        if any(bc[j] >= 0 for j in neg):
            continue
        nu = max(bf[j] / bc[j] for j in neg)
        if all(a - nu * b >= 0 for a, b in zip(bf, bc)):
            return True
    return False


def _repair(G: np.ndarray, bcs: list[np.ndarray], rounds: int = 8) -> bool:
    """Greedily add multiples of single constraints to lift negative entries
    of ``G`` that the float LP could not see."""
    for _ in range(rounds):
        neg = [j for j, v in enumerate(G) if v < 0]
        if not neg:
            return True
        best, best_min = None, min(G)
        for bc in bcs:
            rows = [j for j in neg if bc[j] < 0]
            if not rows:
                continue
            nu = max(G[j] / bc[j] for j in rows)
            H = G - nu * bc
            if min(H) > best_min:
                best, best_min = H, min(H)
        if best is None:
            return False
        G = best
    return min(G) >= 0


def certify_nonneg_exact(F: Polynomial, constraints: Sequence[Polynomial], lo, hi,
                         max_boxes: int = 400, max_depth: int = 24) -> Verdict:
    """Prove ``F >= 0`` on ``[lo, hi] ∩ {c >= 0}`` in rational arithmetic.

    Never refutes: failure to close within the budget is UNKNOWN.
    """
    polys = [F] + list(constraints)
    d = F.dim
    degs = [max(max(p.degree_in(i), 0) for p in polys) for i in range(d)]
    stack = [([Fraction(v) for v in lo], [Fraction(v) for v in hi], 0)]
    seen = 0
    while stack:
        blo, bhi, depth = stack.pop()
        seen += 1
        if seen > max_boxes or depth > max_depth:
            return Verdict.unknown("exact certificate budget exhausted", boxes=seen)
        bf = bernstein_exact(F, blo, bhi, degs).ravel()
        if min(bf) >= 0:
            continue
        bcs = [bernstein_exact(c, blo, bhi, degs).ravel() for c in constraints]
        if any(max(bc) < 0 for bc in bcs):
            continue
        if bcs and _single_multiplier(bf, bcs):
            continue
        if bcs:
            Bf = np.array([float(v) for v in bf])
            Bc = np.array([[float(v) for v in bc] for bc in bcs]).T
            nu = _lp(Bf, Bc)
            ok = _repair(bf.copy(), bcs)
            if not ok and nu is not None:
                for cand in _rationalize(nu):
                    G = bf.copy()
                    for v, bc in zip(cand, bcs):
                        if v:
                            G = G - v * bc
                    if min(G) >= 0 or _repair(G, bcs):
                        ok = True
                        break
            if ok:
                continue
        widths = [b - a for a, b in zip(blo, bhi)]
        ax = max(range(d), key=lambda i: widths[i])
        mid = _simplest_dyadic(blo[ax], bhi[ax])
        left_hi = list(bhi)
        left_hi[ax] = mid
        right_lo = list(blo)
        right_lo[ax] = mid
        stack.append((blo, left_hi, depth + 1))
        stack.append((right_lo, bhi, depth + 1))
    return Verdict.proved(boxes=seen, exact=True)
