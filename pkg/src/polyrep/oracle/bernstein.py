"""Rigorous batched range enclosures via Bernstein coefficients.

For a box ``[lo, lo + w]`` the polynomial is rewritten in the local variable
``t`` in ``[0, 1]^d`` and expanded in the tensor Bernstein basis. The range
over the box lies between the smallest and largest Bernstein coefficient,
and the coefficients at the ``2^d`` corners of the coefficient grid are the
exact values at the box vertices.

All work is done in floating point; a running a-priori error bound (absolute
values propagated through the same linear maps, times ``gamma_K``) makes the
enclosure rigorous in the presence of rounding.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from ..poly import Polynomial

_U = np.finfo(float).eps / 2
_TINY = 1e-300


def _gamma(k: int) -> float:
    ku = k * _U
    return ku / (1 - ku)


def _exact_width(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """``hi - lo`` rounded so that ``lo + w >= hi`` holds exactly."""
    w = hi - lo
    # two-sum error of hi + (-lo)
    bb = w - hi
    err = (hi - (w - bb)) + (-lo - bb)
    return np.where(err > 0, np.nextafter(w, np.inf), w)


@dataclass
class Enclosure:
    """Bernstein data for a batch of boxes.

    ``lower``/``upper`` are certified range bounds per box; ``coeffs`` holds
    the Bernstein coefficients (shape ``(N, *shape)``) and ``err`` a per-box
    absolute bound on their rounding error.
    """

    lower: np.ndarray
    upper: np.ndarray
    coeffs: np.ndarray
    err: np.ndarray
    err_grid: np.ndarray | None = None

    def coeff_err(self) -> np.ndarray:
        """Per-coefficient error bounds, shape ``(N, size)``."""
        N = self.coeffs.shape[0]
        if self.err_grid is not None:
            return self.err_grid.reshape(N, -1)
        return np.broadcast_to(self.err[:, None], (N, int(np.prod(self.coeffs.shape[1:]))))

    def vertex_bounds(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Certified bounds on values at the ``2^d`` box corners.

        Returns ``(corner_bits, lo, hi)`` with ``corner_bits`` of shape
        ``(2^d, d)`` (0 = lower end, 1 = upper end) and bounds of shape
        ``(N, 2^d)``.
        """
        d = self.coeffs.ndim - 1
        bits = np.array(list(itertools.product((0, 1), repeat=d)), dtype=int)
        idx = tuple(np.where(bits[:, j] == 1, -1, 0) for j in range(d))
        vals = self.coeffs[(slice(None),) + idx]
        e = self.err_grid[(slice(None),) + idx] if self.err_grid is not None else self.err[:, None]
        return bits, np.nextafter(vals - e, -np.inf), np.nextafter(vals + e, np.inf)


class BernsteinEncloser:
    """Precomputed enclosure machinery for one polynomial.

    ``degrees`` may exceed the true per-variable degrees (degree elevation),
    which lets several polynomials share one coefficient grid.
    """

    def __init__(self, poly: Polynomial, degrees: tuple[int, ...] | None = None):
        self.poly = poly
        self.dim = poly.dim
        own = tuple(poly.degree_in(j) for j in range(poly.dim))
        if degrees is None:
            degrees = own
        if len(degrees) != self.dim or any(a < b for a, b in zip(degrees, own)):
            raise ValueError("requested degrees do not cover the polynomial")
        self.degrees = tuple(int(v) for v in degrees)
        self.shape = tuple(v + 1 for v in self.degrees)
        self._build()

    @property
    def is_constant(self) -> bool:
        return self.poly.degree <= 0

    def _build(self):
        d = self.dim
        shape = self.shape
        exps, coefs, js, tgt = [], [], [], []
        exact_coef_err = False
        for e, c in self.poly.items():
            cf = float(c)
            if cf != c:
                exact_coef_err = True
            ranges = [range(k + 1) for k in e]
            for j in itertools.product(*ranges):
                mult = 1
                for ek, jk in zip(e, j):
                    mult *= math.comb(ek, jk)
                exps.append([ek - jk for ek, jk in zip(e, j)])
                js.append(j)
                coefs.append(cf * mult)
                tgt.append(int(np.ravel_multi_index(j, shape)))
        n_pairs = len(coefs)
        self._lo_exp = np.array(exps, dtype=int).reshape(n_pairs, d)
        self._w_exp = np.array(js, dtype=int).reshape(n_pairs, d)
        self._coef = np.array(coefs, dtype=float)
        size = int(np.prod(shape))
        self._scatter = sparse.csr_matrix(
            (np.ones(n_pairs), (np.arange(n_pairs), np.array(tgt, dtype=int))),
            shape=(n_pairs, size),
        )
        self._scatter_t = self._scatter.T.tocsr()
        per_target = np.bincount(np.array(tgt, dtype=int), minlength=size) if n_pairs else np.zeros(size, int)
        max_per_target = int(per_target.max()) if n_pairs else 0
        self._maxexp = max(self.degrees) if self.degrees else 0
        # 1-D conversion matrices W[i, j] = C(i, j) / C(n, j)
        self._W = []
        for n in self.degrees:
            W = np.zeros((n + 1, n + 1))
            for i in range(n + 1):
                for j in range(i + 1):
                    W[i, j] = math.comb(i, j) / math.comb(n, j)
            self._W.append(W)
        # roundings: coefficient conversion + binomial product, powers, the
        # product chain, scatter sums, and one matrix pass per axis
        total_deg = sum(self.degrees)
        self._K = (
            (2 if exact_coef_err else 1)
            + d + 2 * total_deg + 2
            + max_per_target
            + sum(n + 2 for n in self.degrees)
            + 4
        )
        self._gammaK = _gamma(self._K)
        self._batch = max(1, int(2_000_000 // max(1, n_pairs)))

    def _powers(self, x: np.ndarray, maxe: int) -> np.ndarray:
        """Table ``x**k`` for k = 0..maxe built by repeated products."""
        tab = np.empty((maxe + 1,) + x.shape)
        tab[0] = 1.0
        for k in range(1, maxe + 1):
            tab[k] = tab[k - 1] * x
        return tab

    def _apply_axes(self, a: np.ndarray) -> np.ndarray:
        for ax, W in enumerate(self._W):
            a = np.moveaxis(np.tensordot(a, W, axes=([ax + 1], [1])), -1, ax + 1)
        return a

    def enclose(self, lo: np.ndarray, hi: np.ndarray) -> Enclosure:
        lo = np.atleast_2d(np.asarray(lo, dtype=float))
        hi = np.atleast_2d(np.asarray(hi, dtype=float))
        N = lo.shape[0]
        if N > self._batch:
            parts = [
                self.enclose(lo[i:i + self._batch], hi[i:i + self._batch])
                for i in range(0, N, self._batch)
            ]
            return Enclosure(
                np.concatenate([p.lower for p in parts]),
                np.concatenate([p.upper for p in parts]),
                np.concatenate([p.coeffs for p in parts]),
                np.concatenate([p.err for p in parts]),
                np.concatenate([p.err_grid for p in parts]),
            )
        size = int(np.prod(self.shape))
        if self._coef.size == 0:
            z = np.zeros(N)
            return Enclosure(z, z.copy(), np.zeros((N,) + self.shape), z.copy(),
                             np.zeros((N,) + self.shape))
        w = _exact_width(lo, hi)
        # expand around the endpoint nearer zero, so a value that vanishes
        # exactly at a corner keeps an exactly zero coefficient there
        flip = np.abs(hi) < np.abs(lo)
        anchor = np.where(flip, hi, lo)
        maxe = self._maxexp
        plo = self._powers(anchor, maxe)      # (maxe+1, N, d)
        pw = self._powers(np.where(flip, -w, w), maxe)
        vals = np.broadcast_to(self._coef, (N, self._coef.size)).copy()
        avals = np.abs(vals)
        for j in range(self.dim):
            f_lo = plo[self._lo_exp[:, j], :, j].T   # (N, P)
            f_w = pw[self._w_exp[:, j], :, j].T
            vals *= f_lo * f_w
            avals *= np.abs(f_lo) * f_w
        a = (self._scatter_t @ vals.T).T.reshape((N,) + self.shape)
        aa = (self._scatter_t @ avals.T).T.reshape((N,) + self.shape)
        b = self._apply_axes(a)
        bb = self._apply_axes(aa)
        if flip.any():
            for j in range(self.dim):
                fj = flip[:, j].reshape((N,) + (1,) * self.dim)
                b = np.where(fj, np.flip(b, axis=j + 1), b)
                bb = np.where(fj, np.flip(bb, axis=j + 1), bb)
        # per-coefficient bounds: exact corner values keep a zero error
        err_grid = np.nextafter(self._gammaK * bb * (1 + 4 * _U), np.inf) + _TINY
        eg = err_grid.reshape(N, size)
        err = eg.max(axis=1)
        flat = b.reshape(N, size)
        lower = np.nextafter((flat - eg).min(axis=1), -np.inf)
        upper = np.nextafter((flat + eg).max(axis=1), np.inf)
        bad = ~np.isfinite(lower) | ~np.isfinite(upper)
        if bad.any():
            lower = np.where(bad, -np.inf, lower)
            upper = np.where(bad, np.inf, upper)
        return Enclosure(lower, upper, b, err, err_grid)

    def bounds(self, lo, hi) -> tuple[np.ndarray, np.ndarray]:
        enc = self.enclose(lo, hi)
        return enc.lower, enc.upper


def common_degrees(polys) -> tuple[int, ...]:
    """Per-variable maximum degree over several polynomials or expressions."""
    polys = list(polys)
    d = polys[0].dim
    return tuple(max(p.degree_in(j) for p in polys) for j in range(d))


def rigorous_eval(poly: Polynomial, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Certified value bounds of ``poly`` at the given points (degenerate boxes)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    enc = BernsteinEncloser(poly)
    return enc.bounds(pts, pts)


# -- Bernstein-form arithmetic on expression trees -------------------------

def _binom_tensor(degrees: tuple[int, ...]) -> np.ndarray:
    out = np.ones(tuple(n + 1 for n in degrees))
    for ax, n in enumerate(degrees):
        row = np.array([float(math.comb(n, i)) for i in range(n + 1)])
        shape = [1] * len(degrees)
        shape[ax] = n + 1
        out = out * row.reshape(shape)
    return out


def _absmax(a: np.ndarray) -> np.ndarray:
    return np.abs(a.reshape(a.shape[0], -1)).max(axis=1)


def _product(a, ea, b, eb):
    """Bernstein coefficients of a product, with a rigorous error bound."""
    N = a.shape[0]
    na = tuple(s - 1 for s in a.shape[1:])
    nb = tuple(s - 1 for s in b.shape[1:])
    if np.prod(b.shape[1:]) > np.prod(a.shape[1:]):
        a, ea, b, eb, na, nb = b, eb, a, ea, nb, na
    nc = tuple(x + y for x, y in zip(na, nb))
    at = a * _binom_tensor(na)
    bt = b * _binom_tensor(nb)
    aabs = np.abs(at)
    babs = np.abs(bt)
    out = np.zeros((N,) + tuple(n + 1 for n in nc))
    oabs = np.zeros_like(out)
    for J in itertools.product(*(range(n + 1) for n in nb)):
        sl = (slice(None),) + tuple(slice(j, j + n + 1) for j, n in zip(J, na))
        idx = (slice(None),) + J
        coef = bt[idx].reshape((N,) + (1,) * len(na))
        cabs = babs[idx].reshape((N,) + (1,) * len(na))
        out[sl] += at * coef
        oabs[sl] += aabs * cabs
    denom = _binom_tensor(nc)
    out /= denom
    oabs /= denom
    terms = int(np.prod([n + 1 for n in nb]))
    am, bm = _absmax(a), _absmax(b)
    err = _gamma(terms + 4 * len(na) + 8) * _absmax(oabs) + am * eb + ea * bm + ea * eb
    return out, np.nextafter(err * (1 + 4 * _U), np.inf)


def _elevate(a, ea, degrees):
    cur = tuple(s - 1 for s in a.shape[1:])
    if cur == tuple(degrees):
        return a, ea
    ones = np.ones((a.shape[0],) + tuple(t - c + 1 for t, c in zip(degrees, cur)))
    return _product(a, ea, ones, np.zeros(a.shape[0]))


class ExprEncloser:
    """Enclosures for a :class:`~polyrep.expr.PolyExpr` in Bernstein form.

    Products and powers are carried out on Bernstein coefficients, whose
    weights are all positive, so high powers of bounded factors stay well
    conditioned where the expanded power basis would cancel catastrophically.
    """

    def __init__(self, expr, degrees: tuple[int, ...] | None = None):
        from ..expr import Leaf, Power, Product, Scale, Sum

        self._kinds = (Leaf, Sum, Product, Power, Scale)
        self.expr = expr
        self.dim = expr.dim
        own = tuple(expr.degree_in(j) for j in range(expr.dim))
        self.degrees = tuple(degrees) if degrees is not None else own
        if any(a < b for a, b in zip(self.degrees, own)):
            raise ValueError("requested degrees do not cover the expression")
        self.shape = tuple(v + 1 for v in self.degrees)
        self._leaf_cache: dict[int, BernsteinEncloser] = {}

    def _eval(self, node, lo, hi):
        Leaf, Sum, Product, Power, Scale = self._kinds
        if isinstance(node, Leaf):
            enc = self._leaf_cache.get(id(node))
            if enc is None:
                enc = BernsteinEncloser(node.poly)
                self._leaf_cache[id(node)] = enc
            e = enc.enclose(lo, hi)
            return e.coeffs, e.err
        if isinstance(node, Scale):
            a, ea = self._eval(node.arg, lo, hi)
            c = float(node.factor)
            err = abs(c) * ea + _gamma(2) * abs(c) * _absmax(a)
            return a * c, np.nextafter(err, np.inf)
        if isinstance(node, Sum):
            deg = tuple(node.degree_in(j) for j in range(node.dim))
            parts = [_elevate(*self._eval(t, lo, hi), deg) for t in node.terms]
            tot = np.zeros_like(parts[0][0])
            err = np.zeros(lo.shape[0])
            mag = np.zeros(lo.shape[0])
            for a, ea in parts:
                tot = tot + a
                err = err + ea
                mag = mag + _absmax(a)
            err = err + _gamma(len(parts) + 2) * mag
            return tot, np.nextafter(err, np.inf)
        if isinstance(node, Product):
            a, ea = self._eval(node.factors[0], lo, hi)
            for f in node.factors[1:]:
                b, eb = self._eval(f, lo, hi)
                a, ea = _product(a, ea, b, eb)
            return a, ea
        if isinstance(node, Power):
            base, eb = self._eval(node.base, lo, hi)
            e = node.exponent
            N = lo.shape[0]
            res = np.ones((N,) + (1,) * self.dim)
            er = np.zeros(N)
            while e:
                if e & 1:
                    res, er = _product(res, er, base, eb)
                e >>= 1
                if e:
                    base, eb = _product(base, eb, base, eb)
            return res, er
        raise TypeError(f"cannot enclose node {type(node).__name__}")

    def enclose(self, lo, hi) -> Enclosure:
        lo = np.atleast_2d(np.asarray(lo, dtype=float))
        hi = np.atleast_2d(np.asarray(hi, dtype=float))
        a, ea = self._eval(self.expr, lo, hi)
        a, ea = _elevate(a, ea, self.degrees)
        N = lo.shape[0]
        flat = a.reshape(N, -1)
        lower = np.nextafter(flat.min(axis=1) - ea, -np.inf)
        upper = np.nextafter(flat.max(axis=1) + ea, np.inf)
        bad = ~np.isfinite(lower) | ~np.isfinite(upper)
        lower = np.where(bad, -np.inf, lower)
        upper = np.where(bad, np.inf, upper)
        return Enclosure(lower, upper, a, ea)

    def bounds(self, lo, hi):
        enc = self.enclose(lo, hi)
        return enc.lower, enc.upper


def make_encloser(obj, degrees: tuple[int, ...] | None = None):
    """Encloser for a polynomial or an expression tree."""
    from ..expr import Leaf, PolyExpr

    if isinstance(obj, Leaf):
        obj = obj.poly
    if isinstance(obj, Polynomial):
        return BernsteinEncloser(obj, degrees)
    if isinstance(obj, PolyExpr):
        return ExprEncloser(obj, degrees)
    raise TypeError(f"cannot enclose {type(obj).__name__}")


def degrees_of(obj) -> tuple[int, ...]:
    return tuple(obj.degree_in(j) for j in range(obj.dim))
