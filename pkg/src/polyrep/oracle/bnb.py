"""Batched branch-and-bound over boxes.

Boxes are kept as ``(lo, hi)`` rows of NumPy arrays and processed in batches,
so one enclosure call covers many boxes at once. Drivers:

* :func:`maximize`: certified upper bound (and witnessed lower bound) of an
  objective over ``box ∩ {c_i >= 0}``;
* :func:`certify_nonneg`: prove ``F >= -slack`` on ``box ∩ {c_i >= 0}`` or
  find a vertex witness where it fails;
* :func:`feasible_boxes`: refine boxes that may meet an approximate
  equality system, for active-set searches.
"""

from __future__ import annotations

import heapq
import itertools
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.optimize import minimize as _local_min

from .bernstein import _U, _gamma, common_degrees, make_encloser
from .config import OracleConfig
from .verdict import Verdict

BATCH = 128


@dataclass
class BoundResult:
    lower: float
    upper: float
    verdict: Verdict
    argmax: np.ndarray | None = None
    boxes: int = 0
    stats: dict = field(default_factory=dict)


def _as_arrays(boxes) -> tuple[np.ndarray, np.ndarray]:
    """Accept a Box, a list of Boxes, or ``(lo, hi)`` arrays."""
    from .interval import Box

    if isinstance(boxes, Box):
        boxes = [boxes]
    if isinstance(boxes, tuple) and len(boxes) == 2 and isinstance(boxes[0], np.ndarray):
        lo, hi = boxes
        return np.atleast_2d(lo).astype(float), np.atleast_2d(hi).astype(float)
    lo = np.array([b.lo for b in boxes], dtype=float)
    hi = np.array([b.hi for b in boxes], dtype=float)
    return lo, hi


def _split(lo, hi, depth, scale):
    """Bisect each box along its widest (scaled) side."""
    rel = (hi - lo) / scale
    ax = np.argmax(rel, axis=1)
    rows = np.arange(lo.shape[0])
    mid = 0.5 * (lo[rows, ax] + hi[rows, ax])
    lo1, hi1 = lo.copy(), hi.copy()
    hi1[rows, ax] = mid
    lo2, hi2 = lo.copy(), hi.copy()
    lo2[rows, ax] = mid
    return (
        np.concatenate([lo1, lo2]),
        np.concatenate([hi1, hi2]),
        np.concatenate([depth + 1, depth + 1]),
    )


def _vertices(lo, hi, bits):
    """Corner coordinates, shape ``(N, 2^d, d)``."""
    return np.where(bits[None, :, :] == 1, hi[:, None, :], lo[:, None, :])


class _Constraints:
    def __init__(self, constraints: Sequence):
        self.items = list(constraints)
        self.enc = [make_encloser(c) for c in self.items]

    def __len__(self):
        return len(self.items)

    def enclose(self, lo, hi):
        return [e.enclose(lo, hi) for e in self.enc]


def _feasibility(encs, n):
    """Per-box masks: infeasible (some upper < 0) and fully feasible."""
    infeasible = np.zeros(n, dtype=bool)
    inside = np.ones(n, dtype=bool)
    for e in encs:
        infeasible |= e.upper < 0
        inside &= e.lower >= 0
    return infeasible, inside


def _vertex_feasible(encs, n, nv, feas_tol=0.0):
    ok = np.ones((n, nv), dtype=bool)
    for e in encs:
        _, vlo, _ = e.vertex_bounds()
        ok &= vlo >= -feas_tol
    return ok


def _polish(objective, constraints, x0, lo, hi):
    """Local constrained ascent from ``x0``; returns a point or None."""
    f = lambda x: -float(objective.evaluate_many(x[None, :])[0])
    cons = [{"type": "ineq", "fun": (lambda x, c=c: float(c.evaluate_many(x[None, :])[0]))}
            for c in constraints]
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = _local_min(f, x0, method="SLSQP", constraints=cons,
                             bounds=list(zip(lo, hi)), options={"maxiter": 100, "ftol": 1e-15})
    except (ValueError, ArithmeticError):
        return None
    x = np.clip(res.x, lo, hi)
    return x if np.all(np.isfinite(x)) else None


def maximize(objective, constraints: Sequence, boxes, *, atol: float = 1e-6,
             rtol: float = 0.0, cfg: OracleConfig | None = None,
             feas_tol: float = 1e-12, lagrange: bool = True) -> BoundResult:
    """Certified bounds on ``sup objective`` over ``boxes ∩ {c >= 0}``.

    ``upper`` is always a sound upper bound. ``lower`` is a certified value
    attained at a box vertex where every constraint is at least
    ``-feas_tol`` (``-inf`` if none was found); it measures accuracy only.
    PROVED means ``upper - lower <= max(atol, rtol*|lower|)``; an empty
    feasible set yields ``upper = -inf`` with PROVED.
    """
    cfg = cfg or OracleConfig()
    lo, hi = _as_arrays(boxes)
    scale = np.maximum(hi.max(axis=0) - lo.min(axis=0), 1e-300)
    obj = make_encloser(objective)
    cons = _Constraints(constraints)
    lag = _Lagrange(objective, constraints) if (lagrange and len(cons)) else None
    d = lo.shape[1]
    bits = np.array(list(itertools.product((0, 1), repeat=d)), dtype=int)

    best_lb, best_x = -np.inf, None
    processed = 0
    act_lo = np.empty((0, d))
    act_hi = np.empty((0, d))
    act_ub = np.empty(0)
    act_depth = np.empty(0, dtype=int)
    stuck_ub = -np.inf
    # the witness may be feasible only to feas_tol, so its value can exceed the
    # true supremum; boxes pruned against it still cap the reported upper bound
    pruned_ub = -np.inf

    def absorb(clo, chi, cdepth):
        nonlocal best_lb, best_x, act_lo, act_hi, act_ub, act_depth, pruned_ub
        n = clo.shape[0]
        eo = obj.enclose(clo, chi)
        ecs = cons.enclose(clo, chi)
        infeasible, _ = _feasibility(ecs, n)
        vok = _vertex_feasible(ecs, n, len(bits), feas_tol)
        _, vlo, _ = eo.vertex_bounds()
        cand = np.where(vok & ~infeasible[:, None], vlo, -np.inf)
        if cand.size:
            i, j = np.unravel_index(np.argmax(cand), cand.shape)
            if cand[i, j] > best_lb:
                best_lb = float(cand[i, j])
                best_x = np.where(bits[j] == 1, chi[i], clo[i])
        ub = eo.upper.copy()
        if lag is not None:
            straddle = np.stack([(e.lower < 0) & (e.upper >= 0) for e in ecs], axis=1)
            target = best_lb + max(atol, rtol * abs(best_lb)) if np.isfinite(best_lb) else np.inf
            cand = ~infeasible & straddle.any(axis=1) & (ub > target)
            if cand.any():
                lp = lag.upper_bounds(clo[cand], chi[cand], straddle[cand])
                idx = np.flatnonzero(cand)
                good = np.isfinite(lp)
                ub[idx[good]] = np.minimum(ub[idx[good]], lp[good])
        keep = ~infeasible & (ub >= best_lb)
        dropped = ~infeasible & ~keep
        if dropped.any():
            pruned_ub = max(pruned_ub, float(ub[dropped].max()))
        act_lo = np.concatenate([act_lo, clo[keep]])
        act_hi = np.concatenate([act_hi, chi[keep]])
        act_ub = np.concatenate([act_ub, ub[keep]])
        act_depth = np.concatenate([act_depth, cdepth[keep]])

    glo, ghi = lo.min(axis=0), hi.max(axis=0)

    def polish(x0):
        nonlocal best_lb, best_x
        x = _polish(objective, cons.items, x0, glo, ghi)
        if x is None:
            return
        pt = x[None, :]
        for e in cons.enc:
            if e.enclose(pt, pt).lower[0] < -feas_tol:
                return
        v = float(obj.enclose(pt, pt).lower[0])
        if v > best_lb:
            best_lb, best_x = v, x

    absorb(lo, hi, np.zeros(lo.shape[0], dtype=int))
    processed += lo.shape[0]
    verdict = None
    rounds = 0
    while True:
        if rounds % 16 == 0 and act_ub.size:
            top = int(np.argmax(act_ub))
            polish(best_x if (best_x is not None and rounds == 0) else 0.5 * (act_lo[top] + act_hi[top]))
        rounds += 1
        if act_ub.size:
            keep = act_ub >= best_lb
            if not keep.all():
                pruned_ub = max(pruned_ub, float(act_ub[~keep].max()))
            act_lo, act_hi, act_ub, act_depth = act_lo[keep], act_hi[keep], act_ub[keep], act_depth[keep]
        upper = max(float(act_ub.max()) if act_ub.size else -np.inf, stuck_ub, pruned_ub)
        if upper == -np.inf:
            verdict = Verdict.proved("feasible set is empty")
            break
        gap_ok = np.isfinite(best_lb) and upper - best_lb <= max(atol, rtol * abs(best_lb))
        if gap_ok:
            verdict = Verdict.proved()
            break
        if not act_ub.size:
            verdict = Verdict.unknown("depth limit reached", gap=upper - best_lb)
            break
        if processed >= cfg.max_boxes:
            verdict = Verdict.unknown("box budget exhausted", gap=upper - best_lb)
            break
        order = np.argsort(-act_ub)
        take = order[:BATCH]
        rest = order[BATCH:]
        slo, shi, sdepth = act_lo[take], act_hi[take], act_depth[take]
        deep = sdepth >= cfg.max_depth
        if deep.any():
            stuck_ub = max(stuck_ub, float(act_ub[take][deep].max()))
        act_lo, act_hi, act_ub, act_depth = act_lo[rest], act_hi[rest], act_ub[rest], act_depth[rest]
        slo, shi, sdepth = slo[~deep], shi[~deep], sdepth[~deep]
        if slo.shape[0]:
            clo, chi, cdepth = _split(slo, shi, sdepth, scale)
            absorb(clo, chi, cdepth)
            processed += clo.shape[0]
    upper = max(float(act_ub.max()) if act_ub.size else -np.inf, stuck_ub, pruned_ub)
    return BoundResult(best_lb, upper, verdict, best_x, processed)


def minimize(objective, constraints: Sequence, boxes, **kw) -> BoundResult:
    r = maximize(-objective, constraints, boxes, **kw)
    return BoundResult(-r.upper, -r.lower, r.verdict, r.argmax, r.boxes, r.stats)


# -- nonnegativity certificates ---------------------------------------------

def _solve_one(bf, b, sign, iters: int = 80):
    """Single multiplier: minimise the convex envelope ``max_j (a_j + nu*c_j)``
    over ``nu >= 0`` by bisection on its right slope. Any ``nu >= 0`` is
    sound; this only has to be a good one."""
    a = bf if sign > 0 else -bf
    c = b

    def phi(nu):
        return (a + nu * c).max()

    def slope(nu):
        v = a + nu * c
        return c[v >= v.max()].max()

    if slope(0.0) >= 0:
        return np.array([0.0])
    big = 1e8 * max(1.0, float(np.abs(bf).max()))
    hi = 1.0
    while slope(hi) < 0 and hi < big:
        hi *= 2
    lo = 0.0 if hi == 1.0 else hi / 2
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if slope(mid) < 0:
            lo = mid
        else:
            hi = mid
    return np.array([lo if phi(lo) <= phi(hi) else hi])


class _Lagrange:
    """Per-box LP that searches multipliers ``nu >= 0`` with
    ``F - sum nu_i c_i`` having nonnegative Bernstein coefficients."""

    def __init__(self, F, constraints):
        degs = common_degrees([F] + list(constraints))
        self.F = make_encloser(F, degs)
        self.C = [make_encloser(c, degs) for c in constraints]

    def _solve(self, bf, B, sign):
        """Multipliers minimising the largest (sign=+1) or maximising the
        smallest (sign=-1) Bernstein coefficient of ``F + sign * B @ nu``."""
        m = B.shape[1]
        if m == 1:
            return _solve_one(bf, B[:, 0], sign)
        A = np.hstack([sign * B, -np.ones((bf.size, 1))]) if sign > 0 else np.hstack([B, np.ones((bf.size, 1))])
        big = 1e8 * max(1.0, np.abs(bf).max())
        rhs = -bf if sign > 0 else bf
        c = np.r_[np.zeros(m), 1.0] if sign > 0 else np.r_[np.zeros(m), -1.0]
        try:
            res = linprog(c=c, A_ub=A, b_ub=rhs, bounds=[(0, big)] * m + [(None, None)], method="highs")
        except ValueError:
            return None
        if res.status != 0:
            return None
        return np.maximum(res.x[:m], 0.0)

    def _run(self, lo, hi, which, sign):
        n = lo.shape[0]
        out = np.full(n, np.nan)
        if not self.C or n == 0:
            return out
        ef = self.F.enclose(lo, hi)
        ecs = [c.enclose(lo, hi) for c in self.C]
        for b in range(n):
            idx = [i for i in range(len(self.C)) if which[b, i]]
            if not idx:
                continue
            bf = ef.coeffs[b].ravel()
            B = np.stack([ecs[i].coeffs[b].ravel() for i in idx], axis=1)
            nu = self._solve(bf, B, sign)
            if nu is None:
                continue
            G = bf + sign * (B @ nu)
            err = ef.coeff_err()[b] + sum(nu[k] * ecs[i].coeff_err()[b] for k, i in enumerate(idx))
            mag = np.abs(bf) + np.abs(B) @ nu
            pad = (err + _gamma(len(idx) + 3) * mag) * (1 + 4 * _U)
            out[b] = (G + pad).max() if sign > 0 else (G - pad).min()
        return out

    def lower_bounds(self, lo, hi, which) -> np.ndarray:
        """Rigorous lower bounds of F on ``box ∩ {c >= 0}`` (NaN if no LP)."""
        return self._run(lo, hi, which, -1)

    def upper_bounds(self, lo, hi, which) -> np.ndarray:
        """Rigorous upper bounds of F on ``box ∩ {c >= 0}`` (NaN if no LP)."""
        return self._run(lo, hi, which, +1)


def certify_nonneg(F, constraints: Sequence, boxes, *, slack: float = 0.0,
                   cfg: OracleConfig | None = None, lagrange: bool = True) -> Verdict:
    """Prove ``F >= -slack`` on ``boxes ∩ {c_i >= 0}``.

    REFUTED carries a box vertex that is certified feasible and where ``F`` is
    certified below ``-slack``.
    """
    cfg = cfg or OracleConfig()
    lo, hi = _as_arrays(boxes)
    d = lo.shape[1]
    scale = np.maximum(hi.max(axis=0) - lo.min(axis=0), 1e-300)
    fenc = make_encloser(F)
    cons = _Constraints(constraints)
    lag = _Lagrange(F, constraints) if (lagrange and len(cons)) else None
    bits = np.array(list(itertools.product((0, 1), repeat=d)), dtype=int)
    depth = np.zeros(lo.shape[0], dtype=int)
    processed = 0
    stuck = 0
    worst = np.inf
    while lo.shape[0]:
        if processed >= cfg.max_boxes:
            return Verdict.unknown("box budget exhausted", open_boxes=int(lo.shape[0]), lower=worst)
        take = slice(0, BATCH * 4)
        blo, bhi, bdepth = lo[take], hi[take], depth[take]
        lo, hi, depth = lo[BATCH * 4:], hi[BATCH * 4:], depth[BATCH * 4:]
        n = blo.shape[0]
        processed += n
        ef = fenc.enclose(blo, bhi)
        ecs = cons.enclose(blo, bhi)
        infeasible, inside = _feasibility(ecs, n)
        done = infeasible | (ef.lower >= -slack)
        # refutation at certified-feasible vertices
        vok = _vertex_feasible(ecs, n, len(bits))
        _, _, vhi = ef.vertex_bounds()
        bad = vok & (vhi < -slack) & ~infeasible[:, None]
        if bad.any():
            i, j = np.argwhere(bad)[0]
            w = np.where(bits[j] == 1, bhi[i], blo[i])
            return Verdict.refuted(w, "value below bound at a feasible point", value=float(vhi[i, j]))
        und = ~done
        if lag is not None and und.any():
            straddle = np.stack([(e.lower < 0) & (e.upper >= 0) for e in ecs], axis=1)
            cand = und & straddle.any(axis=1)
            if cand.any():
                lb = lag.lower_bounds(blo[cand], bhi[cand], straddle[cand])
                ok = lb >= -slack
                idx = np.flatnonzero(cand)
                und[idx[ok]] = False
        if und.any():
            worst = min(worst, float(ef.lower[und].min()))
        deep = und & (bdepth >= cfg.max_depth)
        stuck += int(deep.sum())
        und &= ~deep
        if und.any():
            clo, chi, cdepth = _split(blo[und], bhi[und], bdepth[und], scale)
            lo = np.concatenate([clo, lo])
            hi = np.concatenate([chi, hi])
            depth = np.concatenate([cdepth, depth])
    if stuck:
        return Verdict.unknown("depth limit reached", stuck_boxes=stuck, lower=worst)
    return Verdict.proved(boxes=processed)


# -- feasibility refinement -------------------------------------------------

@dataclass
class FeasibleSearch:
    lo: np.ndarray
    hi: np.ndarray
    witness: np.ndarray | None
    exhausted: bool
    capped: bool
    boxes: int


def feasible_boxes(residual, constraints: Sequence, boxes, *, eq_tol: float,
                   ineq_tol: float, min_width: float, cfg: OracleConfig,
                   first_only: bool = False, cap: int = 20000) -> FeasibleSearch:
    """Boxes that may contain ``x`` with ``residual(x) <= eq_tol`` and every
    constraint ``>= -ineq_tol``.

    Boxes are refined until narrower than ``min_width``. With
    ``first_only`` the search is depth-first and stops at the first point
    that numerically satisfies the system. ``capped`` reports that more than
    ``cap`` candidate boxes were alive at once.
    """
    lo, hi = _as_arrays(boxes)
    scale = np.maximum(hi.max(axis=0) - lo.min(axis=0), 1e-300)
    renc = make_encloser(residual)
    cons = _Constraints(constraints)
    depth = np.zeros(lo.shape[0], dtype=int)
    processed = 0

    def screen(blo, bhi):
        er = renc.enclose(blo, bhi)
        keep = er.lower <= eq_tol
        for e in cons.enclose(blo, bhi):
            keep &= e.upper >= -ineq_tol
        return keep, er.lower

    def point_ok(pts):
        ok = residual.evaluate_many(pts) <= eq_tol
        for c in cons.items:
            ok &= c.evaluate_many(pts) >= -ineq_tol
        return ok

    keep, lows = screen(lo, hi)
    lo, hi, depth, lows = lo[keep], hi[keep], depth[keep], lows[keep]
    processed += keep.size

    if first_only:
        counter = itertools.count()
        heap = [(0, lows[i], next(counter), lo[i], hi[i]) for i in range(lo.shape[0])]
        heapq.heapify(heap)
        while heap:
            if processed >= cfg.max_boxes:
                return FeasibleSearch(np.empty((0, lo.shape[1])), np.empty((0, lo.shape[1])), None, False, True, processed)
            batch = [heapq.heappop(heap) for _ in range(min(len(heap), 16))]
            blo = np.array([b[3] for b in batch])
            bhi = np.array([b[4] for b in batch])
            bdep = np.array([-b[0] for b in batch])
            centers = 0.5 * (blo + bhi)
            ok = point_ok(centers)
            if ok.any():
                return FeasibleSearch(blo[ok], bhi[ok], centers[np.argmax(ok)], False, False, processed)
            small = (bhi - blo).max(axis=1) <= min_width
            if small.any():
                i = int(np.argmax(small))
                return FeasibleSearch(blo[small], bhi[small], centers[i], False, False, processed)
            clo, chi, cdep = _split(blo, bhi, bdep, scale)
            k, l2 = screen(clo, chi)
            processed += k.size
            for i in np.flatnonzero(k):
                heapq.heappush(heap, (-int(cdep[i]), l2[i], next(counter), clo[i], chi[i]))
        return FeasibleSearch(np.empty((0, lo.shape[1])), np.empty((0, lo.shape[1])), None, True, False, processed)

    done_lo, done_hi = [], []
    capped = False
    while lo.shape[0]:
        if lo.shape[0] > cap or processed >= cfg.max_boxes:
            capped = True
            done_lo.append(lo)
            done_hi.append(hi)
            break
        small = (hi - lo).max(axis=1) <= min_width
        done_lo.append(lo[small])
        done_hi.append(hi[small])
        lo, hi, depth = lo[~small], hi[~small], depth[~small]
        if not lo.shape[0]:
            break
        clo, chi, cdep = _split(lo, hi, depth, scale)
        k, _ = screen(clo, chi)
        processed += k.size
        lo, hi, depth = clo[k], chi[k], cdep[k]
    flo = np.concatenate(done_lo) if done_lo else np.empty((0, scale.size))
    fhi = np.concatenate(done_hi) if done_hi else np.empty((0, scale.size))
    wit = None
    if flo.shape[0]:
        c = 0.5 * (flo + fhi)
        ok = point_ok(c)
        wit = c[np.argmax(ok)] if ok.any() else c[0]
    return FeasibleSearch(flo, fhi, wit, not capped, capped, processed)
