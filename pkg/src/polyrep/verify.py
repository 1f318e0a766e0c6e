"""Independent checks of reductions and approximations on point grids.

Nothing here is a proof: grids sample the sets, and the reports say so.
The checks are deliberately separate from the construction code so that a
wrong construction cannot vouch for itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import construct as C
from .construct import ParameterSet, PipelineError
from .expr import PolyExpr
from .oracle import Box, OracleConfig
from .poly import Polynomial
from .system import SemiAlgebraicSystem, as_system

CHUNK = 250_000


def _members(obj) -> list:
    if isinstance(obj, C.Reduction):
        return obj.normalized
    if isinstance(obj, SemiAlgebraicSystem):
        return list(obj.polys)
    if isinstance(obj, (Polynomial, PolyExpr)):
        return [obj]
    return list(obj)


def _values(polys, pts: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        return np.stack([p.evaluate_many(pts) for p in polys], axis=1)


def grid_points(box: Box, resolution: int | Sequence[int]) -> np.ndarray:
    d = box.dim
    res = [int(resolution)] * d if np.isscalar(resolution) else [int(r) for r in resolution]
    if any(r < 2 for r in res):
        raise ValueError("resolution must be at least 2 per axis")
    axes = [np.linspace(iv.lo, iv.hi, r) for iv, r in zip(box.intervals, res)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass
class EquivalenceReport:
    box: list
    resolution: int
    tol: float
    points: int
    band: int
    closed_agree: int
    closed_disagree: int
    open_agree: int
    open_disagree: int
    max_violation: float
    examples: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.closed_disagree == 0 and self.open_disagree == 0

    def to_dict(self) -> dict:
        return {
            "grid": {"box": self.box, "resolution": self.resolution, "points": self.points},
            "tol": self.tol,
            "boundary_band": self.band,
            "closed": {"agree": self.closed_agree, "disagree": self.closed_disagree},
            "open": {"agree": self.open_agree, "disagree": self.open_disagree},
            "max_violation": self.max_violation,
            "examples": self.examples,
            "passed": self.passed,
        }


def grid_equivalence(a, b, box: Box, resolution: int = 201, tol: float = 1e-7) -> EquivalenceReport:
    """Compare closed (all ``>= -tol``) and open (all ``> tol``) membership of two
    systems on a grid. Points within ``tol`` of a zero level of either system
    form the boundary band and are not compared."""
    A, B = _members(a), _members(b)
    pts_all = grid_points(box, resolution)
    band = ca = cd = oa = od = 0
    worst = 0.0
    examples: list = []
    for i in range(0, len(pts_all), CHUNK):
        pts = pts_all[i:i + CHUNK]
        va, vb = _values(A, pts), _values(B, pts)
        va = np.where(np.isnan(va), -np.inf, va)
        vb = np.where(np.isnan(vb), -np.inf, vb)
        in_band = (np.abs(va) <= tol).any(axis=1) | (np.abs(vb) <= tol).any(axis=1)
        keep = ~in_band
        band += int(in_band.sum())
        closed_a, closed_b = (va >= -tol).all(axis=1), (vb >= -tol).all(axis=1)
        open_a, open_b = (va > tol).all(axis=1), (vb > tol).all(axis=1)
        c_bad = keep & (closed_a != closed_b)
        o_bad = keep & (open_a != open_b)
        ca += int((keep & ~c_bad).sum())
        cd += int(c_bad.sum())
        oa += int((keep & ~o_bad).sum())
        od += int(o_bad.sum())
        bad = c_bad | o_bad
        if bad.any():
            margin = np.maximum(np.abs(va.min(axis=1)), np.abs(vb.min(axis=1)))[bad]
            margin = margin[np.isfinite(margin)]
            if margin.size:
                worst = max(worst, float(margin.max()))
            for p in pts[bad][: max(0, 5 - len(examples))]:
                examples.append([float(v) for v in p])
    return EquivalenceReport(box.to_list(), int(resolution), tol, len(pts_all), band,
                             ca, cd, oa, od, worst, examples)


# -- Hausdorff distance ---------------------------------------------------------

@dataclass
class HausdorffEstimate:
    estimate: float
    lower: float
    upper: float
    box: list
    resolution: list[int]
    cell: float
    note: str = "grid sample; bounds assume each set is resolved at the grid spacing"

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate, "lower": self.lower, "upper": self.upper,
            "grid": {"box": self.box, "resolution": self.resolution, "cell_diameter": self.cell},
            "note": self.note,
        }


def hausdorff_estimate(a, b, box: Box, resolution: int | Sequence[int] = 401) -> HausdorffEstimate:
    """Symmetric max-min distance between the closed sets of two systems,
    taken over their grid points; bounds are widened by one cell diameter."""
    pts = grid_points(box, resolution)
    A, B = _members(a), _members(b)
    ma = (np.nan_to_num(_values(A, pts), nan=-np.inf) >= 0).all(axis=1)
    mb = (np.nan_to_num(_values(B, pts), nan=-np.inf) >= 0).all(axis=1)
    if not ma.any() or not mb.any():
        raise ValueError("a set has no grid points in the box")
    pa, pb = pts[ma], pts[mb]
    d_ab = float(cKDTree(pb).query(pa)[0].max())
    d_ba = float(cKDTree(pa).query(pb)[0].max())
    est = max(d_ab, d_ba)
    res = [int(resolution)] * box.dim if np.isscalar(resolution) else [int(r) for r in resolution]
    steps = box.widths / (np.array(res) - 1)
    cell = float(np.sqrt((steps ** 2).sum()))
    return HausdorffEstimate(est, max(0.0, est - cell), est + cell, box.to_list(), res, cell)


def _resolution_for(box: Box, target_cell: float, cap: int = 2_000_000) -> list[int]:
    d = box.dim
    step = target_cell / math.sqrt(d)
    res = [max(2, int(math.ceil(w / step)) + 1) for w in box.widths]
    while np.prod(res) > cap:
        res = [max(2, (r + 1) // 2 * 1) if r > 2 else r for r in res]
        res = [max(2, int(r * 0.8)) for r in res]
    return res


# -- sandwich ---------------------------------------------------------------------

def sandwich_check(system, g, M: int, eps: float, box: Box, resolution: int = 201,
                   tol: float = 1e-10) -> dict:
    """Count grid violations of: ``g < 1`` on the interior set, ``g <= 1 + tol``
    on P, and the relaxed constraints wherever ``g <= 1``."""
    S = as_system(system)
    pts = grid_points(box, resolution)
    vals = S.values(pts)
    with np.errstate(over="ignore", invalid="ignore"):
        gv = g.evaluate_many(pts)
    w = (1 + (pts ** 2).sum(axis=1)) ** M
    relaxed = vals * w[:, None]
    in_p = (vals >= 0).all(axis=1)
    in_p0 = (vals > 0).all(axis=1)
    slack = 1e-12 * max(1.0, float(np.abs(relaxed).max()))
    sub = gv <= 1
    out = {
        "points": int(len(pts)),
        "interior_violations": int((in_p0 & ~(gv < 1)).sum()),
        "closed_violations": int((in_p & ~(gv <= 1 + tol)).sum()),
        "relaxed_violations": int((sub & ~(relaxed >= -eps - slack).all(axis=1)).sum()),
        "interior_points": int(in_p0.sum()),
        "sublevel_points": int(sub.sum()),
    }
    out["passed"] = out["interior_violations"] == 0 and out["closed_violations"] == 0 \
        and out["relaxed_violations"] == 0
    return out


def local_representation_check(system, n: int, M: int, eps: float, box: Box,
                               resolution: int = 201) -> dict:
    """On grid points of the relaxation, membership in P should coincide with
    ``sigma_{s-n+1}, ..., sigma_s >= 0``."""
    S = as_system(system)
    pts = grid_points(box, resolution)
    vals = S.values(pts)
    w = (1 + (pts ** 2).sum(axis=1)) ** M
    region = (vals * w[:, None] >= -eps).all(axis=1)
    from .elemsym import elem_sym_array
    sig = elem_sym_array(vals)
    in_p = (vals >= 0).all(axis=1)
    via = (sig[:, S.s - n:] >= 0).all(axis=1)
    # skip points where some constraint is within rounding of zero
    clear = (np.abs(vals) > 1e-12).all(axis=1)
    bad = region & clear & (in_p != via)
    return {"points": int(region.sum()), "disagree": int(bad.sum()), "passed": not bad.any()}


# -- approximation operations ----------------------------------------------------

@dataclass
class Approximation:
    q: PolyExpr
    M: int
    eps: float
    lam: float
    k: int
    hausdorff: HausdorffEstimate
    box: Box
    params: ParameterSet | None = None
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "polynomial": self.q.to_dict(),
            "parameters": {"M": self.M, "eps": self.eps, "lam": self.lam, "k": self.k},
            "hausdorff": self.hausdorff.to_dict(),
            "history": self.history,
        }
        if self.params is not None:
            out["parameters"] = self.params.to_dict()
        return out


def _hausdorff_box(ctx) -> Box:
    return ctx.outer


def approx_polynomial(system, eps: float, cfg: OracleConfig | None = None,
                      eps_min: float = 2.0 ** -14) -> Approximation:
    """``q = 1 - g`` whose nonnegativity set is within Hausdorff distance ``eps`` of P.

    The relaxation parameter is halved from ``eps0`` until the grid upper
    bound on the distance is at most ``eps``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    ctx = C.prepare(system, cfg)
    S, me = ctx.system, ctx.me
    lam, _ = C.find_lambda(S, me.M, ctx.box, ctx.cfg)
    box = ctx.box.pad(me.eps0 + 0.25)
    res = _resolution_for(box, eps / 4)
    e = me.eps0
    history = []
    while e >= eps_min:
        k = C.find_k(S.s, e, lam)
        q = 1 - C.build_g(S, me.M, lam, k)
        h = hausdorff_estimate(S, [q], box, res)
        history.append({"eps": e, "k": k, "upper": h.upper})
        if h.upper <= eps:
            return Approximation(q, me.M, e, lam, k, h, box, history=history)
        e /= 2
    raise PipelineError("Hausdorff target not reached", "approx_polynomial")


def approx_polynomial_vanishing(system, X, eps: float, cfg: OracleConfig | None = None,
                                eps_min: float = 2.0 ** -12) -> Approximation:
    """``q = sigma_{s-n+1} - g**l h**m`` vanishing on ``X`` and within
    Hausdorff distance ``eps`` of P."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    ctx = C.prepare(system, cfg)
    S, me, cfg = ctx.system, ctx.me, ctx.cfg
    X = [tuple(float(c) for c in v) for v in X]
    if not X:
        raise C.InputError("X is empty")
    n = C.n_from_X(S, X)
    C._check_hypothesis(n, S.s)
    lam, lam_rec = C.find_lambda(S, me.M, ctx.box, cfg)
    e, eps_rec = C.select_eps(S, me.M, me.eps0 / 2, n, ctx.outer, cfg, factor=2)
    mu, mu_rec = C.find_mu(S, ctx.box, cfg)
    base = {"M": me.record, "eps0": me.record, "eps": eps_rec, "lam": lam_rec, "mu": mu_rec}
    box = ctx.box.pad(me.eps0 + 0.25)
    res = _resolution_for(box, eps / 4)
    history = []
    while e >= eps_min:
        params = C.vanishing_parameters(ctx, X, n, lam, mu, e, base)
        q = C.build_q(S, X, params, n)
        h = hausdorff_estimate(S, [q], box, res)
        history.append({"eps": e, "l": params.l, "upper": h.upper})
        if h.upper <= eps:
            return Approximation(q, me.M, e, lam, params.k, h, box, params, history)
        e /= 2
    raise PipelineError("Hausdorff target not reached", "approx_polynomial_vanishing")


# -- reduction report -------------------------------------------------------------------

def verification_box(system, pad: float = 0.5, cfg: OracleConfig | None = None) -> Box:
    """Box around P padded on every side (P's box from the oracle)."""
    ctx = C.prepare(system, cfg)
    return ctx.box.pad(pad)


def verify_reduction(red: C.Reduction, box: Box | None = None, resolution: int = 201,
                     tol: float = 1e-7, cfg: OracleConfig | None = None) -> EquivalenceReport:
    if box is None:
        box = _fast_box(red.system, pad=0.5, cfg=cfg)
    return grid_equivalence(red.system, red, box, resolution, tol)


def _fast_box(system, pad: float, cfg: OracleConfig | None = None) -> Box:
    """Padded bounding box of P. Tries the oracle on a generous cube first."""
    from .oracle import bounding_box

    S = as_system(system)
    cfg = cfg or OracleConfig()
    for R in (4.0, 64.0, 1e3):
        box, _ = bounding_box(list(S), Box.cube(S.dim, R), cfg, rtol=1e-4)
        if box is None:
            continue
        if all(iv.lo > -R and iv.hi < R for iv in box.intervals):
            return box.pad(pad)
    return verification_box(S, pad, cfg)
