"""The oracle's public queries.

Each query answers one bounded-quantifier question about a polynomial
system with a :class:`~polyrep.oracle.verdict.Verdict`: PROVED and REFUTED
answers are sound, UNKNOWN is returned when the configured budget runs out.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize as _local_min
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ..poly import Polynomial
from .bernstein import make_encloser
from .bnb import BoundResult, certify_nonneg, feasible_boxes, maximize, minimize
from .config import OracleConfig
from .interval import Box, Interval
from .verdict import Kind, Verdict

log = logging.getLogger(__name__)


# -- ranges -------------------------------------------------------------------

@dataclass(frozen=True)
class RangeResult:
    """Enclosures of the minimum and the maximum of a polynomial on a box."""

    min_lo: float
    min_hi: float
    max_lo: float
    max_hi: float
    verdict: Verdict

    @property
    def lower(self) -> float:
        return self.min_lo

    @property
    def upper(self) -> float:
        return self.max_hi

    def __iter__(self):
        return iter((self.lower, self.upper, self.verdict))


def range_on_box(p, box: Box, tol: float = 1e-6, max_depth: int | None = None,
                 cfg: OracleConfig | None = None) -> RangeResult:
    """Certified range of ``p`` over ``box``.

    Both extrema are enclosed to width ``tol``; ``lower <= min <= max <= upper``
    always holds, and the verdict is UNKNOWN when the depth or box budget runs
    out before the enclosures are that narrow.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if isinstance(p, Polynomial) and p.degree <= 0:
        c = Interval.point(p.constant_term())
        return RangeResult(c.lo, c.hi, c.lo, c.hi, Verdict.proved("constant"))
    cfg = cfg or OracleConfig()
    if max_depth is not None:
        cfg = cfg.replace(max_depth=max_depth)
    hi = maximize(p, [], box, atol=tol, cfg=cfg)
    lo = minimize(p, [], box, atol=tol, cfg=cfg)
    ok = hi.verdict.is_proved and lo.verdict.is_proved
    verdict = Verdict.proved() if ok else Verdict.unknown("extremum not resolved to tol")
    # the witnessed values are attained, so they bracket the extrema
    return RangeResult(lo.lower, min(lo.upper, hi.upper), max(hi.lower, lo.lower), hi.upper, verdict)


@dataclass(frozen=True)
class FeasibleMax:
    upper: float
    lower: float
    verdict: Verdict
    argmax: tuple[float, ...] | None = None

    def __iter__(self):
        return iter((self.upper, self.verdict))


def max_on_feasible(objective, constraints: Sequence, box, tol: float = 1e-6,
                    rtol: float = 0.0, cfg: OracleConfig | None = None) -> FeasibleMax:
    """Certified upper bound on ``sup objective`` over ``box ∩ {c >= 0}``.

    An empty feasible set gives ``upper = -inf`` with PROVED.
    """
    r = maximize(objective, constraints, box, atol=tol, rtol=rtol, cfg=cfg)
    arg = tuple(float(v) for v in r.argmax) if r.argmax is not None else None
    return FeasibleMax(r.upper, r.lower, r.verdict, arg)


def min_on_feasible(objective, constraints: Sequence, box, tol: float = 1e-6,
                    rtol: float = 0.0, cfg: OracleConfig | None = None) -> FeasibleMax:
    """Certified lower bound (reported in ``upper``'s mirror, ``lower``)."""
    r = minimize(objective, constraints, box, atol=tol, rtol=rtol, cfg=cfg)
    arg = tuple(float(v) for v in r.argmax) if r.argmax is not None else None
    return FeasibleMax(r.upper, r.lower, r.verdict, arg)


def certify_positive(F, constraints: Sequence, box, cfg: OracleConfig | None = None) -> Verdict:
    """Prove ``F > 0`` on ``box ∩ {c >= 0}``."""
    return certify_nonneg(F, constraints, box, slack=-math.ulp(0.0), cfg=cfg)


def bounding_box(constraints: Sequence, box: Box, cfg: OracleConfig | None = None,
                 rtol: float = 1e-6) -> tuple[Box | None, Verdict]:
    """Certified coordinate bounds of ``box ∩ {c >= 0}`` (None when empty)."""
    cfg = cfg or OracleConfig()
    d = box.dim
    scale = float(np.max(np.abs(np.r_[box.lo, box.hi]))) or 1.0
    lo, hi = [], []
    status = Verdict.proved()
    for j in range(d):
        xj = Polynomial.variable(d, j)
        up = maximize(xj, constraints, box, atol=rtol * scale, cfg=cfg)
        dn = maximize(-xj, constraints, box, atol=rtol * scale, cfg=cfg)
        if up.upper == -np.inf or dn.upper == -np.inf:
            return None, Verdict.proved("feasible set is empty")
        if not (up.verdict.is_proved and dn.verdict.is_proved):
            status = Verdict.unknown("coordinate bound not resolved")
        lo.append(max(-dn.upper, box.lo[j]))
        hi.append(min(up.upper, box.hi[j]))
    return Box.from_bounds(lo, hi), status


# -- boundedness of relaxations ---------------------------------------------------

def relaxed_constraints(system: Sequence[Polynomial], M: int, eps) -> list[Polynomial]:
    """``(1 + |x|^2)^M p_i + eps`` for every ``p_i``."""
    d = system[0].dim
    w = Polynomial.norm_squared(d) + 1
    wM = w ** M if M else Polynomial.constant(d, 1)
    return [wM * p + eps for p in system]


@dataclass(frozen=True)
class EnclosureResult:
    """Outcome of a boundedness certification.

    ``scope`` is ``"global"`` when the exterior of the last shell was covered
    by the compactified leading-form test, and ``"r_max"`` when interval
    certification stopped at the outer shell and only the sampled growth test
    was run beyond it.
    """

    verdict: Verdict
    radius: float | None = None
    scope: str | None = None
    certified_to: float | None = None

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.to_dict(),
            "radius": self.radius,
            "scope": self.scope,
            "certified_to": self.certified_to,
        }


def _homogenized_face(r: Polynomial, eps: float, axis: int, sign: int) -> Polynomial:
    """``s^D (r(u/s) + eps)`` restricted to the cube face ``u_axis = sign``.

    Variables of the result: the remaining ``d-1`` coordinates of ``u`` then
    ``s``.
    """
    d = r.dim
    D = max(r.degree, 0)
    terms: dict[tuple[int, ...], float] = {}
    full = dict(r.items())
    full[(0,) * d] = full.get((0,) * d, 0) + eps
    for e, c in full.items():
        coef = c * (sign ** e[axis])
        rest = tuple(k for i, k in enumerate(e) if i != axis)
        key = rest + (D - sum(e),)
        terms[key] = terms.get(key, 0) + coef
    return Polynomial(d, terms)


def _exterior_empty(relaxed: Sequence[Polynomial], radius: float, cfg: OracleConfig,
                    budget: int) -> Verdict:
    """Prove that no ``x`` with ``|x|_inf >= radius`` satisfies every relaxed
    constraint, by compactifying ``x = u/s`` onto the cube faces."""
    d = relaxed[0].dim
    s0 = 1.0 / radius
    sub = cfg.replace(max_boxes=budget)
    for axis in range(d):
        for sign in (1, -1):
            hs = [_homogenized_face(r, 0.0, axis, sign) for r in relaxed]
            box = Box.from_bounds([-1.0] * (d - 1) + [0.0], [1.0] * (d - 1) + [s0])
            zero = Polynomial.zero(d)
            res = maximize(zero, hs, box, atol=0.0, cfg=sub, feas_tol=1e-12, lagrange=False)
            if res.upper != -np.inf:
                return Verdict.unknown("leading-form test undecided", face=(axis, sign))
    return Verdict.proved()


def _falsify_exterior(relaxed: Sequence[Polynomial], radii: Sequence[float],
                      cfg: OracleConfig) -> np.ndarray | None:
    """Search spheres of the given radii for a point meeting every relaxed
    constraint; returns a certified witness or None."""
    d = relaxed[0].dim
    rng = np.random.default_rng(cfg.seed)
    encs = [make_encloser(r) for r in relaxed]

    def score(pts):
        vals = np.stack([r.evaluate_many(pts) for r in relaxed], axis=1)
        scale = np.maximum(1.0, np.stack([np.abs(r.evaluate_many(pts)) for r in relaxed], axis=1))
        return (vals / scale).min(axis=1)

    def certified(x):
        pt = x[None, :]
        return all(e.enclose(pt, pt).lower[0] >= 0 for e in encs)

    for rad in radii:
        if d == 1:
            dirs = np.array([[1.0], [-1.0]])
        elif d == 2:
            th = np.linspace(0, 2 * np.pi, max(cfg.samples, 1000), endpoint=False)
            dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
        else:
            dirs = rng.normal(size=(cfg.samples, d))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        pts = rad * dirs
        sc = score(pts)
        for i in np.argsort(-sc)[:3]:
            x0 = pts[i]
            if certified(x0):
                return x0
            if d == 1 or sc[i] < -0.9:
                continue
            f = lambda v: -float(score((rad * v / np.linalg.norm(v))[None, :])[0])
            res = _local_min(f, x0 / rad, method="Nelder-Mead",
                             options={"xatol": 1e-13, "fatol": 1e-15, "maxiter": 4000})
            x = rad * res.x / np.linalg.norm(res.x)
            if certified(x):
                return x
    return None


def certify_enclosure(system: Sequence[Polynomial], M: int, eps, r_max: float | None = None,
                      cfg: OracleConfig | None = None) -> EnclosureResult:
    """Decide whether the relaxation ``{(1+|x|^2)^M p_i >= -eps}`` is bounded.

    Steps: a falsifier samples spheres beyond ``r_max`` for a relaxed-feasible
    point (REFUTED); cube shells of doubling radius are then bounded by
    branch-and-bound on ``|x|^2``; after the first empty shell, and after the
    last one, the exterior is tested through the compactified leading forms.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if M < 0:
        raise ValueError("M must be nonnegative")
    cfg = cfg or OracleConfig()
    r_max = cfg.r_max if r_max is None else float(r_max)
    d = system[0].dim
    relaxed = relaxed_constraints(system, M, eps)

    outside = [r_max * (1 + 2 ** -10)] + [r_max * 2.0 ** j for j in range(1, 21)]
    w = _falsify_exterior(relaxed, outside, cfg)
    if w is not None:
        return EnclosureResult(Verdict.refuted(w, "relaxed constraints hold far out",
                                               norm=float(np.linalg.norm(w))))

    radii = [1.0]
    while radii[-1] < r_max:
        radii.append(min(2 * radii[-1], r_max))
    norm2 = Polynomial.norm_squared(d)
    radius2 = 0.0
    tried_exterior = False
    last_empty = False
    for j, rho in enumerate(radii):
        boxes = [Box.cube(d, rho)] if j == 0 else _shell_boxes(d, radii[j - 1], rho)
        res = maximize(norm2, relaxed, boxes, atol=1e-9 * rho * rho, rtol=1e-9, cfg=cfg)
        last_empty = res.upper == -np.inf
        if not last_empty:
            radius2 = max(radius2, res.upper)
        if (last_empty and not tried_exterior) or j == len(radii) - 1:
            tried_exterior = tried_exterior or last_empty
            ext = _exterior_empty(relaxed, rho, cfg, max(1000, cfg.max_boxes // 8))
            if ext.is_proved:
                R = _up_sqrt(radius2)
                return EnclosureResult(Verdict.proved(scope="global", radius=R), R, "global", math.inf)
    outer = radii[-1]
    if last_empty:
        R = _up_sqrt(radius2)
        return EnclosureResult(
            Verdict.proved("certified to the outer shell; exterior only sampled",
                           scope="r_max", radius=R, certified_to=outer),
            R, "r_max", outer,
        )
    return EnclosureResult(Verdict.unknown("relaxation not excluded from the outer shell",
                                           certified_to=outer))


def _shell_boxes(d: int, inner: float, outer: float) -> list[Box]:
    """Cover ``[-outer, outer]^d`` minus the open cube of radius ``inner``."""
    pieces = [(-outer, -inner), (-inner, inner), (inner, outer)]
    out = []
    for cell in itertools.product(range(3), repeat=d):
        if all(c == 1 for c in cell):
            continue
        out.append(Box.from_bounds([pieces[c][0] for c in cell], [pieces[c][1] for c in cell]))
    return out


def _up_sqrt(v: float) -> float:
    return math.nextafter(math.sqrt(max(v, 0.0)), math.inf)


# -- Lojasiewicz exponents ----------------------------------------------------------

@dataclass(frozen=True)
class LojasiewiczResult:
    M: int | None
    lam: float | None
    verdict: Verdict
    squared: bool = False

    def __iter__(self):
        return iter((self.M, self.lam, self.verdict))


_UNDERFLOW = 1e-200


def lojasiewicz_search(f, g, boxes, constraints: Sequence = (), M_max: int = 8,
                       cfg: OracleConfig | None = None, lam_max: float = 2.0 ** 40,
                       slack=_UNDERFLOW) -> LojasiewiczResult:
    """Smallest ``M <= M_max`` with a certified ``lam`` such that
    ``|g|^M <= lam * |f|`` on ``boxes ∩ {c >= 0}``.

    When ``f >= 0`` is certified and ``g^M`` is nonnegative (even ``M`` or
    certified ``g >= 0``) the linear form ``lam*f - g^M >= 0`` is certified;
    otherwise the squared form ``lam^2 f^2 - g^(2M) >= 0``. ``lam`` runs through
    powers of two, jumping past the ratio observed at each refutation.

    ``slack`` (a number, or a function of ``lam``) is the absolute amount by
    which the certified form may dip below zero. The default only absorbs the
    underflow guard of the enclosures; any real slack would let a too-small
    ``M`` pass once ``lam`` is large enough.
    """
    cfg = cfg or OracleConfig()
    constraints = list(constraints)
    f_nonneg = certify_nonneg(f, constraints, boxes, slack=_UNDERFLOW, cfg=cfg).is_proved
    g_nonneg = certify_nonneg(g, constraints, boxes, slack=_UNDERFLOW, cfg=cfg).is_proved
    for M in range(1, M_max + 1):
        linear = f_nonneg and (M % 2 == 0 or g_nonneg)
        gM = g ** M
        lam = 1.0
        while lam <= lam_max:
            if linear:
                F = f * lam - gM
            else:
                F = (f * f) * (lam * lam) - gM * gM
            sl = slack(lam) if callable(slack) else slack
            v = certify_nonneg(F, constraints, boxes, slack=sl, cfg=cfg)
            if v.is_proved:
                return LojasiewiczResult(M, lam, Verdict.proved(form="linear" if linear else "squared"),
                                         squared=not linear)
            if v.is_refuted:
                x = np.asarray(v.witness)[None, :]
                fv = abs(float(f.evaluate_many(x)[0]))
                gv = abs(float(g.evaluate_many(x)[0])) ** M
                if fv == 0.0:
                    break
                need = gv / fv
                lam = max(2 * lam, 2.0 ** math.ceil(math.log2(need * (1 + 1e-9))) if need > 0 else 2 * lam)
            else:
                lam *= 2
    return LojasiewiczResult(None, None, Verdict.unknown("exponent budget exhausted", M_max=M_max))


# -- active sets --------------------------------------------------------------------

def active_set(system: Sequence[Polynomial], x, tol: float = 0.0) -> set[int]:
    """Indices (0-based) of constraints with ``|p_i(x)| <= tol``."""
    pt = np.asarray(x, dtype=float)[None, :]
    return {i for i, p in enumerate(system) if abs(float(p.evaluate_many(pt)[0])) <= tol}


@dataclass
class NXEstimate:
    n: int
    X: list[tuple[float, ...]]
    finite: bool
    verdict: Verdict
    levels: dict[int, bool] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "X": [list(v) for v in self.X],
            "finite": self.finite,
            "verdict": self.verdict.to_dict(),
        }


def _cluster(lo: np.ndarray, hi: np.ndarray, merge: float) -> list[np.ndarray]:
    """Group boxes that touch or whose centers are within ``merge``."""
    n = lo.shape[0]
    if n == 0:
        return []
    c = 0.5 * (lo + hi)
    width = float((hi - lo).max())
    r = max(merge, width * math.sqrt(lo.shape[1]) * 1.01)
    pairs = cKDTree(c).query_pairs(r, output_type="ndarray")
    if len(pairs):
        g = csr_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    else:
        g = csr_matrix((n, n))
    k, labels = connected_components(g, directed=False)
    return [np.flatnonzero(labels == i) for i in range(k)]


def estimate_n_X(system: Sequence[Polynomial], box: Box, cfg: OracleConfig | None = None,
                 tol: float | None = None) -> NXEstimate:
    """Maximal number of simultaneously active constraints on P and the
    points where it is attained.

    Level ``n`` holds when some ``|J| = n`` admits ``sum_{j in J} p_j^2 <= tol^2``
    with every ``p_i >= -tol``. Levels ascend from 1 until one fails; the
    last passing level is then enumerated in full and its boxes clustered.
    """
    cfg = cfg or OracleConfig()
    tol = cfg.tol if tol is None else tol
    s = len(system)
    min_width = cfg.cluster_tol
    levels: dict[int, bool] = {}
    undecided = False

    def level(n: int, first: bool):
        out = []
        for J in itertools.combinations(range(s), n):
            res = sum((system[j] * system[j] for j in J[1:]), system[J[0]] * system[J[0]])
            fs = feasible_boxes(res, system, box, eq_tol=tol * tol, ineq_tol=tol,
                                min_width=min_width, cfg=cfg, first_only=first)
            out.append((J, fs))
            if first and fs.witness is not None:
                return True, out, False
        unk = any(not fs.exhausted and fs.witness is None for _, fs in out)
        return any(fs.witness is not None for _, fs in out), out, unk

    n = 0
    for k in range(1, s + 1):
        ok, _, unk = level(k, True)
        levels[k] = ok
        if unk:
            undecided = True
        if not ok:
            break
        n = k
    if n == 0:
        return NXEstimate(0, [], False, Verdict.unknown("no active point found"), levels)
    _, found, _ = level(n, False)
    los = [fs.lo for _, fs in found if fs.lo.shape[0]]
    his = [fs.hi for _, fs in found if fs.hi.shape[0]]
    capped = any(fs.capped for _, fs in found)
    lo = np.concatenate(los) if los else np.empty((0, box.dim))
    hi = np.concatenate(his) if his else np.empty((0, box.dim))
    clusters = _cluster(lo, hi, 10 * cfg.cluster_tol)
    chain_extent = 1e3 * max(tol, cfg.cluster_tol)
    finite = not capped and len(clusters) <= cfg.max_clusters
    X = []
    for idx in clusters:
        ext = float((hi[idx].max(axis=0) - lo[idx].min(axis=0)).max())
        if ext > chain_extent:
            finite = False
        X.append(tuple(float(v) for v in 0.5 * (lo[idx] + hi[idx]).mean(axis=0)))
    X.sort()
    if not finite:
        X = []
    verdict = Verdict.unknown("level search hit its budget") if undecided else Verdict.proved()
    return NXEstimate(n, X, finite, verdict, levels)
