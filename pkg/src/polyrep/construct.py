"""Parameter searches and assembly of the reduced representations.

Two reductions are offered for a bounded set ``P = {p_1 >= 0, ..., p_s >= 0}``
whose maximal number of simultaneously active constraints is ``n < s``:

* :func:`reduce_n_plus_1` returns ``1 - g`` followed by the top ``n``
  elementary symmetric compositions;
* :func:`reduce_n` needs the finite set ``X`` where ``n`` constraints meet and
  returns ``sigma_{s-n+1} - g**l * h**m`` followed by the top ``n - 1``
  compositions.

Every numeric parameter is established by an oracle query, and the query's
verdict and bound are kept next to the value so the whole set can be audited
afterwards (:func:`audit_parameters`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import combinations, product
from typing import Callable, Sequence

import numpy as np

from . import expr as _expr
from . import poly as _poly
from .elemsym import elem_sym_compose
from .expr import Leaf, PolyExpr, Power, Product, Scale, Sum
from .oracle import (
    Box,
    Interval,
    OracleConfig,
    Verdict,
    bounding_box,
    certify_enclosure,
    certify_nonneg,
    certify_positive,
    estimate_n_X,
    lojasiewicz_search,
    max_on_feasible,
    min_on_feasible,
    relaxed_constraints,
)
from .oracle.exact import certify_nonneg_exact
from .poly import Polynomial
from .system import SemiAlgebraicSystem, as_system


class Mode(str, Enum):
    N_PLUS_1 = "n+1"
    N = "n"


class PipelineError(RuntimeError):
    """The oracle could not settle a step within its limits."""

    def __init__(self, message: str, step: str = "", verdict: Verdict | None = None):
        super().__init__(message)
        self.step = step
        self.verdict = verdict


class HypothesisError(ValueError):
    """The input violates ``n < s``."""


class InputError(ValueError):
    """Unusable input, such as an empty or infinite ``X``."""


@dataclass
class Certificate:
    """How one parameter was established."""

    query: str
    verdict: dict
    bound: float | None = None
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"query": self.query, "verdict": self.verdict}
        if self.bound is not None:
            out["bound"] = self.bound
        if self.detail:
            out["detail"] = self.detail
        return out

    @classmethod
    def from_dict(cls, data: dict) -> Certificate:
        return cls(data["query"], data.get("verdict", {}), data.get("bound"), data.get("detail", {}))


def _cert(query: str, verdict: Verdict, bound=None, **detail) -> Certificate:
    return Certificate(query, verdict.to_dict(), None if bound is None else float(bound), detail)


_PARAM_NAMES = ("M", "eps0", "eps", "lam", "k", "rho", "mu", "m", "tau", "alpha", "gamma", "l")


@dataclass
class ParameterSet:
    M: int
    eps0: float
    eps: float
    lam: float
    k: int
    rho: float | None = None
    mu: float | None = None
    m: int | None = None
    tau: float | None = None
    alpha: float | None = None
    gamma: float | None = None
    l: int | None = None
    records: dict[str, Certificate] = field(default_factory=dict)

    def to_dict(self) -> dict:
        vals = {k: getattr(self, k) for k in _PARAM_NAMES if getattr(self, k) is not None}
        return {"values": vals, "records": {k: r.to_dict() for k, r in self.records.items()}}

    @classmethod
    def from_dict(cls, data: dict) -> ParameterSet:
        vals = dict(data["values"])
        recs = {k: Certificate.from_dict(v) for k, v in data.get("records", {}).items()}
        return cls(**vals, records=recs)


# -- small helpers ---------------------------------------------------------------

def _weight(d: int, M: int) -> Polynomial:
    return _poly.power(1 + Polynomial.norm_squared(d), M)


def _up(v: float) -> float:
    return math.nextafter(v, math.inf)


def _up_sqrt(v: float) -> float:
    return Interval(max(v, 0.0), max(v, 0.0)).sqrt().hi


def _sigma(system: Sequence[Polynomial], k: int) -> Polynomial:
    return elem_sym_compose(list(system), k)


def _exact_point(v) -> list[Fraction]:
    return [Fraction(float(c)) for c in v]


# -- M and eps0 --------------------------------------------------------------------

@dataclass
class MEps0:
    M: int
    eps0: float
    radius: float
    scope: str
    record: Certificate


def find_M_eps0(system, cfg: OracleConfig | None = None, M_max: int = 4,
                eps_min: float = 2.0 ** -8) -> MEps0:
    """Smallest ``M`` with some ``eps0`` in ``1, 1/2, ...`` making the relaxation bounded."""
    system = as_system(system)
    cfg = cfg or OracleConfig()
    unknown = []
    witness = None
    for M in range(M_max + 1):
        eps = 1.0
        while eps >= eps_min:
            res = certify_enclosure(list(system), M, eps, cfg=cfg)
            if res.verdict.is_proved:
                rec = _cert("certify_enclosure", res.verdict, res.radius, scope=res.scope,
                            certified_to=res.certified_to, tried_unknown=unknown)
                return MEps0(M, eps, res.radius, res.scope, rec)
            if res.verdict.is_unknown:
                unknown.append([M, eps])
            else:
                witness = res.verdict.witness
            eps /= 2
    if unknown:
        raise PipelineError(f"boundedness of the relaxation stayed undecided for (M, eps0) in {unknown}",
                            "find_M_eps0", Verdict.unknown("enclosure undecided"))
    raise PipelineError(f"no bounded relaxation found for M <= {M_max}", "find_M_eps0",
                        Verdict.refuted(witness, "every tried relaxation is unbounded"))


# -- lambda, k, g -----------------------------------------------------------------

def find_lambda(system, M: int, box: Box, cfg: OracleConfig | None = None) -> tuple[float, Certificate]:
    """Power of two bounding ``(1+|x|^2)^M p_i`` over P for every ``i``."""
    system = as_system(system)
    cfg = cfg or OracleConfig()
    w = _weight(system.dim, M)
    objs = [w * p for p in system]
    uppers = []
    for F in objs:
        r = max_on_feasible(F, list(system), box, tol=1e-9, rtol=1e-9, cfg=cfg)
        if not math.isfinite(r.upper):
            if r.upper == -math.inf:
                raise PipelineError("P is empty", "find_lambda", r.verdict)
            raise PipelineError("no finite bound on the weighted constraints", "find_lambda", r.verdict)
        uppers.append(r.upper)
    U = max(uppers)
    lam = 1.0
    while lam < U:
        lam *= 2
    exact = False
    # a maximum that equals a power of two exactly is closed in rational arithmetic
    tight = lam / 2 if lam > 1 else lam
    if U > tight and U <= tight * (1 + 1e-6):
        ok = all(
            u <= tight or certify_nonneg_exact(tight - F, list(system), box.lo, box.hi).is_proved
            for u, F in zip(uppers, objs)
        )
        if ok:
            lam, exact = tight, True
    bound = lam if exact else U
    return lam, _cert("max_on_feasible", Verdict.proved(), bound, per_constraint=uppers, exact=exact)


def _k_ok(s: int, eps: float, lam: float, k: int) -> bool:
    return (1 + Fraction(eps) / Fraction(lam)) ** (2 * k) >= s


def find_k(s: int, eps: float, lam: float) -> int:
    """Smallest ``k >= 1`` with ``(1 + eps/lam)**(2k) >= s`` (checked exactly)."""
    if not (eps > 0 and lam > 0):
        raise ValueError("eps and lambda must be positive")
    if s <= 1:
        return 1
    k = max(1, math.ceil(math.log(s) / (2 * math.log1p(eps / lam))))
    while not _k_ok(s, eps, lam, k):
        k += 1
    while k > 1 and _k_ok(s, eps, lam, k - 1):
        k -= 1
    return k


def _g_bases(system, M: int, lam: float) -> list[Polynomial]:
    w = _weight(system.dim, M)
    inv = 1 / Fraction(lam)
    return [1 - (w * p).scale(inv) for p in system]


def build_g(system, M: int, lam: float, k: int, expand: bool = False):
    """``(1/s) * sum_i (1 - (1+|x|^2)^M p_i / lam)**(2k)``.

    Returned as an expression; ``expand=True`` gives the expanded polynomial
    (subject to the degree cap).
    """
    system = as_system(system)
    if lam <= 0 or k < 1 or M < 0:
        raise ValueError("need lam > 0, k >= 1, M >= 0")
    terms = [Power(Leaf(b), 2 * k) for b in _g_bases(system, M, lam)]
    g = Scale(Fraction(1, system.s), Sum(terms))
    return g.expand() if expand else g


# -- h and mu ------------------------------------------------------------------------

def _h_factors(X, mu: float, d: int) -> list[Polynomial]:
    if not X:
        raise ValueError("X must be nonempty")
    inv = 1 / Fraction(mu) ** 2
    return [Polynomial.norm_squared(d, _exact_point(v)).scale(inv) for v in X]


def build_h(X, mu: float, dim: int | None = None) -> Polynomial:
    """``prod_{v in X} (|x - v| / mu)**2``."""
    if not X:
        raise ValueError("X must be nonempty")
    if not mu > 0:
        raise ValueError("mu must be positive")
    d = len(X[0]) if dim is None else dim
    out = Polynomial.constant(d, 1)
    for f in _h_factors(X, mu, d):
        out = out * f
    return out


def _lift(p: Polynomial, d: int, second: bool) -> Polynomial:
    pad = (0,) * d
    return Polynomial(2 * d, {(pad + e if second else e + pad): c for e, c in p.items()})


def find_mu(system, box: Box, cfg: OracleConfig | None = None, mu_min: float = 1.0,
            tol: float | None = None) -> tuple[float, Certificate]:
    """Certified upper bound on the diameter of P (doubled system in ``2d`` unknowns)."""
    system = as_system(system)
    cfg = cfg or OracleConfig()
    tol = cfg.tol if tol is None else tol
    d = system.dim
    cons = [_lift(p, d, False) for p in system] + [_lift(p, d, True) for p in system]
    xs = Polynomial.variables(2 * d)
    obj = sum(((xs[j] - xs[d + j]) * (xs[j] - xs[d + j]) for j in range(1, d)),
              (xs[0] - xs[d]) * (xs[0] - xs[d]))
    big = Box(box.intervals + box.intervals)
    r = max_on_feasible(obj, cons, big, tol=1e-9, rtol=1e-7, cfg=cfg)
    if r.upper == -math.inf:
        raise PipelineError("P is empty", "find_mu", r.verdict)
    diag = Interval(0.0, 0.0)
    for iv in box.intervals:
        diag = diag + Interval.of(iv.hi - iv.lo if iv.hi > iv.lo else 0.0) ** 2
    diag_up = _up(diag.sqrt().hi)
    mu = min(_up_sqrt(r.upper), diag_up) if math.isfinite(r.upper) else diag_up
    clamped = False
    if mu < tol:
        mu, clamped = float(mu_min), True
    return mu, _cert("max_on_feasible", r.verdict, mu if clamped else min(_up_sqrt(r.upper), diag_up),
                     diameter_squared_upper=r.upper, clamped=clamped)


# -- rho, alpha, gamma --------------------------------------------------------------

def _min_distance(X) -> float:
    pts = np.asarray(X, dtype=float)
    if len(pts) < 2:
        return math.inf
    return min(float(np.linalg.norm(a - b)) for a, b in combinations(pts, 2))


def _min_distance_lower(X) -> float:
    """Certified lower bound on the smallest pairwise distance."""
    best = math.inf
    for a, b in combinations(X, 2):
        acc = Interval(0.0, 0.0)
        for u, v in zip(a, b):
            acc = acc + (Interval.point(Fraction(u) - Fraction(v))) ** 2
        best = min(best, acc.sqrt().lo)
    return best


def find_rho(system, X, g, cfg: OracleConfig | None = None, start: float = 1.0,
             rho_min: float = 2.0 ** -30) -> tuple[float, Certificate]:
    """Largest radius in ``start, start/2, ...`` (below half the separation of
    ``X``) with ``g <= 1`` certified on every ball around a point of ``X``."""
    system = as_system(system)
    cfg = cfg or OracleConfig()
    cfg_ball = cfg.replace(max_boxes=min(cfg.max_boxes, 20000))
    d = system.dim
    half = _min_distance_lower(X) / 2
    one_minus_g = 1 - g
    rho = start
    tried = []
    while rho >= rho_min:
        r = rho if rho < half else math.nextafter(half, 0.0)
        if tried and r == tried[-1]:
            rho /= 2
            continue
        tried.append(r)
        ok = True
        for v in X:
            ball = r * r - Polynomial.norm_squared(d, _exact_point(v))
            verdict = certify_nonneg(one_minus_g, [ball], Box.cube(d, r, v), cfg=cfg_ball)
            if not verdict.is_proved:
                ok = False
                break
        if ok:
            return r, _cert("certify_nonneg", Verdict.proved(), r, half_separation=half, tried=tried)
        rho /= 2
    raise PipelineError("could not certify g <= 1 on any ball around X", "find_rho",
                        Verdict.unknown("radius schedule exhausted"))


def find_alpha(system, g, box: Box, cfg: OracleConfig | None = None) -> tuple[float, Certificate]:
    """Certified upper bound ``alpha < 1`` of ``g`` over P."""
    system = as_system(system)
    r = max_on_feasible(g, list(system), box, tol=1e-9, rtol=1e-6, cfg=cfg)
    if not r.upper < 1:
        raise PipelineError(f"max of g over P is not certified below 1 (bound {r.upper})",
                            "find_alpha", r.verdict)
    alpha = max(r.upper, 0.0)
    return alpha, _cert("max_on_feasible", r.verdict, alpha, witness=r.lower)


def find_gamma(system, n: int, X, rho: float, box: Box,
               cfg: OracleConfig | None = None) -> tuple[float, Certificate]:
    """Certified positive lower bound of ``sigma_{s-n+1}`` on P outside the open balls."""
    system = as_system(system)
    d = system.dim
    sig = _sigma(system, system.s - n + 1)
    outside = [Polynomial.norm_squared(d, _exact_point(v)) - rho * rho for v in X]
    r = min_on_feasible(sig, list(system) + outside, box, tol=1e-12, rtol=0.25, cfg=cfg)
    if r.lower == math.inf:
        return 1.0, _cert("min_on_feasible", r.verdict, math.inf, vacuous=True)
    if not r.lower > 0:
        raise PipelineError(f"sigma_{system.s - n + 1} not certified positive away from X "
                            f"(bound {r.lower})", "find_gamma", r.verdict)
    return r.lower, _cert("min_on_feasible", r.verdict, r.lower, witness=r.upper)


# -- Lojasiewicz exponents ---------------------------------------------------------

def _orthants(d: int, rho: float) -> list[Box]:
    out = []
    for signs in product((-1, 1), repeat=d):
        lo = [0.0 if s > 0 else -rho for s in signs]
        hi = [rho if s > 0 else 0.0 for s in signs]
        out.append(Box.from_bounds(lo, hi))
    return out


def find_loj_params(system, n: int, X, rho: float, mu: float, cfg: OracleConfig | None = None,
                    M_max: int = 8) -> tuple[int, float, Certificate]:
    """Exponent ``m`` and constant ``tau`` with ``(|x-w|/mu)^(2m) <= tau * sigma_{s-n+1}``
    on every ``B(w, rho) ∩ P``.

    Each point is moved to the origin first, so a vertex given in exact
    coordinates makes the inequality tight at zero without rounding.
    """
    system = as_system(system)
    cfg = cfg or OracleConfig()
    d = system.dim
    per_point = []
    m_all, tau_all = 0, 0.0
    for w in X:
        centre = _exact_point(w)
        shifted = [_poly.affine_substitute(p, centre, 1) for p in system]
        f = _sigma(shifted, system.s - n + 1)
        g = Polynomial.norm_squared(d).scale(1 / Fraction(mu) ** 2)
        cons = shifted + [rho * rho - Polynomial.norm_squared(d)]
        c0 = abs(float(f.constant_term()))
        exact = all(
            p.constant_term() == 0 for p in shifted if abs(float(p.constant_term())) <= 1e-9
        ) and c0 == 0
        if exact:
            slack: float | Callable = 1e-200
        else:
            # float coordinates only approximate the vertex; allow the defect there
            defect = max(c0, 1e-12 * f.max_abs_coefficient())
            slack = lambda lam, defect=defect: 2 * lam * defect + 1e-200
        res = lojasiewicz_search(f, g, _orthants(d, rho), cons, M_max=M_max, cfg=cfg, slack=slack)
        if not res.verdict.is_proved:
            raise PipelineError(f"no Lojasiewicz exponent certified near {tuple(w)}",
                                "find_loj_params", res.verdict)
        per_point.append({"point": list(map(float, w)), "m": res.M, "tau": res.lam,
                          "form": "squared" if res.squared else "linear", "exact_point": exact})
        m_all, tau_all = max(m_all, res.M), max(tau_all, res.lam)
    return m_all, tau_all, _cert("lojasiewicz_search", Verdict.proved(), tau_all, per_point=per_point)


# -- l -------------------------------------------------------------------------------

def _log(v) -> Interval:
    return Interval.point(v).log()


def l_conditions(l: int, *, tau: float, alpha: float, gamma: float, lam: float, eps: float,
                 k: int, rho: float, mu: float, m: int, s: int, n: int, card_X: int) -> dict[str, bool]:
    """The three exponent conditions at ``l``, each decided in outward-rounded
    log arithmetic (a condition that cannot be decided counts as failing)."""
    out = {}
    if alpha == 0:
        out["tau_alpha_l"] = True
        out["alpha_l_gamma"] = gamma > 0
    else:
        la = _log(alpha) * l
        out["tau_alpha_l"] = (_log(tau) + la).hi < 0
        out["alpha_l_gamma"] = la.hi < _log(gamma).lo
    lhs = _log(2) + _log(math.comb(s, n - 1)) + (_log(lam) + _log(s + 1)) * (s - n + 1)
    ratio = (Interval.point(lam) + Interval.point(2 * Fraction(eps))) / (Interval.point(lam) + Interval.point(eps))
    expo = 2 * k * (l - s + n - 1)
    rhs = ratio.log() * expo + (_log(rho) - _log(mu)) * (2 * m * card_X)
    out["degree_balance"] = lhs.hi <= rhs.lo
    return out


def find_l(params: ParameterSet, s: int, n: int, card_X: int) -> int:
    """Smallest ``l >= 1`` meeting all three exponent conditions."""
    p = params
    kw = dict(tau=p.tau, alpha=p.alpha, gamma=p.gamma, lam=p.lam, eps=p.eps, k=p.k, rho=p.rho,
              mu=p.mu, m=p.m, s=s, n=n, card_X=card_X)
    if not (p.alpha < 1 and p.gamma > 0 and p.tau > 0):
        raise ValueError("need alpha < 1, gamma > 0, tau > 0")

    def ok(l):
        return all(l_conditions(l, **kw).values())

    # closed-form starting point from float logarithms
    guesses = [1]
    if p.alpha > 0:
        la = math.log(p.alpha)
        guesses.append(math.ceil(math.log(p.tau) / -la) if p.tau > 1 else 1)
        guesses.append(math.ceil(math.log(p.gamma) / la) if p.gamma < 1 else 1)
    r = math.log((p.lam + 2 * p.eps) / (p.lam + p.eps))
    lhs = math.log(2 * math.comb(s, n - 1)) + (s - n + 1) * math.log(p.lam * (s + 1))
    need = lhs - 2 * p.m * card_X * math.log(p.rho / p.mu)
    guesses.append(math.ceil(need / (2 * p.k * r)) + s - n + 1)
    l = max(1, max(guesses) - 1)
    while not ok(l):
        l += 1
    while l > 1 and ok(l - 1):
        l -= 1
    return l


# -- q ---------------------------------------------------------------------------------

def build_q(system, X, params: ParameterSet, n: int) -> PolyExpr:
    """``sigma_{s-n+1} - g**l * h**m`` with ``h`` kept in factored form."""
    system = as_system(system)
    p = params
    sig = _sigma(system, system.s - n + 1)
    g = build_g(system, p.M, p.lam, p.k)
    h = Product([Leaf(f) for f in _h_factors(X, p.mu, system.dim)])
    return Sum([Leaf(sig), Scale(Fraction(-1), Product([Power(g, p.l), Power(h, p.m)]))])


# -- reductions ---------------------------------------------------------------------------

@dataclass
class Reduction:
    system: SemiAlgebraicSystem
    mode: Mode
    n: int
    outputs: list
    params: ParameterSet
    X: list[tuple[float, ...]] | None = None
    scales: list[float] = field(default_factory=list)
    verification: dict | None = None

    def __post_init__(self):
        want = self.n + 1 if self.mode == Mode.N_PLUS_1 else self.n
        if len(self.outputs) != want:
            raise ValueError(f"mode {self.mode.value} needs {want} outputs, got {len(self.outputs)}")

    @property
    def normalized(self) -> list:
        """Outputs scaled so their leading coefficient magnitude is 1."""
        out = []
        for q, c in zip(self.outputs, self.scales or [1.0] * len(self.outputs)):
            if c == 1:
                out.append(q)
                continue
            inv = 1 / Fraction(c)
            out.append(q.scale(inv) if isinstance(q, Polynomial) else Scale(inv, q))
        return out

    def output_values(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.stack([q.evaluate_many(pts) for q in self.normalized], axis=1)

    def to_dict(self) -> dict:
        out = {
            "format": "polyrep.reduction/1",
            "mode": self.mode.value,
            "n": self.n,
            "system": self.system.to_dict(),
            "parameters": self.params.to_dict(),
            "outputs": [_expr.as_expr(q).to_dict() for q in self.normalized],
        }
        if self.X is not None:
            out["X"] = [list(v) for v in self.X]
        if self.verification is not None:
            out["verification"] = self.verification
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> Reduction:
        outs = []
        for o in data["outputs"]:
            e = _expr.from_dict(o)
            outs.append(e.poly if isinstance(e, Leaf) else e)
        X = data.get("X")
        return cls(
            system=SemiAlgebraicSystem.from_dict(data["system"]),
            mode=Mode(data["mode"]),
            n=int(data["n"]),
            outputs=outs,
            params=ParameterSet.from_dict(data["parameters"]),
            X=[tuple(v) for v in X] if X is not None else None,
            scales=[1.0] * len(outs),
            verification=data.get("verification"),
        )

    @classmethod
    def loads(cls, text: str) -> Reduction:
        return cls.from_dict(json.loads(text))


@dataclass
class _Context:
    system: SemiAlgebraicSystem
    cfg: OracleConfig
    me: MEps0
    outer: Box
    box: Box


def prepare(system, cfg: OracleConfig | None = None) -> _Context:
    """Shared first stage: ``(M, eps0)``, the enclosing cube and a box around P."""
    return _prepare(system, cfg)


def _prepare(system, cfg) -> _Context:
    system = as_system(system)
    cfg = cfg or OracleConfig()
    me = find_M_eps0(system, cfg)
    R = _up(me.radius * (1 + 1e-9)) + 1e-12
    outer = Box.cube(system.dim, R)
    box, verdict = bounding_box(list(system), outer, cfg)
    if box is None:
        raise PipelineError("P is empty", "bounding_box", verdict)
    return _Context(system, cfg, me, outer, box)


def _n_from_estimate(ctx: _Context):
    pad = 10 * max(ctx.cfg.tol, 1e-12)
    est = estimate_n_X(list(ctx.system), ctx.box.pad(pad), ctx.cfg)
    if est.n == 0:
        raise PipelineError("no active point found on P", "estimate_n_X", est.verdict)
    return est


def _check_hypothesis(n: int, s: int) -> None:
    if n >= s:
        raise HypothesisError(f"n = {n} equals s = {s}; the reduction needs n < s")


def select_eps(system, M: int, eps_start: float, n: int, box: Box, cfg: OracleConfig,
               factor: int = 1, eps_min: float = 2.0 ** -20) -> tuple[float, Certificate]:
    """Halve ``eps`` until ``sigma_i > 0`` is certified on the relaxation at
    ``factor * eps`` for ``i = 1 .. s-n``."""
    system = as_system(system)
    sigmas = [_sigma(system, i) for i in range(1, system.s - n + 1)]
    # a failing eps is usually settled by a refutation; cap the effort otherwise
    cfg = cfg.replace(max_boxes=min(cfg.max_boxes, 20000))
    eps = eps_start
    tried = []
    while eps >= eps_min:
        region = relaxed_constraints(list(system), M, factor * eps)
        ok = all(certify_positive(sg, region, box, cfg=cfg).is_proved for sg in sigmas)
        tried.append(eps)
        if ok:
            return eps, _cert("certify_positive", Verdict.proved(), eps, factor=factor, tried=tried)
        eps /= 2
    raise PipelineError("no eps certified the low-order symmetric functions positive",
                        "select_eps", Verdict.unknown("eps schedule exhausted"))


def _scales(outputs) -> list[float]:
    out = []
    for q in outputs:
        c = _expr.leading_scale(q)
        out.append(c if c > 0 and math.isfinite(c) else 1.0)
    return out


def reduce_n_plus_1(system, cfg: OracleConfig | None = None) -> Reduction:
    """``n + 1`` polynomials ``1 - g, sigma_{s-n+1}, ..., sigma_s`` representing P."""
    ctx = _prepare(system, cfg)
    S, me = ctx.system, ctx.me
    est = _n_from_estimate(ctx)
    n = est.n
    _check_hypothesis(n, S.s)
    lam, lam_rec = find_lambda(S, me.M, ctx.box, ctx.cfg)
    eps, eps_rec = select_eps(S, me.M, me.eps0, n, ctx.outer, ctx.cfg, factor=1)
    k = find_k(S.s, eps, lam)
    params = ParameterSet(me.M, me.eps0, eps, lam, k, records={
        "M": me.record, "eps0": me.record, "eps": eps_rec, "lam": lam_rec,
        "k": Certificate("exact", {"kind": "PROVED"}, None, {"condition": "(1+eps/lam)^(2k) >= s"}),
        "n": Certificate("estimate_n_X", est.verdict.to_dict(), None, {"n": n}),
    })
    g = build_g(S, me.M, lam, k)
    outputs = [1 - g] + [_sigma(S, S.s - n + i) for i in range(1, n + 1)]
    return Reduction(S, Mode.N_PLUS_1, n, outputs, params, X=None, scales=_scales(outputs))


def n_from_X(system, X, tol: float = 1e-9) -> int:
    """Common active count at the points of ``X`` (checked to agree)."""
    return _n_from_X(as_system(system), X, tol)


def _n_from_X(system: SemiAlgebraicSystem, X, tol: float) -> int:
    counts = []
    for v in X:
        vals = system.values(np.asarray(v, dtype=float)[None, :])[0]
        scale = 1 + max(p.max_abs_coefficient() for p in system)
        if (vals < -tol * scale).any():
            raise InputError(f"point {tuple(v)} is not in P")
        counts.append(int((np.abs(vals) <= tol * scale).sum()))
    if len(set(counts)) != 1:
        raise InputError(f"points of X have different active counts {counts}")
    return counts[0]


def reduce_n(system, X=None, cfg: OracleConfig | None = None) -> Reduction:
    """``n`` polynomials ``q, sigma_{s-n+2}, ..., sigma_s`` representing P.

    ``X`` may be given (points where ``n`` constraints are active); otherwise it
    is estimated and must come out finite.
    """
    ctx = _prepare(system, cfg)
    S, me, cfg = ctx.system, ctx.me, ctx.cfg
    if X is None:
        est = _n_from_estimate(ctx)
        if not est.finite:
            raise InputError("the set of maximally active points is not finite")
        X, n = [tuple(v) for v in est.X], est.n
        n_rec = Certificate("estimate_n_X", est.verdict.to_dict(), None, {"n": n})
    else:
        X = [tuple(float(c) for c in v) for v in X]
        if not X:
            raise InputError("X is empty")
        n = _n_from_X(S, X, 1e-9)
        n_rec = Certificate("active_count", {"kind": "PROVED"}, None, {"n": n, "given": True})
    if n == 0:
        raise InputError("no constraint is active at the points of X")
    _check_hypothesis(n, S.s)
    lam, lam_rec = find_lambda(S, me.M, ctx.box, cfg)
    eps, eps_rec = select_eps(S, me.M, me.eps0 / 2, n, ctx.outer, cfg, factor=2)
    mu, mu_rec = find_mu(S, ctx.box, cfg)
    base = {"M": me.record, "eps0": me.record, "eps": eps_rec, "lam": lam_rec, "mu": mu_rec, "n": n_rec}
    params = vanishing_parameters(ctx, X, n, lam, mu, eps, base)
    q = build_q(S, X, params, n)
    outputs = [q] + [_sigma(S, S.s - n + i) for i in range(2, n + 1)]
    return Reduction(S, Mode.N, n, outputs, params, X=X, scales=_scales(outputs))


def vanishing_parameters(ctx: _Context, X, n: int, lam: float, mu: float, eps: float,
                         records: dict) -> ParameterSet:
    """The eps-dependent parameters ``k, rho, alpha, gamma, m, tau, l``."""
    S, me, cfg = ctx.system, ctx.me, ctx.cfg
    k = find_k(S.s, eps, lam)
    g = build_g(S, me.M, lam, k)
    rho, rho_rec = find_rho(S, X, g, cfg)
    alpha, alpha_rec = find_alpha(S, g, ctx.box, cfg)
    gamma, gamma_rec = find_gamma(S, n, X, rho, ctx.box, cfg)
    m, tau, loj_rec = find_loj_params(S, n, X, rho, mu, cfg)
    recs = dict(records)
    recs.update({
        "k": Certificate("exact", {"kind": "PROVED"}, None, {"condition": "(1+eps/lam)^(2k) >= s"}),
        "rho": rho_rec, "alpha": alpha_rec, "gamma": gamma_rec, "m": loj_rec, "tau": loj_rec,
    })
    params = ParameterSet(me.M, me.eps0, eps, lam, k, rho, mu, m, tau, alpha, gamma, None, records=recs)
    params.l = find_l(params, S.s, n, len(X))
    params.records["l"] = Certificate("log_interval", {"kind": "PROVED"}, None, {})
    return params


# -- audit ---------------------------------------------------------------------------------

def audit_parameters(red: Reduction, recheck: bool = False,
                     cfg: OracleConfig | None = None) -> dict[str, bool]:
    """Re-check every parameter inequality with exact or outward-rounded arithmetic.

    Uses the recorded certified bounds; with ``recheck=True`` the bounds for
    ``lam``, ``alpha`` and ``gamma`` are recomputed by fresh oracle calls.
    """
    p, S, n = red.params, red.system, red.n
    rec = p.records
    out: dict[str, bool] = {}
    out["eps_range"] = 0 < p.eps <= (p.eps0 if red.mode == Mode.N_PLUS_1 else Fraction(p.eps0) / 2)
    lam_bound = rec["lam"].bound
    out["lambda_bound"] = lam_bound is not None and p.lam >= lam_bound
    out["k_condition"] = _k_ok(S.s, p.eps, p.lam, p.k)
    if red.mode == Mode.N:
        X = red.X or []
        out["mu_bound"] = p.mu >= rec["mu"].bound
        out["alpha_lt_1"] = p.alpha < 1 and p.alpha >= rec["alpha"].bound
        out["gamma_pos"] = p.gamma > 0 and (rec["gamma"].bound is None or p.gamma <= rec["gamma"].bound)
        out["balls_disjoint"] = 2 * p.rho < _min_distance_lower(X) if len(X) > 1 else True
        conds = l_conditions(p.l, tau=p.tau, alpha=p.alpha, gamma=p.gamma, lam=p.lam, eps=p.eps,
                             k=p.k, rho=p.rho, mu=p.mu, m=p.m, s=S.s, n=n, card_X=len(X))
        out.update(conds)
    if recheck:
        cfg = cfg or OracleConfig()
        me_box = Box.cube(S.dim, _up(rec["M"].bound * (1 + 1e-9)) + 1e-12)
        box, _ = bounding_box(list(S), me_box, cfg)
        lam_new, _ = find_lambda(S, p.M, box, cfg)
        out["lambda_recheck"] = p.lam >= lam_new
        if red.mode == Mode.N:
            g = build_g(S, p.M, p.lam, p.k)
            r = max_on_feasible(g, list(S), box, tol=1e-9, rtol=1e-6, cfg=cfg)
            out["alpha_recheck"] = r.upper <= p.alpha * (1 + 1e-6) + 1e-12 and r.upper < 1
            sig = _sigma(S, S.s - n + 1)
            outside = [Polynomial.norm_squared(S.dim, _exact_point(v)) - p.rho * p.rho for v in red.X]
            r = min_on_feasible(sig, list(S) + outside, box, tol=1e-12, rtol=0.25, cfg=cfg)
            out["gamma_recheck"] = r.lower >= p.gamma * (1 - 1e-6) and r.lower > 0
    return out
