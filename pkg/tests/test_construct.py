import math
from fractions import Fraction

import numpy as np
import pytest

from polyrep import construct as C
from polyrep import fixtures
from polyrep.elemsym import elem_sym_compose
from polyrep.oracle import Box, OracleConfig
from polyrep.poly import Polynomial, evaluate
from polyrep.verify import grid_points

SQ = fixtures.vertices("square")
TRI = fixtures.vertices("triangle")


def _box(name):
    return C.prepare(fixtures.get(name)).box


# -- M, eps0, lambda -------------------------------------------------------------

@pytest.mark.parametrize("name", ["disk", "square"])
def test_find_M_eps0_plain_sets(name):
    me = C.find_M_eps0(fixtures.get(name))
    assert me.M == 0 and me.eps0 == 1.0 and me.record.verdict["kind"] == "PROVED"


def test_find_M_eps0_disk_radius():
    me = C.find_M_eps0(fixtures.get("disk"))
    assert me.radius == pytest.approx(math.sqrt(2), abs=1e-6)


@pytest.mark.parametrize("name", ["square", "triangle", "disk"])
def test_find_lambda_is_one(name):
    lam, rec = C.find_lambda(fixtures.get(name), 0, _box(name))
    assert lam == 1.0 and rec.verdict["kind"] == "PROVED"


def test_find_lambda_pentagon_is_two():
    # the largest constraint value on the pentagon is about 1.809
    lam, rec = C.find_lambda(fixtures.get("pentagon"), 0, _box("pentagon"))
    assert lam == 2.0
    assert 1.80 < rec.bound <= 2.0


# -- k, g, h ---------------------------------------------------------------------

def test_find_k_examples():
    assert C.find_k(4, 1.0, 1.0) == 1
    assert C.find_k(1, 0.3, 7.0) == 1
    assert C.find_k(5, 0.1, 1.0) == 9
    with pytest.raises(ValueError):
        C.find_k(3, 0.0, 1.0)


@pytest.mark.parametrize("s,eps,lam", [(2, 0.5, 1.0), (7, 0.01, 2.0), (30, 0.125, 4.0)])
def test_find_k_is_minimal(s, eps, lam):
    k = C.find_k(s, eps, lam)
    assert (1 + Fraction(eps) / Fraction(lam)) ** (2 * k) >= s
    assert k == 1 or (1 + Fraction(eps) / Fraction(lam)) ** (2 * k - 2) < s


def test_build_g_is_one_where_all_constraints_vanish(xy):
    x, y = xy
    g = C.build_g([x, y], 0, 1.0, 3)
    assert g.evaluate_many(np.array([[0.0, 0.0]]))[0] == pytest.approx(1.0)


def test_build_g_constant_equal_to_lambda_is_zero():
    p = Polynomial.constant(2, 2)
    g = C.build_g([p], 0, 2.0, 2, expand=True)
    assert g.is_zero()


def test_build_g_square_center():
    g = C.build_g(fixtures.get("square"), 0, 1.0, 1)
    assert g.evaluate_many(np.array([[0.5, 0.5]]))[0] == pytest.approx(0.25)


def test_build_h_examples():
    h = C.build_h([(0.0, 0.0)], 1.0)
    x, y = Polynomial.variables(2)
    assert h == x * x + y * y
    h4 = C.build_h(SQ, math.sqrt(2))
    assert h4.evaluate_many(np.array([[0.5, 0.5]]))[0] == pytest.approx(0.25 ** 4)
    assert all(evaluate(h4, [Fraction(c) for c in v]) == 0 for v in SQ)
    with pytest.raises(ValueError):
        C.build_h([], 1.0)


# -- mu, rho, alpha, gamma, loj ---------------------------------------------------

@pytest.mark.parametrize("name", ["square", "triangle"])
def test_find_mu_diagonal(name):
    mu, rec = C.find_mu(fixtures.get(name), _box(name))
    assert math.sqrt(2) <= mu <= math.sqrt(2) + 1e-6


def test_find_mu_single_point_is_clamped():
    mu, rec = C.find_mu(fixtures.get("point"), _box("point"))
    assert mu == 1.0 and rec.detail["clamped"]


def test_find_rho_square_below_half_separation():
    g = C.build_g(fixtures.get("square"), 0, 1.0, 6)
    rho, rec = C.find_rho(fixtures.get("square"), SQ, g)
    assert 0 < rho < 0.5
    assert rec.detail["half_separation"] == pytest.approx(0.5)


def test_rho_separation_bound_for_two_points():
    assert C._min_distance_lower([(0.0, 0.0), (3.0, 0.0)]) / 2 == pytest.approx(1.5)
    assert C._min_distance_lower([(0.0, 0.0), (3.0, 0.0)]) <= 3.0


def test_find_rho_single_point_uses_g_condition_only(xy):
    x, y = xy
    S = [x, y, 1 - x - y]
    g = C.build_g(S, 0, 1.0, 2)
    rho, rec = C.find_rho(S, [(0.0, 0.0)], g)
    assert rec.detail["half_separation"] == math.inf and rho > 0


@pytest.mark.parametrize("name,want", [("square", 0.5), ("triangle", 2 / 3)])
def test_find_alpha_k1(name, want):
    g = C.build_g(fixtures.get(name), 0, 1.0, 1)
    alpha, rec = C.find_alpha(fixtures.get(name), g, _box(name))
    assert want <= alpha <= want + 1e-5


@pytest.mark.parametrize("name,verts", [("square", SQ), ("triangle", TRI)])
def test_find_gamma_below_grid_minimum(name, verts):
    S = fixtures.get(name)
    rho = 0.25
    gamma, rec = C.find_gamma(S, 2, verts, rho, _box(name))
    assert gamma > 0
    sig = elem_sym_compose(list(S), S.s - 1)
    pts = grid_points(Box.cube(2, 0.5, (0.5, 0.5)), 301)
    inside = S.contains(pts)
    far = np.min([np.linalg.norm(pts - np.array(v), axis=1) for v in verts], axis=0) >= rho
    assert gamma <= sig.evaluate_many(pts[inside & far]).min() + 1e-12


def test_find_loj_params_square(rng):
    S = fixtures.get("square")
    mu, rho = math.sqrt(2), 0.25
    m, tau, rec = C.find_loj_params(S, 2, SQ, rho, mu)
    assert 1 <= m <= 2 and tau > 0
    sig = elem_sym_compose(list(S), 3)
    for v in SQ:
        d = rng.normal(size=(100_000, 2))
        d *= (rho * np.sqrt(rng.uniform(size=100_000)) / np.linalg.norm(d, axis=1))[:, None]
        pts = np.array(v) + d
        pts = pts[S.contains(pts)]
        lhs = (np.sum((pts - v) ** 2, axis=1) / mu ** 2) ** m
        assert (tau * sig.evaluate_many(pts) - lhs >= -1e-10).all()


# -- l -----------------------------------------------------------------------------

def _params(**kw):
    base = dict(M=0, eps0=1.0, eps=0.5, lam=1.0, k=1, rho=100.0, mu=1.0, m=1, tau=1.0, alpha=0.5,
                gamma=1.0)
    base.update(kw)
    return C.ParameterSet(**base)


def test_find_l_trivial_case():
    assert C.find_l(_params(), 1, 1, 1) == 1


def test_find_l_tau_and_gamma_conditions():
    p = _params(tau=10.0, gamma=0.1)
    kw = dict(tau=10.0, alpha=0.5, gamma=0.1, lam=1.0, eps=0.5, k=1, rho=100.0, mu=1.0, m=1,
              s=1, n=1, card_X=1)
    at3, at4 = C.l_conditions(3, **kw), C.l_conditions(4, **kw)
    assert not at3["tau_alpha_l"] and not at3["alpha_l_gamma"]
    assert at4["tau_alpha_l"] and at4["alpha_l_gamma"]
    assert C.find_l(p, 1, 1, 1) == 4


def test_find_l_alpha_close_to_one():
    p = _params(alpha=0.99, gamma=0.5)
    kw = dict(tau=1.0, alpha=0.99, gamma=0.5, lam=1.0, eps=0.5, k=1, rho=100.0, mu=1.0, m=1,
              s=1, n=1, card_X=1)
    assert not C.l_conditions(68, **kw)["alpha_l_gamma"]
    assert C.l_conditions(69, **kw)["alpha_l_gamma"]
    assert C.find_l(p, 1, 1, 1) == 69


def test_find_l_rejects_alpha_at_least_one():
    with pytest.raises(ValueError):
        C.find_l(_params(alpha=1.0), 1, 1, 1)


# -- reductions ---------------------------------------------------------------------

@pytest.fixture(scope="module")
def square_n():
    return C.reduce_n(fixtures.get("square"), SQ)


def test_q_vanishes_on_X_and_is_positive_inside(square_n):
    q = square_n.normalized[0]
    assert np.abs(q.evaluate_many(np.array(SQ))).max() <= 1e-9
    assert q.evaluate_many(np.array([[0.5, 0.5]]))[0] > 0


def test_q_negative_far_outside(square_n):
    q = square_n.normalized[0]
    pts = np.array([[3.0, 0.5], [0.5, -2.0], [-4.0, -4.0], [2.0, 2.0]])
    assert (q.evaluate_many(pts) < 0).all()


def test_reduce_n_square_shape_and_audit(square_n):
    assert square_n.mode == C.Mode.N and len(square_n.outputs) == 2
    assert square_n.outputs[1] == elem_sym_compose(list(fixtures.get("square")), 4)
    audit = C.audit_parameters(square_n)
    assert all(audit.values()), audit


def test_reduction_json_round_trip(square_n):
    text = square_n.dumps()
    back = C.Reduction.loads(text)
    assert back.dumps() == C.Reduction.loads(back.dumps()).dumps()
    pts = np.random.default_rng(1).uniform(-0.5, 1.5, size=(500, 2))
    np.testing.assert_allclose(back.output_values(pts), square_n.output_values(pts), rtol=1e-9)


def test_reduce_n_plus_1_square():
    red = C.reduce_n_plus_1(fixtures.get("square"))
    S = list(fixtures.get("square"))
    assert len(red.outputs) == 3
    assert red.outputs[1] == elem_sym_compose(S, 3) and red.outputs[2] == elem_sym_compose(S, 4)
    assert all(C.audit_parameters(red).values())


def test_reduce_n_plus_1_interval():
    red = C.reduce_n_plus_1(fixtures.get("interval"))
    assert red.n == 1 and len(red.outputs) == 2


def test_hypothesis_violation_is_reported():
    with pytest.raises(C.HypothesisError):
        C.reduce_n_plus_1(fixtures.get("disk"))


def test_reduce_n_rejects_bad_X():
    with pytest.raises(C.InputError):
        C.reduce_n(fixtures.get("square"), [(0.0, 0.0), (0.5, 0.0)])
    with pytest.raises(C.InputError):
        C.reduce_n(fixtures.get("square"), [(2.0, 2.0)])
    with pytest.raises(C.InputError):
        C.reduce_n(fixtures.get("disk"))


def test_audit_recheck_triangle():
    red = C.reduce_n(fixtures.get("triangle"), TRI)
    audit = C.audit_parameters(red, recheck=True)
    assert all(audit.values()), audit
    assert {"alpha_lt_1", "gamma_pos", "mu_bound", "tau_alpha_l", "alpha_l_gamma",
            "degree_balance"} <= set(audit)


def test_audit_catches_tampered_parameters(square_n):
    red = C.Reduction.loads(square_n.dumps())
    red.params.l = 1
    assert not all(C.audit_parameters(red).values())
