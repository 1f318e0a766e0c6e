import math

import numpy as np
import pytest

from polyrep import fixtures
from polyrep.oracle import (
    Box,
    OracleConfig,
    active_set,
    bounding_box,
    certify_enclosure,
    certify_nonneg,
    certify_positive,
    estimate_n_X,
    lojasiewicz_search,
    max_on_feasible,
    min_on_feasible,
    range_on_box,
)
from polyrep.oracle.bernstein import BernsteinEncloser, rigorous_eval
from polyrep.poly import Polynomial


def test_range_sum_of_squares(xy):
    x, y = xy
    r = range_on_box(x * x + y * y, Box.cube(2, 1.0), tol=1e-6)
    assert r.verdict.is_proved
    assert r.min_lo <= 0.0 <= r.min_hi <= 1e-6
    assert r.max_lo <= 2.0 <= r.max_hi


def test_range_constant():
    r = range_on_box(Polynomial.constant(2, 3), Box.cube(2, 5.0))
    lo, hi, v = r
    assert (lo, hi) == (3.0, 3.0) and v.is_proved


def test_range_parabola_maximum():
    (x,) = Polynomial.variables(1)
    r = range_on_box(x * (1 - x), Box.from_bounds([0.0], [1.0]), tol=1e-6)
    assert 0.25 - 1e-6 <= r.max_lo <= 0.25 <= r.max_hi <= 0.25 + 1e-6


def test_max_of_x_over_square():
    x, _ = Polynomial.variables(2)
    r = max_on_feasible(x, list(fixtures.get("square")), Box.cube(2, 1.5, (0.5, 0.5)), tol=1e-6)
    assert r.verdict.is_proved and 1.0 <= r.upper <= 1.0 + 1e-6


def test_max_of_constant():
    r = max_on_feasible(Polynomial.constant(2, 1), list(fixtures.get("square")), Box.cube(2, 2.0))
    assert r.upper == pytest.approx(1.0, abs=1e-12)


def test_max_norm_over_triangle():
    x, y = Polynomial.variables(2)
    r = max_on_feasible(x * x + y * y, list(fixtures.get("triangle")), Box.cube(2, 2.0), tol=1e-6)
    assert r.verdict.is_proved and 1.0 - 1e-6 <= r.lower <= 1.0 <= r.upper <= 1.0 + 1e-6


def test_empty_feasible_set_gives_minus_infinity(xy):
    x, y = xy
    r = max_on_feasible(x, [x - 2, 1 - x], Box.cube(2, 3.0))
    assert r.upper == -math.inf and r.verdict.is_proved


def test_min_on_feasible_lower_bound(xy):
    x, y = xy
    r = min_on_feasible(x + y, list(fixtures.get("square")), Box.cube(2, 2.0), tol=1e-6)
    assert -1e-6 <= r.lower <= 0.0


def test_bounding_box_of_pentagon():
    box, v = bounding_box(list(fixtures.get("pentagon")), Box.cube(2, 4.0))
    assert v.is_proved
    xs, ys = zip(*fixtures.vertices("pentagon"))
    assert box.lo[0] <= min(xs) and box.hi[0] >= max(xs)
    assert box.lo[1] <= min(ys) and box.hi[1] >= max(ys)
    assert box.hi[1] - max(ys) < 1e-5 and min(ys) - box.lo[1] < 1e-5


def test_certify_nonneg_refutes_with_valid_witness(xy):
    x, y = xy
    F = x * y - 0.1
    v = certify_nonneg(F, [x, y, 1 - x - y], Box.cube(2, 1.0))
    assert v.is_refuted
    w = np.asarray(v.witness)
    assert F.evaluate_many(w[None])[0] < 0
    assert min(w[0], w[1], 1 - w[0] - w[1]) >= -1e-12


def test_certify_positive_on_square(xy):
    x, y = xy
    assert certify_positive(1 + x * y, list(fixtures.get("square")), Box.cube(2, 2.0)).is_proved
    assert certify_positive(x * y - 0.01, list(fixtures.get("square")), Box.cube(2, 2.0)).is_refuted


def test_enclosure_disk_radius():
    res = certify_enclosure(list(fixtures.get("disk")), 0, 0.5, r_max=10.0)
    assert res.verdict.is_proved
    assert math.sqrt(1.5) - 1e-6 <= res.radius <= math.sqrt(1.5) + 1e-6


def test_enclosure_remark_refuted_without_weight():
    res = certify_enclosure(list(fixtures.get("remark")), 0, 0.1, r_max=10.0)
    assert res.verdict.is_refuted
    w = np.asarray(res.verdict.witness)
    assert np.linalg.norm(w) > 10.0
    p = fixtures.get("remark")[0]
    assert p.evaluate_many(w[None])[0] >= -0.1


def test_enclosure_rejects_bad_arguments():
    with pytest.raises(ValueError):
        certify_enclosure(list(fixtures.get("disk")), 0, 0.0)
    with pytest.raises(ValueError):
        certify_enclosure(list(fixtures.get("disk")), -1, 0.5)


@pytest.mark.parametrize("power,want", [(2, 2), (1, 1), (4, 4)])
def test_lojasiewicz_examples(power, want, rng):
    (x,) = Polynomial.variables(1)
    f = x ** power
    res = lojasiewicz_search(f, x, Box.from_bounds([-1.0], [1.0]))
    assert res.verdict.is_proved and res.M == want and res.lam == 1.0
    t = rng.uniform(-1, 1, 10_000)
    assert (res.lam * np.abs(t ** power) - np.abs(t) ** res.M >= -1e-10).all()


def test_active_set_examples():
    sq = list(fixtures.get("square"))
    # square constraints are (x1, 1 - x1, x2, 1 - x2); indices are 0-based
    assert active_set(sq, (0, 0), 1e-9) == {0, 2}
    assert active_set(sq, (0.5, 0.5), 1e-9) == set()
    assert active_set(sq, (0, 0.5), 1e-9) == {0}


@pytest.mark.parametrize("name", ["square", "triangle"])
def test_estimate_n_X_vertices(name):
    est = estimate_n_X(list(fixtures.get(name)), Box.cube(2, 2.0))
    assert est.n == 2 and est.finite
    want = sorted(fixtures.vertices(name))
    assert len(est.X) == len(want)
    got = np.array(est.X)
    for v in want:
        assert np.abs(got - v).max(axis=1).min() <= 1e-6


def test_estimate_n_X_disk_is_infinite():
    est = estimate_n_X(list(fixtures.get("disk")), Box.cube(2, 2.0))
    assert est.n == 1 and not est.finite and est.X == []


def test_bernstein_enclosure_contains_values(rng):
    x, y = Polynomial.variables(2)
    p = 3 * x ** 4 - x * y ** 3 + 0.7 * y - 2
    enc = BernsteinEncloser(p)
    lo = np.array([[-1.0, 0.0], [0.2, -2.0]])
    hi = np.array([[0.5, 1.0], [0.9, -1.0]])
    e = enc.enclose(lo, hi)
    for b in range(2):
        pts = rng.uniform(lo[b], hi[b], size=(4000, 2))
        v = p.evaluate_many(pts)
        assert e.lower[b] <= v.min() and v.max() <= e.upper[b]


def test_rigorous_eval_brackets_float_value(rng):
    x, y = Polynomial.variables(2)
    p = (x - y) ** 5 + 1e-3
    pts = rng.uniform(-1, 1, size=(200, 2))
    lo, hi = rigorous_eval(p, pts)
    v = p.evaluate_many(pts)
    assert (lo <= v).all() and (v <= hi).all()


def test_config_round_trip_and_validation(tmp_path):
    cfg = OracleConfig(tol=1e-5, seed=7)
    p = tmp_path / "cfg.json"
    import json
    p.write_text(json.dumps(cfg.to_dict()))
    assert OracleConfig.load(p) == cfg
    with pytest.raises(ValueError):
        OracleConfig(tol=0)
    with pytest.raises(ValueError):
        OracleConfig.from_dict({"nonsense": 1})
