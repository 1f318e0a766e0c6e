import math

import numpy as np
import pytest

from polyrep import construct as C
from polyrep import fixtures
from polyrep import verify as V
from polyrep.oracle import Box
from polyrep.poly import Polynomial


def _disk(r2):
    x, y = Polynomial.variables(2)
    return [r2 - x * x - y * y]


def test_identical_systems_agree():
    S = fixtures.get("pentagon")
    rep = V.grid_equivalence(S, S, Box.cube(2, 1.5), 101)
    assert rep.passed and rep.closed_disagree == 0


def test_square_and_disk_disagree():
    rep = V.grid_equivalence(fixtures.get("square"), fixtures.get("disk"), Box.cube(2, 1.5), 101)
    assert not rep.passed and rep.closed_disagree > 0
    assert rep.examples


def test_grid_points_shape_and_corners():
    pts = V.grid_points(Box.from_bounds([0, -1], [1, 1]), [3, 5])
    assert pts.shape == (15, 2)
    assert pts[0].tolist() == [0, -1] and pts[-1].tolist() == [1, 1]
    with pytest.raises(ValueError):
        V.grid_points(Box.cube(1, 1.0), 1)


def test_hausdorff_identical_sets():
    S = fixtures.get("disk")
    h = V.hausdorff_estimate(S, S, Box.cube(2, 1.5), 151)
    assert h.estimate == 0.0 and h.lower == 0.0 and h.upper <= h.cell


def test_hausdorff_concentric_disks():
    h = V.hausdorff_estimate(_disk(1.0), _disk(1.21), Box.cube(2, 1.5), 301)
    assert h.lower <= 0.1 <= h.upper
    assert abs(h.estimate - 0.1) <= h.cell


def test_hausdorff_relaxations_shrink():
    S = fixtures.get("triangle")
    box = Box.cube(2, 1.5, (0.5, 0.5))
    ests = []
    for eps in (0.1, 0.05, 0.025):
        relaxed = [p + eps for p in S]
        ests.append(V.hausdorff_estimate(S, relaxed, box, 401).estimate)
    assert ests[0] >= ests[1] >= ests[2]


def test_hausdorff_needs_points():
    with pytest.raises(ValueError):
        V.hausdorff_estimate(_disk(1.0), _disk(-1.0), Box.cube(2, 2.0), 51)


def test_sandwich_square():
    S = fixtures.get("square")
    g = C.build_g(S, 0, 1.0, C.find_k(4, 1.0, 1.0))
    rep = V.sandwich_check(S, g, 0, 1.0, Box.cube(2, 1.5, (0.5, 0.5)), 201)
    assert rep["passed"], rep
    assert rep["interior_points"] > 0 and rep["sublevel_points"] > 0


def test_sandwich_detects_bad_k():
    S = fixtures.get("pentagon")
    # k too small for s = 5 at eps/lam = 0.1: the sublevel set leaks out
    g = C.build_g(S, 0, 2.0, 1)
    rep = V.sandwich_check(S, g, 0, 0.2, Box.cube(2, 3.0), 201)
    assert rep["relaxed_violations"] > 0 and not rep["passed"]


def test_local_representation_square():
    rep = V.local_representation_check(fixtures.get("square"), 2, 0, 0.125, Box.cube(2, 2.0, (0.5, 0.5)))
    assert rep["passed"] and rep["points"] > 0


def test_approx_triangle_within_target():
    ap = V.approx_polynomial(fixtures.get("triangle"), 0.1)
    assert ap.hausdorff.upper <= 0.1
    uppers = [h["upper"] for h in ap.history]
    assert uppers == sorted(uppers, reverse=True)
    assert set(ap.to_dict()) >= {"polynomial", "parameters", "hausdorff", "history"}


def test_approx_loose_target_passes_at_first_eps():
    ap = V.approx_polynomial(fixtures.get("square"), 5.0)
    assert len(ap.history) == 1


def test_approx_rejects_nonpositive_eps():
    with pytest.raises(ValueError):
        V.approx_polynomial(fixtures.get("square"), 0.0)
    with pytest.raises(ValueError):
        V.approx_polynomial_vanishing(fixtures.get("square"), fixtures.vertices("square"), -1.0)


def test_approx_disk():
    ap = V.approx_polynomial(fixtures.get("disk"), 0.05)
    assert ap.hausdorff.upper <= 0.05
    rep = V.sandwich_check(fixtures.get("disk"), 1 - ap.q, ap.M, ap.eps, Box.cube(2, 1.6), 201)
    assert rep["passed"], rep


def test_approx_vanishing_square():
    X = fixtures.vertices("square")
    ap = V.approx_polynomial_vanishing(fixtures.get("square"), X, 0.1)
    from polyrep.expr import leading_scale
    vals = ap.q.evaluate_many(np.array(X)) / leading_scale(ap.q)
    assert np.abs(vals).max() <= 1e-9
    assert ap.hausdorff.upper <= 0.1
    uppers = [h["upper"] for h in ap.history]
    assert all(b <= a for a, b in zip(uppers, uppers[1:]))


def test_verify_reduction_and_perturbation():
    red = C.reduce_n_plus_1(fixtures.get("interval"))
    assert V.verify_reduction(red).passed
    bad = C.Reduction.loads(red.dumps())
    bad.outputs[1] = bad.outputs[1].scale(1.1) + Polynomial.constant(1, 0.05)
    assert not V.verify_reduction(bad).passed
