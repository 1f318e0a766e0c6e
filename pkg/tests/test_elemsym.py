import math
from fractions import Fraction
from itertools import combinations

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from polyrep import fixtures
from polyrep.elemsym import (
    elem_sym_array,
    elem_sym_bruteforce,
    elem_sym_compose,
    elem_sym_compose_all,
    elem_sym_values,
    nonneg_via_sigma,
    pos_via_sigma,
    sigma_sign_tests,
    vieta_coefficients,
)
from polyrep.poly import Polynomial, evaluate


def test_values_examples():
    assert list(elem_sym_values((1, 2, 3))) == [6, 11, 6]
    assert list(elem_sym_values((0, 0, 0, 0))) == [0, 0, 0, 0]
    assert list(elem_sym_values((1, -1))) == [0, -1]


def test_vieta_check():
    y = (Fraction(1, 2), -3, 4, 0)
    sig = elem_sym_values(y)
    assert list(vieta_coefficients(y))[1:] == list(sig)


def test_sign_tests_examples():
    assert nonneg_via_sigma((1, 1)) and pos_via_sigma((1, 1))
    assert not nonneg_via_sigma((1, -1)) and not pos_via_sigma((1, -1))
    assert nonneg_via_sigma((0, 5)) and not pos_via_sigma((0, 5))


def test_compose_examples(xy):
    x, y = xy
    assert elem_sym_compose([x, y], 1) == x + y
    assert elem_sym_compose([x, y], 2) == x * y
    c = [Polynomial.constant(2, v) for v in (2, 3, 5)]
    assert elem_sym_compose(c, 2) == Polynomial.constant(2, 2 * 3 + 3 * 5 + 2 * 5)
    sq = list(fixtures.get("square"))
    assert evaluate(elem_sym_compose(sq, 4), (Fraction(1, 2), Fraction(1, 2))) == Fraction(1, 16)


def test_compose_all_matches_single(xy):
    sq = list(fixtures.get("square"))
    allk = elem_sym_compose_all(sq)
    for k in range(1, 5):
        assert allk[k - 1] == elem_sym_compose(sq, k)


def test_array_matches_bruteforce(rng):
    Y = rng.uniform(-2, 2, size=(40, 5))
    S = elem_sym_array(Y)
    for row, srow in zip(Y, S):
        for k in range(1, 6):
            assert math.isclose(srow[k - 1], elem_sym_bruteforce(row, k), rel_tol=1e-12, abs_tol=1e-12)


ys = st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=8), min_size=1, max_size=6)


@settings(max_examples=200, deadline=None)
@given(ys)
def test_sign_equivalence_exact(y):
    assert nonneg_via_sigma(y) == all(v >= 0 for v in y)
    assert pos_via_sigma(y) == all(v > 0 for v in y)


@settings(max_examples=100, deadline=None)
@given(ys)
def test_recurrence_matches_definition(y):
    sig = elem_sym_values(y)
    for k in range(1, len(y) + 1):
        want = sum((math.prod(c) for c in combinations(y, k)), Fraction(0))
        assert sig[k - 1] == want


def test_vectorized_sign_tests(rng):
    Y = rng.uniform(-2, 2, size=(5000, 4))
    Y[::7, 1] = 0.0
    nonneg, pos = sigma_sign_tests(Y)
    np.testing.assert_array_equal(nonneg, (Y >= 0).all(axis=1))
    np.testing.assert_array_equal(pos, (Y > 0).all(axis=1))
