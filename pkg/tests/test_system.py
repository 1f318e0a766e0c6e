import json

import numpy as np
import pytest

from polyrep import fixtures
from polyrep.poly import DimensionMismatch, Polynomial
from polyrep.system import SemiAlgebraicSystem, SystemFormatError, load_points, points_json


def test_fixture_vertices_are_in_the_set(fixture_name):
    if fixture_name not in fixtures._VERTICES:
        pytest.skip("no vertex list")
    S = fixtures.get(fixture_name)
    V = np.array(fixtures.vertices(fixture_name))
    assert (S.values(V) >= -1e-12).all()


def test_unknown_fixture():
    with pytest.raises(KeyError):
        fixtures.get("dodecahedron")


def test_round_trip(fixture_name):
    S = fixtures.get(fixture_name)
    text = S.dumps()
    assert SemiAlgebraicSystem.loads(text) == S
    assert SemiAlgebraicSystem.loads(text).dumps() == text


def test_bare_list_accepted():
    S = fixtures.get("square")
    data = json.loads(S.dumps())["polynomials"]
    assert SemiAlgebraicSystem.from_dict(data).polys == S.polys


@pytest.mark.parametrize("text", ["{", "[]", '{"polynomials": []}', '{"dim": 3, "polynomials": [{"dim": 2, "terms": []}]}',
                                  '{"nothing": 1}'])
def test_malformed(text):
    with pytest.raises(SystemFormatError):
        SemiAlgebraicSystem.loads(text)


def test_mixed_dimensions():
    with pytest.raises(DimensionMismatch):
        SemiAlgebraicSystem((Polynomial.variable(1, 0), Polynomial.variable(2, 0)))


def test_points_io(tmp_path):
    p = tmp_path / "X.json"
    p.write_text(points_json([(0, 1), (2.5, -1)]))
    assert load_points(p) == [(0.0, 1.0), (2.5, -1.0)]
    p.write_text("[[1, 2]]")
    assert load_points(p) == [(1.0, 2.0)]
    p.write_text('{"points": 3}')
    with pytest.raises(SystemFormatError):
        load_points(p)


def test_contains():
    S = fixtures.get("triangle")
    assert S.contains([[0.2, 0.2], [0.9, 0.9]]).tolist() == [True, False]
