"""Reference systems used by tests, examples and the CLI.

Each fixture returns a :class:`SemiAlgebraicSystem`; the ones with a known
vertex set also expose it through :func:`vertices`.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .poly import Polynomial
from .system import SemiAlgebraicSystem


def _xy():
    return Polynomial.variables(2)


def unit_square() -> SemiAlgebraicSystem:
    x, y = _xy()
    return SemiAlgebraicSystem((x, 1 - x, y, 1 - y), "square")


def triangle() -> SemiAlgebraicSystem:
    x, y = _xy()
    return SemiAlgebraicSystem((x, y, 1 - x - y), "triangle")


def pentagon() -> SemiAlgebraicSystem:
    """Regular pentagon with vertices on the unit circle, one at the top."""
    x, y = _xy()
    h = math.cos(math.pi / 5)
    polys = []
    for i in range(5):
        t = math.pi / 2 + math.pi / 5 + 2 * math.pi * i / 5
        polys.append(h - math.cos(t) * x - math.sin(t) * y)
    return SemiAlgebraicSystem(tuple(polys), "pentagon")


def unit_disk() -> SemiAlgebraicSystem:
    x, y = _xy()
    return SemiAlgebraicSystem((1 - x * x - y * y,), "disk")


def unit_interval() -> SemiAlgebraicSystem:
    (x,) = Polynomial.variables(1)
    return SemiAlgebraicSystem((x, 1 - x), "interval")


def single_point() -> SemiAlgebraicSystem:
    x, y = _xy()
    return SemiAlgebraicSystem((x, -x, y, -y), "point")


def crescent() -> SemiAlgebraicSystem:
    """Unit disk minus the overlapping unit disk centred at (1, 0), upper half.

    Nonconvex; the second constraint is scaled by 1/3 so every constraint
    peaks at 1 on the set.
    """
    x, y = _xy()
    outside = ((x - 1) * (x - 1) + y * y - 1).scale(Fraction(1, 3))
    return SemiAlgebraicSystem((1 - x * x - y * y, outside, y), "crescent")


def remark_system() -> SemiAlgebraicSystem:
    """A bounded set whose plain relaxations are unbounded for every eps."""
    x, y = _xy()
    p = -(x - y) * (x - y) - (x * x + y * y - 1) * (1 + x * x - y * y) ** 2
    return SemiAlgebraicSystem((p,), "remark")


_VERTICES = {
    "square": lambda: [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)],
    "triangle": lambda: [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)],
    "pentagon": lambda: [
        (math.cos(math.pi / 2 + 2 * math.pi * j / 5), math.sin(math.pi / 2 + 2 * math.pi * j / 5))
        for j in range(5)
    ],
    "crescent": lambda: [(-1.0, 0.0), (0.0, 0.0), (0.5, math.sqrt(3) / 2)],
    "interval": lambda: [(0.0,), (1.0,)],
}

FIXTURES = {
    "square": unit_square,
    "triangle": triangle,
    "pentagon": pentagon,
    "disk": unit_disk,
    "interval": unit_interval,
    "point": single_point,
    "crescent": crescent,
    "remark": remark_system,
}


def get(name: str) -> SemiAlgebraicSystem:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None


def vertices(name: str) -> list[tuple[float, ...]]:
    """Points where the maximal number of constraints is active."""
    return _VERTICES[name]()
