"""Polynomial inequality systems and their JSON form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import poly as _poly
from .poly import DimensionMismatch, Polynomial


class SystemFormatError(ValueError):
    """Raised when a system file cannot be parsed."""


@dataclass(frozen=True)
class SemiAlgebraicSystem:
    """An ordered list of polynomials read as ``p_1 >= 0, ..., p_s >= 0``."""

    polys: tuple[Polynomial, ...]
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        polys = tuple(self.polys)
        object.__setattr__(self, "polys", polys)
        if not polys:
            raise ValueError("a system needs at least one polynomial")
        d = polys[0].dim
        if any(p.dim != d for p in polys):
            raise DimensionMismatch("polynomials differ in dimension")

    @property
    def dim(self) -> int:
        return self.polys[0].dim

    @property
    def s(self) -> int:
        return len(self.polys)

    def __len__(self) -> int:
        return len(self.polys)

    def __iter__(self):
        return iter(self.polys)

    def __getitem__(self, i):
        return self.polys[i]

    def values(self, points) -> np.ndarray:
        """``(N, s)`` array of constraint values."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.stack([p.evaluate_many(pts) for p in self.polys], axis=1)

    def contains(self, points, tol: float = 0.0) -> np.ndarray:
        return (self.values(points) >= -tol).all(axis=1)

    def to_dict(self) -> dict:
        out = {"dim": self.dim, "polynomials": [_poly.to_dict(p) for p in self.polys]}
        if self.name:
            out["name"] = self.name
        return out

    @classmethod
    def from_dict(cls, data) -> SemiAlgebraicSystem:
        try:
            if isinstance(data, list):
                polys = [_poly.from_dict(p) for p in data]
                name = ""
            else:
                polys = [_poly.from_dict(p) for p in data["polynomials"]]
                name = str(data.get("name", ""))
                if "dim" in data and any(p.dim != int(data["dim"]) for p in polys):
                    raise SystemFormatError("polynomial dimension disagrees with 'dim'")
        except SystemFormatError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise SystemFormatError(f"malformed system: {exc}") from exc
        if not polys:
            raise SystemFormatError("system has no polynomials")
        try:
            return cls(tuple(polys), name)
        except ValueError as exc:
            raise SystemFormatError(str(exc)) from exc

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def loads(cls, text: str) -> SemiAlgebraicSystem:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SystemFormatError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> SemiAlgebraicSystem:
        return cls.loads(Path(path).read_text())


def as_system(obj) -> SemiAlgebraicSystem:
    if isinstance(obj, SemiAlgebraicSystem):
        return obj
    return SemiAlgebraicSystem(tuple(obj))


def load_points(path: str | Path) -> list[tuple[float, ...]]:
    """Read a point list: ``[[x1, ...], ...]`` or ``{"points": [...]}``."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SystemFormatError(f"invalid JSON: {exc}") from exc
    if isinstance(data, dict):
        data = data.get("points", data.get("X"))
    if not isinstance(data, list):
        raise SystemFormatError("expected a list of points")
    try:
        return [tuple(float(v) for v in pt) for pt in data]
    except (TypeError, ValueError) as exc:
        raise SystemFormatError(f"malformed point list: {exc}") from exc


def points_json(points: Sequence[Sequence[float]]) -> str:
    return json.dumps({"points": [list(map(float, p)) for p in points]}, indent=2)
