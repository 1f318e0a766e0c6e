"""Oracle tuning knobs."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path


@dataclass(frozen=True)
class OracleConfig:
    """Limits and tolerances shared by every oracle query.

    tol          absolute accuracy target for bound queries; also the
                 equality tolerance ``sum p_j^2 <= tol^2`` used for active sets
    max_depth    maximum bisection depth of a single box
    r_max        outer radius of the certified annulus region
    samples      sample count for falsifiers and cross-checks
    cluster_tol  merge distance unit for point clusters (centers within
                 ``10 * cluster_tol`` are merged)
    max_boxes    work budget per query, in processed boxes
    seed         seed for every random choice
    """

    tol: float = 1e-6
    max_depth: int = 120
    r_max: float = 1e6
    samples: int = 20000
    cluster_tol: float = 1e-7
    max_boxes: int = 200_000
    max_clusters: int = 64
    seed: int = 12345

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if not self.r_max > 0:
            raise ValueError("r_max must be positive")
        if self.samples < 1 or self.max_boxes < 1 or self.max_clusters < 1:
            raise ValueError("counts must be positive")
        if not self.cluster_tol > 0:
            raise ValueError("cluster_tol must be positive")

    def replace(self, **changes) -> OracleConfig:
        data = asdict(self)
        data.update(changes)
        return OracleConfig(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> OracleConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown oracle settings: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> OracleConfig:
        return cls.from_dict(json.loads(Path(path).read_text()))
