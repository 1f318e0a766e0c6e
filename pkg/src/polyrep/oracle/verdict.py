"""Three-valued outcome of an oracle query."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np


class Kind(str, Enum):
    PROVED = "PROVED"
    REFUTED = "REFUTED"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class Verdict:
    kind: Kind
    witness: tuple[float, ...] | None = None
    reason: str = ""
    detail: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind is Kind.REFUTED and self.witness is None:
            raise ValueError("a refutation must carry a witness point")

    @classmethod
    def proved(cls, reason: str = "", **detail) -> Verdict:
        return cls(Kind.PROVED, None, reason, detail)

    @classmethod
    def refuted(cls, witness, reason: str = "", **detail) -> Verdict:
        w = tuple(float(v) for v in np.asarray(witness, dtype=float).ravel())
        return cls(Kind.REFUTED, w, reason, detail)

    @classmethod
    def unknown(cls, reason: str, **detail) -> Verdict:
        return cls(Kind.UNKNOWN, None, reason, detail)

    @property
    def is_proved(self) -> bool:
        return self.kind is Kind.PROVED

    @property
    def is_refuted(self) -> bool:
        return self.kind is Kind.REFUTED

    @property
    def is_unknown(self) -> bool:
        return self.kind is Kind.UNKNOWN

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind.value}
        if self.witness is not None:
            out["witness"] = list(self.witness)
        if self.reason:
            out["reason"] = self.reason
        if self.detail:
            out["detail"] = _plain(self.detail)
        return out

    def __str__(self) -> str:
        if self.is_refuted:
            return f"REFUTED at {list(self.witness)}"
        if self.is_unknown:
            return f"UNKNOWN ({self.reason})"
        return "PROVED"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Enum):
        return obj.value
    return obj
