"""Certified numerical oracle: interval/Bernstein branch-and-bound with an
explicit UNKNOWN outcome."""

from .config import OracleConfig
from .interval import Box, Interval, interval_evaluate
from .queries import (
    EnclosureResult,
    FeasibleMax,
    LojasiewiczResult,
    NXEstimate,
    RangeResult,
    active_set,
    bounding_box,
    certify_enclosure,
    certify_positive,
    estimate_n_X,
    lojasiewicz_search,
    max_on_feasible,
    min_on_feasible,
    range_on_box,
    relaxed_constraints,
)
from .bnb import certify_nonneg
from .verdict import Kind, Verdict

__all__ = [
    "Box", "EnclosureResult", "FeasibleMax", "Interval", "Kind", "LojasiewiczResult",
    "NXEstimate", "OracleConfig", "RangeResult", "Verdict", "active_set", "bounding_box",
    "certify_enclosure", "certify_nonneg", "certify_positive", "estimate_n_X",
    "interval_evaluate", "lojasiewicz_search", "max_on_feasible", "min_on_feasible",
    "range_on_box", "relaxed_constraints",
]
