"""Shorter polynomial representations of basic closed semialgebraic sets.

A set ``P = {p_1 >= 0, ..., p_s >= 0}`` whose maximal number of
simultaneously active constraints is ``n < s`` is rewritten with ``n + 1``
or ``n`` polynomials. Every numeric parameter comes from a certified oracle
(outward-rounded interval and Bernstein bounds) that may answer UNKNOWN.
"""

from .poly import Polynomial
from .system import SemiAlgebraicSystem
from .construct import (
    HypothesisError,
    InputError,
    Mode,
    ParameterSet,
    PipelineError,
    Reduction,
    audit_parameters,
    reduce_n,
    reduce_n_plus_1,
)
from .verify import (
    approx_polynomial,
    approx_polynomial_vanishing,
    grid_equivalence,
    hausdorff_estimate,
    verify_reduction,
)

__version__ = "0.1.0"

__all__ = [
    "HypothesisError", "InputError", "Mode", "ParameterSet", "PipelineError", "Polynomial",
    "Reduction", "SemiAlgebraicSystem", "approx_polynomial", "approx_polynomial_vanishing",
    "audit_parameters", "grid_equivalence", "hausdorff_estimate", "reduce_n", "reduce_n_plus_1",
    "verify_reduction",
]
