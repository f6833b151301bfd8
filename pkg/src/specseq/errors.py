"""Error types shared across the engine.

Every failure mode that callers are expected to handle carries a stable
machine-readable ``code``; the CLI surfaces these verbatim as JSON error
objects with exit status 2.
"""

from __future__ import annotations


class SpecseqError(Exception):
    """Base class for all engine errors."""

    code = "SPECSEQ_ERROR"

    def __init__(self, message: str, **detail):
        super().__init__(message)
        self.detail = detail

    def to_json(self) -> dict:
        obj = {"error": self.code, "message": str(self)}
        if self.detail:
            obj["detail"] = {k: _jsonable(v) for k, v in self.detail.items()}
        return obj


def _jsonable(value):
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


class ShapeMismatch(SpecseqError):
    """Matrix or module shapes do not line up."""

    code = "SHAPE_MISMATCH"


class CompositionNonzero(SpecseqError):
    """Two maps that must compose to zero do not."""

    code = "COMPOSITION_NONZERO"


class RefinementError(SpecseqError):
    """Attempt to localize at fewer primes than already inverted."""

    code = "REFINEMENT_ERROR"


class UnknownAtlas(SpecseqError):
    """Unrecognized built-in coefficient system name."""

    code = "UNKNOWN_ATLAS"


class NotStabilized(SpecseqError):
    """A tower fails to reach isomorphic connecting maps."""

    code = "NOT_STABILIZED"


class StableRangeExceeded(SpecseqError):
    """A range-bounded coefficient system was evaluated beyond its bound."""

    code = "STABLE_RANGE_EXCEEDED"


class BidegreeViolation(SpecseqError):
    """A differential does not follow the page-r bidegree law."""

    code = "BIDEGREE_VIOLATION"


class NotConverged(SpecseqError):
    """Abutment requested from a page not certified final."""

    code = "NOT_CONVERGED"


class NoncommutingDifferentials(SpecseqError):
    """Supplied differentials fail naturality against a page morphism."""

    code = "NONCOMMUTING_DIFFERENTIALS"


class HypothesisNotAcknowledged(SpecseqError):
    """Rational collapse requested without asserting its hypothesis."""

    code = "HYPOTHESIS_NOT_ACKNOWLEDGED"


class DegreeOutOfRange(SpecseqError):
    """Degree argument outside the defined range of an operation."""

    code = "DEGREE_OUT_OF_RANGE"
