"""Exception types shared across the package."""

from __future__ import annotations


class PreconditionError(ValueError):
    """An operation's stated precondition does not hold for the given data."""


class Infeasible(Exception):
    """A realization target fails submajorization.

    Carries the report with the violating margin so callers can print or
    serialize a certificate.
    """

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report

    @property
    def margin(self) -> float:
        if self.report is None:
            return float("nan")
        return float(min(self.report.margins))


class InvariantViolation(RuntimeError):
    """An internal invariant failed; indicates a bug, not bad input."""
