"""Check records and their mechanical verdicts.

A :class:`BoundCheck` compares lhs <= rhs with error bars; a
:class:`ScalingCheck` compares a fitted exponent with a predicted one.  Both
flatten to the uniform report :class:`Row`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

PASS = "pass"
PASS_WITHIN_ERROR = "pass-within-error"
FAIL = "fail"
VACUOUS = "vacuous"
REPORT = "report"

N_SIGMA = 4.0
EXPONENT_SLACK = 0.05
MIN_R2 = 0.9
VACUITY_LEVEL = 0.9


@dataclass(frozen=True)
class Row:
    check_name: str
    params: dict
    lhs: float
    lhs_err: float
    rhs: float
    rhs_err: float
    verdict: str
    margin: float

    @property
    def failed(self) -> bool:
        return self.verdict == FAIL


def _verdict(lhs: float, rhs: float, err: float, tol: float) -> str:
    if not (math.isfinite(lhs) and math.isfinite(rhs)):
        return FAIL
    if lhs <= rhs + tol:
        return PASS
    if lhs <= rhs + tol + N_SIGMA * err:
        return PASS_WITHIN_ERROR
    return FAIL


@dataclass(frozen=True)
class BoundCheck:
    """lhs <= rhs (kind "bound") or lhs == rhs (kind "identity")."""

    name: str
    lhs: float
    rhs: float
    lhs_err: float = 0.0
    rhs_err: float = 0.0
    params: dict = field(default_factory=dict)
    kind: str = "bound"
    tol: float = 0.0
    asserted: bool = True
    vacuous: bool = False
    err: float | None = None  # overrides hypot(lhs_err, rhs_err), e.g. a paired stderr

    @property
    def combined_err(self) -> float:
        if self.err is not None:
            return self.err
        return math.hypot(self.lhs_err, self.rhs_err)

    @property
    def margin(self) -> float:
        if self.kind == "identity":
            return self.tol + N_SIGMA * self.combined_err - abs(self.lhs - self.rhs)
        return self.rhs - self.lhs

    @property
    def outcome(self) -> str:
        """The mechanical verdict, ignoring vacuity and report-only status."""
        if self.kind == "identity":
            return _verdict(abs(self.lhs - self.rhs), 0.0, self.combined_err, self.tol)
        return _verdict(self.lhs, self.rhs, self.combined_err, self.tol)

    @property
    def verdict(self) -> str:
        if self.vacuous:
            return VACUOUS
        if not self.asserted:
            return REPORT
        return self.outcome

    def to_row(self) -> Row:
        params = dict(self.params)
        if self.err is not None:
            params["combined_err"] = float(self.err)
        if not self.asserted or self.vacuous:
            params["outcome_pass"] = float(self.outcome != FAIL)
        return Row(self.name, params, float(self.lhs), float(self.lhs_err), float(self.rhs), float(self.rhs_err),
                   self.verdict, float(self.margin))


@dataclass(frozen=True)
class ScalingCheck:
    """Observed decay exponent against the predicted one.

    Upper bounds only constrain the decay from one side, so the check passes
    iff fitted >= predicted - 0.05 and the fit has r^2 >= 0.9.
    """

    name: str
    fitted_exponent: float
    predicted_exponent: float
    r_squared: float
    params: dict = field(default_factory=dict)
    grid: tuple = ()
    fitted_stderr: float = 0.0
    asserted: bool = True
    vacuous: bool = False

    @property
    def margin(self) -> float:
        return self.fitted_exponent - (self.predicted_exponent - EXPONENT_SLACK)

    @property
    def outcome(self) -> str:
        ok = (math.isfinite(self.fitted_exponent) and self.margin >= 0 and self.r_squared >= MIN_R2)
        return PASS if ok else FAIL

    @property
    def verdict(self) -> str:
        if self.vacuous:
            return VACUOUS
        if not self.asserted:
            return REPORT
        return self.outcome

    def to_row(self) -> Row:
        params = dict(self.params)
        params.update(predicted=self.predicted_exponent, r2=self.r_squared, grid_points=float(len(self.grid)))
        if self.grid:
            params.update(grid_min=float(min(self.grid)), grid_max=float(max(self.grid)))
        if not self.asserted or self.vacuous:
            params["outcome_pass"] = float(self.outcome == PASS)
        return Row(self.name, params, float(self.predicted_exponent - EXPONENT_SLACK), 0.0,
                   float(self.fitted_exponent), float(self.fitted_stderr), self.verdict, float(self.margin))


def report_row(name: str, value: float, err: float = 0.0, params: dict | None = None,
               reference: float = math.nan, reference_err: float = 0.0) -> Row:
    """An informational row (distance values, fits) that never affects status."""
    margin = reference - value if math.isfinite(reference) else math.nan
    return Row(name, dict(params or {}), float(value), float(err), float(reference), float(reference_err),
               REPORT, float(margin))


def to_rows(items) -> list[Row]:
    out = []
    for it in items:
        if isinstance(it, Row):
            out.append(it)
        else:
            out.append(it.to_row())
    return out
