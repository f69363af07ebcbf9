"""Decide whether a vertical field generates a symmetry group, or an
input/output-preserving one that proves the system is not observable.

Each condition becomes a :class:`ConditionEntry` holding the residual that
was zero-tested and the verdict; :class:`CheckReport` aggregates them into
PASS-proven / PASS-numeric / FAIL.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum

from .coords import T, Z, u
from .errors import ValidationError
from .expr import (
    DEFAULT_SEED, REJECT_TOL, Expr, EvaluationError, Verdict, VerdictKind, as_expr, derive,
    evaluate, free_symbols, is_zero, substitute,
)
from .jet import VerticalField, lie_derivative, prolong
from .system import ReductionMap, SystemSpec, boundary_reduce, build_reduction, reduce

NONVANISH_DRAWS = 256


class Aggregate(Enum):
    PASS_PROVEN = "PASS-proven"
    PASS_NUMERIC = "PASS-numeric"
    FAIL = "FAIL"

    @property
    def passed(self) -> bool:
        return self is not Aggregate.FAIL


@dataclass(frozen=True)
class ConditionEntry:
    condition: str
    residual: Expr
    verdict: Verdict
    reduction: str
    unreduced: Expr | None = None

    def to_dict(self) -> dict:
        d = {"condition": self.condition, "reduction": self.reduction,
             "residual": str(self.residual)}
        if self.unreduced is not None:
            d["unreduced"] = str(self.unreduced)
        d.update(self.verdict.to_dict())
        return d


@dataclass
class CheckOptions:
    extended_reduction: bool = False
    reduce_output: bool = False
    pivots: dict = field(default_factory=dict)  # {"left": [...], "right": [...]}
    seed: int = DEFAULT_SEED


def aggregate(entries) -> Aggregate:
    if any(e.verdict.failed for e in entries):
        return Aggregate.FAIL
    if all(e.verdict.proven and not e.verdict.marginal for e in entries):
        return Aggregate.PASS_PROVEN
    return Aggregate.PASS_NUMERIC


@dataclass(frozen=True)
class CheckReport:
    theorem: str  # "symmetry" or "nonobservability"
    entries: tuple
    aggregate: Aggregate

    def entry(self, condition: str) -> ConditionEntry:
        for e in self.entries:
            if e.condition == condition:
                return e
        raise KeyError(condition)

    def select(self, prefix: str) -> list:
        return [e for e in self.entries if e.condition.startswith(prefix)]

    @property
    def conclusion(self) -> str:
        if not self.aggregate.passed:
            return "inconclusive: the conditions are not met by this field"
        if self.theorem == "nonobservability":
            return "the system is not observable"
        return "the field generates a vertical symmetry group"

    def to_dict(self) -> dict:
        return {"theorem": self.theorem, "aggregate": self.aggregate.value,
                "conclusion": self.conclusion,
                "conditions": [e.to_dict() for e in self.entries]}


def _rng(rng, seed=DEFAULT_SEED):
    return rng if rng is not None else random.Random(seed)


def _reduction_name(m: ReductionMap) -> str:
    return "S2-extended" if m.extended else "S2-base"


def domain_residuals(spec: SystemSpec, field_: VerticalField, extended: bool = False):
    """``(condition, reduced, unreduced, mode)`` per evolution equation."""
    m = build_reduction(spec, extended)
    j2 = prolong(field_, 2, spec.context)
    out = []
    for a in range(1, spec.n_x + 1):
        raw = lie_derivative(j2, spec.equation(a))
        out.append((f"domain-{a}", reduce(raw, m), raw, _reduction_name(m)))
    return out


def boundary_residuals(spec: SystemSpec, field_: VerticalField, pivots=None):
    pivots = pivots or {}
    j1 = prolong(field_, 1, spec.context)
    out = []
    for side, funcs in (("left", spec.left), ("right", spec.right)):
        piv = pivots.get(side)
        mode = f"boundary-{side}" + ("-pivots" if piv else "")
        for i, g in enumerate(funcs, 1):
            raw = lie_derivative(j1, g)
            out.append((f"boundary-{side}-{i}", boundary_reduce(raw, side, spec, piv), raw, mode))
    return out


def output_residual(spec: SystemSpec, field_: VerticalField, reduce_output: bool = False,
                    extended: bool = False):
    j1 = prolong(field_, 1, spec.context)
    raw = lie_derivative(j1, spec.output)
    res = raw
    mode = "z=z0"
    if reduce_output:
        m = build_reduction(spec, extended)
        res = reduce(res, m)
        mode = _reduction_name(m) + ",z=z0"
    return ("output", substitute(res, {Z: spec.z0}), raw, mode)


def t0_u_residuals(field_: VerticalField):
    out = []
    for a, c in enumerate(field_.components, 1):
        raw = derive(c, u())
        out.append((f"t0-u-independence-{a}", substitute(raw, {T: 0}), raw, "t=0"))
    return out


def _entries(items, rng):
    return [ConditionEntry(name, res, is_zero(res, rng), mode, raw)
            for name, res, raw, mode in items]


def check_domain(spec: SystemSpec, field_: VerticalField, extended: bool = False, rng=None):
    return _entries(domain_residuals(spec, field_, extended), _rng(rng))


def check_u_aux(spec: SystemSpec, field_: VerticalField, extended: bool = False, rng=None):
    rng = _rng(rng)
    names = (("u-aux-z", u(1, 0)), ("u-aux-zz", u(2, 0)), ("u-aux-zt", u(1, 1)))
    if field_.vu.is_zero_literal():
        zero = as_expr(0)
        return [ConditionEntry(n, zero, Verdict(VerdictKind.PROVEN_ZERO), "short-circuit")
                for n, _ in names]
    m = build_reduction(spec, extended)
    j2 = prolong(field_, 2, spec.context)
    return _entries([(n, reduce(j2[c], m), j2[c], _reduction_name(m)) for n, c in names], rng)


def check_boundary(spec: SystemSpec, field_: VerticalField, pivots=None, rng=None):
    return _entries(boundary_residuals(spec, field_, pivots), _rng(rng))


def check_output(spec: SystemSpec, field_: VerticalField, reduce_output: bool = False,
                 extended: bool = False, rng=None):
    return _entries([output_residual(spec, field_, reduce_output, extended)], _rng(rng))[0]


def _nonvanishing(values, rng):
    """Search a point where some coefficient of v|_{t=0} is at least REJECT_TOL."""
    if all(v.is_zero_literal() for v in values):
        return Verdict(VerdictKind.IDENTICALLY_ZERO)
    coords = sorted(set().union(*(free_symbols(v) for v in values)), key=lambda c: c.sort_key)
    for _ in range(NONVANISH_DRAWS):
        point = {}
        for c in coords:
            if c == Z:
                point[c] = rng.uniform(0.0, 1.0)
            else:
                mag = rng.uniform(0.1, 2.0)
                point[c] = mag if rng.random() < 0.5 else -mag
        for v in values:
            try:
                val = evaluate(v, point)
            except EvaluationError:
                continue
            if abs(val) >= REJECT_TOL:
                return Verdict(VerdictKind.NONVANISHING, witness=point, value=val)
    return Verdict(VerdictKind.NONVANISHING, marginal=True)


def check_t0(field_: VerticalField, rng=None):
    rng = _rng(rng)
    out = _entries(t0_u_residuals(field_), rng)
    at0 = [substitute(c, {T: 0}) for c in field_.components]
    verdict = _nonvanishing(at0, rng)
    shown = max(at0, key=lambda e: not e.is_zero_literal())
    out.append(ConditionEntry("t0-nonvanishing", shown, verdict, "t=0"))
    return out


def check_symmetry(spec: SystemSpec, field_: VerticalField, options: CheckOptions | None = None,
                   rng=None) -> CheckReport:
    options = options or CheckOptions()
    _check_size(spec, field_)
    rng = _rng(rng, options.seed)
    entries = (check_domain(spec, field_, options.extended_reduction, rng)
               + check_u_aux(spec, field_, options.extended_reduction, rng)
               + check_boundary(spec, field_, options.pivots, rng))
    return CheckReport("symmetry", tuple(entries), aggregate(entries))


def check_nonobservability(spec: SystemSpec, field_: VerticalField,
                           options: CheckOptions | None = None, rng=None) -> CheckReport:
    options = options or CheckOptions()
    _check_size(spec, field_)
    if not field_.vu.is_zero_literal():
        raise ValidationError("non-observability needs a field without a d/du component (v_u = 0)")
    rng = _rng(rng, options.seed)
    domain = check_domain(spec, field_, options.extended_reduction, rng)
    boundary = check_boundary(spec, field_, options.pivots, rng)
    output = check_output(spec, field_, options.reduce_output, options.extended_reduction, rng)
    t0 = check_t0(field_, rng)
    entries = domain + boundary + [output] + t0
    report = CheckReport("nonobservability", tuple(entries), aggregate(entries))
    if report.aggregate.passed:
        # with v_u = 0 the symmetry conditions are a subset of these
        sym_entries = domain + check_u_aux(spec, field_) + boundary
        assert aggregate(sym_entries).passed, "non-observability PASS without symmetry PASS"
    return report


def _check_size(spec, field_):
    if field_.n_x != spec.n_x:
        raise ValidationError(f"field has {field_.n_x} components, system has {spec.n_x} states")
