"""PDE systems x_t = f(z, t, x, x_z, x_zz, u) with boundary conditions and a point output.

Also builds reduction maps: substitution rules that eliminate the
coordinates fixed by the evolution equations (and u_z = u_zz = u_zt = 0),
optionally together with their first differential consequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .coords import JetContext, JetCoordinate, Z, u, x
from .errors import BoundaryPivotError, ReductionError, ValidationError
from .expr import Expr, as_expr, derive, free_symbols, substitute
from .jet import total_derivative

MAX_PASSES = 8


def _rhs_allowed(c: JetCoordinate) -> bool:
    if c.is_independent:
        return True
    if c.is_input:
        return c.order == 0
    return c.nt == 0 and c.nz <= 2


def _boundary_allowed(c: JetCoordinate) -> bool:
    if c.role == "t":
        return True
    return c.is_dependent and c.nt == 0 and c.nz <= 1


def _check_allowed(e: Expr, n_x: int, allowed, what: str, allowed_text: str):
    for c in sorted(free_symbols(e), key=lambda c: c.sort_key):
        if c.is_dependent and c.index > n_x:
            raise ValidationError(f"{what} mentions {c.name} but n_x = {n_x}")
        if not allowed(c):
            raise ValidationError(f"{what} may not mention {c.name} (allowed: {allowed_text})")


@dataclass(frozen=True)
class SystemSpec:
    """Evolution system, boundary functions at z=0 (left) / z=1 (right), output c at z0."""

    rhs: tuple
    left: tuple = ()
    right: tuple = ()
    output: Expr = None
    z0: Fraction = Fraction(0)
    max_order: int = 3

    def __post_init__(self):
        rhs = tuple(as_expr(f) for f in self.rhs)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "left", tuple(as_expr(g) for g in self.left))
        object.__setattr__(self, "right", tuple(as_expr(h) for h in self.right))
        if self.output is None:
            raise ValidationError("an output function is required")
        object.__setattr__(self, "output", as_expr(self.output))
        z0 = Fraction(self.z0) if not isinstance(self.z0, float) else Fraction(repr(self.z0))
        if not 0 <= z0 <= 1:
            raise ValidationError(f"output location {z0} outside [0, 1]")
        object.__setattr__(self, "z0", z0)
        n = len(rhs)
        if n < 1:
            raise ValidationError("at least one evolution equation is required")
        for a, f in enumerate(rhs, 1):
            _check_allowed(f, n, _rhs_allowed, f"right-hand side f{a}", "z, t, x, x_z, x_zz, u")
        for i, g in enumerate(self.left, 1):
            _check_allowed(g, n, _boundary_allowed, f"left boundary function g{i}", "t, x, x_z")
        for i, h in enumerate(self.right, 1):
            _check_allowed(h, n, _boundary_allowed, f"right boundary function h{i}", "t, x, x_z")
        _check_allowed(self.output, n, _boundary_allowed, "output c", "t, x, x_z")

    @property
    def n_x(self) -> int:
        return len(self.rhs)

    @property
    def context(self) -> JetContext:
        return JetContext(self.n_x, self.max_order)

    def equation(self, alpha: int) -> Expr:
        """``x_t^alpha - f^alpha``."""
        return as_expr(x(alpha, 0, 1)) - self.rhs[alpha - 1]

    def is_linear(self) -> bool:
        """Affine in all dependent/input jet coordinates (rhs, boundary, output)."""
        exprs = list(self.rhs) + list(self.left) + list(self.right) + [self.output]
        for e in exprs:
            coords = [c for c in free_symbols(e) if not c.is_independent]
            for c in coords:
                d = derive(e, c)
                if any(not derive(d, k).is_zero_literal() for k in coords):
                    return False
        return True


@dataclass(frozen=True)
class ReductionMap:
    rules: tuple  # ordered (JetCoordinate, Expr) pairs
    extended: bool = False
    bindings: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "bindings", dict(self.rules))

    def __contains__(self, c):
        return c in self.bindings

    def __getitem__(self, c):
        return self.bindings[c]

    def to_dict(self) -> dict:
        return {c.name: str(e) for c, e in self.rules}


def _to_fixed_point(e: Expr, bindings: dict) -> Expr:
    for _ in range(MAX_PASSES):
        if free_symbols(e).isdisjoint(bindings):
            return e
        e = substitute(e, bindings)
    if free_symbols(e).isdisjoint(bindings):
        return e
    raise ReductionError(f"no fixed point after {MAX_PASSES} passes: {e}")


def build_reduction(spec: SystemSpec, extended: bool = False) -> ReductionMap:
    ctx = spec.context
    rules = [(x(a, 0, 1), f) for a, f in enumerate(spec.rhs, 1)]
    rules += [(u(1, 0), as_expr(0)), (u(2, 0), as_expr(0)), (u(1, 1), as_expr(0))]
    if extended:
        if ctx.max_order < 3:
            raise ReductionError("extended reduction needs maximum order >= 3")
        rules += [(x(a, 1, 1), total_derivative(f, "z", ctx)) for a, f in enumerate(spec.rhs, 1)]
        rules += [(x(a, 0, 2), total_derivative(f, "t", ctx)) for a, f in enumerate(spec.rhs, 1)]
    bindings = dict(rules)
    for _ in range(MAX_PASSES):
        new = [(c, _to_fixed_point(e, bindings)) for c, e in rules]
        if new == rules:
            break
        rules = new
        bindings = dict(rules)
    else:
        raise ReductionError(f"reduction map did not reach a fixed point in {MAX_PASSES} passes")
    return ReductionMap(tuple(rules), extended)


def reduce(e: Expr, m: ReductionMap) -> Expr:
    """Substitute the map's rules repeatedly until no substituted coordinate remains."""
    return _to_fixed_point(as_expr(e), m.bindings)


def boundary_reduce(e: Expr, side: str, spec: SystemSpec, pivots=None) -> Expr:
    """Restrict ``e`` to z=0 (``left``) or z=1 (``right``).

    With ``pivots`` (one coordinate per boundary function of that side) each
    boundary equation is solved for its pivot, which must enter affinely with
    a constant nonzero coefficient, and the solution is substituted.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    out = substitute(as_expr(e), {Z: 0 if side == "left" else 1})
    if not pivots:
        return out
    funcs = spec.left if side == "left" else spec.right
    if len(pivots) != len(funcs):
        raise BoundaryPivotError(
            f"{side} boundary has {len(funcs)} conditions but {len(pivots)} pivots")
    solutions = {}
    for g, p in zip(funcs, pivots):
        g = substitute(g, solutions) if solutions else g
        a = derive(g, p)
        if not derive(a, p).is_zero_literal():
            raise BoundaryPivotError(f"boundary function {g} is not affine in pivot {p.name}")
        if free_symbols(a) or a.is_zero_literal():
            raise BoundaryPivotError(
                f"coefficient {a} of pivot {p.name} in {g} may vanish; refusing to divide")
        sol = as_expr(p) - g / a
        solutions = {c: substitute(s, {p: sol}) for c, s in solutions.items()}
        solutions[p] = sol
    return substitute(out, solutions)
