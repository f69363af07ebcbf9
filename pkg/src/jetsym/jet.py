"""Total derivatives, prolongation of vertical vector fields, Lie derivatives.

Only vertical fields ``v = v_x^a d/dx^a + v_u d/du`` are supported; the
coefficient of the prolonged field on a derivative coordinate with
multi-index J is the J-fold total derivative of the base coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coords import JetContext, JetCoordinate, T, Z, u, x
from .errors import FlowDomainError, OrderOverflowError, ValidationError
from .expr import ZERO, Expr, as_expr, derive, free_symbols, from_poly, lambdify, substitute, sym
from .expr import _add_into, _derive_poly, _poly_mul, _poly_of

__all__ = [
    "JetContext", "JetCoordinate", "VerticalField", "ProlongedField",
    "total_derivative", "prolong", "lie_derivative", "flow_at_t0",
]


def total_derivative(e: Expr, wrt: str, ctx: JetContext) -> Expr:
    """``d_z`` or ``d_t``: the explicit partial plus one chain-rule term per jet coordinate."""
    indep = Z if wrt == "z" else T if wrt == "t" else None
    if indep is None:
        raise ValueError(f"total derivative must be taken with respect to 'z' or 't', not {wrt!r}")
    p = _poly_of(e)
    out = _derive_poly(p, indep)
    for c in sorted(free_symbols(e), key=lambda c: c.sort_key):
        if c.is_independent:
            continue
        shifted = c.shift(wrt)
        if shifted.order > ctx.max_order:
            raise OrderOverflowError(
                f"d_{wrt} of an expression in {c.name} needs {shifted.name}, "
                f"beyond maximum order {ctx.max_order}")
        partial = _derive_poly(p, c)
        if partial:
            _add_into(out, _poly_mul(partial, _poly_of(sym(shifted))))
    return from_poly(out)


def _check_order0(e: Expr, n_x: int, what: str):
    for c in free_symbols(e):
        if c.order > 0:
            raise ValidationError(f"{what} mentions derivative coordinate {c.name}")
        if c.is_dependent and c.index > n_x:
            raise ValidationError(f"{what} mentions {c.name} but n_x = {n_x}")


@dataclass(frozen=True)
class VerticalField:
    """``v = sum_a components[a-1] d/dx^a + vu d/du`` with coefficients in (z, t, x, u)."""

    components: tuple
    vu: Expr = ZERO

    def __post_init__(self):
        comps = tuple(as_expr(c) for c in self.components)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "vu", as_expr(self.vu))
        if not comps:
            raise ValidationError("a vertical field needs at least one component")
        for a, c in enumerate(comps, 1):
            _check_order0(c, len(comps), f"coefficient v_x{a}")
        _check_order0(self.vu, len(comps), "coefficient v_u")

    @property
    def n_x(self) -> int:
        return len(self.components)

    def scaled(self, factor) -> VerticalField:
        return VerticalField(tuple(c * factor for c in self.components), self.vu * factor)

    def is_input_free(self) -> bool:
        return self.vu.is_zero_literal()


@dataclass(frozen=True)
class ProlongedField:
    order: int
    coefficients: dict = field(default_factory=dict)

    def __getitem__(self, c: JetCoordinate) -> Expr:
        return self.coefficients.get(c, ZERO)

    def __contains__(self, c):
        return c in self.coefficients

    def items(self):
        return self.coefficients.items()


def prolong(v: VerticalField, order: int, ctx: JetContext) -> ProlongedField:
    if order not in (1, 2):
        raise ValueError("prolongation order must be 1 or 2")
    if ctx.max_order < order:
        raise OrderOverflowError(f"context order {ctx.max_order} < prolongation order {order}")
    coeffs = {}
    bases = [(x(a), c) for a, c in enumerate(v.components, 1)] + [(u(), v.vu)]
    for base, c0 in bases:
        table = {(0, 0): c0}
        for total in range(1, order + 1):
            for nt in range(total + 1):
                nz = total - nt
                if nz > 0:
                    table[(nz, nt)] = total_derivative(table[(nz - 1, nt)], "z", ctx)
                else:
                    table[(nz, nt)] = total_derivative(table[(nz, nt - 1)], "t", ctx)
        for (nz, nt), c in table.items():
            coeffs[JetCoordinate(base.role, base.index, nz, nt)] = c
    return ProlongedField(order, coeffs)


def lie_derivative(p: ProlongedField, e: Expr) -> Expr:
    """``sum_k p[k] * de/dk`` over the jet coordinates of ``e``."""
    out = {}
    for c in free_symbols(e):
        if c.is_independent:
            continue
        if c.order > p.order:
            raise OrderOverflowError(
                f"{c.name} has order {c.order}, beyond the order-{p.order} prolongation")
        coef = p[c]
        if coef.is_zero_literal():
            continue
        _add_into(out, _poly_mul(_poly_of(coef), _poly_of(derive(e, c))))
    return from_poly(out)


def _t0_components(v: VerticalField):
    return [substitute(c, {T: 0}) for c in v.components]


def flow_at_t0(v: VerticalField, z, xs, eps: float, steps: int = 100):
    """Transport the state ``xs`` along the flow of ``v`` at t = 0 for parameter ``eps``.

    ``z`` and each entry of ``xs`` may be floats or equally-shaped arrays.
    Integrates ``dxi/deps = v_x(z, 0, xi)`` with classic RK4 in ``steps``
    equal steps.  When the t = 0 field does not depend on the state RK4 is
    exact and the result is ``xi + eps * v(z)``.  Any remaining ``u`` is set
    to 0 (the caller has verified independence of the input).
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    comps = _t0_components(v)
    n = len(comps)
    if len(xs) != n:
        raise ValueError(f"expected {n} state values, got {len(xs)}")
    z = np.asarray(z, dtype=float)
    xi = [np.asarray(xv, dtype=float).copy() for xv in xs]
    if eps == 0:
        return [a.copy() for a in xi]
    args = (Z,) + tuple(x(a) for a in range(1, n + 1)) + (u(),)
    fns = [lambdify(c, args) for c in comps]
    zero_u = np.zeros(np.broadcast(z, *xi).shape)

    def field_at(state):
        with np.errstate(all="ignore"):
            out = [np.broadcast_to(f(z, *state, zero_u), zero_u.shape).astype(float) for f in fns]
        for a, val in enumerate(out, 1):
            if not np.all(np.isfinite(val)):
                raise FlowDomainError(f"v_x{a} is not finite along the flow")
        return out

    state_free = all(not any(c.is_dependent for c in free_symbols(e)) for e in comps)
    if state_free:
        k = field_at(xi)
        return [xv + eps * kv for xv, kv in zip(xi, k)]
    guarded = _denominator_states(comps)
    signs = {a: np.sign(xi[a - 1]) for a in guarded}
    h = eps / steps
    for step in range(steps):
        k1 = field_at(xi)
        k2 = field_at([a + 0.5 * h * b for a, b in zip(xi, k1)])
        k3 = field_at([a + 0.5 * h * b for a, b in zip(xi, k2)])
        k4 = field_at([a + h * b for a, b in zip(xi, k3)])
        xi = [a + h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)
              for a, b1, b2, b3, b4 in zip(xi, k1, k2, k3, k4)]
        for a, s0 in signs.items():
            if np.any(np.sign(xi[a - 1]) != s0):
                raise FlowDomainError(f"x{a} changes sign along the flow (step {step + 1}); "
                                      "it appears in a denominator of the field")
    return xi


def _denominator_states(comps):
    """Indices of dependents occurring directly with a negative exponent."""
    out = set()
    for e in comps:
        for mono in _poly_of(e):
            for atom, ex in mono:
                c = getattr(atom, "coord", None)
                if ex < 0 and c is not None and c.is_dependent:
                    out.add(c.index)
    return sorted(out)
