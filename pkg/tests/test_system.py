import random
from fractions import Fraction

import pytest
from hypothesis import given, settings

from jetsym.coords import JetContext, Z, u, x
from jetsym.errors import BoundaryPivotError, ValidationError
from jetsym.expr import evaluate, free_symbols, lambdify, substitute
from jetsym.parser import parse
from jetsym.system import SystemSpec, boundary_reduce, build_reduction, reduce

from strategies import trees

CTX = JetContext(2)


def P(s):
    return parse(s, CTX)


WAVE = SystemSpec((P("x2"), P("x1_zz - x2^3 + u")), (P("x1_z"),), (P("x1_z"),), P("x2"), 0)
ACAD = SystemSpec((P("x1*x2*x1_zz + u"), P("x2_z - x2^2*x1_zz + x2/x1*(x1_z - u)")),
                  (P("x1_z"), P("x1*x2 - 1")), (P("x1_z"),), P("x1_z"), Fraction(1, 2))


def test_validation():
    with pytest.raises(ValidationError):
        SystemSpec((P("x1_t"),), output=P("x1"))
    with pytest.raises(ValidationError):
        SystemSpec((P("u_z"),), output=P("x1"))
    with pytest.raises(ValidationError):
        SystemSpec((P("x1"),), (P("x1_zz"),), output=P("x1"))
    with pytest.raises(ValidationError):
        SystemSpec((P("x2"),), output=P("x1"))
    with pytest.raises(ValidationError):
        SystemSpec((P("x1"),), output=P("x1"), z0=2)
    with pytest.raises(ValidationError):
        SystemSpec((P("x1"),))
    assert WAVE.z0 == 0 and ACAD.z0 == Fraction(1, 2)


def test_equation_and_linearity():
    assert WAVE.equation(1) == P("x1_t - x2")
    assert not WAVE.is_linear()
    lin = SystemSpec((P("x2"), P("x1_zz")), (P("x1"),), (P("x1"),), P("x1_z"), 0)
    assert lin.is_linear()


def test_base_map():
    m = build_reduction(WAVE)
    assert m[x(1, 0, 1)] == P("x2")
    assert m[u(1, 0)].is_zero_literal() and u(1, 1) in m
    assert x(1, 1, 1) not in m
    assert reduce(P("x2_t + x1_t*u_z"), m) == P("x1_zz - x2^3 + u")


def test_extended_map():
    m = build_reduction(WAVE, extended=True)
    assert m[x(1, 1, 1)] == P("x2_z")
    assert m[x(1, 0, 2)] == P("x1_zz - x2^3 + u")
    # x2_tt = d_t f2 with x2_t eliminated; x1_zzt stays free
    assert m[x(2, 0, 2)] == P("x1_zzt - 3*x2^2*(x1_zz - x2^3 + u) + u_t")
    assert m.to_dict()["x1_t"] == "x2"


@settings(max_examples=200)
@given(trees(depth=4, pool=(x(1), x(2), x(1, 0, 1), x(2, 0, 1), x(1, 1, 1), u(1, 0), u(), Z)))
def test_reduce_idempotent(e):
    for m in (build_reduction(ACAD), build_reduction(ACAD, extended=True)):
        r = reduce(e, m)
        assert reduce(r, m) == r
        assert free_symbols(r).isdisjoint(m.bindings)


def _solution_point(spec, rng):
    """Random jet point with x_t := f and u_z = u_zz = u_zt = 0."""
    pt = {c: rng.uniform(0.5, 1.5) for c in spec.context.coordinates()}
    for c in (u(1, 0), u(2, 0), u(1, 1)):
        pt[c] = 0.0
    for a, f in enumerate(spec.rhs, 1):
        pt[x(a, 0, 1)] = evaluate(f, pt)
    return pt


def test_reduce_preserves_values_on_solutions():
    rng = random.Random(3)
    m = build_reduction(ACAD)
    e = P("x1_t*x2_t - x2*u_z + sin(x1_t) + x1_zz*u_zt")
    r = reduce(e, m)
    for _ in range(20):
        pt = _solution_point(ACAD, rng)
        assert evaluate(e, pt) == pytest.approx(evaluate(r, pt), rel=1e-12, abs=1e-12)


def test_extended_rule_matches_finite_difference():
    """x_zt rule against d/dz of f along a synthetic curve."""
    m = build_reduction(WAVE, extended=True)
    rule = m[x(2, 1, 1)]
    f2 = WAVE.rhs[1]
    # curve: x1 = sin(z), x2 = z^2, u = 1/3
    curve = {x(1): P("sin(z)"), x(1, 1, 0): P("cos(z)"), x(1, 2, 0): P("-sin(z)"),
             x(1, 3, 0): P("-cos(z)"), x(2): P("z^2"), x(2, 1, 0): P("2*z")}
    along = substitute(f2, {**curve, u(): Fraction(1, 3)})
    fn = lambdify(along, (Z,))
    z0, h = 0.4, 1e-5
    fd = (fn(z0 + h) - fn(z0 - h)) / (2 * h)
    exact = evaluate(substitute(rule, {**curve, u(): Fraction(1, 3), u(1, 0): 0}), {Z: z0})
    assert abs(fd - exact) < 1e-4


def test_boundary_reduce_examples():
    assert boundary_reduce(P("x1_z*z + 2*z - 1"), "left", WAVE) == P("-1")
    assert boundary_reduce(P("x1_z*z"), "right", WAVE) == P("x1_z")
    dirichlet = SystemSpec((P("x1_zz"),), (P("x1"),), (), P("x1"), 0)
    assert boundary_reduce(P("x1 + x1_z"), "left", dirichlet, [x(1)]) == P("x1_z")
    neumann = SystemSpec((P("x2"), P("x1_zz")), (P("x1_z + x2 - t"),), (), P("x1"), 0)
    assert boundary_reduce(P("x1_z^2"), "left", neumann, [x(1, 1, 0)]) == P("(t - x2)^2")


def test_boundary_pivot_errors():
    with pytest.raises(BoundaryPivotError, match="may vanish"):
        boundary_reduce(P("x2"), "left", ACAD, [x(1, 1, 0), x(2)])
    nonaffine = SystemSpec((P("x1_zz"),), (P("x1^2 - 1"),), (), P("x1"), 0)
    with pytest.raises(BoundaryPivotError, match="not affine"):
        boundary_reduce(P("x1"), "left", nonaffine, [x(1)])
    with pytest.raises(BoundaryPivotError):
        boundary_reduce(P("x1"), "left", nonaffine, [x(1), x(1)])
    with pytest.raises(ValueError):
        boundary_reduce(P("x1"), "top", WAVE)
