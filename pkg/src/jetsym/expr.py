"""Immutable expression trees over jet coordinates.

Every public operation returns trees in canonical form: a fully expanded
sum of monomials with exact rational coefficients.  Atoms of a monomial are
coordinates, ``pi``, function applications (opaque, with canonical
arguments) and, for negative or fractional powers that cannot be distributed,
whole sub-expressions.  Internally each canonical tree carries its polynomial
view, a mapping ``monomial -> Fraction`` where a monomial is a sorted tuple of
``(atom, exponent)`` pairs.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .coords import JetCoordinate
from .errors import EvaluationError, IndeterminateError

FUNCTIONS = ("sin", "cos", "exp", "ln")
DEFAULT_SEED = 0x6A657473

ACCEPT_TOL = 1e-10
REJECT_TOL = 1e-6

_ONE = Fraction(1)


class Expr:
    __slots__ = ("key", "_hash", "_poly", "_free", "_canonical", "_fns")

    def _init(self, key):
        self.key = key
        self._hash = hash(key)
        self._poly = None
        self._free = None
        self._canonical = False
        self._fns = None

    def __eq__(self, other):
        return self is other or (isinstance(other, Expr) and self.key == other.key)

    def __hash__(self):
        return self._hash

    def __str__(self):
        return render(self)

    def __repr__(self):
        return f"Expr({render(self)!r})"

    @property
    def children(self) -> tuple:
        return ()

    @property
    def free(self) -> frozenset:
        return free_symbols(self)

    def is_zero_literal(self) -> bool:
        return not _poly_of(self)

    def as_fraction(self) -> Fraction | None:
        p = _poly_of(self)
        if not p:
            return Fraction(0)
        if len(p) == 1 and () in p:
            return p[()]
        return None

    # arithmetic always yields canonical trees
    def __add__(self, other):
        return from_poly(_poly_add(_poly_of(self), _poly_of(as_expr(other))))

    __radd__ = __add__

    def __neg__(self):
        return from_poly(_poly_scale(_poly_of(self), -1))

    def __sub__(self, other):
        return self + (-as_expr(other))

    def __rsub__(self, other):
        return as_expr(other) + (-self)

    def __mul__(self, other):
        return from_poly(_poly_mul(_poly_of(self), _poly_of(as_expr(other))))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * as_expr(other) ** -1

    def __rtruediv__(self, other):
        return as_expr(other) * self ** -1

    def __pow__(self, exponent):
        if isinstance(exponent, Expr):
            q = exponent.as_fraction()
            if q is None:
                raise TypeError("exponent must be a rational constant")
            exponent = q
        return from_poly(_poly_pow(_poly_of(self), Fraction(exponent), self))


class Num(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = Fraction(value)
        self._init((0, self.value))


class PiConst(Expr):
    __slots__ = ()

    def __init__(self):
        self._init((1,))


class Sym(Expr):
    __slots__ = ("coord",)

    def __init__(self, coord: JetCoordinate):
        self.coord = coord
        self._init((2,) + coord.sort_key)


class Func(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        if name not in FUNCTIONS:
            raise ValueError(f"unknown function {name!r}")
        self.name = name
        self.arg = arg
        self._init((3, name, arg.key))

    @property
    def children(self):
        return (self.arg,)


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms):
        self.terms = tuple(terms)
        self._init((4, tuple(t.key for t in self.terms)))

    @property
    def children(self):
        return self.terms


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors):
        self.factors = tuple(factors)
        self._init((5, tuple(f.key for f in self.factors)))

    @property
    def children(self):
        return self.factors


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp):
        self.base = base
        self.exp = Fraction(exp)
        self._init((6, base.key, self.exp))

    @property
    def children(self):
        return (self.base,)


PI = PiConst()
ZERO = Num(0)
ONE = Num(1)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not an expression")
    if isinstance(value, (int, Fraction)):
        return from_poly({(): Fraction(value)} if value else {})
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError("non-finite constant")
        q = Fraction(repr(value))
        return from_poly({(): q} if q else {})
    if isinstance(value, JetCoordinate):
        return sym(value)
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


def sym(coord: JetCoordinate) -> Expr:
    s = Sym(coord)
    s._poly = {((s, _ONE),): _ONE}
    s._canonical = True
    return s


def func(name: str, arg) -> Expr:
    return from_poly(_func_poly(name, canonicalize(as_expr(arg))))


def sin(arg):
    return func("sin", arg)


def cos(arg):
    return func("cos", arg)


def exp(arg):
    return func("exp", arg)


def ln(arg):
    return func("ln", arg)


# ---------------------------------------------------------------------------
# polynomial view

def _factor_key(item):
    atom, e = item
    return (e < 0, atom.key, e)


def _mono_key(mono):
    return tuple(_factor_key(f) for f in mono)


def _mono_from(d):
    zero = [a for a in d if isinstance(a, Num) and a.value == 0]
    if zero:  # every 0^-n is the same undefined value
        d = dict(d)
        for a in zero:
            d[a] = Fraction(-1)
    return tuple(sorted(d.items(), key=_factor_key))


def _mono_mul(m1, m2):
    if not m1:
        return m2
    if not m2:
        return m1
    d = dict(m1)
    for a, e in m2:
        s = d.get(a, 0) + e
        if s:
            d[a] = s
        else:
            d.pop(a, None)
    return _mono_from(d)


def _needs_expand(atom, e):
    if isinstance(atom, (Sym, PiConst, Func)):
        return False
    if e.denominator != 1:
        return False
    if isinstance(atom, Add):
        return e > 0
    if isinstance(atom, Num) and atom.value == 0:
        return False  # 0^-n stays symbolic; evaluation reports it
    return True  # Num, Mul and Pow atoms only survive with fractional exponents


def _normalize(p):
    if not any(_needs_expand(a, e) for m in p for a, e in m):
        return p
    out = {}
    for mono, c in p.items():
        if not any(_needs_expand(a, e) for a, e in mono):
            _add_into(out, {mono: c})
            continue
        keep = {}
        acc = {(): c}
        for a, e in mono:
            if _needs_expand(a, e):
                acc = _poly_mul(acc, _poly_pow(_poly_of(a), e, a))
            else:
                keep[a] = e
        _add_into(out, _poly_mul(acc, {_mono_from(keep): _ONE}))
    return out


def _add_into(out, p):
    for m, c in p.items():
        v = out.get(m, 0) + c
        if v:
            out[m] = v
        else:
            out.pop(m, None)


def _poly_add(p, q):
    out = dict(p)
    _add_into(out, q)
    return out


def _poly_scale(p, s):
    s = Fraction(s)
    if not s:
        return {}
    return {m: c * s for m, c in p.items()}


def _poly_mul(p, q):
    if not p or not q:
        return {}
    if len(q) == 1 and () in q:
        return _poly_scale(p, q[()])
    if len(p) == 1 and () in p:
        return _poly_scale(q, p[()])
    out = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = _mono_mul(m1, m2)
            v = out.get(m, 0) + c1 * c2
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return _normalize(out)


def _int_root(n: int, k: int):
    if n < 0:
        if k % 2 == 0:
            return None
        r = _int_root(-n, k)
        return None if r is None else -r
    r = round(n ** (1.0 / k))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand ** k == n:
            return cand
    return None


def _rational_power(c: Fraction, e: Fraction):
    k = e.denominator
    num = _int_root(c.numerator, k)
    den = _int_root(c.denominator, k)
    if num is None or den is None:
        return None
    return Fraction(num, den) ** e.numerator


def _poly_pow(p, e, base=None):
    e = Fraction(e)
    if e == 0:
        return {(): _ONE}
    if e == 1:
        return p
    if not p:
        if e > 0:
            return {}
        return {((Num(0), Fraction(-1)),): _ONE}
    if e.denominator == 1:
        n = int(e)
        if n > 0:
            result = {(): _ONE}
            sq = p
            while n:
                if n & 1:
                    result = _poly_mul(result, sq)
                n >>= 1
                if n:
                    sq = _poly_mul(sq, sq)
            return result
        if len(p) == 1:
            (mono, c), = p.items()
            return _normalize({_mono_from({a: x * n for a, x in mono}): c ** n})
        return {((_atom_for(p, base), e),): _ONE}
    if len(p) == 1:
        (mono, c), = p.items()
        if not mono:
            r = _rational_power(c, e)
            if r is not None:
                return {(): r} if r else {}
            return {((Num(c), e),): _ONE}
        if c == 1 and len(mono) == 1 and mono[0][1] == 1:
            return {((mono[0][0], e),): _ONE}
    return {((_atom_for(p, base), e),): _ONE}


def _atom_for(p, base):
    if base is not None and base._canonical:
        return base
    return from_poly(p)


def _pi_multiple(p):
    if len(p) != 1:
        return None
    (mono, c), = p.items()
    if mono == ((PI, _ONE),):
        return c
    return None


_SIN_QUARTER = (0, 1, 0, -1)
_COS_QUARTER = (1, 0, -1, 0)


def _func_poly(name, arg):
    """Polynomial of ``name(arg)`` for canonical ``arg`` with exact special values."""
    ap = _poly_of(arg)
    sign = _ONE
    if name in ("sin", "cos"):
        if not ap:
            return {} if name == "sin" else {(): _ONE}
        q = _pi_multiple(ap)
        if q is not None and (2 * q).denominator == 1:
            k = int(2 * q) % 4
            v = (_SIN_QUARTER if name == "sin" else _COS_QUARTER)[k]
            return {(): Fraction(v)} if v else {}
        lead = min(ap.items(), key=lambda mc: _mono_key(mc[0]))
        if lead[1] < 0:
            arg = from_poly(_poly_scale(ap, -1))
            if name == "sin":
                sign = -_ONE
    elif name == "exp":
        if not ap:
            return {(): _ONE}
    elif name == "ln":
        if ap == {(): _ONE}:
            return {}
    else:
        raise ValueError(f"unknown function {name!r}")
    atom = Func(name, arg)
    atom._canonical = True
    atom._poly = {((atom, _ONE),): _ONE}
    return {((atom, _ONE),): sign}


def _build_poly(e):
    if isinstance(e, Num):
        return {(): e.value} if e.value else {}
    if isinstance(e, (Sym, PiConst)):
        return {((e, _ONE),): _ONE}
    if isinstance(e, Func):
        return _func_poly(e.name, canonicalize(e.arg))
    if isinstance(e, Add):
        out = {}
        for t in e.terms:
            _add_into(out, _poly_of(t))
        return out
    if isinstance(e, Mul):
        # merge powers of a common multi-term base before expanding anything
        groups = {}
        singles = []
        for f in e.factors:
            base, x = (f.base, f.exp) if isinstance(f, Pow) else (f, _ONE)
            base = canonicalize(base)
            if len(_poly_of(base)) <= 1:
                singles.append(f)
            elif base in groups:
                groups[base] += x
            else:
                groups[base] = x
        out = {(): _ONE}
        factors = [_poly_of(f) for f in singles]
        factors += [_poly_pow(_poly_of(b), x, b) for b, x in groups.items()]
        for fp in factors:
            out = _poly_mul(out, fp)
            if not out:
                break
        return out
    if isinstance(e, Pow):
        return _poly_pow(_poly_of(e.base), e.exp, e.base)
    raise TypeError(f"not an expression node: {e!r}")


def _poly_of(e):
    if e._poly is None:
        e._poly = _build_poly(e)
    return e._poly


def poly_terms(e: Expr) -> dict:
    """Read-only polynomial view: ``{monomial: Fraction}``."""
    return _poly_of(e)


def _term_expr(mono, c):
    factors = []
    for a, e in mono:
        if e == 1:
            factors.append(a)
        else:
            f = Pow(a, e)
            f._canonical = True
            f._poly = {((a, e),): _ONE}
            factors.append(f)
    if not factors:
        return Num(c)
    if c == 1 and len(factors) == 1:
        return factors[0]
    if c != 1:
        factors.insert(0, Num(c))
    m = Mul(factors)
    m._canonical = True
    m._poly = {mono: c}
    return m


def from_poly(p) -> Expr:
    items = sorted(p.items(), key=lambda mc: _mono_key(mc[0]))
    terms = [_term_expr(m, c) for m, c in items]
    if not terms:
        e = Num(0)
    elif len(terms) == 1:
        e = terms[0]
        if e._canonical:
            return e
    else:
        e = Add(terms)
    e._poly = p
    e._canonical = True
    return e


def canonicalize(e: Expr) -> Expr:
    if e._canonical:
        return e
    return from_poly(_poly_of(e))


def free_symbols(e: Expr) -> frozenset:
    if e._free is None:
        if isinstance(e, Sym):
            e._free = frozenset((e.coord,))
        elif not e.children:
            e._free = frozenset()
        else:
            e._free = frozenset().union(*(free_symbols(c) for c in e.children))
    return e._free


def is_literal_zero(e: Expr) -> bool:
    return not _poly_of(e)


# ---------------------------------------------------------------------------
# differentiation and substitution

def _derive_poly(p, c):
    out = {}
    for mono, coef in p.items():
        for i, (a, ex) in enumerate(mono):
            if c not in free_symbols(a):
                continue
            da = _derive_atom(a, c)
            if not da:
                continue
            rest = dict(mono)
            if ex == 1:
                del rest[a]
            else:
                rest[a] = ex - 1
            _add_into(out, _poly_mul({_mono_from(rest): coef * ex}, da))
    return out


@lru_cache(maxsize=None)
def _derive_atom(a, c):
    if isinstance(a, Sym):
        return {(): _ONE} if a.coord == c else {}
    if isinstance(a, (Num, PiConst)):
        return {}
    if isinstance(a, Func):
        darg = _derive_poly(_poly_of(a.arg), c)
        if not darg:
            return {}
        if a.name == "sin":
            outer = _func_poly("cos", a.arg)
        elif a.name == "cos":
            outer = _poly_scale(_func_poly("sin", a.arg), -1)
        elif a.name == "exp":
            outer = {((a, _ONE),): _ONE}
        else:
            outer = _poly_pow(_poly_of(a.arg), -1, a.arg)
        return _poly_mul(outer, darg)
    return _derive_poly(_poly_of(a), c)


def derive(e: Expr, wrt: JetCoordinate) -> Expr:
    """Partial derivative treating every jet coordinate as an independent symbol."""
    return from_poly(_derive_poly(_poly_of(e), wrt))


def _subst_atom(a, b, memo):
    if a in memo:
        return memo[a]
    if isinstance(a, Sym):
        r = _poly_of(b[a.coord]) if a.coord in b else {((a, _ONE),): _ONE}
    elif isinstance(a, (Num, PiConst)):
        r = {((a, _ONE),): _ONE} if isinstance(a, PiConst) else _poly_of(a)
    elif isinstance(a, Func):
        arg = from_poly(_subst_poly(_poly_of(a.arg), b, memo))
        r = _func_poly(a.name, arg)
    else:
        r = _subst_poly(_poly_of(a), b, memo)
    memo[a] = r
    return r


def _subst_poly(p, b, memo):
    keys = b.keys()
    out = {}
    for mono, coef in p.items():
        acc = {(): coef}
        for a, ex in mono:
            if free_symbols(a).isdisjoint(keys):
                acc = _poly_mul(acc, {((a, ex),): _ONE})
            else:
                acc = _poly_mul(acc, _poly_pow(_subst_atom(a, b, memo), ex))
            if not acc:
                break
        _add_into(out, acc)
    return out


def substitute(e: Expr, bindings) -> Expr:
    """Simultaneous single-pass replacement of coordinates, then canonicalize."""
    b = {}
    for k, v in bindings.items():
        if isinstance(k, str):
            k = JetCoordinate.parse(k)
        b[k] = as_expr(v)
    if not b or free_symbols(e).isdisjoint(b):
        return canonicalize(e)
    return from_poly(_subst_poly(_poly_of(e), b, {}))


# ---------------------------------------------------------------------------
# numeric evaluation

def _coerce_assignment(assignment):
    env = {}
    for k, v in assignment.items():
        if isinstance(k, str):
            c = JetCoordinate.parse(k)
            if c is None:
                raise KeyError(k)
            k = c
        env[k] = float(v)
    return env


def evaluate(e: Expr, assignment) -> float:
    """IEEE double evaluation; domain problems raise EvaluationError."""
    env = _coerce_assignment(assignment)
    v = _eval(e, env)
    if not math.isfinite(v):
        raise EvaluationError("non-finite value", render(e))
    return v


def _eval(e, env):
    if isinstance(e, Num):
        return float(e.value)
    if isinstance(e, PiConst):
        return math.pi
    if isinstance(e, Sym):
        try:
            return env[e.coord]
        except KeyError:
            raise EvaluationError("unassigned coordinate", e.coord.name) from None
    if isinstance(e, Add):
        return math.fsum(_eval(t, env) for t in e.terms)
    if isinstance(e, Mul):
        r = 1.0
        for f in e.factors:
            r *= _eval(f, env)
        return r
    if isinstance(e, Pow):
        b = _eval(e.base, env)
        x = e.exp
        if b == 0 and x < 0:
            raise EvaluationError("division by zero", render(e))
        if x.denominator != 1 and b < 0:
            raise EvaluationError("fractional power of a negative number", render(e))
        try:
            return b ** (int(x) if x.denominator == 1 else float(x))
        except OverflowError:
            raise EvaluationError("overflow", render(e)) from None
    if isinstance(e, Func):
        a = _eval(e.arg, env)
        if e.name == "sin":
            return math.sin(a)
        if e.name == "cos":
            return math.cos(a)
        if e.name == "exp":
            try:
                return math.exp(a)
            except OverflowError:
                raise EvaluationError("overflow", render(e)) from None
        if a <= 0:
            raise EvaluationError("ln of non-positive argument", render(e))
        return math.log(a)
    raise TypeError(f"not an expression node: {e!r}")


def _np_source(e, names):
    if isinstance(e, Num):
        return f"({float(e.value)!r})"
    if isinstance(e, PiConst):
        return "pi"
    if isinstance(e, Sym):
        try:
            return names[e.coord]
        except KeyError:
            raise EvaluationError("unassigned coordinate", e.coord.name) from None
    if isinstance(e, Add):
        return "(" + " + ".join(_np_source(t, names) for t in e.terms) + ")"
    if isinstance(e, Mul):
        return "(" + " * ".join(_np_source(f, names) for f in e.factors) + ")"
    if isinstance(e, Pow):
        b = _np_source(e.base, names)
        if e.exp.denominator == 1:
            return f"({b} ** {int(e.exp)})"
        return f"np.power({b}, {float(e.exp)!r})"
    if isinstance(e, Func):
        fn = {"sin": "np.sin", "cos": "np.cos", "exp": "np.exp", "ln": "np.log"}[e.name]
        return f"{fn}({_np_source(e.arg, names)})"
    raise TypeError(f"not an expression node: {e!r}")


def lambdify(e: Expr, coords, pi_argument: bool = False):
    """Compile ``e`` to a numpy function of the given coordinates (positional).

    Constant expressions broadcast against the first argument.  Domain
    problems surface as inf/nan, not exceptions.  With ``pi_argument`` the
    function takes the value used for pi as one extra trailing argument.
    """
    coords = tuple(coords)
    if e._fns is None:
        e._fns = {}
    cache_key = (coords, pi_argument)
    fn = e._fns.get(cache_key)
    if fn is not None:
        return fn
    names = {c: f"a{i}" for i, c in enumerate(coords)}
    body = _np_source(e, names)
    if coords and free_symbols(e).isdisjoint(coords):
        body = f"{body} + 0.0 * a0"
    args = [names[c] for c in coords] + (["pi"] if pi_argument else [])
    ns = {"np": np, "pi": math.pi}
    exec(f"def _f({', '.join(args)}):\n    return {body}\n", ns)
    fn = ns["_f"]
    e._fns[cache_key] = fn
    return fn


# ---------------------------------------------------------------------------
# zero testing

class VerdictKind(Enum):
    PROVEN_ZERO = "proven-zero"
    NUMERICALLY_ZERO = "numerically-zero"
    NONZERO = "nonzero"
    NONVANISHING = "non-vanishing"
    IDENTICALLY_ZERO = "identically-zero"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    witness: dict | None = None
    value: float | None = None
    marginal: bool = False

    @property
    def failed(self) -> bool:
        return self.kind in (VerdictKind.NONZERO, VerdictKind.IDENTICALLY_ZERO)

    @property
    def proven(self) -> bool:
        if self.kind is VerdictKind.PROVEN_ZERO:
            return True
        return self.kind is VerdictKind.NONVANISHING and self.witness is not None

    def to_dict(self) -> dict:
        d = {"verdict": self.kind.value}
        if self.witness is not None:
            d["witness"] = {c.name: v for c, v in
                            sorted(self.witness.items(), key=lambda kv: kv[0].sort_key)}
        if self.value is not None:
            d["value"] = self.value
        if self.marginal:
            d["marginal"] = True
        return d


def sample_value(rng: random.Random) -> float:
    """Uniform draw from [-2, -0.1] U [0.1, 2]."""
    v = rng.uniform(0.1, 2.0)
    return v if rng.random() < 0.5 else -v


def is_zero(e: Expr, rng: random.Random | None = None, samples: int = 32) -> Verdict:
    """Decide ``e == 0``: exact on the canonical form, else by seeded sampling."""
    e = canonicalize(e)
    if is_literal_zero(e):
        return Verdict(VerdictKind.PROVEN_ZERO)
    if rng is None:
        rng = random.Random(DEFAULT_SEED)
    coords = sorted(free_symbols(e), key=lambda c: c.sort_key)
    good = 0
    worst = 0.0
    attempts = 0
    while good < samples and attempts < 8 * samples:
        attempts += 1
        point = {c: sample_value(rng) for c in coords}
        try:
            v = evaluate(e, point)
        except EvaluationError:
            continue
        good += 1
        if abs(v) >= REJECT_TOL:
            return Verdict(VerdictKind.NONZERO, witness=point, value=v)
        worst = max(worst, abs(v))
        if not coords:
            break
    if good == 0:
        raise IndeterminateError(f"every sample point hit a domain error: {render(e)}")
    return Verdict(VerdictKind.NUMERICALLY_ZERO, value=worst, marginal=worst >= ACCEPT_TOL)


# ---------------------------------------------------------------------------
# rendering

def _render_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _render_factor(a, e):
    if isinstance(a, Sym):
        base = a.coord.name
    elif isinstance(a, PiConst):
        base = "pi"
    elif isinstance(a, Func):
        base = f"{a.name}({render(a.arg)})"
    elif isinstance(a, Num):
        base = _render_rational(a.value)
        if a.value < 0 or a.value.denominator != 1:
            base = f"({base})"
    else:
        base = f"({render(a)})"
    if e == 1:
        return base
    if e.denominator == 1 and e > 0:
        return f"{base}^{e.numerator}"
    return f"{base}^({_render_rational(e)})"


def _render_term(mono, c):
    # 1/(a + b)^2 would parse as an inverted expanded square, so such
    # factors keep their negative exponent
    num = [(a, e) for a, e in mono if e > 0 or (isinstance(a, Add) and e != -1)]
    den = [(a, -e) for a, e in mono if e < 0 and (a, e) not in num]
    body = "*".join(_render_factor(a, e) for a, e in num)
    if not num:
        head = _render_rational(c)
    elif c == 1:
        head = body
    elif c == -1:
        head = "-" + body
    else:
        head = f"{_render_rational(c)}*{body}"
    for a, e in den:
        head += "/" + _render_factor(a, e)
    return head


def render(e: Expr) -> str:
    """Infix text that ``parse`` maps back to the same canonical tree."""
    p = _poly_of(e)
    if not p:
        return "0"
    items = sorted(p.items(), key=lambda mc: _mono_key(mc[0]))
    parts = [_render_term(m, c) for m, c in items]
    out = parts[0]
    for t in parts[1:]:
        out += f" - {t[1:]}" if t.startswith("-") else f" + {t}"
    return out
