"""Generator discovery from a finite linear ansatz.

The unknown field is ``v_x^a = sum_k c_{a,k} b_{a,k}`` with rational
constants ``c``.  Every zero-condition of the non-observability test is
linear in ``v``, so its residual is ``sum_j c_j R_j`` where ``R_j`` is the
residual of the j-th basis field alone.  Requiring that sum to vanish
identically gives a homogeneous linear system in ``c``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from .checker import (
    CheckOptions, CheckReport, boundary_residuals, check_nonobservability, domain_residuals,
    output_residual, t0_u_residuals,
)
from .coords import T, Z, u, x
from .errors import NonPolynomialResidualError, ValidationError
from .expr import (
    PI, ZERO, Sym, as_expr, cos, free_symbols, from_poly, lambdify, poly_terms, render,
    sample_value, sin, sym,
)
from .jet import VerticalField
from .system import SystemSpec

SNAP_DENOMINATOR = 10**6
SNAP_TOL = 1e-9
RANK_TOL = 1e-8


@dataclass(frozen=True)
class Ansatz:
    """``bases[a-1]`` lists the basis functions for component ``x^a``."""

    bases: tuple
    name: str = "custom"

    def __post_init__(self):
        bases = tuple(tuple(as_expr(b) for b in bs) for bs in self.bases)
        object.__setattr__(self, "bases", bases)
        n = len(bases)
        for a, bs in enumerate(bases, 1):
            for b in bs:
                for c in free_symbols(b):
                    if c.order > 0 or (c.is_dependent and c.index > n):
                        raise ValidationError(
                            f"basis function {b} for x{a} may only use z, t, x1..x{n}, u")

    @property
    def n_x(self) -> int:
        return len(self.bases)

    @property
    def size(self) -> int:
        return sum(len(bs) for bs in self.bases)

    def unknowns(self):
        """``(alpha, k, basis_function)`` in column order."""
        return [(a, k, b) for a, bs in enumerate(self.bases, 1) for k, b in enumerate(bs)]

    def field_for(self, vector) -> VerticalField:
        comps = [ZERO] * self.n_x
        for (a, _, b), c in zip(self.unknowns(), vector):
            if c:
                comps[a - 1] = comps[a - 1] + b * as_expr(c)
        return VerticalField(tuple(comps))

    def unit_field(self, j) -> VerticalField:
        a, _, b = self.unknowns()[j]
        comps = [ZERO] * self.n_x
        comps[a - 1] = b
        return VerticalField(tuple(comps))

    @classmethod
    def uniform(cls, basis, n_x: int, name: str = "custom") -> Ansatz:
        return cls(tuple(tuple(basis) for _ in range(n_x)), name)


def poly2_basis(n_x: int) -> list:
    """Monomials z^i t^j x^m u^n with i + j <= 2, |m| <= 1, n <= 1."""
    zs, ts = sym(Z), sym(T)
    states = [as_expr(1)] + [sym(x(b)) for b in range(1, n_x + 1)]
    out = []
    for i in range(3):
        for j in range(3 - i):
            for s in states:
                for n in range(2):
                    out.append(zs**i * ts**j * s * sym(u())**n)
    return out


def trig2_basis() -> list:
    """{sin, cos}(k pi z) x {sin(k' pi t), cos(k' pi t), 1} for k, k' <= 2, with pi-scaled copies."""
    zs, ts = sym(Z), sym(T)
    zpart = [f(k * PI * zs) for k in (1, 2) for f in (sin, cos)]
    tpart = [f(k * PI * ts) for k in (1, 2) for f in (sin, cos)] + [as_expr(1)]
    plain = [a * b for a, b in product(zpart, tpart)]
    return plain + [PI * b for b in plain]


def preset(name: str, n_x: int) -> Ansatz:
    if name == "poly2":
        return Ansatz.uniform(poly2_basis(n_x), n_x, "poly2")
    if name == "trig2":
        return Ansatz.uniform(trig2_basis(), n_x, "trig2")
    raise ValidationError(f"unknown ansatz preset {name!r} (known: poly2, trig2)")


@dataclass(frozen=True)
class Equation:
    coefficients: tuple  # Fraction, or float when rationalization failed
    provenance: str

    @property
    def exact(self) -> bool:
        return all(isinstance(c, Fraction) for c in self.coefficients)


@dataclass
class DeterminingSystem:
    ansatz: Ansatz
    equations: list = field(default_factory=list)
    strategy: str = "coefficient-collection"

    @property
    def size(self) -> int:
        return self.ansatz.size

    @property
    def exact(self) -> bool:
        return all(eq.exact for eq in self.equations)

    def to_dict(self) -> dict:
        return {"strategy": self.strategy, "unknowns": self.size,
                "equations": len(self.equations), "exact": self.exact}


def _condition_residuals(spec, field_, options):
    items = domain_residuals(spec, field_, options.extended_reduction)
    items += boundary_residuals(spec, field_, options.pivots)
    items.append(output_residual(spec, field_, options.reduce_output, options.extended_reduction))
    items += t0_u_residuals(field_)
    return [(name, res) for name, res, _, _ in items]


def _residual_table(spec, ansatz, options):
    """``{condition: [R_j for each unknown j]}`` in condition order."""
    table = {}
    for j in range(ansatz.size):
        for name, res in _condition_residuals(spec, ansatz.unit_field(j), options):
            table.setdefault(name, []).append(res)
    return table


def _check_collectable(name, res):
    for mono in poly_terms(res):
        for atom, _ in mono:
            if isinstance(atom, Sym):
                continue
            jets = [c for c in free_symbols(atom) if not c.is_independent]
            if jets:
                raise NonPolynomialResidualError(
                    f"{name} residual {res} is not polynomial in {jets[0].name} "
                    f"(it appears inside {atom}); use the sampling strategy")


def _collect(table, n):
    equations = []
    for name, residuals in table.items():
        rows = {}
        for j, res in enumerate(residuals):
            _check_collectable(name, res)
            for mono, c in poly_terms(res).items():
                rows.setdefault(mono, [Fraction(0)] * n)[j] += c
        for mono in sorted(rows, key=lambda m: tuple((a.key, e) for a, e in m)):
            tag = f"{name}: coefficient of {render(from_poly({mono: Fraction(1)}))}"
            equations.append(Equation(tuple(rows[mono]), tag))
    return equations


def _snap(v: float):
    q = Fraction(v).limit_denominator(SNAP_DENOMINATOR)
    if abs(float(q) - v) <= SNAP_TOL * max(1.0, abs(v)):
        return q
    return None


def _sample(table, n, rng):
    # pi is sampled like a coordinate: it is transcendental, so an identity
    # over Q[pi] must hold for every value substituted for it
    equations = []
    m = 4 * n
    draws = 8 * m
    for name, residuals in table.items():
        coords = sorted(set().union(*(free_symbols(r) for r in residuals)),
                        key=lambda c: c.sort_key)
        pts = {c: np.array([sample_value(rng) for _ in range(draws)]) for c in coords}
        pis = np.array([sample_value(rng) for _ in range(draws)])
        cols = []
        for r in residuals:
            with np.errstate(all="ignore"):
                vals = lambdify(r, tuple(coords), pi_argument=True)(*[pts[c] for c in coords], pis)
            cols.append(np.broadcast_to(np.asarray(vals, dtype=float), (draws,)))
        mat = np.column_stack(cols)
        good = np.flatnonzero(np.all(np.isfinite(mat), axis=1))[:m]
        for i in good:
            row = []
            for v in mat[i]:
                q = _snap(float(v))
                row.append(q if q is not None else float(v))
            where = ", ".join([f"{c.name}={pts[c][i]:.6g}" for c in coords] + [f"pi={pis[i]:.6g}"])
            equations.append(Equation(tuple(row), f"{name}: sample ({where})"))
    return equations


def generate(spec: SystemSpec, ansatz: Ansatz, strategy: str = "coefficient-collection",
             options: CheckOptions | None = None, rng=None) -> DeterminingSystem:
    if ansatz.n_x != spec.n_x:
        raise ValidationError(f"ansatz has {ansatz.n_x} components, system has {spec.n_x} states")
    options = options or CheckOptions()
    n = ansatz.size
    ds = DeterminingSystem(ansatz, [], strategy)
    if n == 0:
        return ds
    table = _residual_table(spec, ansatz, options)
    if strategy == "coefficient-collection":
        ds.equations = _collect(table, n)
    elif strategy == "sampling":
        ds.equations = _sample(table, n, rng or random.Random(options.seed))
    else:
        raise ValidationError(f"unknown strategy {strategy!r}")
    return ds


def _rref_exact(rows, n):
    rows = [list(r) for r in rows if any(r)]
    pivots = []
    r = 0
    for col in range(n):
        pr = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        piv = rows[r][col]
        rows[r] = [v / piv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


def _rref_float(rows, n):
    a = np.array([[float(v) for v in r] for r in rows], dtype=float).reshape(-1, n)
    norms = np.linalg.norm(a, axis=1)
    a = a[norms > 0] / norms[norms > 0, None]
    pivots = []
    r = 0
    for col in range(n):
        if r == a.shape[0]:
            break
        pr = r + int(np.argmax(np.abs(a[r:, col])))
        if abs(a[pr, col]) <= RANK_TOL:
            a[r:, col] = 0.0
            continue
        a[[r, pr]] = a[[pr, r]]
        a[r] /= a[r, col]
        for i in range(a.shape[0]):
            if i != r:
                a[i] -= a[i, col] * a[r]
        pivots.append(col)
        r += 1
    return a[:r], pivots


def solve(ds: DeterminingSystem) -> list:
    """Null-space basis, one vector per free column (in column order)."""
    n = ds.size
    if n == 0:
        return []
    rows = [eq.coefficients for eq in ds.equations]
    exact = ds.exact
    if not rows:
        reduced, pivots = [], []
    elif exact:
        reduced, pivots = _rref_exact(rows, n)
    else:
        reduced, pivots = _rref_float(rows, n)
    basis = []
    for free in (c for c in range(n) if c not in pivots):
        vec = [Fraction(0)] * n
        vec[free] = Fraction(1)
        for row, pc in zip(reduced, pivots):
            val = -row[free]
            vec[pc] = val if exact else Fraction(float(val)).limit_denominator(SNAP_DENOMINATOR)
        basis.append(tuple(vec))
    return basis


@dataclass(frozen=True)
class Survivor:
    vector: tuple
    field: VerticalField
    report: CheckReport
    interpretation: str | None = None

    def to_dict(self) -> dict:
        d = {"generator": {f"vx{a}": render(c) for a, c in enumerate(self.field.components, 1)},
             "vector": [str(c) for c in self.vector], "report": self.report.to_dict()}
        if self.interpretation:
            d["interpretation"] = self.interpretation
        return d


LINEAR_NOTE = ("coefficients solve the homogeneous part of the PDEs, satisfy the original "
               "boundary conditions and give an identically zero output")


def filter_solutions(basis, spec: SystemSpec, ansatz: Ansatz,
                     options: CheckOptions | None = None) -> list:
    options = options or CheckOptions()
    linear = spec.is_linear()
    out = []
    for vec in basis:
        if not any(vec):
            continue
        f = ansatz.field_for(vec)
        if all(c.is_zero_literal() for c in f.components):
            continue
        report = check_nonobservability(spec, f, options)
        if not report.aggregate.passed:
            continue
        out.append(Survivor(tuple(vec), f, report, LINEAR_NOTE if linear else None))
    return out


def discover(spec: SystemSpec, ansatz: Ansatz, strategy: str = "coefficient-collection",
             options: CheckOptions | None = None):
    """generate, solve, filter; returns ``(system, basis, survivors)``."""
    ds = generate(spec, ansatz, strategy, options)
    basis = solve(ds)
    return ds, basis, filter_solutions(basis, spec, ansatz, options)


def same_up_to_scale(f: VerticalField, g: VerticalField) -> bool:
    """True when ``f = s * g`` for a nonzero constant ``s``."""
    if f.n_x != g.n_x:
        return False
    scale = None
    for a, b in zip(f.components + (f.vu,), g.components + (g.vu,)):
        if b.is_zero_literal() or a.is_zero_literal():
            if not (a.is_zero_literal() and b.is_zero_literal()):
                return False
            continue
        ratio = a / b
        if free_symbols(ratio):
            return False
        if scale is None:
            scale = ratio
        elif not (ratio - scale).is_zero_literal():
            return False
    return scale is not None
