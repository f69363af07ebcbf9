"""Spec documents: TOML files describing a system, a generator, an ansatz and
a simulation setup.

Example::

    [system]
    states = ["x1", "x2"]
    input = "u"

    [equations]
    x1_t = "x2"
    x2_t = "x1_zz - x2^3 + u"

    [boundary.left]
    exprs = ["x1_z"]

    [boundary.right]
    exprs = ["x1_z"]

    [output]
    expr = "x2"
    at = 0.0

    [generator]
    vx1 = "1"
    vx2 = "0"

    [ansatz]
    preset = "poly2"

    [sim]
    N = 101
    dt = 1e-4
    T = 1.0
    input = "sin(3*t)"
    init.x1 = "cos(pi*z)"
    init.x2 = "0"
"""

from __future__ import annotations

import hashlib
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .coords import JetContext, JetCoordinate
from .determining import Ansatz, preset
from .errors import JetsymError, SpecError
from .jet import VerticalField
from .parser import parse
from .sim import SimConfig
from .system import SystemSpec

_SECTIONS = {"system", "equations", "boundary", "output", "generator", "ansatz", "sim"}


@dataclass
class SpecDocument:
    path: str
    digest: str
    system: SystemSpec
    generator: VerticalField | None = None
    ansatz: Ansatz | None = None
    sim: SimConfig | None = None
    init: list | None = None
    eps: list = field(default_factory=list)
    pivots: dict = field(default_factory=dict)
    has_vu: bool = False

    @property
    def context(self) -> JetContext:
        return self.system.context


class _Reader:
    def __init__(self, path, data):
        self.path = path
        self.data = data

    def fail(self, where, message):
        raise SpecError(f"{self.path}: [{where}] {message}")

    def expr(self, where, text, ctx):
        if isinstance(text, (int, float)) and not isinstance(text, bool):
            text = repr(text)
        if not isinstance(text, str):
            self.fail(where, f"expected an expression string, got {text!r}")
        try:
            return parse(text, ctx)
        except JetsymError as exc:
            self.fail(where, str(exc))

    def table(self, name, required=False):
        t = self.data.get(name)
        if t is None:
            if required:
                self.fail(name, "section is missing")
            return {}
        if not isinstance(t, dict):
            self.fail(name, "expected a table")
        return t


def _state_names(r: _Reader):
    system = r.table("system", required=True)
    states = system.get("states")
    if not isinstance(states, list) or not states:
        r.fail("system", "states must be a non-empty list")
    expected = [f"x{a}" for a in range(1, len(states) + 1)]
    if states != expected:
        r.fail("system", f"states must be named {expected} in order, got {states}")
    if system.get("input", "u") != "u":
        r.fail("system", "the input must be named u")
    n_x = system.get("n_x", len(states))
    if n_x != len(states):
        r.fail("system", f"n_x = {n_x} but {len(states)} states are listed")
    return states


def _fraction(r, where, v):
    if isinstance(v, bool):
        r.fail(where, f"expected a number, got {v!r}")
    try:
        return Fraction(repr(v)) if isinstance(v, float) else Fraction(v)
    except (TypeError, ValueError):
        r.fail(where, f"expected a number, got {v!r}")


def _pivots(r, where, raw, ctx):
    if raw is None:
        return None
    if not isinstance(raw, list):
        r.fail(where, "pivots must be a list")
    out = []
    for p in raw:
        c = JetCoordinate.parse(p) if isinstance(p, str) else None
        if c is None or not ctx.contains(c):
            r.fail(where, f"unknown pivot coordinate {p!r}")
        out.append(c)
    return out


def load(path) -> SpecDocument:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise SpecError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise SpecError(f"{path}: {exc}") from None
    return build(data, str(path), hashlib.sha256(raw).hexdigest())


def build(data: dict, path: str = "<spec>", digest: str = "") -> SpecDocument:
    r = _Reader(path, data)
    unknown = sorted(set(data) - _SECTIONS)
    if unknown:
        r.fail(unknown[0], "unknown section")
    states = _state_names(r)
    n = len(states)
    ctx = JetContext(n)

    eqs = r.table("equations", required=True)
    extra = sorted(set(eqs) - {f"{s}_t" for s in states})
    if extra:
        r.fail("equations", f"unexpected key {extra[0]!r}")
    rhs = []
    for s in states:
        if f"{s}_t" not in eqs:
            r.fail("equations", f"missing equation {s}_t")
        rhs.append(r.expr(f"equations.{s}_t", eqs[f"{s}_t"], ctx))

    sides, pivots = {}, {}
    boundary = r.table("boundary")
    for side in ("left", "right"):
        t = boundary.get(side, {})
        exprs = t.get("exprs", [])
        if not isinstance(exprs, list):
            r.fail(f"boundary.{side}", "exprs must be a list")
        sides[side] = [r.expr(f"boundary.{side}.exprs[{i}]", e, ctx) for i, e in enumerate(exprs)]
        p = _pivots(r, f"boundary.{side}.pivots", t.get("pivots"), ctx)
        if p is not None:
            if len(p) != len(exprs):
                r.fail(f"boundary.{side}", f"{len(exprs)} conditions but {len(p)} pivots")
            pivots[side] = p

    out = r.table("output", required=True)
    if "expr" not in out:
        r.fail("output", "missing expr")
    c = r.expr("output.expr", out["expr"], ctx)
    at = out.get("at", 0)
    z0 = r.expr("output.at", at, ctx).as_fraction() if isinstance(at, str) else _fraction(r, "output.at", at)
    if z0 is None or not 0 <= z0 <= 1:
        r.fail("output.at", f"output location must be a number in [0, 1], got {at!r}")
    try:
        system = SystemSpec(tuple(rhs), tuple(sides["left"]), tuple(sides["right"]), c, z0)
    except JetsymError as exc:
        r.fail("system", str(exc))

    doc = SpecDocument(path, digest, system, pivots=pivots)

    gen = r.table("generator")
    if gen:
        extra = sorted(set(gen) - {f"v{s}" for s in states} - {"vu"})
        if extra:
            r.fail("generator", f"unexpected key {extra[0]!r}")
        comps = [r.expr(f"generator.v{s}", gen.get(f"v{s}", "0"), ctx) for s in states]
        vu = r.expr("generator.vu", gen["vu"], ctx) if "vu" in gen else None
        try:
            doc.generator = VerticalField(tuple(comps), vu if vu is not None else 0)
        except JetsymError as exc:
            r.fail("generator", str(exc))
        doc.has_vu = "vu" in gen

    ans = r.table("ansatz")
    if ans:
        doc.ansatz = _ansatz(r, ans, states, ctx)

    sim = r.table("sim")
    if sim:
        doc.sim, doc.init, doc.eps = _sim(r, sim, states, ctx, pivots)
    return doc


def _ansatz(r, ans, states, ctx):
    if "preset" in ans:
        try:
            return preset(ans["preset"], len(states))
        except JetsymError as exc:
            r.fail("ansatz.preset", str(exc))
    basis = ans.get("basis")
    if isinstance(basis, list):
        exprs = [r.expr(f"ansatz.basis[{i}]", b, ctx) for i, b in enumerate(basis)]
        return Ansatz.uniform(exprs, len(states))
    if isinstance(basis, dict):
        per = []
        for s in states:
            items = basis.get(s, [])
            per.append([r.expr(f"ansatz.basis.{s}[{i}]", b, ctx) for i, b in enumerate(items)])
        return Ansatz(tuple(per))
    r.fail("ansatz", "expected preset or basis")


def _sim(r, sim, states, ctx, pivots):
    def num(key, default, kind=float):
        v = sim.get(key, default)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            r.fail(f"sim.{key}", f"expected a number, got {v!r}")
        return kind(v)

    u_expr = r.expr("sim.input", sim.get("input", "0"), ctx)
    guard = sim.get("sign_guard")
    if guard is not None:
        if not isinstance(guard, list) or any(g not in states for g in guard):
            r.fail("sim.sign_guard", "expected a list of state names")
        guard = tuple(int(g[1:]) for g in guard)
    try:
        cfg = SimConfig(num("N", 101, int), num("dt", 1e-4), num("T", 1.0), u_expr, pivots,
                        sign_guard=guard)
    except JetsymError as exc:
        r.fail("sim", str(exc))
    init_t = sim.get("init", {})
    if not isinstance(init_t, dict):
        r.fail("sim.init", "expected a table")
    init = None
    if init_t:
        init = []
        for s in states:
            if s not in init_t:
                r.fail("sim.init", f"missing initial profile for {s}")
            e = r.expr(f"sim.init.{s}", init_t[s], ctx)
            bad = [c.name for c in e.free if c.name != "z"]
            if bad:
                r.fail(f"sim.init.{s}", f"initial profile may only depend on z, found {bad[0]}")
            init.append(e)
    eps = sim.get("eps", [])
    if not isinstance(eps, list) or any(isinstance(e, bool) or not isinstance(e, (int, float))
                                        for e in eps):
        r.fail("sim.eps", "expected a list of numbers")
    return cfg, init, [float(e) for e in eps]
