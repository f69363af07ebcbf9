"""Method-of-lines simulation, initial-condition transport, and the
indistinguishability experiment.

Space: central differences inside, second-order one-sided stencils at the
two ends.  Time: classic RK4.  Boundary node values are algebraic: at every
stage each boundary condition is solved for its pivot (the node value of one
state at that end) by Newton's method, vectorized over a batch of runs.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .checker import CheckOptions, check_nonobservability
from .coords import T, Z, JetCoordinate, u, x
from .errors import SimulationError, ValidationError
from .expr import Expr, as_expr, derive, free_symbols, lambdify, substitute
from .jet import VerticalField, _denominator_states, flow_at_t0
from .system import SystemSpec


@dataclass(frozen=True)
class Grid:
    N: int

    def __post_init__(self):
        if self.N < 5:
            raise ValidationError("grid needs at least 5 nodes")

    @property
    def dz(self) -> float:
        return 1.0 / (self.N - 1)

    @property
    def z(self) -> np.ndarray:
        return np.arange(self.N) * self.dz

    def snap(self, z0) -> tuple:
        """Nearest node index and the snap distance."""
        i = int(round(float(z0) * (self.N - 1)))
        return i, abs(i * self.dz - float(z0))

    def refined(self) -> Grid:
        return Grid(2 * self.N - 1)


@dataclass
class SimConfig:
    N: int = 101
    dt: float = 1e-4
    T: float = 1.0
    input: Expr = field(default_factory=lambda: as_expr(0))
    pivots: dict = field(default_factory=dict)  # side -> [JetCoordinate]; defaulted per condition
    newton_tol: float = 1e-12
    newton_max: int = 25
    sign_guard: tuple | None = None  # state indices; None = states occurring in denominators

    def __post_init__(self):
        if not self.dt > 0 or not self.T > 0:
            raise ValidationError("dt and T must be positive")
        self.input = as_expr(self.input)
        bad = [c.name for c in free_symbols(self.input) if c != T]
        if bad:
            raise ValidationError(f"input may only depend on t, found {', '.join(bad)}")
        Grid(self.N)

    @property
    def grid(self) -> Grid:
        return Grid(self.N)

    @property
    def steps(self) -> int:
        return math.ceil(self.T / self.dt - 1e-9)

    def refined(self) -> SimConfig:
        return SimConfig(2 * self.N - 1, self.dt / 2, self.T, self.input, self.pivots,
                         self.newton_tol, self.newton_max, self.sign_guard)


def stability_advisory(spec: SystemSpec, config: SimConfig) -> list:
    """Advisory messages only; nothing is enforced."""
    dz = config.grid.dz
    out = []
    parabolic = hyperbolic = False
    for a, f in enumerate(spec.rhs, 1):
        for b in range(1, spec.n_x + 1):
            c = derive(f, x(b, 2, 0))
            if c.is_zero_literal():
                if b != a and not derive(f, x(b, 1, 0)).is_zero_literal():
                    hyperbolic = True
                continue
            if b != a:
                hyperbolic = True
                continue
            try:
                val = float(lambdify(c, ())()) if not free_symbols(c) else _sample_positive(c)
            except (ValueError, ZeroDivisionError):
                val = 1.0
            if val > 0:
                parabolic = True
    if parabolic and config.dt > 0.25 * dz * dz:
        out.append(f"dt = {config.dt:g} exceeds 0.25*dz^2 = {0.25 * dz * dz:g} (diffusive terms)")
    if hyperbolic and config.dt > 0.5 * dz:
        out.append(f"dt = {config.dt:g} exceeds 0.5*dz = {0.5 * dz:g} (wave-like coupling)")
    return out


def _sample_positive(c):
    coords = sorted(free_symbols(c), key=lambda k: k.sort_key)
    fn = lambdify(c, tuple(coords))
    with np.errstate(all="ignore"):
        v = fn(*[np.full(1, 1.0) for _ in coords])
    return float(np.asarray(v).ravel()[0])


@dataclass
class Trajectory:
    t: np.ndarray  # (K+1,)
    z: np.ndarray  # (N,)
    x: np.ndarray  # (K+1, n_x, N)
    u: np.ndarray  # (K+1,)
    y: np.ndarray  # (K+1,)
    output_node: int
    snap_distance: float
    warnings: list = field(default_factory=list)

    @property
    def n_x(self) -> int:
        return self.x.shape[1]

    def write_csv(self, path, stride: int = 1):
        """Header ``t,z,x1,...,u,y``; rows ordered by time, then node."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "z"] + [f"x{a}" for a in range(1, self.n_x + 1)] + ["u", "y"])
            for k in range(0, len(self.t), stride):
                for i, zi in enumerate(self.z):
                    w.writerow([repr(float(self.t[k])), repr(float(zi))]
                               + [repr(float(v)) for v in self.x[k, :, i]]
                               + [repr(float(self.u[k])), repr(float(self.y[k]))])


def _dz_interior(X, dz):
    d = np.empty_like(X)
    d[..., 1:-1] = (X[..., 2:] - X[..., :-2]) / (2 * dz)
    d[..., 0] = (-3 * X[..., 0] + 4 * X[..., 1] - X[..., 2]) / (2 * dz)
    d[..., -1] = (3 * X[..., -1] - 4 * X[..., -2] + X[..., -3]) / (2 * dz)
    return d


def _dzz(X, dz):
    d = np.empty_like(X)
    h2 = dz * dz
    d[..., 1:-1] = (X[..., 2:] - 2 * X[..., 1:-1] + X[..., :-2]) / h2
    d[..., 0] = (2 * X[..., 0] - 5 * X[..., 1] + 4 * X[..., 2] - X[..., 3]) / h2
    d[..., -1] = (2 * X[..., -1] - 5 * X[..., -2] + 4 * X[..., -3] - X[..., -4]) / h2
    return d


def _diff_matrices(N, dz):
    """Dense first/second difference operators matching the stencils above."""
    eye = np.eye(N)
    # row i holds the operator applied to the i-th unit vector, so X @ M applies it
    return _dz_interior(eye, dz), _dzz(eye, dz)


DENSE_MAX_N = 512


def _boundary_dz(X, side, dz):
    """One-sided x_z at one end, shape (B, n_x)."""
    if side == "left":
        return (-3 * X[..., 0] + 4 * X[..., 1] - X[..., 2]) / (2 * dz)
    return (3 * X[..., -1] - 4 * X[..., -2] + X[..., -3]) / (2 * dz)


def default_pivots(spec: SystemSpec, side: str) -> list:
    """First unclaimed state mentioned by each condition, in order."""
    funcs = spec.left if side == "left" else spec.right
    used, out = set(), []
    for g in funcs:
        cands = sorted((c for c in free_symbols(g) if c.is_dependent),
                       key=lambda c: (c.index, c.nz))
        pick = next((c for c in cands if c.index not in used), None)
        if pick is None:
            raise ValidationError(f"cannot choose a pivot for boundary condition {g} ({side})")
        used.add(pick.index)
        out.append(pick)
    return out


def _slot(c: JetCoordinate):
    """Hashable-free argument slot: ("z",), ("t",), ("u",) or ("x", state index, nz)."""
    if c.role == "x":
        return ("x", c.index - 1, c.nz)
    return (c.role,)


def _compile(e: Expr):
    coords = tuple(sorted(free_symbols(e), key=lambda c: c.sort_key))
    return tuple(_slot(c) for c in coords), lambdify(e, coords)


class _Closure:
    """Newton solve of the conditions at one end for the pivot node values.

    When every condition is affine in the pivots with a constant Jacobian
    the solve is a single precomputed linear update.
    """

    def __init__(self, spec, side, pivots, grid, tol, max_iter):
        self.side = side
        self.funcs = list(spec.left if side == "left" else spec.right)
        self.node = 0 if side == "left" else -1
        self.node_index = 0 if side == "left" else grid.N - 1
        n = spec.n_x
        pivots = list(pivots) if pivots else default_pivots(spec, side)
        if len(pivots) != len(self.funcs):
            raise ValidationError(f"{side} end has {len(self.funcs)} conditions "
                                  f"but {len(pivots)} pivots")
        self.alphas = []
        for p in pivots:
            if isinstance(p, str):
                p = JetCoordinate.parse(p)
            if p is None or not p.role == "x" or p.nt or p.nz > 1 or p.index > n:
                raise ValidationError(f"pivot must be x or x_z of a state, got {p}")
            self.alphas.append(p.index)
        if len(set(self.alphas)) != len(self.alphas):
            raise ValidationError(f"two {side} pivots name the same state")
        self.idx = [a - 1 for a in self.alphas]
        self.dz, self.tol, self.max_iter = grid.dz, tol, max_iter
        s = (-3 if side == "left" else 3) / (2 * grid.dz)
        self.g = [_compile(g) for g in self.funcs]
        jac = [[derive(g, x(a)) + derive(g, x(a, 1)) * s for a in self.alphas] for g in self.funcs]
        self.jac = [[_compile(e) for e in row] for row in jac]
        self.jinv = None
        if all(not free_symbols(e) for row in jac for e in row):
            J = np.array([[float(e.as_fraction()) if e.as_fraction() is not None
                           else float(lambdify(e, ())()) for e in row] for row in jac])
            affine = all(derive(e, c).is_zero_literal() for row in jac for e in row
                         for c in free_symbols(e))
            if affine and self.funcs and abs(np.linalg.det(J)) > 0:
                self.jinv = np.linalg.inv(J)

    def _eval(self, fns, t, X):
        node, side, dz = self.node, self.side, self.dz
        out = np.empty((X.shape[0], len(fns)))
        for j, (slots, fn) in enumerate(fns):
            args = []
            for sl in slots:
                if sl[0] == "t":
                    args.append(t)
                elif sl[2] == 0:
                    args.append(X[:, sl[1], node])
                else:
                    args.append(_boundary_dz(X[:, sl[1]], side, dz))
            out[:, j] = fn(*args)
        return out

    def apply(self, t, X, step):
        if not self.funcs:
            return
        if self.jinv is not None:
            r = self._eval(self.g, t, X)
            X[:, self.idx, self.node] -= r @ self.jinv.T
            return
        idx = self.idx
        for it in range(self.max_iter + 1):
            r = self._eval(self.g, t, X)
            if not np.all(np.isfinite(r)):
                raise SimulationError(f"{self.side} boundary condition is not finite",
                                      node=self.node_index, step=step, time=t)
            if np.max(np.abs(r)) <= self.tol:
                return
            if it == self.max_iter:
                break
            J = np.stack([self._eval(row, t, X) for row in self.jac], axis=1)  # (B, m, m)
            try:
                delta = np.linalg.solve(J, r[..., None])[..., 0]
            except np.linalg.LinAlgError:
                raise SimulationError(f"singular Jacobian closing the {self.side} boundary",
                                      node=self.node_index, step=step, time=t) from None
            old = X[:, idx, self.node].copy()
            norm0 = np.max(np.abs(r))
            lam = 1.0
            for _ in range(20):  # damping
                X[:, idx, self.node] = old - lam * delta
                r1 = self._eval(self.g, t, X)
                if np.all(np.isfinite(r1)) and np.max(np.abs(r1)) < norm0:
                    break
                lam /= 2
        raise SimulationError(
            f"Newton did not converge at the {self.side} boundary after {self.max_iter} iterations",
            node=self.node_index, step=step, time=t)


class _Model:
    def __init__(self, spec: SystemSpec, config: SimConfig, batch: int):
        n = spec.n_x
        self.n = n
        self.grid = config.grid
        self.dz = self.grid.dz
        self.f = [_compile(f) for f in spec.rhs]
        used = {sl for slots, _ in self.f for sl in slots}
        self.derivs = sorted((sl[1], sl[2]) for sl in used if sl[0] == "x" and sl[2] > 0)
        self.ops = None
        if self.grid.N <= DENSE_MAX_N:
            self.ops = _diff_matrices(self.grid.N, self.dz)
        self.closures = [_Closure(spec, side, config.pivots.get(side), self.grid,
                                  config.newton_tol, config.newton_max)
                         for side in ("left", "right")]
        self.pinned = np.zeros((n, self.grid.N), dtype=bool)
        for cl in self.closures:
            for a in cl.alphas:
                self.pinned[a - 1, cl.node] = True
        self.zz = np.broadcast_to(self.grid.z, (batch, self.grid.N))
        self.F = np.empty((batch, n, self.grid.N))

    def close(self, t, X, step):
        for cl in self.closures:
            cl.apply(t, X, step)

    def rhs(self, t, X, uval):
        d = {}
        for a, order in self.derivs:
            if self.ops is not None:
                d[(a, order)] = X[:, a] @ self.ops[order - 1]
            else:
                d[(a, order)] = (_dz_interior if order == 1 else _dzz)(X[:, a], self.dz)
        F = np.empty_like(X)
        for a, (slots, fn) in enumerate(self.f):
            args = []
            for sl in slots:
                kind = sl[0]
                if kind == "x":
                    args.append(X[:, sl[1]] if sl[2] == 0 else d[(sl[1], sl[2])])
                elif kind == "z":
                    args.append(self.zz)
                elif kind == "t":
                    args.append(t)
                else:
                    args.append(uval)
            F[:, a] = fn(*args)
        F[:, self.pinned] = 0.0
        return F


def _output_series(spec: SystemSpec, grid: Grid, ts, out, node):
    """y(t_k) for every run: ``out`` has shape (K+1, B, n_x, N)."""
    cols = out[..., node]  # (K+1, B, n)
    if node == 0:
        xz = (-3 * out[..., 0] + 4 * out[..., 1] - out[..., 2]) / (2 * grid.dz)
    elif node == grid.N - 1:
        xz = (3 * out[..., -1] - 4 * out[..., -2] + out[..., -3]) / (2 * grid.dz)
    else:
        xz = (out[..., node + 1] - out[..., node - 1]) / (2 * grid.dz)
    slots, fn = _compile(spec.output)
    args = []
    for sl in slots:
        if sl[0] == "t":
            args.append(ts[:, None])
        else:
            args.append(cols[..., sl[1]] if sl[2] == 0 else xz[..., sl[1]])
    with np.errstate(all="ignore"):
        y = fn(*args)
    return np.broadcast_to(np.asarray(y, dtype=float), cols.shape[:2]).copy()


def _guard_states(spec: SystemSpec, config: SimConfig):
    if config.sign_guard is not None:
        return [a - 1 for a in config.sign_guard]
    exprs = list(spec.rhs) + list(spec.left) + list(spec.right) + [spec.output]
    return [a - 1 for a in _denominator_states(exprs)]


def init_values(spec: SystemSpec, init, grid: Grid) -> np.ndarray:
    """Initial data as an (n_x, N) array; entries may be Exprs in z, callables, or arrays."""
    if isinstance(init, np.ndarray):
        arr = np.array(init, dtype=float)
        if arr.shape != (spec.n_x, grid.N):
            raise ValidationError(f"initial data shape {arr.shape} != {(spec.n_x, grid.N)}")
        return arr
    if len(init) != spec.n_x:
        raise ValidationError(f"expected {spec.n_x} initial profiles, got {len(init)}")
    rows = []
    z = grid.z
    for a, prof in enumerate(init, 1):
        if callable(prof) and not isinstance(prof, Expr):
            rows.append(np.broadcast_to(np.asarray(prof(z), dtype=float), z.shape))
            continue
        if isinstance(prof, np.ndarray):
            rows.append(np.asarray(prof, dtype=float))
            continue
        e = as_expr(prof)
        extra = [c for c in free_symbols(e) if c != Z]
        if extra:
            raise ValidationError(f"initial profile for x{a} may only depend on z")
        with np.errstate(all="ignore"):
            rows.append(np.broadcast_to(np.asarray(lambdify(e, (Z,))(z), dtype=float), z.shape))
    return np.array(rows)


def _check_init(spec, init, X0, grid):
    """Boundary residuals of symbolic initial data (exact z-derivatives).

    Sampled (array or callable) data is not checked: a one-sided stencil
    would report its own truncation error, and the first closure repairs
    the boundary nodes anyway.
    """
    msgs = []
    if isinstance(init, np.ndarray) or not all(isinstance(p, (Expr, int, float)) for p in init):
        return msgs
    exprs = [as_expr(p) for p in init]
    for side, funcs in (("left", spec.left), ("right", spec.right)):
        zb = 0 if side == "left" else 1
        env = {T: 0.0}
        for a, e in enumerate(exprs, 1):
            env[x(a)] = float(lambdify(substitute(e, {Z: zb}), ())())
            env[x(a, 1)] = float(lambdify(substitute(derive(e, Z), {Z: zb}), ())())
        for i, g in enumerate(funcs, 1):
            coords = tuple(sorted(free_symbols(g), key=lambda c: c.sort_key))
            with np.errstate(all="ignore"):
                r = float(lambdify(g, coords)(*[env[c] for c in coords]))
            if not abs(r) <= 1e-8:
                msgs.append(f"initial data violates {side} boundary condition {i} by {r:.3g}")
    return msgs


def simulate_batch(spec: SystemSpec, inits, config: SimConfig) -> list:
    """Simulate several initial conditions in lockstep; one Trajectory each."""
    grid = config.grid
    X = np.array([init_values(spec, i, grid) for i in inits])  # (B, n, N)
    B = X.shape[0]
    notes = [_check_init(spec, i, X[b], grid) for b, i in enumerate(inits)]
    for msgs in notes:
        for m in msgs:
            warnings.warn(m, RuntimeWarning, stacklevel=2)
    model = _Model(spec, config, B)
    K = config.steps
    dt = config.dt
    ts = np.arange(K + 1) * dt
    ufn = lambdify(config.input, (T,))
    uin = np.broadcast_to(np.asarray(ufn(ts), dtype=float), ts.shape)
    uhalf = np.broadcast_to(np.asarray(ufn(ts[:-1] + dt / 2), dtype=float), (K,))
    node, snap = grid.snap(spec.z0)
    guard = _guard_states(spec, config)
    signs = np.sign(X[:, guard]) if guard else None
    out = np.empty((K + 1,) + X.shape)

    def guard_check(S, step, t):
        if guard:
            bad = np.sign(S[:, guard]) != signs
            if bad.any():
                b, a, i = (int(v[0]) for v in np.nonzero(bad))
                raise SimulationError(
                    f"x{guard[a] + 1} changed sign; it appears in a denominator, aborting",
                    node=i, step=step, time=float(t))

    with np.errstate(all="ignore"):
        model.close(0.0, X, 0)
        out[0] = X
        for k in range(K):
            t = ts[k]
            th = t + dt / 2
            k1 = model.rhs(t, X, uin[k])
            S = X + 0.5 * dt * k1
            guard_check(S, k + 1, th)
            model.close(th, S, k + 1)
            k2 = model.rhs(th, S, uhalf[k])
            S = X + 0.5 * dt * k2
            guard_check(S, k + 1, th)
            model.close(th, S, k + 1)
            k3 = model.rhs(th, S, uhalf[k])
            S = X + dt * k3
            guard_check(S, k + 1, t + dt)
            model.close(t + dt, S, k + 1)
            k4 = model.rhs(t + dt, S, uin[k + 1])
            X = X + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            guard_check(X, k + 1, ts[k + 1])
            model.close(ts[k + 1], X, k + 1)
            if not np.isfinite(X.sum()):
                b, a, i = (int(v[0]) for v in np.nonzero(~np.isfinite(X)))
                raise SimulationError(f"x{a + 1} is not finite (blow-up)", node=i, step=k + 1,
                                      time=float(ts[k + 1]))
            guard_check(X, k + 1, ts[k + 1])
            out[k + 1] = X
    ys = _output_series(spec, grid, ts, out, node)
    return [Trajectory(ts, grid.z, out[:, b].copy(), np.array(uin), ys[:, b].copy(), node, snap,
                       notes[b]) for b in range(B)]


def simulate(spec: SystemSpec, init, config: SimConfig) -> Trajectory:
    return simulate_batch(spec, [init], config)[0]


def transform_initial(field_: VerticalField, init: np.ndarray, eps: float, steps: int = 100,
                      grid: Grid | None = None) -> tuple:
    """Move the initial profiles along the flow of ``field_`` at t = 0.

    Returns ``(init', max |init' - init|)``.  For a field that does not
    depend on the state at t = 0 the displacement is ``max |eps * v(z)|``.
    """
    init = np.asarray(init, dtype=float)
    grid = grid or Grid(init.shape[1])
    if eps == 0:
        return init.copy(), 0.0
    moved = np.array(flow_at_t0(field_, grid.z, list(init), eps, steps))
    comps = [substitute(c, {T: 0}) for c in field_.components]
    if not any(k.is_dependent for c in comps for k in free_symbols(c)):
        # the flow is a translation by eps * v(z); measure that, not the
        # rounded difference (x + eps) - x
        args = (Z, u())
        with np.errstate(all="ignore"):
            disp = [np.broadcast_to(lambdify(c, args)(grid.z, np.zeros(grid.N)), (grid.N,))
                    for c in comps]
        return moved, float(np.max(np.abs(eps * np.array(disp))))
    return moved, float(np.max(np.abs(moved - init)))


@dataclass(frozen=True)
class ResidualReport:
    value: float
    node: int
    sample: int


def residual_check(spec: SystemSpec, traj: Trajectory) -> ResidualReport:
    """Max |x_t - f| over interior nodes and samples, all derivatives by central differences."""
    X = traj.x
    K1, n, N = X.shape
    if K1 < 3:
        raise ValidationError("residual check needs at least 3 time samples")
    dt = traj.t[1] - traj.t[0]
    dz = traj.z[1] - traj.z[0]
    inner = X[1:-1, :, 1:-1]
    xt = (X[2:, :, 1:-1] - X[:-2, :, 1:-1]) / (2 * dt)
    xz = (X[1:-1, :, 2:] - X[1:-1, :, :-2]) / (2 * dz)
    xzz = (X[1:-1, :, 2:] - 2 * inner + X[1:-1, :, :-2]) / (dz * dz)
    args = ((Z, T) + tuple(x(a) for a in range(1, n + 1)) + tuple(x(a, 1) for a in range(1, n + 1))
            + tuple(x(a, 2) for a in range(1, n + 1)) + (u(),))
    shape = (K1 - 2, N - 2)
    zz = np.broadcast_to(traj.z[1:-1], shape)
    tt = np.broadcast_to(traj.t[1:-1, None], shape)
    uu = np.broadcast_to(traj.u[1:-1, None], shape)
    vals = ([inner[:, a] for a in range(n)] + [xz[:, a] for a in range(n)]
            + [xzz[:, a] for a in range(n)])
    worst = np.zeros(shape)
    for a, f in enumerate(spec.rhs):
        with np.errstate(all="ignore"):
            fa = np.broadcast_to(lambdify(f, args)(zz, tt, *vals, uu), shape)
        worst = np.maximum(worst, np.abs(xt[:, a] - fa))
    k, i = np.unravel_index(int(np.argmax(worst)), shape)
    return ResidualReport(float(worst[k, i]), int(i) + 1, int(k) + 1)


@dataclass
class EpsResult:
    eps: float
    delta_y: float
    delta_x0: float
    residual: float
    passed: bool

    def to_dict(self) -> dict:
        return {"eps": self.eps, "delta_y": self.delta_y, "delta_x0": self.delta_x0,
                "residual": self.residual, "passed": self.passed}


@dataclass
class Experiment:
    results: list
    discrepancy: float
    tol_out: float
    field_scale: float
    baseline_residual: float
    overridden: bool = False
    series: dict = field(default_factory=dict, repr=False)  # t, y and y per eps

    def write_series(self, path):
        """CSV with columns ``t,y,y_eps=<e>...``."""
        keys = [k for k in self.series if k not in ("t", "y")]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "y"] + [f"y_eps={k}" for k in keys])
            for k, t in enumerate(self.series["t"]):
                w.writerow([repr(float(t)), repr(float(self.series["y"][k]))]
                           + [repr(float(self.series[e][k])) for e in keys])

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "self_discrepancy": self.discrepancy,
                "tol_out": self.tol_out, "field_scale": self.field_scale,
                "baseline_residual": self.baseline_residual, "override": self.overridden,
                "runs": [r.to_dict() for r in self.results]}


def field_scale(field_: VerticalField, grid: Grid, X0: np.ndarray) -> float:
    """max over nodes and components of |v(z, 0, x0(z))|."""
    n = len(field_.components)
    args = (Z,) + tuple(x(a) for a in range(1, n + 1)) + (u(),)
    best = 0.0
    for c in field_.components:
        c0 = substitute(c, {T: 0})
        with np.errstate(all="ignore"):
            v = np.broadcast_to(lambdify(c0, args)(grid.z, *X0, np.zeros(grid.N)), (grid.N,))
        best = max(best, float(np.nanmax(np.abs(v))))
    return best


def indist_experiment(spec: SystemSpec, field_: VerticalField, init, config: SimConfig,
                      eps_list, override: bool = False, flow_steps: int = 200,
                      options: CheckOptions | None = None) -> Experiment:
    if not override:
        report = check_nonobservability(spec, field_, options)
        if not report.aggregate.passed:
            raise ValidationError("the field fails the non-observability check "
                                  "(pass override to run the experiment anyway)")
    grid = config.grid
    X0 = init_values(spec, init, grid)
    moved = [transform_initial(field_, X0, float(e), flow_steps, grid) for e in eps_list]
    runs = simulate_batch(spec, [X0] + [m for m, _ in moved], config)
    base = runs[0]
    fine = simulate(spec, _refine_init(spec, init, X0), config.refined())
    disc = float(np.max(np.abs(base.y - fine.y[::2][: len(base.y)])))
    tol = 1e-6 + 10 * disc
    scale = field_scale(field_, grid, X0)
    results = []
    for e, (_, dx0), traj in zip(eps_list, moved, runs[1:]):
        dy = float(np.max(np.abs(base.y - traj.y)))
        res = residual_check(spec, traj).value
        ok = dx0 >= 0.1 * abs(float(e)) * scale and dy <= tol
        results.append(EpsResult(float(e), dy, dx0, res, bool(ok)))
    series = {"t": base.t, "y": base.y}
    for e, traj in zip(eps_list, runs[1:]):
        series[repr(float(e))] = traj.y
    return Experiment(results, disc, tol, scale, residual_check(spec, base).value, override,
                      series)


def _refine_init(spec, init, X0):
    """Initial data on the refined grid; array data is linearly interpolated."""
    if isinstance(init, np.ndarray):
        fine = Grid(2 * X0.shape[1] - 1)
        return np.array([np.interp(fine.z, Grid(X0.shape[1]).z, row) for row in X0])
    return init
