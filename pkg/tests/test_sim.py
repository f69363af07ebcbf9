import csv
import math

import numpy as np
import pytest

from jetsym.errors import SimulationError, ValidationError
from jetsym.jet import VerticalField
from jetsym.parser import parse
from jetsym.sim import (
    DENSE_MAX_N, Grid, SimConfig, Trajectory, _boundary_dz, _diff_matrices, _dz_interior, _dzz,
    default_pivots, field_scale, indist_experiment, init_values, residual_check, simulate,
    simulate_batch, stability_advisory, transform_initial,
)
from jetsym.specfile import load

from conftest import spec_path


def test_grid():
    g = Grid(101)
    assert g.dz == pytest.approx(0.01)
    assert g.z[-1] == pytest.approx(1.0)
    assert g.snap(0.5) == (50, 0.0)
    i, d = Grid(6).snap(0.5)
    assert i in (2, 3) and d == pytest.approx(0.1)
    assert g.refined().N == 201
    with pytest.raises(ValidationError):
        Grid(4)


def test_config(P):
    c = SimConfig(T=0.5, dt=1e-4)
    assert c.steps == 5000
    assert c.refined().N == 201 and c.refined().dt == 5e-5
    with pytest.raises(ValidationError):
        SimConfig(input=P("x1"))
    with pytest.raises(ValidationError):
        SimConfig(dt=0)


def test_stencils_exact_on_quadratics():
    g = Grid(11)
    X = (3 * g.z**2 - 2 * g.z + 1)[None, :]
    assert np.allclose(_dz_interior(X, g.dz), 6 * g.z - 2, atol=1e-12)
    assert np.allclose(_dzz(X, g.dz), 6.0, atol=1e-9)
    assert _boundary_dz(X, "left", g.dz)[0] == pytest.approx(-2)
    assert _boundary_dz(X, "right", g.dz)[0] == pytest.approx(4)
    D1, D2 = _diff_matrices(11, g.dz)
    assert np.allclose(X @ D1, _dz_interior(X, g.dz))
    assert np.allclose(X @ D2, _dzz(X, g.dz))


def test_stencil_order():
    errs = []
    for N in (21, 41):
        g = Grid(N)
        X = np.sin(2 * g.z)[None, :]
        errs.append(np.max(np.abs(_dzz(X, g.dz) + 4 * np.sin(2 * g.z))))
    assert errs[0] / errs[1] > 3.5


def test_default_pivots(academic):
    assert [c.name for c in default_pivots(academic.system, "left")] == ["x1_z", "x2"]


def test_init_values(wave):
    g = Grid(11)
    X = init_values(wave.system, wave.init, g)
    assert X.shape == (2, 11)
    assert np.allclose(X[0], np.cos(np.pi * g.z))
    assert np.array_equal(init_values(wave.system, X, g), X)
    with pytest.raises(ValidationError):
        init_values(wave.system, X[:, :5], g)
    Y = init_values(wave.system, [lambda z: z, np.zeros(11)], g)
    assert np.array_equal(Y[0], g.z)


def test_equilibrium(wave):
    cfg = SimConfig(N=21, dt=1e-3, T=0.2)
    traj = simulate(wave.system, [2, 0], cfg)
    assert np.max(np.abs(traj.x[:, 0] - 2)) < 1e-12
    assert np.max(np.abs(traj.x[:, 1])) < 1e-12
    assert residual_check(wave.system, traj).value < 1e-12


def test_transform_initial_translation(wave):
    g = Grid(101)
    X0 = init_values(wave.system, wave.init, g)
    for eps in (0.25, 0.5, 1.0):
        moved, dx0 = transform_initial(wave.generator, X0, eps, grid=g)
        assert dx0 == eps
        assert np.array_equal(moved[0], X0[0] + eps)
        assert np.array_equal(moved[1], X0[1])
    same, d = transform_initial(wave.generator, X0, 0.0, grid=g)
    assert d == 0.0 and np.array_equal(same, X0) and same is not X0


def test_transform_initial_academic_closed_form(academic):
    g = Grid(41)
    X0 = init_values(academic.system, academic.init, g)
    moved, dx0 = transform_initial(academic.generator, X0, 0.2, steps=200, grid=g)
    assert np.max(np.abs(moved[0] - (X0[0] + 0.2))) < 1e-9
    assert np.max(np.abs(moved[1] - X0[0] * X0[1] / (X0[0] + 0.2))) < 1e-9
    assert dx0 == pytest.approx(0.2)


@pytest.fixture(scope="module")
def wave_short(wave):
    cfg = SimConfig(N=51, dt=2e-4, T=0.2, input=wave.sim.input)
    return simulate(wave.system, wave.init, cfg)


def test_symmetry_transport(wave, wave_short):
    """Offsetting x1 along the whole trajectory keeps the residual."""
    base = residual_check(wave.system, wave_short)
    shifted = Trajectory(wave_short.t, wave_short.z, wave_short.x.copy(), wave_short.u,
                         wave_short.y, wave_short.output_node, wave_short.snap_distance)
    shifted.x[:, 0] += 0.5
    moved = residual_check(wave.system, shifted)
    assert abs(moved.value - base.value) < 1e-12


def test_corrupted_sample_spikes(wave, wave_short):
    base = residual_check(wave.system, wave_short)
    bad = Trajectory(wave_short.t, wave_short.z, wave_short.x.copy(), wave_short.u,
                     wave_short.y, wave_short.output_node, wave_short.snap_distance)
    bad.x[400, 1, 20] += 1e-3
    r = residual_check(wave.system, bad)
    assert r.value > 100 * base.value
    assert r.node in (19, 20, 21) and r.sample in (399, 400, 401)


@pytest.fixture(scope="module")
def linear_runs(linear_wave):
    cfg = linear_wave.sim
    runs = {}
    for N in (101, 201):
        c = SimConfig(N=N, dt=1e-4, T=1.0, input=cfg.input, pivots=cfg.pivots)
        runs[N] = simulate(linear_wave.system, linear_wave.init, c)
    return runs


def test_convergence(linear_runs):
    errs = {}
    for N, traj in linear_runs.items():
        k = int(round(0.5 / (traj.t[1] - traj.t[0])))
        errs[N] = np.max(np.abs(traj.x[k, 0] + np.sin(2 * np.pi * traj.z)))
    assert errs[101] < 5e-3
    assert errs[101] / errs[201] >= 3


def test_linear_wave_output_stays_zero(linear_runs):
    assert np.max(np.abs(linear_runs[101].y)) < 1e-3


def test_energy_drift(linear_runs):
    traj = linear_runs[101]
    dz = traj.z[1] - traj.z[0]

    def energy(k):
        x1, x2 = traj.x[k]
        x1z = np.gradient(x1, dz, edge_order=2)
        f = x2**2 + x1z**2
        return dz * (f.sum() - 0.5 * (f[0] + f[-1]))

    e0 = energy(0)
    drift = max(abs(energy(k) - e0) for k in range(0, len(traj.t), 500)) / e0
    assert drift < 0.01


def test_batch_matches_single(wave):
    cfg = SimConfig(N=21, dt=1e-3, T=0.05, input=wave.sim.input)
    a = simulate(wave.system, wave.init, cfg)
    b = simulate_batch(wave.system, [[1, 0], wave.init], cfg)[1]
    assert np.max(np.abs(a.x - b.x)) < 1e-13
    assert np.max(np.abs(a.y - b.y)) < 1e-13


def test_sign_guard_reports_crossing():
    doc = load(spec_path("academic_crossing"))
    with pytest.raises(SimulationError) as info:
        simulate(doc.system, doc.init, doc.sim)
    err = info.value
    assert "x1 changed sign" in str(err)
    assert err.step is not None and err.node is not None and 0 < err.time <= 0.5


def test_blow_up_is_reported(P):
    from jetsym.system import SystemSpec
    spec = SystemSpec((P("x1^2"), P("0")), (), (), P("x1"), 0)
    with pytest.raises(SimulationError, match="not finite"):
        simulate(spec, [1, 0], SimConfig(N=11, dt=1e-2, T=2.0))


def test_init_boundary_warning(wave):
    with pytest.warns(RuntimeWarning) as caught:
        traj = simulate(wave.system, [parse("z", wave.context), 0], SimConfig(N=11, dt=1e-3, T=0.01))
    messages = sorted(str(w.message) for w in caught)
    assert [m.split(" by ")[0] for m in messages] == [
        "initial data violates left boundary condition 1",
        "initial data violates right boundary condition 1"]
    assert sorted(traj.warnings) == messages


def test_stability_advisory(wave):
    heat = load(spec_path("heat_sin"))
    assert stability_advisory(heat.system, SimConfig(N=101, dt=1e-3)) != []
    assert stability_advisory(heat.system, SimConfig(N=101, dt=1e-6)) == []
    assert stability_advisory(wave.system, SimConfig(N=101, dt=1e-4)) == []


def test_large_grid_uses_slicing(wave):
    cfg = SimConfig(N=DENSE_MAX_N + 3, dt=1e-5, T=2e-4, input=wave.sim.input)
    big = simulate(wave.system, wave.init, cfg)
    assert np.all(np.isfinite(big.x))
    assert abs(big.y[0]) < 1e-15


def test_write_csv(tmp_path, wave_short):
    path = tmp_path / "traj.csv"
    wave_short.write_csv(path, stride=100)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "z", "x1", "x2", "u", "y"]
    assert len(rows) == 1 + math.ceil(len(wave_short.t) / 100) * len(wave_short.z)
    assert float(rows[1][2]) == wave_short.x[0, 0, 0]


def test_field_scale(academic):
    g = Grid(41)
    X0 = init_values(academic.system, academic.init, g)
    assert field_scale(academic.generator, g, X0) == pytest.approx(np.max(np.abs(X0[1] / X0[0])))


def test_indist_requires_passing_field(wave):
    cfg = SimConfig(N=21, dt=1e-3, T=0.1, input=wave.sim.input)
    bad = VerticalField((0, 1))
    with pytest.raises(ValidationError):
        indist_experiment(wave.system, bad, wave.init, cfg, [0.5])
    exp = indist_experiment(wave.system, bad, wave.init, cfg, [0.5], override=True)
    assert exp.overridden and not exp.passed
    assert exp.results[0].delta_y > 0.1


def test_indist_short_wave(wave, tmp_path):
    cfg = SimConfig(N=41, dt=5e-4, T=0.2, input=wave.sim.input)
    exp = indist_experiment(wave.system, wave.generator, wave.init, cfg, [0.25, 1.0])
    assert exp.passed
    for r in exp.results:
        assert r.delta_x0 == r.eps and r.delta_y < 1e-9
    exp.write_series(tmp_path / "out.csv")
    header = (tmp_path / "out.csv").read_text().splitlines()[0]
    assert header == "t,y,y_eps=0.25,y_eps=1.0"
    assert exp.to_dict()["runs"][0]["passed"] is True
