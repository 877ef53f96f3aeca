import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from viscolab import (Dirichlet, EvolveConfig, Field, Grid1D, Periodic, burgers_flux, evolve,
                      make_linear_flux, numerical_flux, solve_cell_by_mean, stable_dt, step)
from viscolab.errors import CFLViolation, GridMismatch
from viscolab.evolve import diff_norms, dirichlet_traces_from_profile, final_fields
from viscolab.shock import ShockFamily

from oracles import dense_upwind_step

pytestmark = pytest.mark.filterwarnings("ignore::viscolab.errors.BandClampWarning")

TORUS = Grid1D("periodic", 0.0, 1.0, 64)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid1D("periodic", 0.0, 1.5, 32)
    with pytest.raises(ValueError):
        Grid1D("ring", 0.0, 1.0, 32)
    with pytest.raises(ValueError):
        Grid1D("line", 1.0, 0.0, 32)
    g = Grid1D("line", -1.0, 1.0, 20)
    assert g.dx == pytest.approx(0.1) and g.interfaces.size == 21
    with pytest.raises(ValueError):
        Field(g, np.zeros(19))
    with pytest.raises(ValueError):
        Field(g, np.full(20, np.nan))


def test_constant_is_fixed_point(burgers):
    u = Field(TORUS, np.full(64, 0.7))
    out = step(burgers, u, 0.001)
    assert np.max(np.abs(out.values - 0.7)) < 1e-15


def test_periodic_step_conserves_mass(separable):
    rng = np.random.default_rng(1)
    u = Field(TORUS, rng.normal(size=64))
    dt = stable_dt(separable, TORUS, u.values)
    out = step(separable, u, dt)
    assert abs(out.mass - u.mass) <= 1e-13 * np.max(np.abs(u.values)) * TORUS.measure


@pytest.mark.parametrize("a0", [0.5, 2.0])
def test_linear_step_matches_dense_oracle(a0):
    grid = Grid1D("periodic", 0.0, 1.0, 32)
    u = np.sin(2 * np.pi * grid.centers) + 0.3 * np.cos(6 * np.pi * grid.centers)
    flux = make_linear_flux(a0)
    F = numerical_flux(flux, grid, u)
    assert np.allclose(F, a0 * u)
    dt = 0.4 * grid.dx / a0
    out = step(flux, Field(grid, u), dt)
    assert np.max(np.abs(out.values - dense_upwind_step(a0, u, dt, grid.dx))) < 1e-13


def test_cfl_violation(burgers):
    u = Field(TORUS, np.sin(2 * np.pi * TORUS.centers))
    with pytest.raises(CFLViolation):
        step(burgers, u, 1.0)


def test_boundary_kind_checked(burgers):
    with pytest.raises(ValueError):
        step(burgers, Field(TORUS, np.zeros(64)), 1e-3, boundary=Dirichlet(0.0, 0.0))
    line = Grid1D("line", 0.0, 1.0, 16)
    with pytest.raises(ValueError):
        step(burgers, Field(line, np.zeros(16)), 1e-3)


def test_lockstep_needs_common_grid(burgers):
    other = Grid1D("periodic", 0.0, 1.0, 32)
    with pytest.raises(GridMismatch):
        evolve(burgers, [Field(TORUS, np.zeros(64)), Field(other, np.zeros(32))],
               EvolveConfig(t_end=0.1))


def test_t_end_zero(burgers):
    traj = evolve(burgers, Field(TORUS, np.ones(64)), EvolveConfig(t_end=0.0))
    assert traj.times == [0.0] and traj.n_steps == 0


def test_observer_times(burgers):
    seen = []
    cfg = EvolveConfig(t_end=0.1, observe_every=0.025, observe_times=(0.01,))
    traj = evolve(burgers, Field(TORUS, np.sin(2 * np.pi * TORUS.centers)), cfg,
                  observers=[lambda t, u: seen.append(t) or {"umax": float(u.max())}])
    assert traj.times == pytest.approx([0.0, 0.01, 0.025, 0.05, 0.075, 0.1])
    assert len(traj.series("umax")) == 6 and seen == traj.times


def _burgers_sine(n, t_end, dt=None):
    grid = Grid1D("periodic", 0.0, 1.0, n)
    u0 = Field(grid, np.sin(2 * np.pi * grid.centers))
    cfg = EvolveConfig(t_end=t_end, observe_every=t_end / 10, max_dt=dt or np.inf)
    return grid, evolve(burgers_flux(), u0, cfg)


def test_burgers_sine_decays_to_mean():
    grid, traj = _burgers_sine(128, 0.5)
    linf = traj.series("linf")
    assert np.all(np.diff(linf) < 0)
    mass = traj.series("mass")
    assert np.max(np.abs(mass - mass[0])) < 1e-13


def _cell_average(u_fine, factor):
    return u_fine.reshape(-1, factor).mean(axis=1)


def test_burgers_self_convergence():
    # successive differences under refinement shrink at first order (dt = 0.4 dx)
    runs = {n: _burgers_sine(n, 0.2, 0.4 / n)[1].fields[-1] for n in (64, 128, 256, 512)}
    diffs = [np.max(np.abs(runs[n] - _cell_average(runs[2 * n], 2))) for n in (64, 128, 256)]
    assert diffs[0] / diffs[1] > 1.6 and diffs[1] / diffs[2] > 1.6


def test_cell_is_near_fixed_point(separable):
    cell = solve_cell_by_mean(separable, 0.5)
    drift = []
    for n in (32, 64, 128):
        grid = Grid1D("periodic", 0.0, 1.0, n)
        v = cell(grid.centers)
        traj = evolve(separable, Field(grid, v), EvolveConfig(t_end=10.0))
        drift.append(np.max(np.abs(traj.fields[-1] - v)))
    assert drift[0] / drift[1] > 1.6 and drift[1] / drift[2] > 1.6


def test_pinned_shock_stays_put(burgers):
    fam = ShockFamily(burgers, 0.5)
    U = fam.build(0.0, 21.0)
    drift = []
    for n in (200, 400, 800):
        grid = Grid1D("line", -20.0, 20.0, n)
        u0 = U(grid.centers)
        cfg = EvolveConfig(t_end=5.0, boundary=dirichlet_traces_from_profile(U, grid))
        traj = evolve(burgers, Field(grid, u0), cfg)
        drift.append(np.max(np.abs(traj.fields[-1] - u0)))
        assert abs(traj.series("mass")[-1] - traj.series("mass")[0]
                   - traj.series("boundary_ledger")[-1]) < 1e-10
    assert drift[0] / drift[1] > 1.6 and drift[1] / drift[2] > 1.6


def test_pinned_cell_on_line(separable):
    cell = solve_cell_by_mean(separable, 0.5)
    drift = []
    for n in (160, 320):
        grid = Grid1D("line", -5.0, 5.0, n)
        v = cell(grid.centers)
        cfg = EvolveConfig(t_end=3.0, boundary=dirichlet_traces_from_profile(cell, grid))
        traj = evolve(separable, Field(grid, v), cfg)
        drift.append(np.max(np.abs(traj.fields[-1] - v)))
    assert drift[0] / drift[1] > 1.6


def test_wrong_asymptote_ledger_grows_linearly(burgers):
    # u = 1 pinned to 2 on the inflow side: net boundary flux f(2) - f(1) = 1.5
    grid = Grid1D("line", -10.0, 10.0, 400)
    cfg = EvolveConfig(t_end=6.0, boundary=Dirichlet(2.0, 1.0), observe_times=(2.0, 4.0))
    traj = evolve(burgers, Field(grid, np.ones(400)), cfg)
    led = traj.series("boundary_ledger")
    rate_a = (led[2] - led[1]) / 2.0
    rate_b = (led[3] - led[2]) / 2.0
    assert rate_a == pytest.approx(1.5, rel=0.02) and rate_b == pytest.approx(rate_a, rel=0.01)


def test_diff_norms():
    g = Grid1D("line", 0.0, 1.0, 10)
    a = Field(g, np.zeros(10))
    assert diff_norms(a, a) == {"l1": 0.0, "l2": 0.0, "linf": 0.0, "signed_mass": 0.0}
    b = Field(g, np.r_[np.zeros(7), np.full(3, 2.0)])
    d = diff_norms(b, a)
    assert d["l1"] == pytest.approx(3 * 2 * 0.1) and d["signed_mass"] == pytest.approx(0.6)
    with pytest.raises(GridMismatch):
        diff_norms(a, Field(Grid1D("line", 0.0, 1.0, 12), np.zeros(12)))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=16, max_size=16),
       st.lists(st.floats(-5, 5), min_size=16, max_size=16))
def test_diff_norms_cauchy_schwarz(a, b):
    g = Grid1D("line", 0.0, 2.0, 16)
    d = diff_norms(Field(g, a), Field(g, b))
    assert d["l1"] <= np.sqrt(g.measure) * d["l2"] * (1 + 1e-12) + 1e-300


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_comparison_and_contraction_property(seed, separable):
    rng = np.random.default_rng(seed)
    grid = Grid1D("periodic", 0.0, 1.0, 32)
    a = rng.normal(scale=2.0, size=32)
    b = a + np.abs(rng.normal(size=32))
    c = rng.normal(scale=2.0, size=32)
    traj = evolve(separable, [Field(grid, a), Field(grid, b), Field(grid, c)],
                  EvolveConfig(t_end=0.05, store_fields=True, observe_every=0.01))
    l1 = []
    for u in traj.fields:
        assert np.all(u[1] - u[0] >= -1e-12)
        l1.append(np.sum(np.abs(u[2] - u[0])) * grid.dx)
    assert np.all(np.diff(l1) <= 1e-12)
    assert np.allclose(traj.series("mass")[-1], traj.series("mass")[0], atol=1e-12)


def test_final_fields_and_csv(tmp_path, burgers):
    traj = evolve(burgers, [Field(TORUS, np.zeros(64)), Field(TORUS, np.ones(64))],
                  EvolveConfig(t_end=0.01))
    a, b = final_fields(traj)
    assert np.allclose(b.values, 1.0, atol=1e-14)
    a.to_csv(tmp_path / "f.csv")
    assert (tmp_path / "f.csv").read_text().startswith("x,u\n")


def test_diff_norms_tiny_values_do_not_underflow():
    g = Grid1D("line", 0.0, 2.0, 16)
    b = np.zeros(16)
    b[-1] = 1.5e-185
    d = diff_norms(Field(g, np.zeros(16)), Field(g, b))
    assert d["l2"] == pytest.approx(1.5e-185 * np.sqrt(g.dx), rel=1e-12)
    assert d["l1"] <= np.sqrt(g.measure) * d["l2"] * (1 + 1e-12)
