import warnings

import numpy as np
import pytest
from scipy.integrate import simpson

from viscolab import (ShockFamily, build_shock, detect_asymptotic_state, end_state_sign_check,
                      estimate_exponential_rate, select_zero_mass_shock, shock_difference_mass,
                      solve_cell_by_mean, translate)
from viscolab.errors import AsymptoteUnresolved, BandClampWarning, BracketFailure, RateUnresolved
from viscolab.shock import end_monotonicity

pytestmark = pytest.mark.filterwarnings("ignore::viscolab.errors.BandClampWarning")


@pytest.fixture(scope="module")
def burgers_family(burgers):
    return ShockFamily(burgers, 0.5)


@pytest.fixture(scope="module")
def burgers_shock(burgers_family):
    return burgers_family.build(0.0, 30.0)


@pytest.mark.parametrize("p", [1.0, 2.0])
def test_burgers_tanh(burgers, p):
    U = build_shock(burgers, 0.5 * p * p, 0.0, 40.0 / p)
    x = U.grid
    assert np.max(np.abs(U.values + p * np.tanh(p * x / 2))) <= 1e-6
    assert U.q_left == pytest.approx(p) and U.q_right == pytest.approx(-p)
    assert U.residual_right < 1e-10
    assert U.rate_right == pytest.approx(p, rel=0.05)
    assert U.stationarity_residual < 1e-6


def test_profile_evaluation_outside_window(burgers_shock):
    assert burgers_shock(np.array([-100.0, 100.0])) == pytest.approx([1.0, -1.0])
    assert burgers_shock(np.array(0.0)) == pytest.approx(0.0, abs=1e-14)


def test_xi0_on_band_edge_rejected(burgers_family):
    lo, hi = burgers_family.xi_range
    with pytest.raises(ValueError):
        burgers_family.build(hi, 20.0)
    with pytest.raises(ValueError):
        burgers_family.build(lo - 0.1, 20.0)


def test_level_without_pair(burgers):
    with pytest.raises(BracketFailure):
        ShockFamily(burgers, -0.1)


def test_separable_large_alpha_orientation(separable):
    U = build_shock(separable, 4.0, 0.0)
    fam = U.family
    assert U.q_left == pytest.approx(fam.p_plus) and U.q_right == pytest.approx(fam.p_minus)
    assert fam.p_plus == pytest.approx(2.0, abs=1e-6) and fam.p_minus == pytest.approx(-4.0, abs=1e-6)
    # u(x + 1) <= u(x): decreasing across periods up to round-off in the saturated tails
    assert np.all(np.diff(U.values[::64]) <= 1e-10)


def test_automatic_half_length(burgers):
    U = build_shock(burgers, 0.5, 0.3)
    assert max(U.residual_left, U.residual_right) <= 1e-7


def test_detect_on_cell_samples(separable):
    cell = solve_cell_by_mean(separable, 0.4)
    other = solve_cell_by_mean(separable, 1.4)
    x = np.linspace(-5, 5, 641)
    u = cell(x)
    for end in ("left", "right"):
        q, r = detect_asymptotic_state(x, u, [other, cell], end=end)
        assert q == pytest.approx(cell.p) and r < 1e-12
    with pytest.raises(AsymptoteUnresolved) as info:
        detect_asymptotic_state(x, u + 1e-3, [cell], end="right")
    assert info.value.q == pytest.approx(cell.p)
    with pytest.raises(ValueError):
        detect_asymptotic_state(x[300:340], u[300:340], [cell])


def test_sign_check(burgers, burgers_family):
    left, right = burgers_family.v_plus, burgers_family.v_minus
    res = end_state_sign_check(burgers, left, right)
    assert res["abar_left"] == pytest.approx(1.0) and res["abar_right"] == pytest.approx(-1.0)
    assert res["admissible"]
    assert not end_state_sign_check(burgers, right, left)["admissible"]


def test_sign_check_strict_for_convex(separable):
    fam = ShockFamily(separable, 4.0)
    res = end_state_sign_check(separable, fam.v_plus, fam.v_minus)
    assert res["abar_left"] > 0 > res["abar_right"]


def test_rate_matches_linearised_tail(burgers, burgers_shock, burgers_family):
    rate = estimate_exponential_rate(burgers_shock, burgers_family.v_minus, "right")
    abar_r = end_state_sign_check(burgers, burgers_family.v_plus,
                                  burgers_family.v_minus)["abar_right"]
    for a in np.linspace(0.05, 0.99, 12) * (-abar_r):
        assert rate >= 0.9 * a
    assert end_monotonicity(burgers_shock, "right")


def test_rate_unresolved_for_cell(burgers_shock, burgers_family):
    # a profile that coincides with its end state has nothing to fit
    flat = burgers_shock.__class__(**{**burgers_shock.__dict__,
                                      "values": np.full_like(burgers_shock.values, -1.0)})
    with pytest.raises(RateUnresolved):
        estimate_exponential_rate(flat, burgers_family.v_minus, "right")


def test_difference_mass(burgers_shock):
    assert shock_difference_mass(burgers_shock, burgers_shock)["integral"] == 0.0
    for k in (1, 2, 3):
        V = translate(burgers_shock, k)
        res = shock_difference_mass(V, burgers_shock, k=k)
        # int (tanh(b(x+k)) - tanh(b x)) dx = 2k, scaled by -p with p = 1
        assert res["integral"] == pytest.approx(-2.0 * k, abs=1e-6)
        assert res["within_bound"]


def test_difference_mass_requires_common_grid(burgers_family):
    U = burgers_family.build(0.0, 20.0)
    V = burgers_family.build(0.0, 25.0)
    with pytest.raises(ValueError):
        shock_difference_mass(U, V)


def test_select_recovers_member(burgers, burgers_family):
    x = np.linspace(-20, 20, 801)[:-1] + 0.025
    target = burgers_family.values(0.3, x, 21.0)
    V = select_zero_mass_shock(burgers, 0.5, x, target, family=burgers_family)
    assert V.xi0 == pytest.approx(0.3, abs=1e-9)


def test_select_with_bump(burgers, burgers_family):
    dx = 0.05
    x = -20 + (np.arange(800) + 0.5) * dx
    u0 = burgers_family.values(0.0, x, 21.0) + 0.3 * np.exp(-(x - 3) ** 2)
    V = select_zero_mass_shock(burgers, 0.5, x, u0, family=burgers_family)
    assert abs(np.sum(u0 - V(x)) * dx) < 1e-8
    assert V.xi0 > 0.0
    # quadrature oracle: the shift carries the bump mass, 2 * shift = 0.3 sqrt(pi)
    fine = np.linspace(-20, 20, 8001)
    assert simpson(V(fine) - burgers_family.values(0.0, fine, 21.0), x=fine) == \
        pytest.approx(0.3 * np.sqrt(np.pi), rel=1e-6)
    W = select_zero_mass_shock(burgers, 0.5, x, u0, family=burgers_family, bracket=(-0.5, 0.9))
    assert W.xi0 == pytest.approx(V.xi0, abs=1e-9)


def test_select_out_of_reach(burgers, burgers_family):
    x = -10 + (np.arange(400) + 0.5) * 0.05
    with pytest.raises(BracketFailure):
        select_zero_mass_shock(burgers, 0.5, x, np.full_like(x, 5.0), family=burgers_family)


def test_clamp_warns_for_burgers(burgers_family):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        burgers_family.build(0.0, 40.0)
    assert all(issubclass(w.category, (BandClampWarning, RuntimeWarning)) for w in caught)


def test_profile_csv(tmp_path, burgers_shock):
    path = tmp_path / "p.csv"
    burgers_shock.to_csv(path)
    assert path.read_text().splitlines()[0] == "x,u,v_lower,v_upper"
    s = burgers_shock.summary()
    assert {"alpha", "xi0", "q_left", "q_right"} <= set(s)
