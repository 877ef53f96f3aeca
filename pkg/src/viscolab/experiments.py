"""
Experiment catalog
==================

Every entry maps a config ``[[experiments]]`` table to a library call and
returns an :class:`~viscolab.stability.ExperimentReport`.  Entries carry a
parameter schema, defaults and a short statement of the result they probe.
"""

import numpy as np

from . import config as C
from .cell import (check_convexity, check_oleinik, find_rh_pairs, homogenized_flux_table,
                   invariant_measure, solve_cell_by_mean, _spectral_derivative)
from .evolve import Field
from .flux import as_periodic
from .shock import ShockFamily, end_state_sign_check, shock_difference_mass, translate
from .stability import (ExperimentReport, _verdict, build_bracketing_functions, coproperty_check,
                        distance_to_band, linear_drift_experiment, periodic_convergence,
                        shock_stability, uniform_bound_probe, weighted_entropy_series,
                        entropy_smallness_sweep)

_POS = {"type": "number", "exclusiveMinimum": 0}
_NUM = {"type": "number"}
_INT = {"type": "integer", "minimum": 1}


def _params(**props):
    return {"type": "object", "additionalProperties": False, "properties": props}


def _context(cfg, entry):
    flux = C.build_flux(cfg.get("flux"))
    grid = C.build_grid(entry.get("grid"), cfg.get("grid"))
    cell_tol, shock_tol, extras = C.tolerances(cfg.get("tolerances"))
    return flux, grid, cell_tol, shock_tol, extras


def _family(flux, params, cell_tol, shock_tol):
    return ShockFamily(flux, params["alpha"], p_range=(params["p_min"], params["p_max"]),
                       cell_tol=cell_tol, tol=shock_tol)


# ---------------------------------------------------------------------------


def run_cell_table(cfg, entry, params, rng):
    flux, _, cell_tol, _, _ = _context(cfg, entry)
    table = homogenized_flux_table(flux, params["p_min"], params["p_max"], params["n_points"],
                                   cell_tol)
    conv = check_convexity(table, n_random=params["n_random"], seed=params["seed_offset"],
                           tol=params["convexity_tol"])
    rep = ExperimentReport("cell_table", parameters=dict(params, flux=flux.name))
    rep.results.update({"worst_violation": conv["worst_violation"],
                        "most_negative": conv["most_negative"],
                        "max_consistency_gap": float(np.max(table.consistency))})
    rep.verdicts.append(_verdict("flux_average_consistency", float(np.max(table.consistency)),
                                 10 * cell_tol.mean_tol))
    if flux.convex_in_u:
        rep.verdicts.append(_verdict("convexity", conv["worst_violation"], params["convexity_tol"]))
    else:
        rep.notes.append("flux not flagged convex in u; convexity reported only")
    if "alpha" in params:
        roots = find_rh_pairs(table, params["alpha"])
        rep.results["rh_roots"] = roots
        if len(roots) >= 2:
            ol = check_oleinik(table, roots[0], roots[-1], params["alpha"])
            rep.results["oleinik"] = ol
    rep.tables["abar"] = (("p", "alpha", "xi0"),
                          np.column_stack([table.p_samples, table.alpha_samples, table.xi_samples]))
    return rep


def run_invariant_measure(cfg, entry, params, rng):
    b = C._coeff(params["b"])
    meas = invariant_measure(b, params["n_grid"])
    bf, _ = as_periodic(b)
    resid = float(np.max(np.abs(-_spectral_derivative(meas.values) + bf(meas.grid) * meas.values
                                - meas.drift_constant)))
    rep = ExperimentReport("invariant_measure", parameters=dict(params))
    rep.results.update({"drift_constant": meas.drift_constant, "min": float(meas.values.min()),
                        "residual": resid})
    rep.verdicts += [_verdict("positive", float(meas.values.min()), 0.0, ">"),
                     _verdict("unit_mean", abs(float(np.mean(meas.values)) - 1.0), 1e-8),
                     _verdict("residual", resid, params["residual_tol"])]
    rep.tables["measure"] = (("y", "m"), np.column_stack([meas.grid, meas.values]))
    return rep


def run_shock_profile(cfg, entry, params, rng):
    flux, _, cell_tol, shock_tol, _ = _context(cfg, entry)
    fam = _family(flux, params, cell_tol, shock_tol)
    L = params["half_length"] or None
    U = fam.build(params["xi0"], L)
    sign = end_state_sign_check(flux, fam.cell(U.q_left), fam.cell(U.q_right), shock_tol.sign_tol)
    rep = ExperimentReport("shock_profile", parameters=dict(params, flux=flux.name))
    rep.results.update(U.summary())
    rep.results["sign_check"] = sign
    rep.verdicts += [
        _verdict("stationarity", U.stationarity_residual, shock_tol.residual_tol),
        _verdict("left_resolved", U.residual_left, shock_tol.detect_tol),
        _verdict("right_resolved", U.residual_right, shock_tol.detect_tol),
        _verdict("end_state_signs", float(sign["admissible"]), 1.0, ">=")]
    masses = []
    for k in params["translates"]:
        V = translate(U, k)
        r = shock_difference_mass(V, U, shock_tol, k=k)
        masses.append({"k": k, "integral": r["integral"], "bound": r["bound"]})
        rep.verdicts.append(_verdict(f"translate_bound_{k}", abs(r["integral"]), r["bound"] * (1 + 1e-9)))
    rep.results["translate_masses"] = masses
    rep.tables["profile"] = (("x", "u", "v_lower", "v_upper"),
                             np.column_stack([U.grid, U.values, U.lower, U.upper]))
    return rep


def _random_pairs(grid, n_pairs, amplitude, rng):
    x = grid.centers
    a, b = [], []
    for _ in range(n_pairs):
        base = C.initial_values({"kind": "random", "amplitude": amplitude, "modes": 6}, x, rng)
        base = base + 0.1 * amplitude * rng.normal(size=x.size)
        gap = np.abs(rng.normal(size=x.size)) * amplitude * rng.uniform(0.05, 1.0)
        a.append(Field(grid, base))
        b.append(Field(grid, base + gap))
    return a, b


def run_coproperty(cfg, entry, params, rng):
    flux, grid, _, _, _ = _context(cfg, entry)
    a, b = _random_pairs(grid, params["n_pairs"], params["amplitude"], rng)
    rep = coproperty_check(flux, a, b, params["t_end"], round_off=params["round_off"])
    rep.parameters["seed"] = params.get("_seed")
    return rep


def run_periodic_convergence(cfg, entry, params, rng):
    flux, grid, cell_tol, _, _ = _context(cfg, entry)
    u0 = Field(grid, C.initial_values(params["initial"], grid.centers, rng))
    return periodic_convergence(flux, u0, params["t_end"], transient=params.get("transient"),
                                target=params["target"], cell_tol=cell_tol,
                                label=params.get("description", ""))


def run_shock_stability(cfg, entry, params, rng):
    flux, grid, cell_tol, shock_tol, extras = _context(cfg, entry)
    if grid.kind != "line":
        raise C.ConfigError("shock_stability needs a line grid")
    fam = _family(flux, params, cell_tol, shock_tol)
    half = float(np.ceil(max(abs(grid.x_left), abs(grid.x_right)))) + 1.0
    U = fam.build(params["xi0"], half)
    pert = C.initial_values(params["perturbation"], grid.centers, rng)
    return shock_stability(flux, U, grid, pert, params["t_end"], theta=extras["theta"],
                           n_alternatives=params["n_alternatives"],
                           mass_rtol=shock_tol.mass_rtol)


def run_bracketing(cfg, entry, params, rng):
    flux, grid, cell_tol, shock_tol, _ = _context(cfg, entry)
    fam = _family(flux, params, cell_tol, shock_tol)
    half = float(np.ceil(max(abs(grid.x_left), abs(grid.x_right)))) + 1.0
    U = fam.build(params["xi0"], half)
    x = grid.centers
    u0 = Field(grid, np.asarray(U(x)) + C.initial_values(params["perturbation"], x, rng))
    am, ap = build_bracketing_functions(u0, fam.v_minus, fam.v_plus)
    dx = grid.dx
    mp = float(np.sum(ap.values - fam.v_plus(x)) * dx)
    mm = float(np.sum(am.values - fam.v_minus(x)) * dx)
    tol = shock_tol.mass_rtol * (1 + float(np.sum(np.abs(u0.values)) * dx))
    rep = ExperimentReport("bracketing", parameters=dict(params, flux=flux.name))
    rep.results.update({"band_distance": distance_to_band(u0, fam.v_minus, fam.v_plus),
                        "mass_plus": mp, "mass_minus": mm})
    rep.verdicts += [_verdict("mass_plus", abs(mp), tol), _verdict("mass_minus", abs(mm), tol),
                     _verdict("ordering", float(max(np.max(am.values - u0.values),
                                                    np.max(u0.values - ap.values))), 0.0)]
    rep.tables["bracketing"] = (("x", "u0", "a_minus", "a_plus"),
                                np.column_stack([x, u0.values, am.values, ap.values]))
    return rep


def run_linear_drift(cfg, entry, params, rng):
    grid = C.build_grid(entry.get("grid"), cfg.get("grid"))
    _, _, extras = C.tolerances(cfg.get("tolerances"))
    w0 = Field(grid, C.initial_values(params["w0"], grid.centers, rng))
    return linear_drift_experiment(C._coeff(params["b"]), grid, w0, params["t_end"],
                                   drift_rtol=params["drift_rtol"],
                                   extrapolate=params["extrapolate"],
                                   max_dt=params.get("max_dt", np.inf),
                                   gamma_step=extras["gamma_step"])


def run_weighted_entropy(cfg, entry, params, rng):
    flux, grid, cell_tol, _, _ = _context(cfg, entry)
    cell = solve_cell_by_mean(flux, params["p"], cell_tol)
    w0 = Field(grid, C.initial_values(params["w0"], grid.centers, rng))
    rep = weighted_entropy_series(flux, cell, grid, w0, params["t_end"],
                                  transient=params["transient"], smallness=params["smallness"],
                                  growth_factor=params["growth_factor"])
    if params["sweep_amplitudes"]:
        sweep = entropy_smallness_sweep(flux, cell, grid, w0, params["sweep_amplitudes"],
                                        params["t_end"], transient=params["transient"])
        rep.results["sweep"] = sweep
    return rep


def run_uniform_bound(cfg, entry, params, rng):
    flux, grid, _, _, _ = _context(cfg, entry)
    u0 = Field(grid, C.initial_values(params["initial"], grid.centers, rng))
    return uniform_bound_probe(flux, u0, params["t_end"], tol=params["tol"])


_SHOCK_PARAMS = {"alpha": _NUM, "xi0": _NUM, "p_min": _NUM, "p_max": _NUM}

CATALOG = {
    "cell_table": {
        "description": "Tabulate the homogenized flux, check convexity and Rankine-Hugoniot roots.",
        "targets": "effective flux of periodic stationary solutions is convex for convex fluxes",
        "params": _params(p_min=_NUM, p_max=_NUM, n_points={"type": "integer", "minimum": 3},
                          alpha=_NUM, n_random={"type": "integer", "minimum": 0},
                          seed_offset={"type": "integer", "minimum": 0}, convexity_tol=_POS),
        "defaults": {"p_min": -2.0, "p_max": 2.0, "n_points": 21, "n_random": 100,
                     "seed_offset": 0, "convexity_tol": 1e-8},
        "runner": run_cell_table,
    },
    "invariant_measure": {
        "description": "Invariant probability density of the linearized cell operator.",
        "targets": "unique positive periodic solution of -m'' + (b m)' = 0 with unit mean",
        "params": _params(b=C._COEFF, n_grid={"type": "integer", "minimum": 8}, residual_tol=_POS),
        "defaults": {"b": [[0, 1.0, 0.0], [1, 0.5, 0.0]], "n_grid": 256, "residual_tol": 1e-6},
        "runner": run_invariant_measure,
    },
    "shock_profile": {
        "description": "Build a standing shock, detect its end states and tail rates.",
        "targets": "standing shocks connect two periodic states at exponential rates",
        "params": _params(**_SHOCK_PARAMS, half_length={"type": "number", "minimum": 0},
                          translates={"type": "array", "items": {"type": "integer"}}),
        "defaults": {"alpha": 0.5, "xi0": 0.0, "p_min": -5.0, "p_max": 5.0, "half_length": 0.0,
                     "translates": [1, 2, 3]},
        "runner": run_shock_profile,
    },
    "coproperty_check": {
        "description": "Comparison, L1 contraction and conservation on random ordered pairs.",
        "targets": "the solution semigroup is order preserving, L1 contracting and conservative",
        "params": _params(n_pairs=_INT, t_end=_POS, amplitude=_POS, round_off=_POS),
        "defaults": {"n_pairs": 10, "t_end": 1.0, "amplitude": 1.0, "round_off": 1e-12},
        "runner": run_coproperty,
    },
    "periodic_convergence": {
        "description": "Long-time convergence on the torus to the stationary state with the same mean.",
        "targets": "solutions on the torus converge to v(., <u0>) in sup norm",
        "params": _params(initial=C.INITIAL_SCHEMA, t_end=_POS, target=_POS, transient=_POS,
                          description={"type": "string"}),
        "defaults": {"initial": {"kind": "sine", "mean": 0.5, "amplitude": 1.0}, "t_end": 50.0,
                     "target": 1e-3},
        "runner": run_periodic_convergence,
    },
    "shock_stability": {
        "description": "L1 stability of a standing shock with mass-based shift selection.",
        "targets": "perturbed shocks converge in L1 to the shifted shock carrying the same mass",
        "params": _params(**_SHOCK_PARAMS, perturbation=C.INITIAL_SCHEMA, t_end=_POS,
                          n_alternatives=_INT),
        "defaults": {"alpha": 0.5, "xi0": 0.0, "p_min": -5.0, "p_max": 5.0,
                     "perturbation": {"kind": "gaussian", "amplitude": 0.3, "center": 3.0,
                                      "width": 1.0},
                     "t_end": 200.0, "n_alternatives": 5},
        "runner": run_shock_stability,
    },
    "bracketing": {
        "description": "Distance to the band between end states and mass-matched bracketing data.",
        "targets": "data outside the band can be bracketed by band data with the same excess mass",
        "params": _params(**_SHOCK_PARAMS, perturbation=C.INITIAL_SCHEMA),
        "defaults": {"alpha": 0.5, "xi0": 0.0, "p_min": -5.0, "p_max": 5.0,
                     "perturbation": {"kind": "gaussian", "amplitude": 1.0, "center": -5.0,
                                      "width": 1.0}},
        "runner": run_bracketing,
    },
    "linear_drift": {
        "description": "Centre-of-mass drift and L1 decay for a linear heterogeneous flux.",
        "targets": "mass drifts at the homogenized speed <b m> and spreads diffusively",
        "params": _params(b=C._COEFF, w0=C.INITIAL_SCHEMA, t_end=_POS, drift_rtol=_POS,
                          extrapolate={"type": "boolean"}, max_dt=_POS),
        "defaults": {"b": [[0, 1.0, 0.0], [1, 0.5, 0.0]],
                     "w0": {"kind": "dipole", "amplitude": 1.0, "separation": 1.0, "width": 0.3},
                     "t_end": 20.0, "drift_rtol": 0.05, "extrapolate": True},
        "runner": run_linear_drift,
    },
    "weighted_entropy": {
        "description": "Weighted L2 entropy and t^(1/4) L2 decay of small perturbations.",
        "targets": "small perturbations of periodic states decay like t^(-1/4) in L2",
        "params": _params(p=_NUM, w0=C.INITIAL_SCHEMA, t_end=_POS, transient=_POS, smallness=_POS,
                          growth_factor=_POS,
                          sweep_amplitudes={"type": "array", "items": _POS}),
        "defaults": {"p": 0.0, "w0": {"kind": "odd_gaussian", "amplitude": 0.02, "width": 1.0},
                     "t_end": 20.0, "transient": 1.0, "smallness": 0.1, "growth_factor": 2.0,
                     "sweep_amplitudes": []},
        "runner": run_weighted_entropy,
    },
    "uniform_bound": {
        "description": "Running maximum of the sup norm along a long run.",
        "targets": "solutions stay uniformly bounded in time",
        "params": _params(initial=C.INITIAL_SCHEMA, t_end=_POS, tol=_POS),
        "defaults": {"initial": {"kind": "sine", "mean": 0.0, "amplitude": 5.0}, "t_end": 100.0,
                     "tol": 1e-4},
        "runner": run_uniform_bound,
    },
}


def list_experiments():
    """Catalog entries: name, description, targeted result and parameter schema."""
    return [{"name": name, "description": e["description"], "targets": e["targets"],
             "params": e["params"], "defaults": e["defaults"]} for name, e in CATALOG.items()]


def run_entry(cfg, entry, seed, index):
    """Run one experiment entry with a per-entry seeded generator."""
    params = C.merged_params(entry, CATALOG)
    rng = np.random.default_rng([seed, index])
    params["_seed"] = [seed, index]
    rep = CATALOG[entry["name"]]["runner"](cfg, entry, params, rng)
    rep.parameters.setdefault("seed", [seed, index])
    return rep
