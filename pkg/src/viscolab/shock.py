r"""
Standing viscous shocks
=======================

A standing shock at level ``alpha`` is a solution on the whole line of

.. math::  u'(x) = A(x, u(x)) - \alpha

connecting two periodic stationary states ``v(., q_l)`` and ``v(., q_r)`` with
``Abar(q_l) = Abar(q_r) = alpha``.  Starting strictly between ``v(0, p-)`` and
``v(0, p+)`` the trajectory stays in the band between the two periodic orbits,
so it can be integrated in both directions.

Profiles are parametrised by ``xi0 = u(0)``; larger ``xi0`` gives a pointwise
larger profile, which is what makes the mass-based shift selection a
one-dimensional monotone root find.
"""

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.optimize import brentq

from .cell import DEFAULT_TOL, find_rh_pairs, homogenized_flux_table, solve_cell_by_mean
from .errors import (AsymptoteUnresolved, BandClampWarning, BandEscape, BracketFailure,
                     NonconvergedODE, RateUnresolved, TailUnresolved)

SAMPLES_PER_PERIOD = 64


@dataclass(frozen=True)
class ShockTolerances:
    detect_tol: float = 1e-7
    sign_tol: float = 1e-10
    mass_rtol: float = 1e-8
    eps_clamp: float = 1e-12
    residual_tol: float = 1e-6
    rtol: float = 1e-12
    atol: float = 1e-14
    default_periods: int = 20
    max_periods: int = 200
    min_rate_periods: int = 5
    floor: float = 1e-10


DEFAULT_SHOCK_TOL = ShockTolerances()


@dataclass(frozen=True)
class ShockProfile:
    """A standing shock sampled on ``[-L, L]``.

    ``q_left``/``q_right`` are the detected asymptotic means with sup-distance
    residuals over the outermost full period; ``rate_left``/``rate_right``
    are per-unit-length exponential rates (0 when unresolved).
    """

    alpha: float
    xi0: float
    grid: np.ndarray
    values: np.ndarray
    q_left: float
    q_right: float
    residual_left: float
    residual_right: float
    rate_left: float
    rate_right: float
    p_minus: float
    p_plus: float
    lower: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)
    stationarity_residual: float = 0.0
    family: Optional["ShockFamily"] = field(default=None, repr=False, compare=False)
    _dense: Optional[Callable] = field(default=None, repr=False, compare=False)

    @property
    def half_length(self):
        return float(self.grid[-1])

    def __call__(self, x):
        """Evaluate the profile; outside ``[-L, L]`` the matched periodic state is used."""
        x = np.asarray(x, dtype=float)
        L = self.half_length
        inside = np.clip(x, -L, L)
        out = np.asarray(self._dense(inside), dtype=float) if self._dense is not None \
            else np.interp(inside, self.grid, self.values)
        if self.family is not None and (np.any(x < -L) or np.any(x > L)):
            left = self.family.cell(self.q_left)
            right = self.family.cell(self.q_right)
            out = np.where(x < -L, left(x), out)
            out = np.where(x > L, right(x), out)
        return out

    def summary(self):
        return {"alpha": self.alpha, "xi0": self.xi0, "half_length": self.half_length,
                "p_minus": self.p_minus, "p_plus": self.p_plus,
                "q_left": self.q_left, "q_right": self.q_right,
                "residual_left": self.residual_left, "residual_right": self.residual_right,
                "rate_left": self.rate_left, "rate_right": self.rate_right,
                "stationarity_residual": self.stationarity_residual}

    def to_csv(self, path):
        np.savetxt(path, np.column_stack([self.grid, self.values, self.lower, self.upper]),
                   delimiter=",", header="x,u,v_lower,v_upper", comments="", fmt="%.17g")


class ShockFamily:
    """All standing shocks of ``flux`` at one level ``alpha``.

    Finds the Rankine-Hugoniot roots of ``Abar = alpha`` (from ``table`` if
    given, otherwise from a table over ``p_range`` widened up to three times),
    solves their cells once and builds profiles for any ``xi0`` in the band.
    """

    def __init__(self, flux, alpha, table=None, p_range=(-5.0, 5.0), n_points=41,
                 cell_tol=DEFAULT_TOL, tol=DEFAULT_SHOCK_TOL):
        self.flux = flux
        self.alpha = float(alpha)
        self.cell_tol = cell_tol
        self.tol = tol
        roots = find_rh_pairs(table, alpha) if table is not None else []
        lo, hi = p_range
        for _ in range(4):
            if len(roots) >= 2:
                break
            table = homogenized_flux_table(flux, lo, hi, n_points, cell_tol)
            roots = find_rh_pairs(table, alpha)
            lo, hi = 2 * lo, 2 * hi
        if len(roots) < 2:
            raise BracketFailure(f"level alpha={alpha} has fewer than two roots of Abar "
                                 f"in [{lo / 2}, {hi / 2}]", interval=(lo / 2, hi / 2))
        self.table = table
        self.roots = roots
        self._cells = {}
        self.p_minus, self.p_plus = roots[0], roots[-1]
        self.v_minus = self.cell(self.p_minus)
        self.v_plus = self.cell(self.p_plus)

    def cell(self, p):
        key = float(p)
        if key not in self._cells:
            self._cells[key] = solve_cell_by_mean(self.flux, key, self.cell_tol,
                                                  xi_guess=self.table.xi_guess(key))
        return self._cells[key]

    @property
    def candidates(self):
        return [self.cell(q) for q in self.roots]

    @property
    def xi_range(self):
        return float(self.v_minus(0.0)), float(self.v_plus(0.0))

    def integrate(self, xi0, L):
        """Dense solution of the profile ODE on ``[-L, L]``."""
        lo, hi = self.xi_range
        if not lo < xi0 < hi:
            raise ValueError(f"xi0={xi0} must lie strictly inside ({lo}, {hi})")

        def rhs(x, u):
            return [float(self.flux.eval(x, u[0])) - self.alpha]

        branches = []
        for end in (L, -L):
            sol = solve_ivp(rhs, (0.0, end), [xi0], method="DOP853", rtol=self.tol.rtol,
                            atol=self.tol.atol, dense_output=True)
            if sol.status != 0:
                raise NonconvergedODE(f"shock integration failed: {sol.message}")
            branches.append(sol.sol)
        fwd, bwd = branches

        def dense(x):
            x = np.asarray(x, dtype=float)
            return np.where(x >= 0, fwd(np.maximum(x, 0.0))[0], bwd(np.minimum(x, 0.0))[0])
        return dense

    def values(self, xi0, x, L=None):
        """Profile through ``xi0`` evaluated at positions ``x`` (no diagnostics)."""
        x = np.asarray(x, dtype=float)
        if L is None:
            L = float(np.max(np.abs(x))) + 1.0
        return self.integrate(xi0, L)(x)

    def build(self, xi0, L=None):
        """Build and diagnose the profile through ``xi0``.

        With ``L=None`` the half-length starts at ``default_periods`` and is
        doubled until both ends are matched within ``detect_tol`` or
        ``max_periods`` is reached.
        """
        tol = self.tol
        if L is not None:
            return self._build(xi0, float(L), strict=True)
        L = float(tol.default_periods)
        while True:
            prof = self._build(xi0, L, strict=False)
            ok = max(prof.residual_left, prof.residual_right) <= tol.detect_tol
            if ok or L >= tol.max_periods:
                if not ok:
                    warnings.warn(f"shock ends unresolved at L={L}: residuals "
                                  f"{prof.residual_left:.2e}, {prof.residual_right:.2e}",
                                  RuntimeWarning, stacklevel=2)
                return prof
            L = min(2 * L, float(tol.max_periods))

    def _build(self, xi0, L, strict):
        tol = self.tol
        n = int(round(2 * L * SAMPLES_PER_PERIOD)) + 1
        x = np.linspace(-L, L, n)
        dense = self.integrate(float(xi0), L)
        u = np.asarray(dense(x), dtype=float)
        lower = np.asarray(self.v_minus(x), dtype=float)
        upper = np.asarray(self.v_plus(x), dtype=float)
        # band edges and profile are dense ODE interpolants and the edges close
        # their period only to the cell tolerance; both errors set a floor
        edge_err = max(c.period_error + c.mean_error for c in (self.v_minus, self.v_plus))
        eps = max(tol.eps_clamp, 10 * max(tol.rtol, self.cell_tol.rtol, edge_err))
        u = _clamp_to_band(u, lower, upper, eps)

        # fine stencil on the dense solution: kinks of C^2 fluxes spoil coarse differences
        h = (x[1] - x[0]) / 8
        xi = x[2:-2]
        s = [np.asarray(dense(xi + k * h), dtype=float) for k in (-2, -1, 1, 2)]
        du = (s[0] - 8 * s[1] + 8 * s[2] - s[3]) / (12 * h)
        stat = float(np.max(np.abs(-du + self.flux.eval(xi, dense(xi)) - self.alpha)))

        cands = self.candidates
        ends = {}
        for end in ("left", "right"):
            try:
                q, res = detect_asymptotic_state(x, u, cands, tol.detect_tol, end)
            except AsymptoteUnresolved as err:
                if strict:
                    warnings.warn(str(err), RuntimeWarning, stacklevel=3)
                q, res = err.q, err.residual
            try:
                rate = _rate_from_samples(x, u, self.cell(q), end, tol)
            except RateUnresolved:
                rate = 0.0
            ends[end] = (q, res, rate)

        return ShockProfile(alpha=self.alpha, xi0=float(xi0), grid=x, values=u,
                            q_left=ends["left"][0], q_right=ends["right"][0],
                            residual_left=ends["left"][1], residual_right=ends["right"][1],
                            rate_left=ends["left"][2], rate_right=ends["right"][2],
                            p_minus=self.p_minus, p_plus=self.p_plus, lower=lower, upper=upper,
                            stationarity_residual=stat, family=self, _dense=dense)


def _clamp_to_band(u, lower, upper, eps):
    scale = 1.0 + np.maximum(np.abs(lower), np.abs(upper))
    excess = np.maximum(lower - u, u - upper)
    if np.any(excess > eps * scale):
        k = int(np.argmax(excess / scale))
        raise BandEscape(f"profile left the band by {excess[k]:.3e} at sample {k}")
    if np.any(excess > 0):
        warnings.warn(f"clamped {int(np.sum(excess > 0))} samples by at most "
                      f"{float(excess.max()):.1e}", BandClampWarning, stacklevel=3)
        u = np.clip(u, lower, upper)
    return u


def build_shock(flux, alpha, xi0, L=None, tol=DEFAULT_SHOCK_TOL, family=None, **family_kw):
    """Build the standing shock through ``u(0) = xi0`` at level ``alpha``.

    Parameters
    ----------
    flux : FluxModel
    alpha : float
        Flux constant; must admit two roots of ``Abar = alpha``.
    xi0 : float
        Must satisfy ``v(0, p-) < xi0 < v(0, p+)``.
    L : float, optional
        Half-length in periods.  ``None`` selects it automatically.
    family : ShockFamily, optional
        Reuse precomputed cells for the same ``alpha``.
    """
    if family is None:
        family = ShockFamily(flux, alpha, tol=tol, **family_kw)
    return family.build(xi0, L)


def translate(profile, k):
    """Integer translate ``x -> U(x + k)``, rebuilt on the same grid."""
    k = int(k)
    fam = profile.family
    return fam.build(float(profile(np.array(float(k)))), profile.half_length)


def _period_distances(x, u, cell, end):
    """Per-period sup-distance to ``cell``, ordered from the centre outwards."""
    L = x[-1]
    n_periods = int(np.floor(L + 1e-9))
    d = np.abs(u - cell(x))
    out = []
    for k in range(n_periods):
        if end == "right":
            mask = (x >= k - 1e-9) & (x <= k + 1 + 1e-9)
        else:
            mask = (x <= -k + 1e-9) & (x >= -k - 1 - 1e-9)
        out.append(float(d[mask].max()))
    return np.array(out)


def detect_asymptotic_state(x, u, candidates, detect_tol=DEFAULT_SHOCK_TOL.detect_tol, end="right"):
    """Match the outermost full period of samples to the nearest periodic state.

    Parameters
    ----------
    x, u : ndarray
        Samples covering at least three whole periods on the requested side.
    candidates : list of CellSolution
    end : {"left", "right"}

    Returns
    -------
    q : float
        Mean of the best-matching candidate.
    residual : float
        Its sup-distance over the last period.

    Raises
    ------
    AsymptoteUnresolved
        The best residual exceeds ``detect_tol``; the exception carries the
        best ``q`` and ``residual``.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    side = x >= 0 if end == "right" else x <= 0
    if np.ptp(x[side]) < 3.0 - 1e-9:
        raise ValueError("need at least three whole periods of samples")
    if end == "right":
        mask = x >= x[-1] - 1.0
    else:
        mask = x <= x[0] + 1.0
    res = [float(np.max(np.abs(u[mask] - c(x[mask])))) for c in candidates]
    k = int(np.argmin(res))
    q, r = float(candidates[k].p), res[k]
    if r > detect_tol:
        err = AsymptoteUnresolved(f"{end} end: best residual {r:.3e} exceeds {detect_tol:.1e}",
                                  residual=r)
        err.q = q
        raise err
    return q, r


def end_monotonicity(profile, end="right", n_last=3):
    """Whether the per-period sup-distances are non-increasing over the last periods."""
    fam = profile.family
    q = profile.q_right if end == "right" else profile.q_left
    d = _period_distances(profile.grid, profile.values, fam.cell(q), end)[-(n_last + 1):]
    floor = DEFAULT_SHOCK_TOL.floor * (1 + abs(q))
    return bool(np.all(np.diff(d) <= floor))


def end_state_sign_check(flux, cell_left, cell_right, sign_tol=DEFAULT_SHOCK_TOL.sign_tol):
    """Sign conditions on the period-averaged linearisation at both ends."""
    abar_l = float(np.mean(flux.d_u(cell_left.grid, cell_left.values)))
    abar_r = float(np.mean(flux.d_u(cell_right.grid, cell_right.values)))
    return {"abar_left": abar_l, "abar_right": abar_r,
            "admissible": bool(abar_l >= -sign_tol and abar_r <= sign_tol)}


def _rate_from_samples(x, u, cell, end, tol):
    d = _period_distances(x, u, cell, end)
    floor = tol.floor * (1.0 + float(np.max(np.abs(cell.values))))
    above = d > floor
    n_ok = int(np.argmin(above)) if not above.all() else d.size
    d = d[:n_ok]
    if n_ok == 0:
        raise RateUnresolved("residuals at floor from the first period", lower_bound=0.0)
    start = int(np.argmax(d < 1e-2 * d[0])) if np.any(d < 1e-2 * d[0]) else n_ok
    seg = d[start:]
    if seg.size < tol.min_rate_periods:
        lb = float(np.log(d[0] / max(d[-1], floor)) / max(n_ok, 1)) if n_ok > 1 else 0.0
        raise RateUnresolved(f"only {seg.size} periods above the floor {floor:.1e}",
                             lower_bound=max(lb, 0.0))
    k = np.arange(start, n_ok)
    slope = np.polyfit(k, np.log(seg), 1)[0]
    return float(max(-slope, 0.0))


def estimate_exponential_rate(profile, cell, end="right", tol=DEFAULT_SHOCK_TOL):
    """Exponential decay rate of ``|u - v(., q)|`` towards one end.

    Least-squares slope of the log per-period sup-distance against period
    index, using periods after the distance has dropped by two decades and
    before it reaches the integration floor.

    Raises
    ------
    RateUnresolved
        Fewer than ``min_rate_periods`` usable periods; carries a lower bound.
    """
    return _rate_from_samples(profile.grid, profile.values, cell, end, tol)


def shock_difference_mass(U, V, tol=DEFAULT_SHOCK_TOL, k=None):
    """Integral of ``U - V`` over the line.

    Simpson's rule on ``[-L, L]`` plus a geometric tail correction per end
    from the fitted exponential rates.  If ``V`` is the integer translate of
    ``U`` by ``k``, pass ``k`` to also get the bound ``2 |k| ||U||_inf``
    (checked with a relative slack of 1e-9, since Burgers attains it).

    Returns
    -------
    dict with ``integral``, ``interior``, ``tails`` and (if ``k``) ``bound``
    and ``within_bound``.
    """
    if U.alpha != V.alpha:
        raise ValueError("profiles must share alpha")
    if U.grid.shape != V.grid.shape or np.max(np.abs(U.grid - V.grid)) > 0:
        raise ValueError("profiles must share a grid")
    x = U.grid
    diff = U.values - V.values
    interior = float(simpson(diff, x=x))
    spp = int(round(1.0 / (x[1] - x[0])))
    tails = []
    for end, rate in (("left", max(U.rate_left, V.rate_left)),
                      ("right", max(U.rate_right, V.rate_right))):
        seg = slice(0, spp + 1) if end == "left" else slice(-spp - 1, None)
        last = float(simpson(diff[seg], x=x[seg]))
        scale = 1e-12 * (1.0 + float(np.max(np.abs(U.values))))
        if abs(last) <= scale:
            tails.append(0.0)
            continue
        if rate <= 0:
            raise TailUnresolved(f"{end} tail mass {last:.2e} but no decay rate was resolved")
        r = np.exp(-rate)
        tails.append(last * r / (1.0 - r))
    out = {"integral": interior + sum(tails), "interior": interior, "tails": tails}
    if k is not None:
        # sup over the whole line includes the asymptotic periodic states
        sup = max(float(np.max(np.abs(U.values))), float(np.max(np.abs(U.lower))),
                  float(np.max(np.abs(U.upper))))
        bound = 2 * abs(k) * sup
        out["bound"] = bound
        out["within_bound"] = bool(abs(out["integral"]) <= bound * (1 + 1e-9))
    return out


def select_zero_mass_shock(flux, alpha, x, u0, dx=None, tol=DEFAULT_SHOCK_TOL, family=None,
                           bracket=None, **family_kw):
    """Shock ``V`` with ``sum(u0 - V) dx = 0`` on the given line grid.

    ``F(xi) = sum(u0 - V_xi) dx`` is strictly decreasing in ``xi``; its root
    is found by Brent's method on ``(v(0, p-), v(0, p+))`` shrunk by a
    relative margin (or on ``bracket`` if given).

    Parameters
    ----------
    x, u0 : ndarray
        Cell centres and values of the initial datum.

    Raises
    ------
    BracketFailure
        ``F`` has no sign change; ``interval`` holds the reachable masses.
    """
    x = np.asarray(x, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    if dx is None:
        dx = float(x[1] - x[0])
    if family is None:
        family = ShockFamily(flux, alpha, tol=tol, **family_kw)
    L = float(np.ceil(np.max(np.abs(x)))) + 1.0
    mass_tol = tol.mass_rtol * (1.0 + float(np.sum(np.abs(u0)) * dx))

    def F(xi):
        return float(np.sum(u0 - family.values(xi, x, L)) * dx)

    lo, hi = bracket if bracket is not None else family.xi_range
    delta = 1e-9 * (hi - lo)
    lo, hi = lo + delta, hi - delta
    f_lo, f_hi = F(lo), F(hi)
    if not f_lo >= 0 >= f_hi:
        raise BracketFailure(f"mass of u0 relative to shocks spans [{f_hi:.3e}, {f_lo:.3e}] "
                             f"on this grid and does not contain 0", interval=(f_hi, f_lo))
    xi = brentq(F, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
    if abs(F(xi)) > mass_tol:
        raise BracketFailure(f"mass defect {F(xi):.2e} above {mass_tol:.1e} after root find",
                             interval=(lo, hi))
    return family.build(xi, L)
