r"""
Periodic stationary solutions and the homogenized flux
======================================================

In one space dimension the periodic stationary problem

.. math::  -v'' + (A(y, v))' = 0,\qquad \langle v \rangle = p

integrates once to the first-order equation ``v' = A(y, v) - alpha`` where the
constant ``alpha`` is the homogenized flux ``Abar(p)``.  Periodic orbits of that
ODE are found by shooting over one period: for a fixed value ``xi = v(0)`` the
period map ``alpha -> v(1)`` is strictly decreasing, and for a fixed mean the
map ``xi -> <v>`` is strictly increasing, so both unknowns can be bracketed.

The fast path solves for ``(xi, alpha)`` jointly by Newton's method using the
variational equations; the bracketed nested solve is the fallback whenever
Newton leaves the basin.
"""

import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq
from scipy.special import logsumexp

from .errors import BracketFailure, NonconvergedODE, QuadratureUnderflow
from .flux import as_periodic


@dataclass(frozen=True)
class CellTolerances:
    """Solver settings for cell problems.

    ``method`` is a :func:`scipy.integrate.solve_ivp` method name or ``"RK4"``
    for fixed-step integration with ``rk4_steps`` steps per period.
    """

    rtol: float = 1e-12
    atol: float = 1e-12
    period_tol: float = 1e-9
    mean_tol: float = 1e-8
    residual_tol: float = 1e-6
    n_grid: int = 256
    max_expansions: int = 10
    method: str = "DOP853"
    rk4_steps: int = 4096


DEFAULT_TOL = CellTolerances()


@dataclass(frozen=True)
class CellSolution:
    """One periodic stationary solution ``v(., p)`` sampled on ``[0, 1)``.

    ``residual`` is the sup over the grid of ``|-v' + A(y, v) - alpha|`` with
    ``v'`` obtained by spectral differentiation of the samples; it is an
    independent check of the shooting solution.
    """

    p: float
    alpha: float
    xi0: float
    grid: np.ndarray
    values: np.ndarray
    residual: float
    period_error: float = 0.0
    mean_error: float = 0.0
    _dense: Optional[Callable] = field(default=None, repr=False, compare=False)

    def __call__(self, y):
        """Evaluate the periodic extension at arbitrary positions."""
        y = np.asarray(y, dtype=float)
        if self._dense is None:
            return np.interp(np.mod(y, 1.0), np.append(self.grid, 1.0),
                             np.append(self.values, self.values[0]))
        flat = np.mod(y, 1.0).ravel()
        return np.asarray(self._dense(flat), dtype=float).reshape(y.shape)

    def to_csv(self, path):
        np.savetxt(path, np.column_stack([self.grid, self.values]), delimiter=",",
                   header="y,v", comments="", fmt="%.17g")


@dataclass(frozen=True)
class HomogenizedFluxTable:
    """Sampled graph ``p -> Abar(p)`` on a uniform grid of means."""

    p_samples: np.ndarray
    alpha_samples: np.ndarray
    xi_samples: np.ndarray
    flux: object = field(repr=False, compare=False)
    tol: CellTolerances = DEFAULT_TOL
    consistency: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if np.any(np.diff(self.p_samples) <= 0):
            raise ValueError("p_samples must be strictly increasing")

    def xi_guess(self, p):
        return float(np.interp(p, self.p_samples, self.xi_samples))

    def solve(self, p):
        """Fresh cell solve at ``p`` warm-started from the table."""
        return solve_cell_by_mean(self.flux, p, self.tol, xi_guess=self.xi_guess(p))

    def alpha_at(self, p):
        return self.solve(p).alpha

    def to_csv(self, path):
        np.savetxt(path, np.column_stack([self.p_samples, self.alpha_samples, self.xi_samples]),
                   delimiter=",", header="p,alpha,xi0", comments="", fmt="%.17g")


@dataclass(frozen=True)
class InvariantMeasure:
    """Positive periodic solution of ``-m'' + (b m)' = 0`` with unit mean.

    ``drift_constant`` is the constant ``c0`` in ``-m' + b m = c0``; it equals
    ``<b m>``.
    """

    grid: np.ndarray
    values: np.ndarray
    drift_constant: float

    def __call__(self, y):
        y = np.mod(np.asarray(y, dtype=float), 1.0)
        return np.interp(y, np.append(self.grid, 1.0), np.append(self.values, self.values[0]))


# ---------------------------------------------------------------------------
# shooting over one period


@dataclass
class _Shot:
    v1: float = np.nan
    integral: float = np.nan
    jac: Optional[np.ndarray] = None
    blowup: int = 0
    dense: Optional[Callable] = None


def _blowup_bound(xi):
    return 1e3 * (1.0 + abs(xi))


def _rk4(rhs, z0, n_steps, stop):
    h = 1.0 / n_steps
    z = np.array(z0, dtype=float)
    ys = np.linspace(0.0, 1.0, n_steps + 1)
    zs = np.empty((n_steps + 1, z.size))
    ds = np.empty_like(zs)
    zs[0] = z
    for i in range(n_steps):
        y = ys[i]
        k1 = np.asarray(rhs(y, z))
        ds[i] = k1
        k2 = np.asarray(rhs(y + h / 2, z + h / 2 * k1))
        k3 = np.asarray(rhs(y + h / 2, z + h / 2 * k2))
        k4 = np.asarray(rhs(y + h, z + h * k3))
        z = z + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if stop(z):
            return None, None, None
        zs[i + 1] = z
    ds[-1] = rhs(1.0, z)
    return ys, zs, ds


def _shoot(flux, xi, alpha, tol, variational=False, dense=False):
    """Integrate ``v' = A(y, v) - alpha`` over one period from ``v(0) = xi``.

    Also integrates ``int v`` and, optionally, the sensitivities with respect
    to ``xi`` and ``alpha``.  Trajectories leaving a large neighbourhood of
    ``xi`` are stopped and reported through ``blowup = +-1``.
    """
    bound = _blowup_bound(xi)

    def rhs(y, z):
        v = z[0]
        f = float(flux.eval(y, v)) - alpha
        if not variational:
            return [f, v]
        a = float(flux.d_u(y, v))
        return [f, v, a * z[2], a * z[3] - 1.0, z[2], z[3]]

    z0 = [xi, 0.0, 1.0, 0.0, 0.0, 0.0] if variational else [xi, 0.0]

    if tol.method == "RK4":
        ys, zs, ds = _rk4(rhs, z0, tol.rk4_steps,
                          lambda z: not np.isfinite(z[0]) or abs(z[0] - xi) > bound)
        if ys is None:
            return _Shot(blowup=1)  # sign resolved below
        zf = zs[-1]
        interp = CubicHermiteSpline(ys, zs[:, 0], ds[:, 0]) if dense else None
    else:
        def escape(y, z):
            return bound - abs(z[0] - xi)
        escape.terminal = True

        sol = solve_ivp(rhs, (0.0, 1.0), z0, method=tol.method, rtol=tol.rtol,
                        atol=tol.atol, events=escape, dense_output=dense)
        if sol.status == 1:
            return _Shot(blowup=int(np.sign(sol.y[0, -1] - xi)) or 1)
        if sol.status < 0:
            raise NonconvergedODE(f"period integration failed: {sol.message}")
        zf = sol.y[:, -1]
        interp = (lambda y, s=sol.sol: s(y)[0]) if dense else None

    shot = _Shot(v1=float(zf[0]), integral=float(zf[1]), dense=interp)
    if variational:
        shot.jac = np.array([[zf[2] - 1.0, zf[3]], [zf[4], zf[5]]])
    return shot


def _shoot_rk4_sign(flux, xi, alpha, tol):
    # RK4 blow-up detection loses the sign; recover it from a coarse step.
    return 1 if float(flux.eval(0.0, xi)) - alpha > 0 else -1


def _period_defect(flux, xi, alpha, tol):
    shot = _shoot(flux, xi, alpha, tol)
    if shot.blowup:
        sign = shot.blowup if tol.method != "RK4" else _shoot_rk4_sign(flux, xi, alpha, tol)
        return sign * 1e6 * (1.0 + abs(xi))
    return shot.v1 - xi


def _spectral_derivative(values):
    n = values.size
    vh = np.fft.rfft(values)
    k = np.arange(vh.size)
    dvh = 2j * np.pi * k * vh
    if n % 2 == 0:
        dvh[-1] = 0.0
    return np.fft.irfft(dvh, n)


def _build_solution(flux, xi, alpha, tol, target=None):
    grid = np.arange(tol.n_grid) / tol.n_grid
    if flux.homogeneous_in_y:
        values = np.full(tol.n_grid, float(xi))
        a = float(flux.eval(0.0, xi))
        return CellSolution(p=float(xi), alpha=a, xi0=float(xi), grid=grid, values=values,
                            residual=0.0, mean_error=0.0 if target is None else abs(xi - target),
                            _dense=lambda y, c=float(xi): np.full(np.shape(y), c))
    shot = _shoot(flux, xi, alpha, tol, dense=True)
    if shot.blowup:
        raise NonconvergedODE(f"cell trajectory escaped for xi={xi}, alpha={alpha}")
    values = np.asarray(shot.dense(grid), dtype=float)
    dv = _spectral_derivative(values)
    residual = float(np.max(np.abs(-dv + flux.eval(grid, values) - alpha)))
    p = shot.integral
    period_error = abs(shot.v1 - xi)
    if period_error > tol.period_tol:
        raise NonconvergedODE(f"periodicity defect {period_error:.3e} exceeds {tol.period_tol:.1e}")
    sol = CellSolution(p=p, alpha=float(alpha), xi0=float(xi), grid=grid, values=values,
                       residual=residual, period_error=period_error,
                       mean_error=0.0 if target is None else abs(p - target), _dense=shot.dense)
    if residual > tol.residual_tol:
        warnings.warn(f"cell residual {residual:.2e} above {tol.residual_tol:.1e} "
                      f"(n_grid={tol.n_grid} may be too coarse)", RuntimeWarning, stacklevel=3)
    return sol


def _alpha_for_offset(flux, xi, tol):
    ys = np.linspace(0.0, 1.0, 257)
    a = flux.eval(ys, np.full_like(ys, xi))
    lo, hi = float(np.min(a)) - 1.0, float(np.max(a)) + 1.0
    width = hi - lo
    g_lo = _period_defect(flux, xi, lo, tol)
    g_hi = _period_defect(flux, xi, hi, tol)
    expansions = 0
    while not (g_lo > 0 > g_hi):
        if expansions >= tol.max_expansions:
            raise BracketFailure(f"no sign change of the period defect for xi={xi} "
                                 f"in alpha range [{lo}, {hi}]", interval=(lo, hi))
        if g_lo <= 0:
            lo -= width
            g_lo = _period_defect(flux, xi, lo, tol)
        if g_hi >= 0:
            hi += width
            g_hi = _period_defect(flux, xi, hi, tol)
        width *= 2.0
        expansions += 1
    return brentq(lambda al: _period_defect(flux, xi, al, tol), lo, hi,
                  xtol=1e-14, rtol=1e-14, maxiter=200)


def solve_cell_by_offset(flux, xi, tol=DEFAULT_TOL):
    """Periodic solution through ``v(0) = xi``.

    Brackets ``alpha`` starting from ``[min_y A(y, xi) - 1, max_y A(y, xi) + 1]``
    (doubled up to ``tol.max_expansions`` times) and refines with Brent's
    method on the period defect ``v(1) - xi``.

    Raises
    ------
    BracketFailure
        No sign change was found.
    NonconvergedODE
        The integrator failed or the final periodicity defect is too large.
    """
    if flux.homogeneous_in_y:
        return _build_solution(flux, xi, None, tol)
    alpha = _alpha_for_offset(flux, float(xi), tol)
    return _build_solution(flux, float(xi), alpha, tol)


def _newton_cell(flux, p, xi, alpha, tol, maxiter=30):
    x = np.array([xi, alpha], dtype=float)
    shot = _shoot(flux, x[0], x[1], tol, variational=True)
    if shot.blowup:
        return None
    polished = False
    for _ in range(maxiter):
        r = np.array([shot.v1 - x[0], shot.integral - p])
        converged = abs(r[0]) <= 1e-2 * tol.period_tol and abs(r[1]) <= 1e-2 * tol.mean_tol
        if converged and polished:
            return x
        try:
            delta = np.linalg.solve(shot.jac, -r)
        except np.linalg.LinAlgError:
            return None
        step = 1.0
        for _ in range(12):
            trial = x + step * delta
            nxt = _shoot(flux, trial[0], trial[1], tol, variational=True)
            if not nxt.blowup:
                r_new = np.array([nxt.v1 - trial[0], nxt.integral - p])
                if converged or np.max(np.abs(r_new)) < np.max(np.abs(r)) or step < 1e-3:
                    break
            step *= 0.5
        else:
            return None
        if nxt.blowup:
            return None
        x, shot = trial, nxt
        polished = converged
    return None


def solve_cell_by_mean(flux, p, tol=DEFAULT_TOL, xi_guess=None):
    """Periodic solution with prescribed mean ``<v> = p``.

    Newton's method on ``(xi, alpha)`` is tried first; if it fails the map
    ``xi -> <v>`` (strictly increasing) is bracketed around ``p`` and solved
    by Brent's method with a nested offset solve.

    Raises
    ------
    BracketFailure
        The widened ``xi`` range never straddles ``p``.
    """
    p = float(p)
    if flux.homogeneous_in_y:
        return _build_solution(flux, p, None, tol, target=p)

    ys = np.arange(tol.n_grid) / tol.n_grid
    xi0 = p if xi_guess is None else float(xi_guess)
    alpha0 = float(np.mean(flux.eval(ys, np.full_like(ys, p))))
    if xi_guess is not None:
        # a warm start also knows roughly where alpha is
        try:
            alpha0 = _alpha_for_offset(flux, xi0, replace(tol, rtol=1e-8, atol=1e-8))
        except BracketFailure:
            pass
    x = _newton_cell(flux, p, xi0, alpha0, tol)
    if x is not None:
        sol = _build_solution(flux, x[0], x[1], tol, target=p)
        if sol.mean_error <= tol.mean_tol:
            return sol

    def mean_defect(xi):
        alpha = _alpha_for_offset(flux, xi, tol)
        return _shoot(flux, xi, alpha, tol).integral - p

    width = 1.0 + float(np.ptp(flux.eval(ys, np.full_like(ys, p))))
    lo, hi = xi0 - width, xi0 + width
    for _ in range(tol.max_expansions + 1):
        g_lo, g_hi = mean_defect(lo), mean_defect(hi)
        if g_lo <= 0 <= g_hi:
            break
        width *= 2.0
        lo, hi = xi0 - width, xi0 + width
    else:
        raise BracketFailure(f"xi range [{lo}, {hi}] does not straddle mean {p}", interval=(lo, hi))
    xi = brentq(mean_defect, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=200)
    alpha = _alpha_for_offset(flux, xi, tol)
    return _build_solution(flux, xi, alpha, tol, target=p)


def flux_average(flux, cell):
    """Discrete period average of ``A(y, v(y))`` along a cell solution."""
    return float(np.mean(flux.eval(cell.grid, cell.values)))


def homogenized_flux_table(flux, p_min, p_max, n_points, tol=DEFAULT_TOL):
    """Tabulate ``Abar`` on a uniform grid of means.

    Each entry is checked against the period average of the flux along its
    cell solution (``|Abar(p) - <A(., v)>| <= 10 mean_tol``).  Solver errors
    are re-raised with the failing ``p`` in the message and as ``err.p``.
    """
    if not p_min < p_max:
        raise ValueError("p_min must be smaller than p_max")
    if n_points < 3:
        raise ValueError("n_points must be at least 3")
    ps = np.linspace(p_min, p_max, n_points)
    alphas, xis, gaps = [], [], []
    guess = None
    for p in ps:
        try:
            cell = solve_cell_by_mean(flux, p, tol, xi_guess=guess)
        except Exception as err:
            err.p = float(p)
            err.args = (f"{err.args[0] if err.args else err} (at p={p})",) + err.args[1:]
            raise
        gap = abs(cell.alpha - flux_average(flux, cell))
        if gap > 10 * tol.mean_tol:
            raise NonconvergedODE(f"flux average inconsistent at p={p}: {gap:.2e}")
        alphas.append(cell.alpha)
        xis.append(cell.xi0)
        gaps.append(gap)
        guess = cell.xi0 + (ps[1] - ps[0])
    return HomogenizedFluxTable(p_samples=ps, alpha_samples=np.array(alphas),
                                xi_samples=np.array(xis), flux=flux, tol=tol,
                                consistency=np.array(gaps))


def find_rh_pairs(table, alpha):
    """All transversal roots of ``Abar(p) = alpha`` inside the table range.

    Sign changes between consecutive samples are refined by Brent's method
    with a fresh cell solve per evaluation.  Tangential contacts (no sign
    change) are not reported.
    """
    g = table.alpha_samples - alpha
    ps = table.p_samples
    roots = []
    for i in range(len(ps)):
        if g[i] == 0.0:
            left = g[i - 1] if i > 0 else -g[i + 1]
            right = g[i + 1] if i + 1 < len(ps) else -g[i - 1]
            if left * right < 0:
                roots.append(float(ps[i]))
            continue
        if i + 1 < len(ps) and g[i] * g[i + 1] < 0:
            roots.append(brentq(lambda p: table.alpha_at(p) - alpha, ps[i], ps[i + 1],
                                xtol=1e-13, rtol=1e-14, maxiter=200))
    return sorted(roots)


def check_oleinik(table, p_minus, p_plus, alpha, margin=0.0, n_samples=31):
    """Strict Oleinik test for the pair ``p_minus < p_plus`` at level ``alpha``.

    The gap at an interior ``p`` is ``|Abar(p) - alpha| / ((p - p_minus)(p_plus - p))``,
    which stays bounded away from zero near transversal roots and vanishes at
    any interior contact with ``alpha``.  It is sampled at ``n_samples`` evenly
    spaced fresh solves (the midpoint is included when ``n_samples`` is odd)
    and at the table entries inside the interval; ties go to the sample
    nearest the midpoint.  Returns ``{"satisfied", "min_gap", "argmin"}``.
    """
    if not p_minus < p_plus:
        raise ValueError("need p_minus < p_plus")
    ps = p_minus + (p_plus - p_minus) * np.arange(1, n_samples + 1) / (n_samples + 1)
    inside = (table.p_samples > p_minus) & (table.p_samples < p_plus)
    abar = np.array([table.alpha_at(p) for p in ps] + list(table.alpha_samples[inside]))
    ps = np.concatenate([ps, table.p_samples[inside]])
    gaps = np.abs(abar - alpha) / ((ps - p_minus) * (p_plus - ps))
    low = np.flatnonzero(gaps <= gaps.min() * (1 + 1e-9) + 1e-15)
    k = low[np.argmin(np.abs(ps[low] - 0.5 * (p_minus + p_plus)))]
    return {"satisfied": bool(gaps[k] > margin), "min_gap": float(gaps[k]),
            "argmin": float(ps[k])}


def check_convexity(table, n_random=100, seed=0, tol=1e-8):
    """Midpoint convexity on the table.

    Checks every consecutive triple and ``n_random`` random symmetric triples
    ``(p_i, p_(i+k), p_(i+2k))`` drawn from the uniform table.  Violation is
    ``Abar(mid) - (Abar(left) + Abar(right)) / 2``; the most positive value is
    the worst convexity violation and the most negative one measures
    curvature (zero for affine tables).
    """
    a = table.alpha_samples
    n = len(a)
    if n < 3:
        raise ValueError("table needs at least 3 points")
    viol = list(a[1:-1] - 0.5 * (a[:-2] + a[2:]))
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        k = int(rng.integers(1, (n - 1) // 2 + 1))
        i = int(rng.integers(0, n - 2 * k))
        viol.append(a[i + k] - 0.5 * (a[i] + a[i + 2 * k]))
    viol = np.array(viol)
    worst = float(viol.max())
    return {"convex": bool(worst <= tol), "worst_violation": worst,
            "most_negative": float(viol.min())}


# ---------------------------------------------------------------------------
# invariant measure

_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)
_GL8_X = 0.5 * (_GL8_X + 1.0)
_GL8_W = 0.5 * _GL8_W


def invariant_measure(b, n_grid=256):
    """Invariant measure of ``-m'' + (b m)' = 0`` on the unit torus.

    Uses the closed form ``m(y) ~ int_0^1 exp(-(B(y + r) - B(y))) dr`` with
    ``B' = b``, which is positive by construction.  ``B`` and the inner
    integrals come from 8-point Gauss-Legendre on every grid interval; the
    outer sum is done in log space so large excursions of ``B`` do not
    overflow.
    """
    b, _ = as_periodic(b)
    h = 1.0 / n_grid
    left = np.arange(n_grid) * h
    # B at the grid points
    inc = h * np.sum(_GL8_W * b(left[:, None] + h * _GL8_X), axis=1)
    B = np.concatenate([[0.0], np.cumsum(inc)])
    b_mean = B[-1]
    # log of local integrals E_i = int_{I_i} exp(-(B(s) - B(y_i))) ds
    t = left[:, None] + h * _GL8_X                     # nodes, (n, 8)
    sub = t[:, :, None] - left[:, None, None]           # offsets, (n, 8, 1)
    partial = sub[..., 0] * np.sum(_GL8_W * b(left[:, None, None] + sub * _GL8_X), axis=2)
    with np.errstate(over="ignore"):
        local = h * np.sum(_GL8_W * np.exp(-partial), axis=1)
    if not np.all(np.isfinite(local)) or np.any(local <= 0):
        raise QuadratureUnderflow("exp(-B) over one grid interval left the floating range")
    logE = np.log(local)
    # two periods of B and log E
    B2 = np.concatenate([B[:-1], B[:-1] + b_mean])
    logE2 = np.concatenate([logE, logE])
    idx = np.arange(n_grid)[:, None] + np.arange(n_grid)[None, :]
    log_m = logsumexp(B[:-1, None] - B2[idx] + logE2[idx], axis=1)
    log_m -= logsumexp(log_m) - np.log(n_grid)
    m = np.exp(log_m)
    if not np.all(np.isfinite(m)):
        raise QuadratureUnderflow("invariant measure not representable")
    c0 = float(np.mean(b(left) * m))
    return InvariantMeasure(grid=left, values=m, drift_constant=c0)
