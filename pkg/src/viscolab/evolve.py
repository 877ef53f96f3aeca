r"""
Monotone finite-volume evolution
================================

Time integration of ``u_t + (A(y, u))_y - u_yy = 0`` on a periodic or a
truncated line grid.  Each step applies an explicit Engquist-Osher flux
difference with the heterogeneity sampled at cell interfaces, then a
backward-Euler diffusion solve with the 3-point Laplacian:

.. math::

    u^*_j = u_j - \frac{\Delta t}{\Delta x}(F_{j+1/2} - F_{j-1/2}),\qquad
    (I - \Delta t\, D_2)\, u' = u^*.

Under ``dt <= cfl dx / max|A_u|`` with ``cfl < 1/2`` the explicit part is a
monotone map, and the implicit part is an M-matrix inverse, so ordered data
stay ordered and the scheme is an L1 contraction.  Several fields can be
advanced in lockstep with a common ``dt``, which is how comparison and
contraction are checked.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .errors import CFLViolation, GridMismatch, SolverFailure, ViscolabError


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid of ``n_cells`` cells on ``[x_left, x_right]``."""

    kind: str
    x_left: float
    x_right: float
    n_cells: int

    def __post_init__(self):
        if self.kind not in ("periodic", "line"):
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if self.n_cells < 8:
            raise ValueError("n_cells must be at least 8")
        length = self.x_right - self.x_left
        if not length > 0:
            raise ValueError("x_right must exceed x_left")
        if self.kind == "periodic" and abs(length - round(length)) > 1e-12:
            raise ValueError("periodic grids must span a whole number of periods")

    @property
    def dx(self):
        return (self.x_right - self.x_left) / self.n_cells

    @property
    def centers(self):
        return self.x_left + (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def interfaces(self):
        return self.x_left + np.arange(self.n_cells + 1) * self.dx

    @property
    def measure(self):
        return self.x_right - self.x_left

    def field(self, values):
        return Field(self, values)

    def sample(self, fn):
        return Field(self, fn(self.centers))


@dataclass(frozen=True)
class Field:
    """Cell averages on a grid."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n_cells,):
            raise ValueError(f"expected {self.grid.n_cells} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def mass(self):
        return float(np.sum(self.values) * self.grid.dx)

    def to_csv(self, path):
        np.savetxt(path, np.column_stack([self.grid.centers, self.values]), delimiter=",",
                   header="x,u", comments="", fmt="%.17g")


@dataclass(frozen=True)
class Periodic:
    kind = "periodic"


@dataclass(frozen=True)
class Dirichlet:
    """Time-constant ghost-cell values on a line grid."""

    left: float
    right: float
    kind = "dirichlet"


@dataclass(frozen=True)
class EvolveConfig:
    """Settings for :func:`evolve`.

    ``observe_every`` sets a fixed observer cadence; ``observe_times`` lists
    explicit times.  Steps are shortened to land on every observer time.
    ``diffusion_solver_tol`` bounds the residual of each implicit solve.
    """

    t_end: float
    cfl_number: float = 0.45
    max_dt: float = np.inf
    boundary: object = field(default_factory=Periodic)
    diffusion_solver_tol: float = 1e-10
    observe_every: Optional[float] = None
    observe_times: Sequence[float] = ()
    store_fields: bool = False

    def __post_init__(self):
        if not 0 < self.cfl_number < 1:
            raise ValueError("cfl_number must lie in (0, 1)")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.max_dt <= 0:
            raise ValueError("max_dt must be positive")


@dataclass
class Trajectory:
    """Observer records along an evolution.

    For lockstep runs every per-member diagnostic is an array over members.
    ``ledger`` is the accumulated boundary flux into the domain; on line grids
    ``mass(t) - mass(0) = ledger(t)`` up to round-off.
    """

    grid: Grid1D
    times: list = field(default_factory=list)
    records: list = field(default_factory=list)
    fields: list = field(default_factory=list)
    n_steps: int = 0

    def series(self, key):
        return np.array([r[key] for r in self.records])

    @property
    def final(self):
        return self.fields[-1] if self.fields else None

    def to_csv(self, path, keys=("l1", "l2", "linf", "mass", "boundary_ledger")):
        cols = [np.asarray(self.times)] + [self.series(k) for k in keys]
        np.savetxt(path, np.column_stack(cols), delimiter=",", header=",".join(("t",) + tuple(keys)),
                   comments="", fmt="%.17g")


def _interface_positions(grid):
    x = grid.interfaces
    return x[1:] if grid.kind == "periodic" else x


class _Kernel:
    """Flux pieces bound to the interfaces of one grid."""

    def __init__(self, flux, grid, boundary):
        self.grid = grid
        self.boundary = boundary
        self.ops = flux.interface_ops(_interface_positions(grid))

    def sides(self, u):
        if self.grid.kind == "periodic":
            return u, np.roll(u, -1, axis=-1)
        b = self.boundary
        gl = np.full(u.shape[:-1] + (1,), b.left)
        gr = np.full(u.shape[:-1] + (1,), b.right)
        ext = np.concatenate([gl, u, gr], axis=-1)
        return ext[..., :-1], ext[..., 1:]

    def flux(self, u):
        left, right = self.sides(u)
        return self.ops.plus(left) + self.ops.minus(right)

    def speed(self, u):
        left, right = self.sides(u)
        return float(max(np.max(self.ops.speed(left)), np.max(self.ops.speed(right))))

    def dt_bound(self, u, cfl):
        s = self.speed(u)
        return np.inf if s == 0 else cfl * self.grid.dx / s


def numerical_flux(flux, grid, u, boundary=Periodic()):
    """Engquist-Osher interface fluxes.

    Periodic grids return ``F_{j+1/2}`` for ``j = 0..n-1``; line grids return
    the ``n + 1`` fluxes through every interface including the two boundary
    ones.
    """
    return _Kernel(flux, grid, boundary).flux(u)


def max_speed(flux, grid, u, boundary=Periodic()):
    """``max |A_u|`` over interface positions and the adjacent cell states."""
    return _Kernel(flux, grid, boundary).speed(u)


def stable_dt(flux, grid, u, cfl=0.45, boundary=Periodic()):
    return _Kernel(flux, grid, boundary).dt_bound(u, cfl)


def _diffusion_solve(grid, rhs, r, boundary, tol):
    n = grid.n_cells
    ab = np.empty((3, n))
    ab[0] = -r
    ab[1] = 1.0 + 2.0 * r
    ab[2] = -r
    b = np.array(rhs.T, dtype=float)  # (n, members)
    try:
        if grid.kind == "line":
            b[0] += r * boundary.left
            b[-1] += r * boundary.right
            x = solve_banded((1, 1), ab, b, check_finite=False)
        else:
            # cyclic system via Sherman-Morrison
            gamma = -ab[1, 0]
            ab[1, 0] -= gamma
            ab[1, -1] -= r * r / gamma
            corr = np.zeros(n)
            corr[0] = gamma
            corr[-1] = -r
            sol = solve_banded((1, 1), ab, np.column_stack([b, corr]), check_finite=False)
            y, z = sol[:, :-1], sol[:, -1]
            vy = y[0] + (-r / gamma) * y[-1]
            vz = z[0] + (-r / gamma) * z[-1]
            x = y - np.outer(z, vy / (1.0 + vz))
    except (np.linalg.LinAlgError, ValueError) as err:
        raise SolverFailure(f"diffusion solve failed: {err}") from err
    x = x.T
    if tol is not None:
        if grid.kind == "periodic":
            lap = np.roll(x, 1, axis=-1) - 2 * x + np.roll(x, -1, axis=-1)
        else:
            ext = np.concatenate([np.full(x.shape[:-1] + (1,), boundary.left), x,
                                  np.full(x.shape[:-1] + (1,), boundary.right)], axis=-1)
            lap = ext[..., :-2] - 2 * x + ext[..., 2:]
        resid = np.max(np.abs(x - r * lap - rhs), initial=0.0)
        if not np.isfinite(resid) or resid > tol * (1.0 + np.max(np.abs(rhs), initial=0.0)):
            raise SolverFailure(f"diffusion residual {resid:.2e} above tolerance")
    elif not np.all(np.isfinite(x)):
        raise SolverFailure("diffusion solve produced non-finite values")
    return x


def _step(kernel, u, dt, cfl, tol=1e-10, bound=None):
    """Advance ``u`` (shape ``(..., n)``); returns ``(u_new, ledger_increment)``."""
    grid, boundary = kernel.grid, kernel.boundary
    if dt <= 0:
        raise SolverFailure("dt must be positive")
    if bound is None:
        bound = kernel.dt_bound(u, cfl)
    if dt > bound * (1 + 1e-12):
        raise CFLViolation(f"dt={dt:.3e} exceeds the monotonicity bound {bound:.3e}")
    F = kernel.flux(u)
    lam = dt / grid.dx
    if grid.kind == "periodic":
        ustar = u - lam * (F - np.roll(F, 1, axis=-1))
    else:
        ustar = u - lam * (F[..., 1:] - F[..., :-1])
    r = dt / grid.dx ** 2
    unew = _diffusion_solve(grid, ustar, r, boundary, tol)
    if grid.kind == "periodic":
        inc = np.zeros(u.shape[:-1])
    else:
        adv = dt * (F[..., 0] - F[..., -1])
        dif = dt * ((boundary.right - unew[..., -1]) - (unew[..., 0] - boundary.left)) / grid.dx
        inc = adv + dif
    return unew, inc


def step(flux, field, dt, boundary=Periodic(), cfl_number=0.45):
    """One conservative step of the split scheme.

    Raises
    ------
    CFLViolation
        ``dt`` exceeds ``cfl_number * dx / max|A_u|``.
    SolverFailure
        The tridiagonal solve failed.
    """
    _check_boundary(field.grid, boundary)
    unew, _ = _step(_Kernel(flux, field.grid, boundary), field.values[None, :], dt, cfl_number)
    return Field(field.grid, unew[0])


def _check_boundary(grid, boundary):
    if grid.kind == "periodic" and not isinstance(boundary, Periodic):
        raise ValueError("periodic grids need a Periodic boundary")
    if grid.kind == "line" and not isinstance(boundary, Dirichlet):
        raise ValueError("line grids need Dirichlet traces")


def _basic_record(u, dx, ledger):
    return {"mass": np.sum(u, axis=-1) * dx, "l1": np.sum(np.abs(u), axis=-1) * dx,
            "l2": l2_norm(u, dx), "linf": np.max(np.abs(u), axis=-1),
            "boundary_ledger": ledger.copy()}


def _scalarize(rec):
    return {k: (float(v) if np.ndim(v) == 0 else v) for k, v in rec.items()}


def evolve(flux, field0, config, observers=(), on_step=None):
    """Evolve one field or several fields in lockstep.

    Parameters
    ----------
    flux : FluxModel
    field0 : Field or sequence of Field
        Several fields share the grid and every time step.
    config : EvolveConfig
    observers : sequence of callables ``obs(t, u) -> dict``
        Called at ``t = 0``, every observer time and ``t_end``; ``u`` is the
        ``(n,)`` or ``(members, n)`` array.
    on_step : callable, optional
        ``on_step(t, dt, u_old, u_new)`` after every step.

    Returns
    -------
    Trajectory
        Records hold ``mass``, ``l1``, ``l2``, ``linf``, ``boundary_ledger``
        (per member for lockstep runs) plus whatever the observers return.
    """
    single = isinstance(field0, Field)
    fields = [field0] if single else list(field0)
    grid = fields[0].grid
    if any(f.grid != grid for f in fields):
        raise GridMismatch("lockstep fields must share a grid")
    boundary = config.boundary
    _check_boundary(grid, boundary)
    u = np.stack([f.values for f in fields])
    ledger = np.zeros(len(fields))

    times = set(np.asarray(config.observe_times, dtype=float).tolist())
    if config.observe_every:
        k = np.arange(1, int(np.floor(config.t_end / config.observe_every + 1e-9)) + 1)
        times.update((k * config.observe_every).tolist())
    stops = sorted(t for t in times if 0 < t < config.t_end) + ([config.t_end] if config.t_end > 0 else [])

    traj = Trajectory(grid=grid)

    def record(t):
        view = u[0] if single else u
        rec = _basic_record(view, grid.dx, ledger[0] if single else ledger)
        for obs in observers:
            rec.update(obs(t, view))
        traj.times.append(float(t))
        traj.records.append(_scalarize(rec) if single else rec)
        if config.store_fields:
            traj.fields.append(view.copy())

    kernel = _Kernel(flux, grid, boundary)
    record(0.0)
    t = 0.0
    for target in stops:
        while t < target:
            bound = kernel.dt_bound(u, config.cfl_number)
            dt = min(bound, config.max_dt)
            if t + dt >= target * (1 - 1e-14) or target - (t + dt) < 1e-12 * max(1.0, target):
                dt = target - t
            # the residual of the direct solve is audited every 64 steps
            tol = config.diffusion_solver_tol if traj.n_steps % 64 == 0 else None
            try:
                unew, inc = _step(kernel, u, dt, config.cfl_number, tol, bound)
            except ViscolabError as err:
                err.t = t
                err.args = (f"{err.args[0]} (at t={t:.6g})",) + err.args[1:]
                raise
            if on_step is not None:
                on_step(t, dt, u[0] if single else u, unew[0] if single else unew)
            u = unew
            ledger += inc
            t = target if dt == target - t else t + dt
            traj.n_steps += 1
        record(t)
    if not config.store_fields:
        traj.fields.append(u[0].copy() if single else u.copy())
    return traj


def final_fields(traj, grid=None):
    """Final state(s) of a trajectory as Field objects."""
    u = traj.fields[-1]
    grid = grid or traj.grid
    return Field(grid, u) if u.ndim == 1 else [Field(grid, row) for row in u]


def dirichlet_traces_from_profile(profile, grid):
    """Time-constant traces equal to ``profile`` at the two ghost-cell centres."""
    xl = grid.x_left - 0.5 * grid.dx
    xr = grid.x_right + 0.5 * grid.dx
    return Dirichlet(left=float(profile(np.array(xl))), right=float(profile(np.array(xr))))


def l2_norm(u, dx, axis=-1):
    """``sqrt(sum(u**2) dx)`` scaled by ``max|u|`` so tiny values do not underflow."""
    u = np.asarray(u, dtype=float)
    s = np.max(np.abs(u), axis=axis, keepdims=True)
    safe = np.where(s > 0, s, 1.0)
    out = np.squeeze(safe, axis=axis) * np.sqrt(np.sum((u / safe) ** 2, axis=axis) * dx)
    return out


def diff_norms(a, b):
    """Discrete norms of ``a - b`` with cell measure ``dx``."""
    if a.grid != b.grid:
        raise GridMismatch("fields live on different grids")
    d = a.values - b.values
    dx = a.grid.dx
    return {"l1": float(np.sum(np.abs(d)) * dx), "l2": float(l2_norm(d, dx)),
            "linf": float(np.max(np.abs(d))), "signed_mass": float(np.sum(d) * dx)}
