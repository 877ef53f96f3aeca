r"""
Heterogeneous fluxes
====================

A flux is a map :math:`A(y, u)` that is 1-periodic in the position ``y``.
Every :class:`FluxModel` carries vectorised callables for the flux and its
two partial derivatives, plus an Engquist--Osher splitting used by the
finite-volume solver in :mod:`viscolab.evolve`.

Built-in families
-----------------

* :func:`make_linear_flux` -- ``A(y, u) = a(y) u``
* :func:`make_separable_convex_flux` -- ``A(y, u) = V(y) + f(u)`` with ``f``
  convex and linear outside ``[-threshold, threshold]``
* :func:`make_homogeneous_flux` -- ``A(y, u) = f(u)``
* :func:`make_flux` -- anything else; missing derivatives fall back to
  centred finite differences.

Periodic coefficients are plain callables or :class:`FourierSeries`; the
latter differentiate exactly.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

FD_STEP = 1e-6

# 16-point Gauss-Legendre on [0, 1], composite over 8 panels
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_N_PANELS = 8
_EO_NODES = np.concatenate(
    [(k + 0.5 * (_GL_X + 1.0)) / _N_PANELS for k in range(_N_PANELS)])
_EO_WEIGHTS = np.tile(0.5 * _GL_W / _N_PANELS, _N_PANELS)


@dataclass(frozen=True)
class FourierSeries:
    """Real trigonometric series on the unit torus.

    ``terms`` is a sequence of ``(k, cos_coeff, sin_coeff)`` triples and the
    series evaluates to ``sum c_k cos(2 pi k y) + s_k sin(2 pi k y)``.  The
    ``k = 0`` term is the constant part (its sine coefficient is ignored).
    """

    terms: tuple

    def __post_init__(self):
        cleaned = []
        for term in self.terms:
            k, c, s = term
            if int(k) != k or k < 0:
                raise ValueError(f"wavenumber must be a non-negative integer, got {k}")
            cleaned.append((int(k), float(c), float(s)))
        object.__setattr__(self, "terms", tuple(cleaned))

    @classmethod
    def constant(cls, value):
        return cls(((0, value, 0.0),))

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        for k, c, s in self.terms:
            if k == 0:
                out = out + c
            else:
                arg = 2.0 * np.pi * k * y
                out = out + c * np.cos(arg) + s * np.sin(arg)
        return out

    @property
    def mean(self):
        return sum(c for k, c, _ in self.terms if k == 0)

    def derivative(self):
        return FourierSeries(tuple(
            (k, 2.0 * np.pi * k * s, -2.0 * np.pi * k * c)
            for k, c, s in self.terms if k > 0) or ((0, 0.0, 0.0),))

    def oscillating_antiderivative(self):
        """Periodic antiderivative of the zero-mean part."""
        return FourierSeries(tuple(
            (k, -s / (2.0 * np.pi * k), c / (2.0 * np.pi * k))
            for k, c, s in self.terms if k > 0) or ((0, 0.0, 0.0),))

    def to_list(self):
        return [list(t) for t in self.terms]


def as_periodic(fn):
    """Return ``(fn, dfn)`` for a periodic coefficient.

    Scalars become constant series.  Derivatives are exact for
    :class:`FourierSeries` and centred differences otherwise.
    """
    if np.isscalar(fn):
        fn = FourierSeries.constant(float(fn))
    if isinstance(fn, FourierSeries):
        return fn, fn.derivative()

    def dfn(y):
        y = np.asarray(y, dtype=float)
        return (fn(y + FD_STEP) - fn(y - FD_STEP)) / (2.0 * FD_STEP)

    return fn, dfn


@dataclass(frozen=True)
class LinearityWindow:
    """State intervals on which ``A(y, .)`` is affine for every ``y``."""

    intervals: tuple

    def halfwidth(self, values):
        """Largest ``eta`` such that ``values + xi`` stays affine for ``|xi| < eta``.

        Returns 0 when the profile is not contained in a single interval.
        """
        values = np.asarray(values, dtype=float)
        lo, hi = values.min(), values.max()
        for a, b in self.intervals:
            if a < lo and hi < b:
                return float(min(lo - a, b - hi))
        return 0.0


@dataclass(frozen=True)
class FluxModel:
    """Immutable description of a 1-periodic flux ``A(y, u)``.

    All callables are vectorised and broadcast over ``y`` and ``u``.
    ``eo_split(y, u)`` returns ``(A_plus, A_minus)`` with ``A_plus`` non-decreasing
    and ``A_minus`` non-increasing in ``u`` and ``A_plus + A_minus == A``.
    ``interface_ops(y)`` binds fixed positions and returns an
    :class:`InterfaceOps`; the solver calls it once per grid.
    """

    eval: Callable
    d_u: Optional[Callable] = None
    d_y: Optional[Callable] = None
    lipschitz_bound: Optional[float] = None
    linearity_window: Optional[LinearityWindow] = None
    convex_in_u: bool = False
    homogeneous_in_y: bool = False
    linear_in_u: bool = False
    eo_split: Optional[Callable] = None
    interface_ops: Optional[Callable] = None
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        evaluate = self.eval
        if self.d_u is None:
            def d_u(y, u):
                u = np.asarray(u, dtype=float)
                return (evaluate(y, u + FD_STEP) - evaluate(y, u - FD_STEP)) / (2 * FD_STEP)
            object.__setattr__(self, "d_u", d_u)
        if self.d_y is None:
            def d_y(y, u):
                y = np.asarray(y, dtype=float)
                return (evaluate(y + FD_STEP, u) - evaluate(y - FD_STEP, u)) / (2 * FD_STEP)
            object.__setattr__(self, "d_y", d_y)
        if self.eo_split is None:
            object.__setattr__(self, "eo_split", _quadrature_eo(self.eval, self.d_u))
        if self.interface_ops is None:
            object.__setattr__(self, "interface_ops", _generic_interface(self))

    def __call__(self, y, u):
        return self.eval(y, u)

    def linearity_halfwidth(self, values):
        if self.linear_in_u:
            return np.inf
        if self.linearity_window is None:
            return 0.0
        return self.linearity_window.halfwidth(values)


@dataclass(frozen=True)
class InterfaceOps:
    """Engquist-Osher halves and wave speed with the position already bound."""

    plus: Callable
    minus: Callable
    speed: Callable


def _generic_interface(model):
    def bind(y):
        y = np.asarray(y, dtype=float)
        return InterfaceOps(plus=lambda u: model.eo_split(y, u)[0],
                            minus=lambda u: model.eo_split(y, u)[1],
                            speed=lambda u: np.abs(model.d_u(y, u)))
    return bind


def _shifted_convex_interface(V, f, df, s_star):
    # A = V(y) + f(u) with f minimal at s_star
    c_plus = float(f(0.0) - f(max(0.0, s_star)))
    c_minus = float(-f(min(0.0, s_star)))

    def bind(y):
        base = np.asarray(V(np.asarray(y, dtype=float)), dtype=float) + c_plus
        return InterfaceOps(plus=lambda u: base + f(np.maximum(u, s_star)),
                            minus=lambda u: f(np.minimum(u, s_star)) + c_minus,
                            speed=lambda u: np.abs(df(u)))
    return bind


def _quadrature_eo(evaluate, d_u):
    """Engquist-Osher split by composite Gauss-Legendre quadrature from 0 to u."""

    def split(y, u):
        y, u = np.broadcast_arrays(np.asarray(y, float), np.asarray(u, float))
        s = u[..., None] * _EO_NODES
        a = d_u(y[..., None], s)
        plus = evaluate(y, np.zeros_like(u)) + u * np.sum(_EO_WEIGHTS * np.maximum(a, 0.0), axis=-1)
        minus = u * np.sum(_EO_WEIGHTS * np.minimum(a, 0.0), axis=-1)
        return plus, minus

    return split


def _convex_eo(evaluate, argmin):
    """Exact Engquist-Osher split for fluxes convex in ``u``.

    ``argmin(y)`` is the state minimising ``A(y, .)``.
    """

    def split(y, u):
        y, u = np.broadcast_arrays(np.asarray(y, float), np.asarray(u, float))
        s = np.broadcast_to(argmin(y), u.shape)
        zero = np.zeros_like(u)
        plus = (evaluate(y, np.maximum(u, s)) - evaluate(y, np.maximum(zero, s))
                + evaluate(y, zero))
        minus = evaluate(y, np.minimum(u, s)) - evaluate(y, np.minimum(zero, s))
        return plus, minus

    return split


def make_flux(evaluate, d_u=None, d_y=None, **kwargs):
    """Wrap a user flux. Missing derivatives use centred differences (h = 1e-6)."""
    return FluxModel(eval=evaluate, d_u=d_u, d_y=d_y, **kwargs)


def make_linear_flux(a):
    """``A(y, u) = a(y) u`` for a periodic coefficient ``a``."""
    a, da = as_periodic(a)

    def evaluate(y, u):
        return a(y) * np.asarray(u, dtype=float)

    def d_u(y, u):
        y, u = np.broadcast_arrays(np.asarray(y, float), np.asarray(u, float))
        return a(y) * np.ones_like(u)

    def d_y(y, u):
        return da(y) * np.asarray(u, dtype=float)

    def split(y, u):
        ay = a(y)
        u = np.asarray(u, dtype=float)
        return np.maximum(ay, 0.0) * u, np.minimum(ay, 0.0) * u

    def bind(y):
        ay = np.asarray(a(np.asarray(y, dtype=float)), dtype=float)
        pos, neg = np.maximum(ay, 0.0), np.minimum(ay, 0.0)
        return InterfaceOps(plus=lambda u: pos * u, minus=lambda u: neg * u,
                            speed=lambda u: np.abs(ay) * np.ones_like(u))

    ys = np.linspace(0.0, 1.0, 1025)
    params = {"a": a.to_list()} if isinstance(a, FourierSeries) else {}
    return FluxModel(eval=evaluate, d_u=d_u, d_y=d_y,
                     lipschitz_bound=float(np.max(np.abs(a(ys)))),
                     convex_in_u=True, linear_in_u=True, eo_split=split, interface_ops=bind,
                     name="linear", params=params)


@dataclass(frozen=True)
class BlendedSlopes:
    """Convex ``f`` with ``f(v) = a_plus v`` above ``threshold`` and
    ``f(v) = -a_minus v`` below ``-threshold``.

    Inside the window ``f'`` follows a cubic smoothstep from ``-a_minus`` to
    ``a_plus``, so ``f`` is C^2 and matches both linear branches exactly.
    """

    a_minus: float
    a_plus: float
    threshold: float

    def _s(self, v):
        return (v + self.threshold) / (2.0 * self.threshold)

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        am, ap, T = self.a_minus, self.a_plus, self.threshold
        s = np.clip(self._s(v), 0.0, 1.0)
        inner = am * T - am * (v + T) + (ap + am) * 2.0 * T * (s**3 - 0.5 * s**4)
        return np.where(v > T, ap * v, np.where(v < -T, -am * v, inner))

    def derivative(self, v):
        v = np.asarray(v, dtype=float)
        s = np.clip(self._s(v), 0.0, 1.0)
        return -self.a_minus + (self.a_plus + self.a_minus) * s * s * (3.0 - 2.0 * s)

    def second_derivative(self, v):
        v = np.asarray(v, dtype=float)
        s = self._s(v)
        inside = (s > 0.0) & (s < 1.0)
        return np.where(inside, (self.a_plus + self.a_minus) / (2.0 * self.threshold)
                        * 6.0 * s * (1.0 - s), 0.0)

    @property
    def argmin(self):
        r = self.a_minus / (self.a_plus + self.a_minus)
        s = 0.5 - np.sin(np.arcsin(1.0 - 2.0 * r) / 3.0)
        return 2.0 * self.threshold * s - self.threshold


def make_separable_convex_flux(V, a_minus, a_plus, threshold, f=None, df=None, argmin=None):
    """``A(y, u) = V(y) + f(u)`` with ``f`` convex and linear at infinity.

    With ``f=None`` the built-in C^2 blend :class:`BlendedSlopes` is used.
    A custom ``f`` must agree with ``a_plus * u`` above the threshold and
    ``-a_minus * u`` below ``-threshold``.
    """
    if a_minus <= 0 or a_plus <= 0:
        raise ValueError("slopes a_minus and a_plus must be positive")
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if f is None:
        f = BlendedSlopes(float(a_minus), float(a_plus), float(threshold))
        df = f.derivative
        argmin = f.argmin
    else:
        for v in (1.5 * threshold, 3.0 * threshold):
            if abs(f(v) - a_plus * v) > 1e-9 * (1 + abs(v)) or abs(f(-v) - a_minus * v) > 1e-9 * (1 + abs(v)):
                raise ValueError("f is not linear with the given slopes beyond the threshold")
        if df is None:
            def df(v):
                return (f(v + FD_STEP) - f(v - FD_STEP)) / (2 * FD_STEP)
    V, dV = as_periodic(V)

    def evaluate(y, u):
        return V(y) + f(u)

    def d_u(y, u):
        y, u = np.broadcast_arrays(np.asarray(y, float), np.asarray(u, float))
        return df(u)

    def d_y(y, u):
        y, u = np.broadcast_arrays(np.asarray(y, float), np.asarray(u, float))
        return dV(y)

    split = bind = None
    if argmin is not None:
        s_star = float(argmin)
        split = _convex_eo(evaluate, lambda y: np.full(np.shape(y), s_star))
        bind = _shifted_convex_interface(V, f, df, s_star)
    params = {"a_minus": a_minus, "a_plus": a_plus, "threshold": threshold}
    if isinstance(V, FourierSeries):
        params["V"] = V.to_list()
    window = LinearityWindow(((-np.inf, -float(threshold)), (float(threshold), np.inf)))
    return FluxModel(eval=evaluate, d_u=d_u, d_y=d_y,
                     lipschitz_bound=float(max(a_minus, a_plus)),
                     linearity_window=window, convex_in_u=True, eo_split=split,
                     interface_ops=bind,
                     name="separable_convex", params=params)


def make_homogeneous_flux(f, df=None, convex=False, argmin=None, name="homogeneous"):
    """``A(y, u) = f(u)``; no dependence on the position."""
    if df is None:
        def df(v):
            v = np.asarray(v, dtype=float)
            return (f(v + FD_STEP) - f(v - FD_STEP)) / (2 * FD_STEP)

    def evaluate(y, u):
        y, u = np.broadcast_arrays(np.asarray(y, float), np.asarray(u, float))
        return f(u)

    def d_u(y, u):
        y, u = np.broadcast_arrays(np.asarray(y, float), np.asarray(u, float))
        return df(u)

    def d_y(y, u):
        y, u = np.broadcast_arrays(np.asarray(y, float), np.asarray(u, float))
        return np.zeros_like(u)

    split = bind = None
    if convex and argmin is not None:
        s_star = float(argmin)
        split = _convex_eo(evaluate, lambda y: np.full(np.shape(y), s_star))
        bind = _shifted_convex_interface(lambda y: np.zeros(np.shape(y)), f, df, s_star)
    return FluxModel(eval=evaluate, d_u=d_u, d_y=d_y, convex_in_u=convex,
                     homogeneous_in_y=True, eo_split=split, interface_ops=bind, name=name)


def make_polynomial_flux(coefficients):
    """``A(y, u) = sum_n a_n(y) u**n`` with periodic coefficients ``a_n``.

    ``coefficients[n]`` is a scalar, a callable or a :class:`FourierSeries`.
    The flux is flagged convex when it is at most quadratic with
    ``a_2 >= 0`` on a dense sample of the period.
    """
    pairs = [as_periodic(c) for c in coefficients]
    if not pairs:
        raise ValueError("need at least one coefficient")

    def evaluate(y, u):
        y, u = np.broadcast_arrays(np.asarray(y, float), np.asarray(u, float))
        out = np.zeros(u.shape)
        for c, _ in reversed(pairs):
            out = out * u + c(y)
        return out

    def d_u(y, u):
        y, u = np.broadcast_arrays(np.asarray(y, float), np.asarray(u, float))
        out = np.zeros(u.shape)
        for n in range(len(pairs) - 1, 0, -1):
            out = out * u + n * pairs[n][0](y)
        return out

    def d_y(y, u):
        y, u = np.broadcast_arrays(np.asarray(y, float), np.asarray(u, float))
        out = np.zeros(u.shape)
        for _, dc in reversed(pairs):
            out = out * u + dc(y)
        return out

    ys = np.linspace(0.0, 1.0, 513)
    degree = len(pairs) - 1
    linear = degree <= 1
    convex = linear or (degree == 2 and bool(np.all(pairs[2][0](ys) >= 0)))
    homogeneous = all(isinstance(c, FourierSeries) and all(k == 0 for k, _, _ in c.terms)
                      for c, _ in pairs)
    params = {"coefficients": [c.to_list() if isinstance(c, FourierSeries) else None
                               for c, _ in pairs]}
    return FluxModel(eval=evaluate, d_u=d_u, d_y=d_y, convex_in_u=convex, linear_in_u=linear,
                     homogeneous_in_y=homogeneous, name="polynomial", params=params)


def burgers_flux():
    """Homogeneous Burgers flux ``u**2 / 2``."""
    return make_homogeneous_flux(lambda u: 0.5 * u * u, lambda u: u,
                                 convex=True, argmin=0.0, name="burgers")


@dataclass(frozen=True)
class HypothesisReport:
    """Empirical growth ratios over a finite probe box (advisory only)."""

    m: float
    n: float
    sup_du_ratio: float
    sup_dy_ratio: float
    n_evaluations: int
    nonfinite_count: int


def probe_growth_hypotheses(flux, box, n_samples, m=0.0, n=0.0):
    """Sample ``|d_u A| / (1 + |u|)^m`` and ``|d_y A| / (1 + |u|)^n`` on a grid.

    ``box`` is ``((y_min, y_max), (u_min, u_max))``.  A finite sample cannot
    certify the polynomial growth conditions; the report only records the
    largest ratios seen and how many evaluations were not finite.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    (y0, y1), (u0, u1) = box
    y, u = np.meshgrid(np.linspace(y0, y1, n_samples), np.linspace(u0, u1, n_samples))
    du = np.abs(flux.d_u(y, u))
    dy = np.abs(flux.d_y(y, u))
    values = flux.eval(y, u)
    bad = ~np.isfinite(du) | ~np.isfinite(dy) | ~np.isfinite(values)
    ok = ~bad
    r_u = du[ok] / (1.0 + np.abs(u[ok])) ** m
    r_y = dy[ok] / (1.0 + np.abs(u[ok])) ** n
    return HypothesisReport(m=m, n=n,
                            sup_du_ratio=float(r_u.max()) if r_u.size else np.nan,
                            sup_dy_ratio=float(r_y.max()) if r_y.size else np.nan,
                            n_evaluations=int(y.size),
                            nonfinite_count=int(bad.sum()))
