"""Periodic stationary solutions and the homogenized flux.

Run with ``python3 demos/01_cell_problem.py``.
"""
import numpy as np

from viscolab import (FourierSeries, burgers_flux, check_convexity, check_oleinik, find_rh_pairs,
                      homogenized_flux_table, make_separable_convex_flux, solve_cell_by_mean)

########################################
## Burgers: every cell solution is a constant
########################################

flux = burgers_flux()
cell = solve_cell_by_mean(flux, 0.7)
print("Burgers, p = 0.7:  alpha =", cell.alpha, " spread of v =", np.ptp(cell.values))

########################################
## a heterogeneous convex flux
## A(y, u) = 0.25 sin(2 pi y) + f(u), slopes -1 and 2 far from 0
########################################

V = FourierSeries(((1, 0.0, 0.25),))
sep = make_separable_convex_flux(V, 1.0, 2.0, 1.0)

cell = solve_cell_by_mean(sep, 0.3)
print("separable, p = 0.3: alpha = %.10f  xi0 = %.6f  residual = %.1e"
      % (cell.alpha, cell.xi0, cell.residual))

# v(., p) is periodic with mean p
y = np.linspace(0, 1, 9)
print("v on a coarse grid:", np.round(cell(y), 5))

########################################
## tabulate Abar(p) and look at its shape
########################################

table = homogenized_flux_table(sep, -3.0, 3.0, 31)
for p, a in zip(table.p_samples[::5], table.alpha_samples[::5]):
    print(f"  p = {p:+.2f}   Abar = {a:+.8f}")

conv = check_convexity(table)
print("largest midpoint-convexity violation:", conv["worst_violation"])

# far from the origin the table is affine with slope a_plus
print("slope near p = 3:", np.diff(table.alpha_samples[-3:]) / np.diff(table.p_samples[-3:]))

########################################
## Rankine-Hugoniot pairs at a level alpha
########################################

alpha = 2.0
roots = find_rh_pairs(table, alpha)
print("roots of Abar = %.1f:" % alpha, roots)
print("Oleinik test:", check_oleinik(table, roots[0], roots[-1], alpha))
