"""Invariant measure of -m'' + (b m)' = 0 and the linear-flux factorization.

Run with ``python3 demos/02_invariant_measure.py``.
"""
import numpy as np

from viscolab import FourierSeries, invariant_measure, make_linear_flux, solve_cell_by_mean

b = FourierSeries(((0, 1.0, 0.0), (1, 0.5, 0.0)))   # b(y) = 1 + 0.5 cos(2 pi y)

########################################
## the measure: positive, mean one
########################################

m = invariant_measure(b)
print("min m = %.6f   max m = %.6f   mean m = %.15f" % (m.values.min(), m.values.max(),
                                                       m.values.mean()))
print("c0 = <b m> =", m.drift_constant)

# the drift constant c = <(<b> - b) m> steers the centre of mass of linear solutions
c = float(np.mean((b.mean - b(m.grid)) * m.values))
print("c =", c)

########################################
## for the linear flux A = b(y) u the cell solutions are p m
########################################

flux = make_linear_flux(b)
for p in (-2.0, 1.0, 3.0):
    cell = solve_cell_by_mean(flux, p)
    err = np.max(np.abs(cell.values - p * m(cell.grid)))
    print(f"p = {p:+.1f}:  sup|v - p m| = {err:.2e}   Abar = {cell.alpha:+.12f}"
          f"   p <b m> = {p * m.drift_constant:+.12f}")
