"""A perturbed Burgers shock relaxes to the shifted shock with the same mass.

Run with ``python3 demos/05_shock_stability.py``.
"""
import warnings

import numpy as np

from viscolab import Grid1D, ShockFamily, burgers_flux, shock_stability
from viscolab.errors import BandClampWarning

warnings.simplefilter("ignore", BandClampWarning)

flux = burgers_flux()
grid = Grid1D("line", -30.0, 30.0, 600)
x = grid.centers
U = ShockFamily(flux, 0.5).build(0.0, 31.0)

########################################
## a bump carrying mass 0.3 sqrt(pi) moves the shock
########################################

rep = shock_stability(flux, U, grid, 0.3 * np.exp(-(x - 3) ** 2), 60.0)
r = rep.results
print("selected shift xi0(V) = %.6f   (U has xi0 = 0)" % r["xi0_V"])
print("||u - V||_1: %.3e -> %.3e" % (r["initial_dist1"], r["final_dist1"]))
print("||u - U||_1 at the end: %.4f   vs  |int(U - V)| = 0.3 sqrt(pi) = %.4f"
      % (r["final_dist1_U"], 0.3 * np.sqrt(np.pi)))
for v in rep.verdicts:
    print(f"  {v.criterion:24s} {'PASS' if v.passed else 'FAIL'}  {v.value:.2e}")

t, d = rep.series["dist1_h"]
print("L1 distance every 10 time units:", np.round(np.interp(np.arange(0, 61, 10), t, d), 8))
