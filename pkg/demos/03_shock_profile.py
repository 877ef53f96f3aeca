"""Standing shocks: the Burgers tanh profile and a heterogeneous shock.

Run with ``python3 demos/03_shock_profile.py``.
"""
import warnings

import numpy as np

from viscolab import (FourierSeries, ShockFamily, burgers_flux, make_separable_convex_flux,
                      shock_difference_mass, translate)
from viscolab.errors import BandClampWarning

warnings.simplefilter("ignore", BandClampWarning)

########################################
## Burgers at alpha = 1/2: U(x) = -tanh(x/2)
########################################

fam = ShockFamily(burgers_flux(), 0.5)
U = fam.build(0.0, 30.0)
x = np.linspace(-20, 20, 2001)
print("sup|U + tanh(x/2)| =", np.max(np.abs(U(x) + np.tanh(x / 2))))
print("end states:", U.q_left, U.q_right, "  tail rates:", U.rate_left, U.rate_right)

# integer translates carry mass 2 k p_plus less
for k in (1, 2, 3):
    r = shock_difference_mass(translate(U, k), U, k=k)
    print(f"k = {k}:  int(U(.+k) - U) = {r['integral']:+.8f}   bound {r['bound']:.3f}")

########################################
## a heterogeneous shock between two oscillating states
########################################

V = FourierSeries(((1, 0.0, 0.25),))
sep = make_separable_convex_flux(V, 1.0, 2.0, 1.0)
fam = ShockFamily(sep, 2.0)
print("RH pair:", fam.p_minus, fam.p_plus, "  admissible xi0 range:", fam.xi_range)
S = fam.build(0.0)
print("detected states: %.6f -> %.6f   rates %.3f, %.3f   stationarity residual %.1e"
      % (S.q_left, S.q_right, S.rate_left, S.rate_right, S.stationarity_residual))
