"""Linear heterogeneous transport: drift of mass and algebraic decay.

Run with ``python3 demos/06_linear_drift_and_decay.py``.
"""
import numpy as np

from viscolab import Field, FourierSeries, Grid1D, linear_drift_experiment

b = FourierSeries(((0, 1.0, 0.0), (1, 0.5, 0.0)))

########################################
## a dipole: both halves drift at -c in the frame moving with <b>
########################################

grid = Grid1D("line", -20.0, 40.0, 1200)
x = grid.centers
w0 = Field(grid, np.exp(-((x + 0.5) / 0.3) ** 2) - np.exp(-((x - 0.5) / 0.3) ** 2))
rep = linear_drift_experiment(b, grid, w0, 10.0)
print("c =", rep.results["c"])
print("moving-frame drift (extrapolated):", rep.results["frame_drift"])
print("L1 decay exponent: %.3f" % rep.fits[0].rate)

########################################
## b = 0 is the heat equation: ||w||_2 ~ t^(-1/4)
########################################

grid = Grid1D("line", -60.0, 60.0, 960)
heat = linear_drift_experiment(0.0, grid, Field(grid, np.exp(-grid.centers ** 2)), 40.0,
                               max_dt=0.05)
print("heat L2 exponent: %.4f" % heat.fits[0].rate)
