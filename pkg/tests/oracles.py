"""Independent reference computations used to freeze and cross-check values."""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spl


def _periodic_shift(n, k):
    # (S_k u)_j = u_{j+k}
    rows = np.arange(n)
    return sp.csr_matrix((np.ones(n), (rows, (rows + k) % n)), shape=(n, n))


def fd_invariant_measure(b, n):
    """Solve ``-m'' + (b m)' = 0`` with mean 1 by 4th-order periodic differences."""
    h = 1.0 / n
    y = np.arange(n) * h
    S = {k: _periodic_shift(n, k) for k in (-2, -1, 1, 2)}
    D1 = (-S[2] + 8 * S[1] - 8 * S[-1] + S[-2]) / (12 * h)
    D2 = (-S[2] + 16 * S[1] - 30 * sp.identity(n) + 16 * S[-1] - S[-2]) / (12 * h * h)
    L = (-D2 + D1 @ sp.diags(b(y))).tolil()
    L[0, :] = h
    rhs = np.zeros(n)
    rhs[0] = 1.0
    return y, spl.spsolve(L.tocsc(), rhs)


def dense_upwind_step(a0, u, dt, dx, periodic=True):
    """Upwind advection for ``a0 > 0`` followed by backward-Euler diffusion, with dense matrices."""
    n = u.size
    I = np.eye(n)
    back = np.roll(I, -1, axis=1)  # (back u)_j = u_{j-1}
    adv = I - a0 * dt / dx * (I - back)
    lap = back + back.T - 2 * I
    return np.linalg.solve(I - dt / dx ** 2 * lap, adv @ u)
