"""Independent oracles: product-space brute force, no eigenbundle formulas."""

import itertools
import warnings

import numpy as np
from scipy import optimize

from eigenbundle import consumer_surplus, solve_equilibrium
from eigenbundle.market import InteriorityWarning


def _solve(m, tau):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InteriorityWarning)
        return solve_equilibrium(m, tau)


def _direction(angles):
    """Unit vector in R^{k+1} from k spherical angles."""
    x = [1.0]
    for a in angles:
        x = [v * np.cos(a) for v in x] + [np.sin(a)]
    return np.array(x)


def balanced_tax_along(m, direction, q0):
    """The nonzero budget-balanced tax on the ray through ``direction``.

    Revenue along s * direction is exactly quadratic in s, so two solves pin it.
    """
    u = np.asarray(direction, dtype=float)
    q1 = _solve(m, u).quantity
    a1 = float(u @ q0)
    a2 = float(u @ (q1 - q0))
    if abs(a2) < 1e-14:
        return None
    return (-a1 / a2) * u


def surplus_along(m, angles, q0):
    tau = balanced_tax_along(m, _direction(angles), q0)
    if tau is None:
        return -np.inf
    return consumer_surplus(_solve(m, tau).quantity, m)


def brute_force_best_surplus(m, grid=60, refine_top=4):
    """Best consumer surplus over budget-balanced taxes by grid plus simplex refinement.

    Directions are scored with the tax response matrix dq/dtau, read off from
    one equilibrium solve per unit tax; the winner is re-solved directly.
    """
    q0 = _solve(m, None).quantity
    best = consumer_surplus(q0, m)
    resp = np.column_stack([_solve(m, e).quantity - q0 for e in np.eye(m.n)])
    b = np.linalg.inv(-m.d_norm)

    def score(dirs):
        a1 = dirs @ q0
        a2 = np.einsum("ij,ij->i", dirs, dirs @ resp.T)
        ok = np.abs(a2) > 1e-14
        s = np.where(ok, -a1 / np.where(ok, a2, 1.0), 0.0)
        q = q0 + (s[:, None] * dirs) @ resp.T
        cs = 0.5 * np.einsum("ij,ij->i", q, q @ b)
        return np.where(ok, cs, -np.inf)

    k = m.n - 1
    axes = [np.linspace(0.0, np.pi, grid, endpoint=False)] * k
    angles = np.array(list(itertools.product(*axes)))
    cs = score(np.array([_direction(a) for a in angles]))
    for i in np.argsort(-cs)[:refine_top]:
        res = optimize.minimize(
            lambda x: -score(_direction(x)[None, :])[0],
            angles[i],
            method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000},
        )
        best = max(best, surplus_along(m, res.x, q0))
    return best
