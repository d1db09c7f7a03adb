"""Closed-form optimal small budget-balanced intervention (large risk aversion).

A planner with risk aversion ``a`` facing unit-variance multiplicative
implementation noise taxes eigenbundle l by

    q_l * tau_l = (z - lam_l) / (a * lam_l**2)

with shadow price z = sum(1/lam) / sum(1/lam**2) over the bundles it can
act on. When every bundle has positive quantity this reduces to
z = 1 / (2 + var(sigma) / 2).
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import InvalidRiskAversion
from .spectral import SpectralDecomposition, eigenvalue_variance, from_eigenbasis

SUPPORT_TOL = 1e-9


@dataclass(frozen=True)
class SmallPlan:
    z: float
    tau_eigen: np.ndarray
    tau_product: np.ndarray
    leverage: float
    a: float
    excluded: Tuple[int, ...]
    z_full: float
    degenerate: bool


def support(dec: SpectralDecomposition) -> np.ndarray:
    """Boolean mask of eigenbundles with strictly positive equilibrium quantity."""
    q = np.asarray(dec.q_eigen)
    scale = float(np.max(np.abs(q))) if q.size else 0.0
    return q > SUPPORT_TOL * max(scale, 1e-300)


def shadow_price_small(dec: SpectralDecomposition) -> float:
    """z = 1 / (2 + var(sigma)/2)."""
    return 1.0 / (2.0 + 0.5 * eigenvalue_variance(dec))


def restricted_shadow_price(dec: SpectralDecomposition, mask=None) -> Optional[float]:
    """z' = sum(1/lam) / sum(1/lam**2) over the bundles in ``mask``.

    ``mask`` defaults to the bundles with positive quantity. Returns None if
    the mask is empty.
    """
    if mask is None:
        mask = support(dec)
    mu = np.asarray(dec.mu)[mask]
    if mu.size == 0:
        return None
    return float(np.sum(mu) / np.sum(mu**2))


def scaled_revenue_targets(dec: SpectralDecomposition, z: float) -> np.ndarray:
    """Limit of a * q_l * tau_l per bundle: (z - lam) / lam**2 = (z - lam)(1 - sigma)**2."""
    lam = np.asarray(dec.lam)
    return (z - lam) / lam**2


def pigouvian_leverage(dec: SpectralDecomposition, n: Optional[int] = None) -> float:
    """Limit of a * (consumer-surplus gain): N var / (4 + var)."""
    if n is None:
        n = dec.n
    var = eigenvalue_variance(dec)
    return n * var / (4.0 + var)


def optimal_small_taxes(dec: SpectralDecomposition, a: float) -> SmallPlan:
    """Target taxes of the optimal small plan at risk aversion ``a``.

    Bundles with zero equilibrium quantity get no tax and are listed in
    ``excluded``; z is then computed over the remaining bundles.
    """
    if not a > 0 or not np.isfinite(a):
        raise InvalidRiskAversion(f"risk aversion must be positive and finite, got {a!r}")
    mask = support(dec)
    z_full = shadow_price_small(dec)
    degenerate = not bool(np.all(mask))
    if degenerate:
        z = restricted_shadow_price(dec, mask)
        if z is None:
            z = z_full
    else:
        z = z_full
    lam = np.asarray(dec.lam)
    q = np.asarray(dec.q_eigen)
    tau = np.zeros(dec.n)
    tau[mask] = (z - lam[mask]) / (a * lam[mask] ** 2 * q[mask])
    excluded = tuple(int(i) for i in np.flatnonzero(~mask))
    return SmallPlan(
        z=float(z),
        tau_eigen=tau,
        tau_product=from_eigenbasis(tau, dec),
        leverage=pigouvian_leverage(dec),
        a=float(a),
        excluded=excluded,
        z_full=float(z_full),
        degenerate=degenerate,
    )
