"""Exact optimal budget-balanced taxes under linear demand.

With pre-intervention eigen-quantities q0 and pass-throughs lam, the optimal
eigenbundle taxes are

    tau_l = q0_l (z - lam_l) / ((1 - lam_l)(2z - lam_l))

where the shadow price z > 0 is the unique root of

    sum_l q0_l**2 (z - lam_l) / ((1 - lam_l)(2z - lam_l)**2) = 0.

The root lies above lam*/2 (lam* = largest pass-through among bundles with
q0 != 0), where the left side diverges to -inf, and the left side is
positive for large z, so plain bisection on that bracket is safe.
"""

from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .errors import AllQuantitiesZero, ConsistencyFailure, DimensionMismatch, NotStrictlyStable
from .market import NormalizedMarket, consumer_surplus, solve_equilibrium
from .spectral import SpectralDecomposition, from_eigenbasis, to_eigenbasis

ZERO_TOL = 1e-12
BRACKET_EPS = 1e-12
# bisect until the bracket stops shrinking; |dz| < 1e-10 alone leaves
# budget residuals near 1e-7 when taxes are large
Z_TOL = 0.0
CONSISTENCY_TOL = 1e-6


@dataclass(frozen=True)
class GlobalPlan:
    """Optimal plan in normalized units.

    ``q_post_eigen`` comes from the closed-form post-tax quantities;
    ``q_post_resolved`` (filled by :func:`apply_global_plan`) from re-solving
    the market equilibrium under ``tau_product``.
    """

    z: float
    tau_eigen: np.ndarray
    tau_product: np.ndarray
    q_post_eigen: np.ndarray
    revenue_eigen: np.ndarray
    cs_pre: float
    cs_post: float
    bracket: Tuple[float, float]
    q_post_resolved: Optional[np.ndarray] = None
    budget_residual: Optional[float] = None

    @property
    def cs_gain(self) -> float:
        return self.cs_post - self.cs_pre


def _check_inputs(q0_eigen, lam):
    q0 = np.asarray(q0_eigen, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if q0.ndim != 1 or q0.shape != lam.shape:
        raise DimensionMismatch(f"q0_eigen and lam must be equal-length vectors, got {q0.shape}, {lam.shape}")
    if np.any(lam <= 0) or np.any(lam >= 1 - 1e-12):
        raise NotStrictlyStable(
            "every pass-through must lie strictly inside (0, 1); a pass-through of 1 "
            "means a zero eigenvalue (semidefinite market), use the small-intervention plan"
        )
    scale = float(np.max(np.abs(q0))) if q0.size else 0.0
    if scale == 0.0:
        raise AllQuantitiesZero("all pre-intervention eigen-quantities are zero")
    active = np.abs(q0) > ZERO_TOL * scale
    return np.where(active, q0, 0.0), lam, active


def shadow_residual(z: float, q0_eigen, lam) -> float:
    """Left side of the shadow-price equation at ``z``."""
    q0 = np.asarray(q0_eigen, dtype=float)
    lam = np.asarray(lam, dtype=float)
    return float(np.sum(q0**2 * (z - lam) / ((1.0 - lam) * (2.0 * z - lam) ** 2)))


def shadow_price_global(q0_eigen, lam, xtol: float = Z_TOL):
    """Root-find the shadow price by bisection.

    Returns:
        (z, bracket): the root and the initial sign-change interval.
    """
    q0, lam, active = _check_inputs(q0_eigen, lam)
    lam_active = lam[active]
    if np.ptp(lam_active) <= 1e-15:
        # one pass-through level: the only vanishing term is z = lam
        z = float(lam_active[0])
        return z, (z, z)

    lam_star = float(np.max(lam[active]))
    lo = 0.5 * lam_star * (1.0 + BRACKET_EPS)
    hi = float(np.max(lam))
    f = lambda z: shadow_residual(z, q0, lam)  # noqa: E731
    f_lo = f(lo)
    if not f_lo < 0:
        raise ConsistencyFailure(f"shadow equation not negative at lower bracket end {lo!r}")
    while f(hi) < 0:
        hi *= 2.0
        if hi > 1e12:
            raise ConsistencyFailure("could not bracket the shadow price from above")
    bracket = (lo, hi)

    a, b = lo, hi
    while b - a > xtol:
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        if f(mid) < 0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b), bracket


def optimal_global_taxes(q0_eigen, lam, z: float) -> np.ndarray:
    """Eigenbundle taxes q0 (z - lam) / ((1 - lam)(2z - lam)); zero where q0 = 0."""
    q0 = np.asarray(q0_eigen, dtype=float)
    lam = np.asarray(lam, dtype=float)
    tau = np.zeros_like(q0)
    nz = q0 != 0
    tau[nz] = q0[nz] * (z - lam[nz]) / ((1.0 - lam[nz]) * (2.0 * z - lam[nz]))
    return tau


def global_plan_from_eigen(q0_eigen, lam, basis=None) -> GlobalPlan:
    """Solve the plan from eigen-space data alone.

    Consumer surplus uses C = -1/2 sum q_l**2 / sigma_l with sigma = 1 - 1/lam.
    ``basis`` (the eigenbundle matrix) is needed only for product-space taxes.
    """
    q0, lam, _ = _check_inputs(q0_eigen, lam)
    z, bracket = shadow_price_global(q0, lam)
    tau = optimal_global_taxes(q0, lam, z)
    q_post = q0 * z / (2.0 * z - lam)
    sigma = 1.0 - 1.0 / lam
    cs = lambda q: float(-0.5 * np.sum(q**2 / sigma))  # noqa: E731
    tau_product = tau if basis is None else np.asarray(basis) @ tau
    return GlobalPlan(
        z=float(z),
        tau_eigen=tau,
        tau_product=tau_product,
        q_post_eigen=q_post,
        revenue_eigen=q_post * tau,
        cs_pre=cs(q0),
        cs_post=cs(q_post),
        bracket=bracket,
    )


def apply_global_plan(m: NormalizedMarket, dec: SpectralDecomposition, plan: GlobalPlan) -> GlobalPlan:
    """Check a plan against the market by re-solving the taxed equilibrium.

    Fills ``q_post_resolved`` and ``budget_residual`` and recomputes
    ``cs_pre``/``cs_post`` from product-space quantities.

    Raises:
        ConsistencyFailure: if closed-form and re-solved quantities differ.
    """
    m.require_strict("the global plan")
    tau_product = from_eigenbasis(plan.tau_eigen, dec)
    pre = solve_equilibrium(m)
    post = solve_equilibrium(m, tau_product)
    resolved = to_eigenbasis(post.quantity, dec)
    scale = max(1.0, float(np.max(np.abs(resolved))))
    gap = float(np.max(np.abs(resolved - plan.q_post_eigen)))
    if gap > CONSISTENCY_TOL * scale:
        raise ConsistencyFailure(
            f"closed-form post-tax quantities differ from re-solved equilibrium by {gap:.3e}"
        )
    return replace(
        plan,
        tau_product=tau_product,
        q_post_resolved=resolved,
        budget_residual=float(tau_product @ post.quantity),
        cs_pre=consumer_surplus(pre.quantity, m),
        cs_post=consumer_surplus(post.quantity, m),
    )


def optimal_global_plan(m: NormalizedMarket, dec: SpectralDecomposition) -> GlobalPlan:
    """Optimal plan for a market, verified against the re-solved equilibrium."""
    m.require_strict("the global plan")
    plan = global_plan_from_eigen(dec.q_eigen, dec.lam, dec.basis)
    return apply_global_plan(m, dec, plan)
