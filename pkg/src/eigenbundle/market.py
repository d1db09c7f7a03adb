"""Linear-demand Bertrand oligopoly: market primitives, unit normalization and
equilibrium under per-unit taxes.

Quantities are rescaled so that every own-price slope equals -1; money units
never change, so prices, costs, intercepts and taxes scale by ``1 / r`` while
quantities scale by ``r``.
"""

from dataclasses import dataclass, field
from typing import Optional
import warnings

import numpy as np
from scipy import linalg as sla

from .errors import DimensionMismatch, InvalidMarket, NotNegativeDefinite, SingularMatrix

SYMMETRY_TOL = 1e-10
# eigenvalues within this (relative) band of zero count as zero
DEFINITENESS_TOL = 1e-12


class InteriorityWarning(UserWarning):
    """Equilibrium has a negative quantity or a negative markup."""


def _frozen(x) -> np.ndarray:
    arr = np.array(x, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


def symmetrize(m, name: str = "matrix") -> np.ndarray:
    """Return (M + M^T)/2, rejecting matrices whose asymmetry exceeds the tolerance."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidMarket(f"{name} has non-finite entries")
    asym = np.abs(m - m.T)
    if asym.max(initial=0.0) > SYMMETRY_TOL:
        i, j = np.unravel_index(np.argmax(asym), asym.shape)
        raise InvalidMarket(
            f"{name} is not symmetric: entries ({i + 1},{j + 1})={m[i, j]!r} "
            f"and ({j + 1},{i + 1})={m[j, i]!r}"
        )
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class MarketSpec:
    """Raw market primitives in the user's own units.

    Exactly one of ``b_matrix`` (quadratic-utility curvature, positive
    definite) or ``d_matrix`` (demand Jacobian dq/dp, negative
    semidefinite) must be given.
    """

    beta: np.ndarray
    cost: np.ndarray
    d_matrix: Optional[np.ndarray] = None
    b_matrix: Optional[np.ndarray] = None
    label: str = ""

    def __post_init__(self):
        if (self.d_matrix is None) == (self.b_matrix is None):
            raise InvalidMarket("exactly one of b_matrix / d_matrix must be given")
        beta = np.asarray(self.beta, dtype=float)
        cost = np.asarray(self.cost, dtype=float)
        if beta.ndim != 1 or cost.shape != beta.shape:
            raise DimensionMismatch(
                f"beta and cost must be vectors of equal length, got {beta.shape} and {cost.shape}"
            )
        n = beta.size
        if n == 0:
            raise InvalidMarket("market must contain at least one good")
        if not (np.all(np.isfinite(beta)) and np.all(np.isfinite(cost))):
            raise InvalidMarket("beta and cost must be finite")
        if np.any(beta <= 0):
            raise InvalidMarket(f"beta entries must be strictly positive, got {beta.tolist()}")
        if np.any(cost < 0):
            raise InvalidMarket(f"cost entries must be non-negative, got {cost.tolist()}")
        for name in ("d_matrix", "b_matrix"):
            m = getattr(self, name)
            if m is None:
                continue
            m = symmetrize(m, name)
            if m.shape != (n, n):
                raise DimensionMismatch(f"{name} must be {n}x{n}, got {m.shape}")
            object.__setattr__(self, name, _frozen(m))
        object.__setattr__(self, "beta", _frozen(beta))
        object.__setattr__(self, "cost", _frozen(cost))

    @property
    def n(self) -> int:
        return self.beta.size

    def spillover(self) -> np.ndarray:
        """The demand Jacobian D, computing -B^{-1} when only B was given."""
        if self.d_matrix is not None:
            return np.array(self.d_matrix)
        eig = np.linalg.eigvalsh(self.b_matrix)
        if eig[0] <= DEFINITENESS_TOL * max(1.0, abs(eig[-1])):
            raise SingularMatrix(
                f"b_matrix must be positive definite (smallest eigenvalue {eig[0]:.3e})"
            )
        return symmetrize(-np.linalg.inv(self.b_matrix), "d_matrix")


@dataclass(frozen=True)
class NormalizedMarket:
    """Market in units where diag(D) = -1.

    ``scale`` holds r_i = 1/sqrt(|D_ii|) with normalized quantities r*q and
    normalized prices p/r.
    """

    d_norm: np.ndarray
    beta_norm: np.ndarray
    cost_norm: np.ndarray
    scale: np.ndarray
    label: str = ""
    max_eigenvalue: float = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("d_norm", "beta_norm", "cost_norm", "scale"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        n = self.beta_norm.size
        if self.d_norm.shape != (n, n) or self.cost_norm.shape != (n,) or self.scale.shape != (n,):
            raise DimensionMismatch("inconsistent dimensions in NormalizedMarket")
        object.__setattr__(self, "max_eigenvalue", float(np.linalg.eigvalsh(self.d_norm)[-1]))

    @property
    def n(self) -> int:
        return self.beta_norm.size

    @property
    def is_strict(self) -> bool:
        """True when D is strictly negative definite."""
        return self.max_eigenvalue < -DEFINITENESS_TOL * self.n

    def require_strict(self, what: str = "this operation"):
        if not self.is_strict:
            raise NotNegativeDefinite(
                f"{what} requires a strictly negative definite spillover matrix "
                f"(largest eigenvalue {self.max_eigenvalue:.3e})"
            )

    # unit conversions between normalized and original units
    def price_to_original(self, p):
        return np.asarray(p, dtype=float) * self.scale

    def price_to_normalized(self, p):
        return np.asarray(p, dtype=float) / self.scale

    def quantity_to_original(self, q):
        return np.asarray(q, dtype=float) / self.scale

    def quantity_to_normalized(self, q):
        return np.asarray(q, dtype=float) * self.scale


@dataclass(frozen=True)
class Equilibrium:
    price: np.ndarray
    quantity: np.ndarray
    tax: np.ndarray
    cost: np.ndarray
    consumer_surplus: Optional[float]
    profit: np.ndarray
    interior: bool = True

    @property
    def revenue(self) -> float:
        return float(self.tax @ self.quantity)


def normalize(spec: MarketSpec) -> NormalizedMarket:
    """Rescale quantity units so the spillover matrix has diagonal -1.

    Semidefinite D is accepted; a positive eigenvalue or a non-negative
    diagonal entry raises :class:`NotNegativeDefinite`.
    """
    d = spec.spillover()
    eig = np.linalg.eigvalsh(d)
    scale_ref = max(1.0, float(np.max(np.abs(eig))))
    if eig[-1] > DEFINITENESS_TOL * scale_ref * spec.n:
        raise NotNegativeDefinite(
            f"spillover matrix has a positive eigenvalue {eig[-1]:.6g}"
        )
    diag = np.diag(d)
    if np.any(diag >= 0):
        bad = int(np.argmax(diag >= 0))
        raise NotNegativeDefinite(
            f"own-price slope D[{bad + 1},{bad + 1}] = {diag[bad]!r} must be negative"
        )
    r = 1.0 / np.sqrt(-diag)
    d_norm = r[:, None] * d * r[None, :]
    d_norm = 0.5 * (d_norm + d_norm.T)
    np.fill_diagonal(d_norm, -1.0)
    return NormalizedMarket(
        d_norm=d_norm,
        beta_norm=spec.beta / r,
        cost_norm=spec.cost / r,
        scale=r,
        label=spec.label,
    )


def _as_tax(tax, n: int) -> np.ndarray:
    if tax is None:
        return np.zeros(n)
    tax = np.asarray(tax, dtype=float)
    if tax.shape != (n,):
        raise DimensionMismatch(f"tax must have length {n}, got shape {tax.shape}")
    return tax


def _check_interior(price, quantity, cost, tax) -> bool:
    interior = bool(np.all(quantity >= 0) and np.all(price >= cost + tax))
    if not interior:
        warnings.warn(
            "equilibrium is not interior (negative quantity or markup); "
            "linear-demand formulas are applied regardless",
            InteriorityWarning,
            stacklevel=3,
        )
    return interior


def solve_equilibrium(m: NormalizedMarket, tax=None) -> Equilibrium:
    """Bertrand equilibrium in normalized units: (I - D) p = -D beta + c + tax."""
    n = m.n
    tax = _as_tax(tax, n)
    d = m.d_norm
    lhs = np.eye(n) - d
    rhs = -d @ m.beta_norm + m.cost_norm + tax
    try:
        lu = sla.lu_factor(lhs, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SingularMatrix(f"I - D cannot be factorized: {exc}") from exc
    if np.min(np.abs(np.diag(lu[0]))) < 1e-14:
        raise SingularMatrix("I - D is singular")
    price = sla.lu_solve(lu, rhs)
    quantity = -d @ (m.beta_norm - price)
    interior = _check_interior(price, quantity, m.cost_norm, tax)
    cs = consumer_surplus(quantity, m) if m.is_strict else None
    profit = quantity * (price - m.cost_norm - tax)
    return Equilibrium(
        price=_frozen(price),
        quantity=_frozen(quantity),
        tax=_frozen(tax),
        cost=_frozen(m.cost_norm),
        consumer_surplus=cs,
        profit=_frozen(profit),
        interior=interior,
    )


def solve_equilibrium_original(spec: MarketSpec, tax=None) -> Equilibrium:
    """Equilibrium in the spec's own units, without any normalization.

    The first-order conditions q_i + D_ii (p_i - c_i - tax_i) = 0 with
    q = -D (beta - p) give (L - D) p = -D beta + L (c + tax), L = diag(-D_ii).
    """
    d = spec.spillover()
    n = spec.n
    tax = _as_tax(tax, n)
    own = -np.diag(d)
    lhs = np.diag(own) - d
    rhs = -d @ spec.beta + own * (spec.cost + tax)
    try:
        price = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(f"equilibrium system is singular: {exc}") from exc
    quantity = -d @ (spec.beta - price)
    interior = _check_interior(price, quantity, spec.cost, tax)
    eig = np.linalg.eigvalsh(d)
    cs = None
    if eig[-1] < -DEFINITENESS_TOL * n * max(1.0, abs(eig[0])):
        cs = 0.5 * float(quantity @ np.linalg.solve(-d, quantity))
    profit = quantity * (price - spec.cost - tax)
    return Equilibrium(
        price=_frozen(price),
        quantity=_frozen(quantity),
        tax=_frozen(tax),
        cost=_frozen(spec.cost),
        consumer_surplus=cs,
        profit=_frozen(profit),
        interior=interior,
    )


def consumer_surplus(q, m: NormalizedMarket) -> float:
    """C = q^T B q / 2 with B = (-D)^{-1}."""
    m.require_strict("consumer surplus")
    q = np.asarray(q, dtype=float)
    if q.shape != (m.n,):
        raise DimensionMismatch(f"q must have length {m.n}, got shape {q.shape}")
    cho = sla.cho_factor(-m.d_norm)
    return 0.5 * float(q @ sla.cho_solve(cho, q))


def firm_profits(eq: Equilibrium) -> np.ndarray:
    """Per-firm profit q_i (p_i - c_i - tax_i)."""
    return eq.quantity * (eq.price - eq.cost - eq.tax)
