"""Generators for the standard three-product example markets."""

import numpy as np

from .errors import RangeError
from .market import MarketSpec

G_MAX = 1.0 / np.sqrt(2.0)
DEFAULT_BETA = (10.0, 10.0, 15.0)
DEFAULT_COST = (0.0, 0.0, 0.0)


def g_triangle(g: float, sign: str = "complements", beta=DEFAULT_BETA, cost=DEFAULT_COST, strict: bool = False) -> MarketSpec:
    """Goods 1 and 2 independent, good 3 coupled to both with strength |g|.

    ``sign="complements"`` (consumption complements) puts -|g| off the
    diagonal, ``"substitutes"`` puts +|g|. Negative semidefiniteness needs
    |g| <= 1/sqrt(2); ``strict`` demands |g| < 1/sqrt(2).
    """
    if sign not in ("complements", "substitutes"):
        raise ValueError(f"sign must be 'complements' or 'substitutes', got {sign!r}")
    g = abs(float(g))
    if g > G_MAX + 1e-15 or (strict and g >= G_MAX - 1e-15):
        bound = "<" if strict else "<="
        raise RangeError(f"|g| = {g!r} violates |g| {bound} 1/sqrt(2) = {float(G_MAX)!r}")
    off = -g if sign == "complements" else g
    d = np.array([[-1.0, 0.0, off], [0.0, -1.0, off], [off, off, -1.0]])
    label = f"g-triangle g={g!r} ({sign})"
    return MarketSpec(beta=np.asarray(beta, float), cost=np.asarray(cost, float), d_matrix=d, label=label)


def calibrated_g_triangle(g: float, quantity, sign: str = "complements", cost=DEFAULT_COST) -> MarketSpec:
    """g-triangle whose untaxed equilibrium quantities equal ``quantity``.

    In normalized units the equilibrium satisfies q = p - c and
    q = -D (beta - p), hence beta = c + (I - D^{-1}) q.
    """
    shape = g_triangle(g, sign, strict=True)
    d = np.array(shape.d_matrix)
    q = np.asarray(quantity, dtype=float)
    cost = np.asarray(cost, dtype=float)
    beta = cost + q - np.linalg.solve(d, q)
    spec = MarketSpec(beta=beta, cost=cost, d_matrix=d, label=f"{shape.label} calibrated to q={q.tolist()}")
    return spec


def hub_triangle(beta=DEFAULT_BETA, cost=DEFAULT_COST) -> MarketSpec:
    """Two independent goods, each complementary to a third, at maximal coupling."""
    spec = g_triangle(G_MAX, "complements", beta, cost)
    d = np.array(spec.d_matrix)
    d[0, 2] = d[1, 2] = d[2, 0] = d[2, 1] = -1.0 / np.sqrt(2.0)
    return MarketSpec(beta=spec.beta, cost=spec.cost, d_matrix=d, label="three-product triangle (maximal complementarity)")


def independent(n: int = 3, beta=None, cost=None) -> MarketSpec:
    beta = np.full(n, 10.0) if beta is None else np.asarray(beta, float)
    cost = np.zeros(n) if cost is None else np.asarray(cost, float)
    return MarketSpec(beta=beta, cost=cost, d_matrix=-np.eye(n), label="independent goods")


FAMILIES = {
    "g-triangle": g_triangle,
    "calibrated-g-triangle": calibrated_g_triangle,
    "triangle-3.2": hub_triangle,
    "hub-triangle": hub_triangle,
    "independent": independent,
}
