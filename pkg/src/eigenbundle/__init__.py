"""Eigenbundle analysis of differentiated Bertrand oligopolies."""

from .errors import *  # noqa: F401,F403
from .market import (
    Equilibrium,
    MarketSpec,
    NormalizedMarket,
    consumer_surplus,
    firm_profits,
    normalize,
    solve_equilibrium,
    solve_equilibrium_original,
)
from .spectral import (
    SpectralDecomposition,
    decompose,
    eigenvalue_variance,
    first_order_response,
    from_eigenbasis,
    to_eigenbasis,
)
from .small import (
    SmallPlan,
    optimal_small_taxes,
    pigouvian_leverage,
    restricted_shadow_price,
    scaled_revenue_targets,
    shadow_price_small,
)
from .global_plan import (
    GlobalPlan,
    apply_global_plan,
    global_plan_from_eigen,
    optimal_global_plan,
    optimal_global_taxes,
    shadow_price_global,
    shadow_residual,
)
from .planner import NoiseModel, SimulationResult, optimize_planner, simulate

__version__ = "0.1.0"
