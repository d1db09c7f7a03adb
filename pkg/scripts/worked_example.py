"""Three-good example: global plan from rounded eigen-quantities and from a calibrated market.

    python scripts/worked_example.py
"""

import numpy as np

from eigenbundle import decompose, global_plan_from_eigen, normalize, optimal_global_plan, solve_equilibrium
from eigenbundle.families import calibrated_g_triangle, g_triangle


def show(title, plan):
    print(title)
    print(f"  z            {plan.z:.6f}")
    print(f"  tau_eigen    {np.round(plan.tau_eigen, 4).tolist()}")
    print(f"  q_post_eigen {np.round(plan.q_post_eigen, 4).tolist()}")
    print(f"  revenue      {np.round(plan.revenue_eigen, 4).tolist()}")
    print(f"  surplus      {plan.cs_pre:.4f} -> {plan.cs_post:.4f}")


def main():
    m = normalize(g_triangle(0.5))
    dec = decompose(m.d_norm, solve_equilibrium(m).quantity)
    print(f"pass-throughs at g = 0.5: {np.round(dec.lam, 5).tolist()}")
    show("rounded eigen-quantities (4.48, 0, 1.44):", global_plan_from_eigen([4.48, 0.0, 1.44], dec.lam))

    spec = calibrated_g_triangle(0.5, [1.51, 1.51, 4.2])
    m = normalize(spec)
    dec = decompose(m.d_norm, solve_equilibrium(m).quantity)
    print(f"\ncalibrated market: beta = {np.round(spec.beta, 4).tolist()}, q_eigen = {np.round(dec.q_eigen, 5).tolist()}")
    show("global plan, re-solved in product space:", optimal_global_plan(m, dec))

    m = normalize(g_triangle(0.5))
    dec = decompose(m.d_norm, solve_equilibrium(m).quantity)
    print(f"\nbeta = (10, 10, 15): q0 = {np.round(solve_equilibrium(m).quantity, 4).tolist()}")
    show("global plan:", optimal_global_plan(m, dec))


if __name__ == "__main__":
    main()
