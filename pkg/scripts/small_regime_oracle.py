"""Numerically optimized noisy-tax plans against the closed-form small plan.

Prints a * q_l * tau_l from the Monte Carlo planner and the closed-form
target (z - lam_l)(1 - sigma_l)^2, for each risk aversion and noise basis.

    python scripts/small_regime_oracle.py --samples 100000
"""

import argparse

import numpy as np

from eigenbundle import NoiseModel, decompose, normalize, optimal_small_taxes, optimize_planner, solve_equilibrium
from eigenbundle.families import calibrated_g_triangle, g_triangle
from eigenbundle.small import pigouvian_leverage, support


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--g", type=float, default=0.5)
    ap.add_argument("--quantity", help="calibrate beta to these untaxed quantities, e.g. 2.5,1.5,4.2")
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    if args.quantity:
        spec = calibrated_g_triangle(args.g, [float(x) for x in args.quantity.split(",")])
    else:
        spec = g_triangle(args.g)
    m = normalize(spec)
    dec = decompose(m.d_norm, solve_equilibrium(m).quantity)
    q = np.asarray(dec.q_eigen)
    inc = support(dec)
    print(f"q_eigen {np.round(q, 5).tolist()}  lambda {np.round(dec.lam, 5).tolist()}  "
          f"leverage {pigouvian_leverage(dec):.6f}")
    for basis in ("eigen", "product"):
        for a in (1e2, 1e3, 1e4):
            plan = optimal_small_taxes(dec, a)
            target = (plan.z - dec.lam) * (1 - dec.sigma) ** 2
            opt = optimize_planner(m, NoiseModel(basis=basis, seed=args.seed), a, args.samples, dec=dec)
            coords = dec.basis.T @ opt.tau_target
            got = a * q * coords
            err = np.max(np.abs(got[inc] / target[inc] - 1))
            print(f"{basis:>7} a={a:8.0f}  a*q*tau {np.round(got, 5).tolist()}  target "
                  f"{np.round(np.where(inc, target, 0), 5).tolist()}  max rel err {err:.4f}  "
                  f"a*E[dC] {a * opt.mean_dC:.5f}  a*W {a * opt.objective:.5f}")


if __name__ == "__main__":
    main()
