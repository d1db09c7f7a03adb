"""Analysis reports as plain dicts, plus a text rendering.

All spectral and plan quantities are in normalized units (own-price slopes
of -1); the ``scale`` vector converts them back (prices and taxes multiply
by ``scale``, quantities divide by it). Equilibrium figures are given in
both unit systems.
"""

import json
import warnings
from importlib import resources
from typing import Optional

import numpy as np

from .global_plan import optimal_global_plan
from .market import InteriorityWarning, MarketSpec, NormalizedMarket, normalize, solve_equilibrium
from .planner import NoiseModel, SimulationResult, simulate
from .small import optimal_small_taxes, pigouvian_leverage, scaled_revenue_targets, shadow_price_small
from .spectral import SpectralDecomposition, decompose, eigenvalue_variance

REPORT_VERSION = 1
ORDERING_NOTE = (
    "eigenbundles are numbered by ascending eigenvalue: bundle 1 has the most "
    "negative eigenvalue and the lowest pass-through"
)
NO_SCOPE_NOTE = "eigenvalue variance is zero: no scope for budget-balanced intervention"


def report_schema() -> dict:
    text = resources.files("eigenbundle").joinpath("schemas/report_schema.json").read_text()
    return json.loads(text)


def _list(x):
    return np.asarray(x, dtype=float).tolist()


class Analysis:
    """Shared pipeline: normalize, solve the untaxed equilibrium, decompose."""

    def __init__(self, spec: MarketSpec):
        self.spec = spec
        self.warnings = []
        self.notes = [ORDERING_NOTE]
        self.market: NormalizedMarket = normalize(spec)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", InteriorityWarning)
            self.eq = solve_equilibrium(self.market)
        self.warnings += [str(w.message) for w in caught if issubclass(w.category, InteriorityWarning)]
        self.dec: SpectralDecomposition = decompose(self.market.d_norm, self.eq.quantity)
        self.variance = eigenvalue_variance(self.dec)
        if not self.market.is_strict:
            self.warnings.append(
                "spillover matrix is only semidefinite: consumer surplus and the global plan are unavailable"
            )
        if self.variance < 1e-14:
            self.notes.append(NO_SCOPE_NOTE)

    def base(self) -> dict:
        m, eq, dec = self.market, self.eq, self.dec
        r = m.scale
        cs = eq.consumer_surplus
        return {
            "report_version": REPORT_VERSION,
            "label": self.spec.label,
            "n": m.n,
            "normalization": {
                "scale": _list(r),
                "d_norm": m.d_norm.tolist(),
                "beta_norm": _list(m.beta_norm),
                "cost_norm": _list(m.cost_norm),
            },
            "spectral": {
                "sigma": _list(dec.sigma),
                "lambda": _list(dec.lam),
                "mu": _list(dec.mu),
                "eigenbundles": dec.basis.T.tolist(),
                "q_eigen": _list(dec.q_eigen),
                "eigenvalue_variance": self.variance,
            },
            "equilibrium": {
                "interior": eq.interior,
                "consumer_surplus": cs,
                "normalized": {
                    "price": _list(eq.price),
                    "quantity": _list(eq.quantity),
                    "profit": _list(eq.profit),
                },
                "original": {
                    "price": _list(eq.price * r),
                    "quantity": _list(eq.quantity / r),
                    "profit": _list(eq.profit),
                },
            },
            "small_plan": None,
            "global_plan": None,
            "simulation": None,
            "warnings": list(self.warnings),
            "notes": list(self.notes),
        }

    def small_section(self, a: float) -> dict:
        plan = optimal_small_taxes(self.dec, a)
        if plan.degenerate:
            self.warnings.append(
                f"eigenbundle(s) {[i + 1 for i in plan.excluded]} have zero quantity and are left untaxed; "
                f"z is computed over the remaining bundles"
            )
        return {
            "risk_aversion": plan.a,
            "z": plan.z,
            "z_full_support": plan.z_full,
            "z_formula": shadow_price_small(self.dec),
            "degenerate": plan.degenerate,
            "excluded": [i + 1 for i in plan.excluded],
            "tau_eigen": _list(plan.tau_eigen),
            "tau_product": _list(plan.tau_product),
            "tau_original": _list(plan.tau_product * self.market.scale),
            "scaled_revenue_limit": _list(scaled_revenue_targets(self.dec, plan.z)),
            "leverage": pigouvian_leverage(self.dec),
            "pattern": ["tax" if t > 0 else "subsidy" if t < 0 else "none" for t in plan.tau_eigen],
        }

    def global_section(self) -> dict:
        plan = optimal_global_plan(self.market, self.dec)
        return {
            "z": plan.z,
            "bracket": list(plan.bracket),
            "tau_eigen": _list(plan.tau_eigen),
            "tau_product": _list(plan.tau_product),
            "tau_original": _list(plan.tau_product * self.market.scale),
            "q_post_eigen": _list(plan.q_post_eigen),
            "revenue_eigen": _list(plan.revenue_eigen),
            "budget_residual": plan.budget_residual,
            "cs_pre": plan.cs_pre,
            "cs_post": plan.cs_post,
            "cs_gain": plan.cs_gain,
        }


def analyze(spec: MarketSpec) -> dict:
    an = Analysis(spec)
    return an.base()


def small_report(spec: MarketSpec, a: float) -> dict:
    an = Analysis(spec)
    section = an.small_section(a)
    out = an.base()
    out["small_plan"] = section
    return out


def global_report(spec: MarketSpec) -> dict:
    an = Analysis(spec)
    section = an.global_section()
    out = an.base()
    out["global_plan"] = section
    return out


def simulation_report(
    spec: MarketSpec,
    tau_target: Optional[np.ndarray],
    noise: NoiseModel,
    a: float,
    n_samples: int,
    plan: Optional[str] = None,
    tau_units: str = "original",
) -> dict:
    """Simulate a target tax vector (or the small/global plan) under noise."""
    an = Analysis(spec)
    if plan == "small":
        section = an.small_section(a)
        tau = np.array(section["tau_product"])
    elif plan == "global":
        section = an.global_section()
        tau = np.array(section["tau_product"])
    else:
        section = None
        tau = np.asarray(tau_target, dtype=float)
        if tau_units == "original":
            tau = an.market.price_to_normalized(tau)
    result: SimulationResult = simulate(an.market, tau, noise, a, n_samples, dec=an.dec)
    out = an.base()
    if plan == "small":
        out["small_plan"] = section
    elif plan == "global":
        out["global_plan"] = section
    out["simulation"] = {
        "seed": noise.seed,
        "noise_variance": noise.variance,
        "noise_basis": noise.basis,
        "tau_target": _list(tau),
        **result.to_dict(),
    }
    return out


def _fmt(x) -> str:
    if x is None:
        return "n/a"
    if isinstance(x, (list, tuple)):
        return "(" + ", ".join(_fmt(v) for v in x) + ")"
    if isinstance(x, bool):
        return str(x)
    if isinstance(x, int):
        return str(x)
    return f"{x:.6g}"


def render_text(report: dict) -> str:
    lines = []
    add = lines.append
    add(f"market: {report['label'] or '(unlabelled)'}  n={report['n']}")
    add(f"scale r: {_fmt(report['normalization']['scale'])}")
    sp = report["spectral"]
    add("eigenbundles (ascending eigenvalue):")
    for ell, (s, lam, u, q) in enumerate(zip(sp["sigma"], sp["lambda"], sp["eigenbundles"], sp["q_eigen"]), 1):
        add(f"  {ell}: sigma={_fmt(s)} lambda={_fmt(lam)} q_eigen={_fmt(q)} u={_fmt(u)}")
    add(f"eigenvalue variance: {_fmt(sp['eigenvalue_variance'])}")
    eq = report["equilibrium"]
    add("equilibrium (normalized units):")
    add(f"  price    {_fmt(eq['normalized']['price'])}")
    add(f"  quantity {_fmt(eq['normalized']['quantity'])}")
    add(f"  profit   {_fmt(eq['normalized']['profit'])}")
    add(f"  consumer surplus {_fmt(eq['consumer_surplus'])}")
    sm = report.get("small_plan")
    if sm:
        add(f"small plan (a={_fmt(sm['risk_aversion'])}):")
        add(f"  z = {_fmt(sm['z'])}  (full-support formula {_fmt(sm['z_formula'])})")
        add(f"  tau_eigen   {_fmt(sm['tau_eigen'])}  {sm['pattern']}")
        add(f"  tau_product {_fmt(sm['tau_product'])}")
        add(f"  leverage    {_fmt(sm['leverage'])}")
    gp = report.get("global_plan")
    if gp:
        add("global plan:")
        add(f"  z = {_fmt(gp['z'])}")
        add(f"  tau_eigen     {_fmt(gp['tau_eigen'])}")
        add(f"  tau_product   {_fmt(gp['tau_product'])}")
        add(f"  revenue_eigen {_fmt(gp['revenue_eigen'])}")
        add(f"  consumer surplus {_fmt(gp['cs_pre'])} -> {_fmt(gp['cs_post'])}")
    sim = report.get("simulation")
    if sim:
        add(f"simulation (seed={sim['seed']}, samples={sim['n_samples']}, a={_fmt(sim['a'])}, "
            f"noise variance={_fmt(sim['noise_variance'])}, basis={sim['noise_basis']}):")
        add(f"  E[dC] = {sim['mean_dC']!r} +/- {sim['se_mean_dC']!r}")
        add(f"  Var[dC] = {sim['var_dC']!r} +/- {sim['se_var_dC']!r}")
        add(f"  E[R] = {sim['mean_revenue']!r} +/- {sim['se_mean_revenue']!r}")
        add(f"  W = {sim['objective']!r} +/- {sim['se_objective']!r}")
    for note in report["notes"]:
        add(f"note: {note}")
    for w in report["warnings"]:
        add(f"warning: {w}")
    return "\n".join(lines) + "\n"
