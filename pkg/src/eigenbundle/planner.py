"""Monte Carlo model of a risk-averse planner with noisy tax implementation.

The planner picks target taxes; realized taxes are the targets times
independent mean-one noise; the planner values W = E[dC] - (a/2) Var[dC]
subject to E[R] = 0. Every sample re-solves the exact linear-demand
equilibrium, so nothing here uses the eigenbundle closed forms.

Noise may hit product taxes (``basis="product"``) or eigenbundle taxes
(``basis="eigen"``). The closed-form small plan assumes the latter.
"""

from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np
from scipy import linalg as sla
from scipy import optimize

from .errors import InvalidRiskAversion, InvalidSampleCount, OptimizationFailure, DimensionMismatch
from .market import NormalizedMarket, solve_equilibrium
from .spectral import SpectralDecomposition, decompose

CHUNK = 8192


@dataclass(frozen=True)
class NoiseModel:
    """Uniform multiplicative noise with mean 1 and variance ``variance``.

    ``support_bound`` is recorded for completeness only; draws always lie in
    [1 - w, 1 + w] with w = sqrt(3 * variance).
    """

    variance: float = 1.0
    support_bound: Optional[float] = None
    distribution: str = "uniform"
    basis: str = "product"
    seed: int = 0

    def __post_init__(self):
        if not self.variance >= 0:
            raise ValueError(f"noise variance must be non-negative, got {self.variance!r}")
        if self.distribution != "uniform":
            raise ValueError(f"unsupported noise distribution {self.distribution!r}")
        if self.basis not in ("product", "eigen"):
            raise ValueError(f"noise basis must be 'product' or 'eigen', got {self.basis!r}")

    @property
    def half_width(self) -> float:
        return float(np.sqrt(3.0 * self.variance))

    def draw(self, n_samples: int, n: int, seed: Optional[int] = None) -> np.ndarray:
        """(n_samples, n) array of draws from independent, pre-split streams.

        Each block of ``CHUNK`` rows comes from its own child seed, so the
        result does not depend on how blocks are scheduled.
        """
        root = np.random.SeedSequence(self.seed if seed is None else seed)
        n_chunks = -(-n_samples // CHUNK)
        w = self.half_width
        blocks = []
        for k, child in enumerate(root.spawn(n_chunks)):
            rows = min(CHUNK, n_samples - k * CHUNK)
            rng = np.random.default_rng(child)
            blocks.append(1.0 + w * rng.uniform(-1.0, 1.0, size=(rows, n)))
        return np.concatenate(blocks, axis=0) if blocks else np.empty((0, n))


@dataclass(frozen=True)
class SimulationResult:
    mean_dC: float
    var_dC: float
    mean_revenue: float
    objective: float
    n_samples: int
    a: float
    se_mean_dC: float
    se_var_dC: float
    se_mean_revenue: float
    se_objective: float

    def to_dict(self) -> dict:
        return asdict(self)


def _moments(x: np.ndarray):
    n = x.size
    mean = float(np.mean(x))
    dev = x - mean
    var = float(np.sum(dev**2) / (n - 1))
    m4 = float(np.mean(dev**4))
    se_mean = float(np.sqrt(var / n))
    se_var = float(np.sqrt(max(m4 - var**2, 0.0) / n))
    return mean, var, se_mean, se_var


def _basis_for(m: NormalizedMarket, noise: NoiseModel, dec: Optional[SpectralDecomposition]):
    if noise.basis == "product":
        return np.eye(m.n)
    if dec is None:
        dec = decompose(m.d_norm, solve_equilibrium(m).quantity)
    return np.asarray(dec.basis)


def realized_taxes(tau_target, eta: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Rows are realized product-space tax vectors for each noise draw."""
    coords = basis.T @ np.asarray(tau_target, dtype=float)
    return (eta * coords) @ basis.T


def expected_revenue(m: NormalizedMarket, tau_target, noise_variance: float, basis: np.ndarray) -> float:
    """Exact E[R] under independent mean-one noise on the coordinates of ``basis``.

    With y = x * eta, R = q0.Vy + y.V^T K V.y and E[eta_i eta_j] = 1 + nu^2 [i = j].
    """
    d = m.d_norm
    k = d @ np.linalg.inv(np.eye(m.n) - d)
    k_y = basis.T @ k @ basis
    x = basis.T @ np.asarray(tau_target, dtype=float)
    q0 = solve_equilibrium(m).quantity
    return float((basis.T @ q0) @ x + x @ k_y @ x + noise_variance * np.sum(np.diag(k_y) * x**2))


def simulate(
    m: NormalizedMarket,
    tau_target,
    noise: NoiseModel,
    a: float,
    n_samples: int,
    dec: Optional[SpectralDecomposition] = None,
) -> SimulationResult:
    """Sample statistics of the consumer-surplus change and tax revenue.

    Each sample solves (I - D) p = -D beta + c + tau for its realized tax
    vector tau and evaluates C = q^T (-D)^{-1} q / 2 and R = <tau, q>.
    """
    if int(n_samples) != n_samples or n_samples < 2:
        raise InvalidSampleCount(f"need at least 2 samples, got {n_samples!r}")
    if not a >= 0:
        raise InvalidRiskAversion(f"risk aversion must be non-negative, got {a!r}")
    m.require_strict("consumer-surplus simulation")
    tau_target = np.asarray(tau_target, dtype=float)
    if tau_target.shape != (m.n,):
        raise DimensionMismatch(f"tau_target must have length {m.n}, got {tau_target.shape}")
    n_samples = int(n_samples)

    basis = _basis_for(m, noise, dec)
    eta = noise.draw(n_samples, m.n)
    taxes = realized_taxes(tau_target, eta, basis)

    # solve for the change from the untaxed equilibrium: dp = (I - D)^{-1} tau,
    # dq = D dp, so a zero tax gives exactly zero change
    d = m.d_norm
    lu = sla.lu_factor(np.eye(m.n) - d)
    d_price = sla.lu_solve(lu, taxes.T).T
    d_quantity = d_price @ d.T
    q0 = solve_equilibrium(m).quantity
    cho = sla.cho_factor(-d)
    b_dq = sla.cho_solve(cho, d_quantity.T).T
    # C(q0 + dq) - C(q0) = q0.B dq + dq.B dq / 2
    d_c = b_dq @ q0 + 0.5 * np.sum(d_quantity * b_dq, axis=1)
    revenue = np.sum(taxes * (q0[None, :] + d_quantity), axis=1)

    mean_dc, var_dc, se_mean_dc, se_var_dc = _moments(d_c)
    mean_r, _, se_mean_r, _ = _moments(revenue)
    return SimulationResult(
        mean_dC=mean_dc,
        var_dC=var_dc,
        mean_revenue=mean_r,
        objective=mean_dc - 0.5 * a * var_dc,
        n_samples=n_samples,
        a=float(a),
        se_mean_dC=se_mean_dc,
        se_var_dC=se_var_dc,
        se_mean_revenue=se_mean_r,
        # ignores the covariance between the two estimates
        se_objective=float(np.hypot(se_mean_dc, 0.5 * a * se_var_dc)),
    )


class SampledPlannerProblem:
    """The planner's objective and budget over a fixed set of noise draws.

    Linear demand makes the surplus change and revenue exact quadratics in the
    realized taxes:

        dC(tau) = g.tau + tau.H.tau / 2,   R(tau) = q0.tau + tau.K.tau

    with K = D (I - D)^{-1}, g = -(I - D)^{-1} q0 and H = K (-D)^{-1} K.
    Since realized coordinates are x * eta, sample means and variances are
    polynomials in x whose coefficients are empirical moments of eta up to
    order four; these are computed once, so evaluations do not scale with the
    sample count and equal the plain sample statistics up to rounding.

    Decision variables ``t`` are target coordinates in the noise basis scaled
    by ``a`` (x = t / a), which keeps the problem well conditioned as ``a``
    grows.
    """

    def __init__(self, m: NormalizedMarket, eta: np.ndarray, basis: np.ndarray, a: float):
        d = m.d_norm
        n = m.n
        inv_i_minus_d = np.linalg.inv(np.eye(n) - d)
        k = d @ inv_i_minus_d
        k = 0.5 * (k + k.T)
        h = k @ np.linalg.solve(-d, k)
        h = 0.5 * (h + h.T)
        q0 = solve_equilibrium(m).quantity

        self.a = float(a)
        self.basis = basis
        self.eta = eta
        self.g = basis.T @ (-inv_i_minus_d @ q0)
        self.h = basis.T @ h @ basis
        self.r = basis.T @ q0
        self.k = basis.T @ k @ basis

        n_s = eta.shape[0]
        self.n_samples = n_s
        pairs = (eta[:, :, None] * eta[:, None, :]).reshape(n_s, n * n)
        m1 = eta.mean(axis=0)
        m2 = (eta.T @ eta) / n_s
        m3 = ((pairs.T @ eta) / n_s).reshape(n, n, n)
        m4 = ((pairs.T @ pairs) / n_s).reshape(n, n, n, n)

        g, hh = self.g, self.h
        self.lin_mean = g * m1
        self.quad_mean = hh * m2
        self.quad_sq = np.outer(g, g) * m2
        self.cubic_sq = g[:, None, None] * hh[None, :, :] * m3
        self.quartic_sq = hh[:, :, None, None] * hh[None, None, :, :] * m4
        self.lin_rev = self.r * m1
        self.quad_rev = self.k * m2

    def sample_values(self, t):
        """Per-sample (dC, R) for scaled targets ``t``; used for cross-checks."""
        y = self.eta * (np.asarray(t, dtype=float) / self.a)
        dc = y @ self.g + 0.5 * np.sum(y * (y @ self.h), axis=1)
        rev = y @ self.r + np.sum(y * (y @ self.k), axis=1)
        return dc, rev

    def moments(self, x):
        """Sample mean and variance (ddof=1) of dC and mean of R at unscaled targets ``x``."""
        mean = self.lin_mean @ x + 0.5 * x @ self.quad_mean @ x
        second = (
            x @ self.quad_sq @ x
            + np.einsum("ijk,i,j,k->", self.cubic_sq, x, x, x)
            + 0.25 * np.einsum("ijkl,i,j,k,l->", self.quartic_sq, x, x, x, x)
        )
        n_s = self.n_samples
        var = max(second - mean**2, 0.0) * n_s / (n_s - 1)
        rev = self.lin_rev @ x + x @ self.quad_rev @ x
        return float(mean), float(var), float(rev)

    def evaluate(self, t):
        """Scaled objective a*W, scaled budget a*E[R], and their gradients in t."""
        a = self.a
        x = np.asarray(t, dtype=float) / a
        n_s = self.n_samples
        mean, _, rev = self.moments(x)
        second = (
            x @ self.quad_sq @ x
            + np.einsum("ijk,i,j,k->", self.cubic_sq, x, x, x)
            + 0.25 * np.einsum("ijkl,i,j,k,l->", self.quartic_sq, x, x, x, x)
        )
        var = (second - mean**2) * n_s / (n_s - 1)

        c3, c4 = self.cubic_sq, self.quartic_sq
        grad_mean = self.lin_mean + self.quad_mean @ x
        grad_second = (
            2.0 * self.quad_sq @ x
            + np.einsum("ijk,j,k->i", c3, x, x)
            + np.einsum("ijk,i,k->j", c3, x, x)
            + np.einsum("ijk,i,j->k", c3, x, x)
            + 0.25
            * (
                np.einsum("ijkl,j,k,l->i", c4, x, x, x)
                + np.einsum("ijkl,i,k,l->j", c4, x, x, x)
                + np.einsum("ijkl,i,j,l->k", c4, x, x, x)
                + np.einsum("ijkl,i,j,k->l", c4, x, x, x)
            )
        )
        grad_var = (grad_second - 2.0 * mean * grad_mean) * n_s / (n_s - 1)

        obj = a * mean - 0.5 * a**2 * var
        # chain rule through x = t / a
        grad_obj = grad_mean - 0.5 * a * grad_var
        budget = a * rev
        grad_budget = self.lin_rev + 2.0 * self.quad_rev @ x
        return float(obj), grad_obj, float(budget), grad_budget


@dataclass(frozen=True)
class PlannerOptimum:
    tau_target: np.ndarray
    tau_coords: np.ndarray
    objective: float
    mean_dC: float
    budget_residual: float
    basis: np.ndarray
    a: float
    n_starts: int
    n_converged: int


def _augmented_lagrangian(problem: SampledPlannerProblem, t0, tol_step, tol_budget, max_outer=40):
    t = np.array(t0, dtype=float)
    mult = 0.0
    rho = 1.0
    last_budget = np.inf

    def fun(x):
        obj, g_obj, budget, g_budget = problem.evaluate(x)
        val = -obj + mult * budget + 0.5 * rho * budget**2
        grad = -g_obj + (mult + rho * budget) * g_budget
        return val, grad

    for _ in range(max_outer):
        res = optimize.minimize(fun, t, jac=True, method="BFGS", options={"gtol": 1e-11, "maxiter": 2000})
        t_new = res.x
        _, _, budget, _ = problem.evaluate(t_new)
        step = float(np.max(np.abs(t_new - t)))
        t = t_new
        scale = max(float(np.max(np.abs(t))), 1e-12)
        if abs(budget) < tol_budget and step <= tol_step * scale:
            return t, True
        mult += rho * budget
        if abs(budget) > 0.25 * abs(last_budget):
            rho = min(rho * 10.0, 1e10)
        last_budget = budget
    _, _, budget, _ = problem.evaluate(t)
    return t, abs(budget) < tol_budget


def optimize_planner(
    m: NormalizedMarket,
    noise: NoiseModel,
    a: float,
    n_samples: int,
    seed: Optional[int] = None,
    dec: Optional[SpectralDecomposition] = None,
    n_starts: int = 3,
    tol_step: float = 1e-8,
    tol_budget: float = 1e-6,
) -> PlannerOptimum:
    """Maximize the common-random-number objective subject to E[R] = 0.

    Uses an augmented-Lagrangian penalty (penalty weight grows while the
    budget residual stalls) from ``n_starts`` starting points: the origin
    plus seeded random points. The best feasible result is returned; if it
    does not beat doing nothing, the zero plan is returned instead.

    Raises:
        OptimizationFailure: if no start reaches a feasible point.
    """
    if not a > 0:
        raise InvalidRiskAversion(f"risk aversion must be positive, got {a!r}")
    if int(n_samples) != n_samples or n_samples < 2:
        raise InvalidSampleCount(f"need at least 2 samples, got {n_samples!r}")
    m.require_strict("the planner's problem")
    basis = _basis_for(m, noise, dec)
    seed = noise.seed if seed is None else seed
    eta = noise.draw(int(n_samples), m.n, seed=seed)
    problem = SampledPlannerProblem(m, eta, basis, a)

    start_rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    starts = [np.zeros(m.n)] + [start_rng.normal(size=m.n) for _ in range(n_starts - 1)]
    results = []
    for t0 in starts:
        t, ok = _augmented_lagrangian(problem, t0, tol_step, tol_budget)
        if ok:
            obj, _, budget, _ = problem.evaluate(t)
            results.append((obj, t, budget))
    if not results:
        raise OptimizationFailure(
            "no start reached a budget-feasible point",
            diagnostics={"a": a, "n_samples": n_samples, "n_starts": n_starts},
        )
    obj, t, budget = max(results, key=lambda r: r[0])
    if obj < 0.0:
        obj, t, budget = 0.0, np.zeros(m.n), 0.0
    coords = t / a
    mean_dc, _, _ = problem.moments(coords)
    return PlannerOptimum(
        tau_target=basis @ coords,
        tau_coords=coords,
        objective=obj / a,
        mean_dC=mean_dc,
        budget_residual=budget / a,
        basis=basis,
        a=float(a),
        n_starts=n_starts,
        n_converged=len(results),
    )
