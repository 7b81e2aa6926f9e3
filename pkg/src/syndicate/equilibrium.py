"""Best responses on the probability simplex and the asymptotic game.

All optimizers minimize a smooth convex objective over the simplex with a
spectral projected gradient: Barzilai-Borwein step lengths, Euclidean
projection, and a nonmonotone Armijo backtracking line search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .exact import binom_pmf_row, expected_win_exact
from .model import (
    PROB_TOL,
    CrowdStrategy,
    DomainError,
    LotteryConfig,
    SyndicateStrategy,
    check_simplex,
    uniform,
)

FOC_TOL = 1e-10
MAX_ITER = 100_000
PERTURBATION = 1e-3


class ValidationError(DomainError):
    pass


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto ``{x >= 0, sum x = 1}`` (sort-based)."""
    v = np.asarray(v, dtype=float)
    n = v.size
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, n + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


@dataclass
class OptimizerReport:
    argmin_vector: np.ndarray
    multiplier: float
    residual: float
    iterations: int
    converged: bool
    objective: float = math.nan
    certified: Optional[bool] = None
    notes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "argmin_vector": [float(v) for v in self.argmin_vector],
            "multiplier": self.multiplier,
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "objective": self.objective,
            "certified": self.certified,
        }


def kkt_residual(x: np.ndarray, g: np.ndarray) -> tuple[float, float]:
    """Spread of the gradient over the support above its overall minimum.

    Zero exactly at a minimizer over the simplex. Returns (residual, multiplier).
    """
    support = x > 0
    gamma = float(g.min())
    return float(g[support].max() - gamma), float(g[support].mean())


def minimize_on_simplex(
    fun: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    x0,
    tol: float = FOC_TOL,
    max_iter: int = MAX_ITER,
    memory: int = 10,
) -> OptimizerReport:
    x = project_simplex(x0)
    g = grad(x)
    f = fun(x)
    history = [f]
    lam_min, lam_max = 1e-12, 1e12
    step = float(np.max(np.abs(project_simplex(x - g) - x)))
    lam = min(lam_max, max(lam_min, 1.0 / step)) if step > 0 else 1.0
    it = 0
    res, mult = kkt_residual(x, g)
    while res > tol and it < max_iter:
        d = project_simplex(x - lam * g) - x
        # d sums to zero, so centering g only removes cancellation error
        gtd = float((g - g.mean()) @ d)
        if gtd >= 0 or not np.any(d):
            break  # no descent available at working precision
        f_ref = max(history[-memory:])
        # allowance for rounding in f; below it decrease is judged by the gradient
        slack = 64 * np.finfo(float).eps * max(1.0, abs(f_ref))
        alpha = 1.0
        while True:
            x_new = x + alpha * d
            f_new = fun(x_new)
            if f_new <= f_ref + 1e-4 * alpha * gtd + slack or alpha < 1e-20:
                break
            alpha *= 0.5
        g_new = grad(x_new)
        s_vec, y_vec = x_new - x, g_new - g
        sty = float(s_vec @ (y_vec - y_vec.mean()))
        lam = min(lam_max, max(lam_min, float(s_vec @ s_vec) / sty)) if sty > 0 else lam_max
        x, g, f = x_new, g_new, f_new
        history.append(f)
        it += 1
        res, mult = kkt_residual(x, g)
    x = np.maximum(x, 0.0)
    x = x / x.sum()
    return OptimizerReport(x, mult, res, it, res <= tol, objective=float(fun(x)))


def perturbation_certificate(
    fun: Callable[[np.ndarray], float], x: np.ndarray, eps: float = PERTURBATION
) -> bool:
    """True when every re-projected ``+-eps`` coordinate move raises ``fun``."""
    base = fun(x)
    for i in range(x.size):
        for sign in (1.0, -1.0):
            y = x.copy()
            y[i] += sign * eps
            y = project_simplex(y)
            if np.allclose(y, x, rtol=0, atol=1e-15):
                continue
            if not fun(y) > base:
                return False
    return True


# -- finite crowd against s distinct tickets ---------------------------------


def kernel_value(q, c: int) -> np.ndarray:
    """``(1 - (1 - q)^(c+1)) / q`` with its limit ``c + 1`` at ``q = 0``."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    out = np.full(q.shape, float(c + 1))
    pos = q > 0
    qp = q[pos]
    with np.errstate(divide="ignore"):
        out[pos] = -np.expm1((c + 1) * np.log1p(-qp)) / qp
    return out


def kernel_derivative(q, c: int) -> np.ndarray:
    """Derivative of ``kernel_value`` as ``-(c+1) c E[1/((K+1)(K+2))]``, ``K ~ Bin(c-1, q)``."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    k = np.arange(c, dtype=float)
    weights = 1.0 / ((k + 1) * (k + 2))
    return np.array([-(c + 1) * c * math.fsum(binom_pmf_row(c - 1, qi) * weights) for qi in q])


class KernelProfile(NamedTuple):
    values: np.ndarray
    first_diff: np.ndarray
    second_diff: np.ndarray


def convexity_kernel(q, c: int) -> KernelProfile:
    """Kernel values on the grid ``q`` with first and second finite differences."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if np.any((q <= 0) | (q >= 1)):
        raise DomainError("kernel grid must lie strictly inside (0, 1)")
    if c < 2:
        raise DomainError("kernel analysis needs c >= 2")
    vals = kernel_value(q, c)
    return KernelProfile(vals, np.diff(vals), np.diff(vals, n=2))


def crowd_objective(t: int, c: int, s: int):
    """Syndicate return of ``s`` distinct tickets as a function of the crowd law."""
    scale = (c + s) / ((c + 1) * t * t)

    def fun(q):
        return scale * math.fsum(kernel_value(q, c)) - 1.0

    def grad(q):
        return scale * kernel_derivative(q, c)

    return fun, grad


def minimize_return_over_crowd(
    t: int, c: int, s: int, start=None, tol: float = FOC_TOL, max_iter: int = MAX_ITER
) -> OptimizerReport:
    """Crowd law minimizing the return of ``s`` distinct tickets (equiprobable lottery)."""
    if not 1 <= s <= t:
        raise DomainError(f"need 1 <= s <= t, got s={s}, t={t}")
    if c < 2:
        raise DomainError("need c >= 2")
    fun, grad = crowd_objective(t, c, s)
    if t == 1:
        return OptimizerReport(np.ones(1), 0.0, 0.0, 0, True, objective=fun(np.ones(1)))
    x0 = uniform(t) if start is None else np.asarray(start, dtype=float)
    rep = minimize_on_simplex(fun, grad, x0, tol=tol, max_iter=max_iter)
    rep.certified = perturbation_certificate(fun, rep.argmin_vector)
    return rep


# -- asymptotic game ----------------------------------------------------------


@dataclass(frozen=True)
class AsymptoticConfig:
    """Limits ``u = c/s`` and ``a_rate = a/s`` as both stakes grow."""

    u: float
    a_rate: float = 0.0
    x: float = 0.0

    def __post_init__(self):
        if not self.u >= 0:
            raise DomainError(f"u must be >= 0, got {self.u!r}")
        if not self.a_rate >= 0:
            raise DomainError("a_rate must be >= 0")
        if not 0 <= self.x < 1:
            raise DomainError("x must lie in [0, 1)")

    @property
    def pool_rate(self) -> float:
        """Jackpot per unit of syndicate stake."""
        return self.a_rate + (1.0 - self.x) * (1.0 + self.u)


class AsymptoticReturns(NamedTuple):
    syndicate_return: float
    crowd_return: Optional[float]


def asymptotic_return(p, r, q, cfg: AsymptoticConfig) -> AsymptoticReturns:
    """Large-stake limits of syndicate and crowd returns.

    Syndicate: ``pool_rate * sum_i p_i r_i / (r_i + u q_i) - 1``. The crowd
    return splits the same pool with shares ``u q_i / (r_i + u q_i)``, so
    ``(1 + R_s) + u (1 + R_c) = pool_rate`` whenever the pool is always won.
    """
    p, r, q = (np.asarray(v, dtype=float) for v in (p, r, q))
    for name, vec in (("p", p), ("r", r), ("q", q)):
        check_simplex(vec, name)
    u = cfg.u
    denom = r + u * q
    if np.any((denom == 0) & (p > 0)):
        raise DomainError("a ticket with p_i > 0 has zero total stake")
    live = denom > 0
    syn = math.fsum(p[live] * r[live] / denom[live])
    syn_ret = cfg.pool_rate * syn - 1.0
    crowd_ret = None
    if u > 0:
        crowd = math.fsum(p[live] * q[live] / denom[live])
        crowd_ret = cfg.pool_rate * crowd - 1.0
    return AsymptoticReturns(syn_ret, crowd_ret)


def asymptotic_best_response(
    p, cfg: AsymptoticConfig, side: str = "crowd", start=None,
    tol: float = FOC_TOL, max_iter: int = MAX_ITER,
) -> OptimizerReport:
    """Best reply of one side when the other plays ``p``.

    ``side="crowd"`` minimizes the syndicate's asymptotic return over ``q``
    with ``r = p``; ``side="syndicate"`` maximizes it over ``r`` with ``q = p``.
    Both objectives are strictly convex (after sign), so the reply is unique.
    """
    p = np.asarray(p, dtype=float)
    check_simplex(p, "p", strictly_positive=True)
    if p.size < 2:
        raise DomainError("need t >= 2")
    u = cfg.u
    if not u > 0:
        raise DomainError("need u > 0")
    if side == "crowd":
        def fun(q):
            return cfg.pool_rate * math.fsum(p * p / (p + u * q)) - 1.0

        def grad(q):
            return -cfg.pool_rate * u * p * p / (p + u * q) ** 2
    elif side == "syndicate":
        def fun(r):
            return -(cfg.pool_rate * math.fsum(p * r / (r + u * p)) - 1.0)

        def grad(r):
            return -cfg.pool_rate * u * p * p / (r + u * p) ** 2
    else:
        raise DomainError(f"side must be 'crowd' or 'syndicate', got {side!r}")
    x0 = uniform(p.size) if start is None else np.asarray(start, dtype=float)
    rep = minimize_on_simplex(fun, grad, x0, tol=tol, max_iter=max_iter)
    rep.certified = perturbation_certificate(fun, rep.argmin_vector)
    return rep


class WinningCondition(NamedTuple):
    holds: bool
    bound: float


def winning_condition(a: float, x: float, s: float, c: float) -> WinningCondition:
    """Lower bound ``s (a/(s+c) - x)`` on the proportional-stake gain.

    For ``c >= 2`` the exact gain strictly exceeds the bound.
    """
    if not s > 0:
        raise DomainError("need s > 0")
    bound = s * (a / (s + c) - x)
    return WinningCondition(bound >= 0, bound)


# -- crowd risk attitudes -----------------------------------------------------


@dataclass(frozen=True)
class RiskProfile:
    """Multipliers by probability rank (most likely ticket first)."""

    u_weights: np.ndarray
    kind: str

    def __post_init__(self):
        u = np.array(self.u_weights, dtype=float).ravel()
        u.setflags(write=False)
        object.__setattr__(self, "u_weights", u)
        if u.size < 2:
            raise ValidationError("a risk profile needs at least two ranks")
        if np.any(u < 0):
            raise ValidationError("multipliers must be nonnegative")
        d = np.diff(u)
        if self.kind == "risk_seeking":
            if np.any(d < 0):
                raise ValidationError("risk_seeking: multipliers must be nondecreasing")
            if not u[0] < 1:
                raise ValidationError("risk_seeking: first multiplier must be < 1")
            if not u[-1] > 1:
                raise ValidationError("risk_seeking: last multiplier must be > 1")
        elif self.kind == "risk_averse":
            if np.any(d > 0):
                raise ValidationError("risk_averse: multipliers must be nonincreasing")
            if not u[0] > 1:
                raise ValidationError("risk_averse: first multiplier must be > 1")
            if not u[-1] < 1:
                raise ValidationError("risk_averse: last multiplier must be < 1")
        else:
            raise ValidationError(f"unknown kind {self.kind!r}")


def probability_ranks(p) -> np.ndarray:
    """Ticket indices from most to least likely; ties keep index order."""
    return np.argsort(-np.asarray(p, dtype=float), kind="stable")


def build_risk_profile(p, profile: RiskProfile) -> np.ndarray:
    """Crowd law ``q`` with ``q_(i) = p_(i) u_(i)`` in ticket order."""
    p = np.asarray(p, dtype=float)
    u = profile.u_weights
    if u.size != p.size:
        raise ValidationError(f"profile has {u.size} ranks for {p.size} tickets")
    order = probability_ranks(p)
    q = np.empty_like(p)
    q[order] = p[order] * u
    total = math.fsum(q)
    if abs(total - 1.0) > PROB_TOL:
        raise ValidationError(f"sum of q is {total!r}, must be 1 within {PROB_TOL}")
    return q


def random_risk_profile(p, kind: str, rng: np.random.Generator) -> RiskProfile:
    """A random valid profile for ``p``: centred sorted noise, scaled to keep ``u >= 0``."""
    p = np.asarray(p, dtype=float)
    ranked = p[probability_ranks(p)]
    w = np.sort(rng.random(p.size))
    while w[-1] - w[0] < 1e-3:
        w = np.sort(rng.random(p.size))
    w = w - math.fsum(ranked * w)
    # largest scale keeping every multiplier nonnegative, then back off
    limit = 1.0 / max(-w.min(), w.max())
    scale = rng.uniform(0.05, 0.95) * limit
    u = 1.0 + scale * w if kind == "risk_seeking" else 1.0 - scale * w
    # absorb the O(eps) sum error into the largest-probability rank
    u[0] += (1.0 - math.fsum(ranked * u)) / ranked[0]
    return RiskProfile(u, kind)


# -- equiprobability check ----------------------------------------------------


@dataclass
class OptimalityReport:
    baseline_gain: float
    sample_gains: np.ndarray
    samples: np.ndarray
    baseline_is_max: bool

    @property
    def max_sample_gain(self) -> float:
        return float(self.sample_gains.max()) if self.sample_gains.size else -math.inf


def proportional_gain(p, s: float, c: int, a: float = 0.0, x: float = 0.0) -> float:
    """Exact gain when syndicate and crowd both bet proportionally to ``p``."""
    p = np.asarray(p, dtype=float)
    cfg = LotteryConfig(p.size, p, a, x)
    return expected_win_exact(cfg, SyndicateStrategy(s, p), CrowdStrategy(c, p)).expected_gain


def equiprobable_optimality_check(
    t: int, c: int, s: float, sample_count: int = 100, seed: int = 0
) -> OptimalityReport:
    """Compare the proportional-play gain at ``p = e_t`` with random ``p``."""
    if c < 2:
        raise DomainError("need c >= 2")
    rng = np.random.default_rng(seed)
    baseline = proportional_gain(uniform(t), s, c)
    samples = rng.dirichlet(np.ones(t), size=sample_count)
    samples = samples / samples.sum(axis=1, keepdims=True)
    gains = np.array([proportional_gain(pp, s, c) for pp in samples])
    return OptimalityReport(baseline, gains, samples, bool(np.all(gains <= baseline)))
