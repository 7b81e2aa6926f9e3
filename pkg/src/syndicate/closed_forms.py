"""Closed-form results for equiprobable lotteries with no take or carryover."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import poisson

from .exact import binom_pmf_row, expected_share_factor, share_expectation
from .model import DomainError


def _y(t: int, c: int) -> float:
    """Probability that ``c + 1`` uniform picks all miss one given ticket."""
    return math.exp((c + 1) * math.log1p(-1.0 / t))


def lemma1_expected_win(t: int, c: int, s: int, q) -> float:
    """Expected win of ``s`` distinct unit tickets against crowd law ``q``.

    For non-uniform ``q`` this is the average over uniformly random placement
    of the syndicate's ``s`` tickets; for ``q = e_t`` it is exact.
    """
    if s == 0:
        return 0.0
    if not 1 <= s <= t:
        raise DomainError(f"need 1 <= s <= t, got s={s}, t={t}")
    q = np.asarray(q, dtype=float)
    if q.size != t:
        raise DomainError(f"q has length {q.size}, expected {t}")
    if np.any(q <= 0):
        raise DomainError("every q_i must be positive")
    f = [expected_share_factor(c, qi).value * (c + 1) for qi in q]
    return (c + s) / (c + 1) * (s / t) * math.fsum(f) / t


def uniform_return(t: int, c: int, s: float) -> float:
    """Return of ``s`` distinct tickets against the uniform crowd: ``(c+s)/(c+1) (1-y) - 1``."""
    if not 0 < s <= t:
        raise DomainError(f"need 0 < s <= t, got s={s}, t={t}")
    return (c + s) / (c + 1) * -math.expm1((c + 1) * math.log1p(-1.0 / t)) - 1.0


def uniform_gain(t: int, c: int, s: float) -> float:
    """``s * uniform_return``; defined as 0 at ``s = 0``."""
    if s == 0:
        return 0.0
    return s * uniform_return(t, c, s)


S_STAR_NOTE = (
    "s_star uses y = (1 - 1/t)^(c+1); at t = c = 1000 that gives 291.09, not 290.7981. "
    "g_min = -53.55 and first profitable stake 583 are the same under either value."
)


@dataclass(frozen=True)
class BreakevenReport:
    t: int
    c: int
    y: float
    s_star: float
    g_min: float
    s_zero: float
    first_profitable_integer: int
    notes: tuple = field(default=())

    def as_dict(self) -> dict:
        return {
            "t": self.t,
            "c": self.c,
            "y": self.y,
            "s_star": self.s_star,
            "g_min": self.g_min,
            "s_zero": self.s_zero,
            "first_profitable_integer": self.first_profitable_integer,
            "notes": list(self.notes),
        }


def breakeven(t: int, c: int) -> BreakevenReport:
    if t < 2 or c < 2:
        raise DomainError("breakeven needs t >= 2 and c >= 2")
    y = _y(t, c)
    one_minus_y = -math.expm1((c + 1) * math.log1p(-1.0 / t))
    s_star = (1 + c * y) / (2 * one_minus_y)
    g_min = -0.25 * (1 + c * y) ** 2 / (one_minus_y * (1 + c))
    s_zero = 2 * s_star
    # scan integers rather than round s_zero
    n = max(1, math.floor(s_zero) - 2)
    while uniform_gain(t, c, n) <= 0:
        n += 1
    while n > 1 and uniform_gain(t, c, n - 1) > 0:
        n -= 1
    notes = (S_STAR_NOTE,)
    return BreakevenReport(t, c, y, s_star, g_min, s_zero, n, notes)


def table1(t: int, c: int, k_max: int = 4, pmf_mode: str = "poisson") -> list[dict]:
    """Per-``k`` breakdown of the expected win for ``s = t`` and ``s = 1``.

    ``k`` is the crowd's count on the drawn ticket. A contribution is
    ``P[K=k] * payoff * P[syndicate holds the drawn ticket]``, that is the
    payoff weighted by ``s/t``. ``pmf_mode="poisson"`` uses rate ``c/t``.
    """
    if not 0 <= k_max <= c:
        raise DomainError(f"need 0 <= k_max <= c, got {k_max}")
    k = np.arange(k_max + 1)
    if pmf_mode == "poisson":
        prob = poisson.pmf(k, c / t)
    elif pmf_mode == "binomial":
        prob = binom_pmf_row(c, 1.0 / t)[: k_max + 1]
    else:
        raise DomainError(f"unknown pmf_mode {pmf_mode!r}")
    rows = []
    for ki, pk in zip(k.tolist(), prob.tolist()):
        pay_t = (c + t) / (1 + ki)
        pay_1 = (c + 1) / (1 + ki)
        rows.append(
            {
                "k": int(ki),
                "prob": float(pk),
                "payoff_s_t": pay_t,
                "contrib_s_t": float(pk) * pay_t,
                "payoff_s_1": pay_1,
                "contrib_s_1": float(pk) * pay_1 / t,
            }
        )
    return rows


@dataclass(frozen=True)
class GroupStructureReport:
    adjusted_win: float
    ratio_to_ungrouped: float
    exact_adjusted_win: float

    def as_dict(self) -> dict:
        return {
            "adjusted_win": self.adjusted_win,
            "ratio_to_ungrouped": self.ratio_to_ungrouped,
            "exact_adjusted_win": self.exact_adjusted_win,
        }


def group_adjusted_win(t: int, c: int, s: int, g: int, l: int) -> GroupStructureReport:
    """Syndicate win when the crowd is ``g`` groups of ``l`` distinct tickets.

    ``adjusted_win`` and the ratio use the Poisson approximation;
    ``exact_adjusted_win`` sums over ``K ~ Bin(g, l/t)``.
    """
    if g * l != c:
        raise DomainError(f"need g*l == c, got {g}*{l} != {c}")
    if not 1 <= l <= t:
        raise DomainError(f"need 1 <= l <= t, got l={l}")
    if not 0 <= s <= t:
        raise DomainError(f"need 0 <= s <= t, got s={s}")
    approx = (c + s) * s / (c + l) * -math.expm1(-(c + l) / t)
    ratio = (c + 1) / (c + l) * math.expm1(-(c + l) / t) / math.expm1(-(c + 1) / t)
    exact = (c + s) * (s / t) * share_expectation(g, l / t, 1.0).value if s else 0.0
    return GroupStructureReport(approx, ratio, exact)


def multiples_gain(n: int, t: int, c: int) -> float:
    """Expected gain of ``n`` units on every ticket against the uniform crowd."""
    if n < 1 or t < 1 or c < 0:
        raise DomainError("need n >= 1, t >= 1, c >= 0")
    share = share_expectation(c, 1.0 / t, float(n)).value
    return (n * t + c) * share - n * t


def optimal_budget_allocation(s: int, t: int) -> np.ndarray:
    """``s // t`` on every ticket plus one more on the first ``s % t`` tickets."""
    if s < 1 or t < 1:
        raise DomainError("need s >= 1 and t >= 1")
    n, extra = divmod(int(s), int(t))
    out = np.full(int(t), n, dtype=np.int64)
    out[:extra] += 1
    return out


def unpopular_factor_return(factors=(), base: float = 0.45) -> float:
    """Per-dollar return of a ticket as ``base`` times its number-popularity factors."""
    factors = list(factors)
    if any(f <= 0 for f in factors):
        raise DomainError("factors must be positive")
    return base * math.prod(factors)


def matheson_expected_value(
    W: float, N: float, R: float = 0.0, k_frac: float = 1.0, cost: float = 1.0, p_win: float = 0.0
) -> float:
    """Poisson-style value of ``W`` distinct tickets against ``N`` crowd bets.

    ``(W/N) (R + k cost (W + N)) (1 - exp(-p N))``.
    """
    if N < 1 or W < 0:
        raise DomainError("need N >= 1 and W >= 0")
    return W / N * (R + k_frac * cost * (W + N)) * -math.expm1(-p_win * N)
