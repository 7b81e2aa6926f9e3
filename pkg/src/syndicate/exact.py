"""Exact expectations over the crowd's binomial ticket counts.

Binomial probabilities are evaluated in log space with Loader's saddle-point
decomposition (Stirling remainders plus deviance terms) and exponentiated once.
Plain log-gamma differences lose about 1e-9 at ``c = 10**6``; this form keeps
the full pmf row summing to one at machine precision.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

from .model import (
    CrowdStrategy,
    DomainError,
    ExpectationReport,
    LotteryConfig,
    SyndicateStrategy,
    jackpot,
    make_report,
)

_LN_2PI = math.log(2.0 * math.pi)
_S0, _S1, _S2, _S3, _S4 = 1 / 12, 1 / 360, 1 / 1260, 1 / 1680, 1 / 1188

# Poisson shortcut is flagged outside this regime
POISSON_MIN_C = 100
POISSON_MAX_Q = 0.1


def _stirlerr(n: np.ndarray) -> np.ndarray:
    """``log(n!) - log(sqrt(2 pi n) (n/e)^n)`` for integers ``n >= 1``."""
    n = np.asarray(n, dtype=float)
    out = np.empty_like(n)
    small = n <= 15
    ns = n[small]
    out[small] = gammaln(ns + 1) - (ns + 0.5) * np.log(ns) + ns - 0.5 * _LN_2PI
    nl = n[~small]
    nn = nl * nl
    out[~small] = np.select(
        [nl > 500, nl > 80, nl > 35],
        [
            (_S0 - _S1 / nn) / nl,
            (_S0 - (_S1 - _S2 / nn) / nn) / nl,
            (_S0 - (_S1 - (_S2 - _S3 / nn) / nn) / nn) / nl,
        ],
        (_S0 - (_S1 - (_S2 - (_S3 - _S4 / nn) / nn) / nn) / nn) / nl,
    )
    return out


def _bd0(x: np.ndarray, m: float) -> np.ndarray:
    """Deviance term ``x log(x/m) + m - x`` without cancellation near ``x = m``."""
    with np.errstate(divide="ignore"):
        out = x * np.log(x / m) + m - x
    near = np.abs(x - m) < 0.1 * (x + m)
    xs = x[near]
    v = (xs - m) / (xs + m)
    acc = (xs - m) * v
    ej = 2.0 * xs * v
    v2 = v * v
    # |v| < 0.1 so each term shrinks by >= 100x; 12 terms reach double precision
    for j in range(1, 13):
        ej = ej * v2
        acc = acc + ej / (2 * j + 1)
    out[near] = acc
    return out


def binom_pmf_row(c: int, q: float) -> np.ndarray:
    """``P[X = k]`` for ``k = 0..c`` with ``X ~ Bin(c, q)``."""
    c = int(c)
    if c < 0:
        raise DomainError(f"c must be >= 0, got {c}")
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"q must lie in [0, 1], got {q!r}")
    out = np.zeros(c + 1)
    if q == 0.0:
        out[0] = 1.0
        return out
    if q == 1.0:
        out[c] = 1.0
        return out
    out[0] = math.exp(c * math.log1p(-q))
    if c == 0:
        return out
    out[c] = math.exp(c * math.log(q))
    if c > 1:
        k = np.arange(1, c, dtype=float)
        lc = (
            _stirlerr(np.array([c]))[0]
            - _stirlerr(k)
            - _stirlerr(c - k)
            - _bd0(k, c * q)
            - _bd0(c - k, c * (1.0 - q))
        )
        lf = _LN_2PI + np.log(k) + np.log1p(-k / c)
        out[1:c] = np.exp(lc - 0.5 * lf)
    return out


def binom_pmf(c: int, q: float, k: int) -> float:
    if not 0 <= k <= c:
        raise DomainError(f"k must lie in [0, c={c}], got {k}")
    return float(binom_pmf_row(c, q)[k])


@dataclass(frozen=True)
class ShareKernelResult:
    """``E[stake / (stake + K)]`` for a binomial crowd count ``K``."""

    value: float
    terms_used: int
    max_term_error: float = 0.0


def expected_share_factor(c: int, q: float) -> ShareKernelResult:
    """Closed form of ``E[1/(1+X)]``, ``X ~ Bin(c, q)``."""
    if c < 0:
        raise DomainError(f"c must be >= 0, got {c}")
    if not 0.0 < q <= 1.0:
        raise DomainError(f"q must lie in (0, 1], got {q!r}")
    n = c + 1
    value = -math.expm1(n * math.log1p(-q)) / (n * q) if q < 1.0 else 1.0 / n
    return ShareKernelResult(value, terms_used=0)


def share_expectation(c: int, q: float, stake: float) -> ShareKernelResult:
    """Series form of ``E[stake / (stake + K)]`` with the rule ``0/(0+0) = 0``."""
    if stake < 0:
        raise DomainError("stake must be nonnegative")
    if stake == 0:
        return ShareKernelResult(0.0, terms_used=0)
    pmf = binom_pmf_row(c, q)
    k = np.arange(c + 1, dtype=float)
    return ShareKernelResult(math.fsum(pmf * (stake / (stake + k))), terms_used=c + 1)


def crowd_share_expectation(c: int, q: float, stake: float) -> float:
    """``E[K / (stake + K)]`` with ``0/(0+0) = 0``."""
    if c == 0 or q == 0.0:
        return 0.0
    pmf = binom_pmf_row(c, q)
    k = np.arange(c + 1, dtype=float)
    ratio = np.zeros(c + 1)
    if stake == 0:
        ratio[1:] = 1.0
    else:
        ratio = k / (stake + k)
    return math.fsum(pmf * ratio)


class PoissonApprox(NamedTuple):
    value: float
    out_of_regime: bool


def poisson_share_approx(c: int, q: float, mode: str = "c_plus_one") -> PoissonApprox:
    """Poisson approximations of ``E[1/(1+X)]``.

    ``mode="c_plus_one"`` uses rate ``(c+1)q``; ``mode="mean"`` uses ``cq``.
    The flag is set (and a ``RuntimeWarning`` issued) when ``c < 100`` or
    ``q > 0.1``, where the approximation is not reliable.
    """
    if c < 1 or not 0.0 < q <= 1.0:
        raise DomainError("need c >= 1 and 0 < q <= 1")
    if mode == "c_plus_one":
        lam = (c + 1) * q
    elif mode == "mean":
        lam = c * q
    else:
        raise DomainError(f"unknown mode {mode!r}")
    value = -math.expm1(-lam) / lam
    flag = c < POISSON_MIN_C or q > POISSON_MAX_Q
    if flag:
        warnings.warn(
            f"Poisson share approximation used outside its regime (c={c}, q={q})",
            RuntimeWarning,
            stacklevel=2,
        )
    return PoissonApprox(value, flag)


def _crowd_marginals(crowd: CrowdStrategy) -> tuple[int, np.ndarray]:
    """Trials and per-ticket success probability of each crowd count ``K_i``."""
    if crowd.groups is None:
        return crowd.c, crowd.q
    g, l = crowd.groups
    t = crowd.t
    if not np.all(crowd.q == crowd.q[0]):
        raise DomainError("grouped crowds pick tickets uniformly; q must be uniform")
    # each group's uniform l-subset holds a given ticket with probability l/t
    return g, np.full(t, l / t)


def _check_sizes(config: LotteryConfig, syn: SyndicateStrategy, crowd: CrowdStrategy):
    if not (config.t == syn.r.size == crowd.t):
        raise DomainError(
            f"size mismatch: t={config.t}, len(r)={syn.r.size}, len(q)={crowd.t}"
        )


def _p_zero(n: int, q: float) -> float:
    return 0.0 if q >= 1.0 else math.exp(n * math.log1p(-q))


def _per_ticket(n: int, probs: np.ndarray, stakes: np.ndarray, kernel) -> np.ndarray:
    # identical (prob, stake) pairs share one kernel evaluation
    pairs = np.stack([probs, stakes], axis=1)
    uniq, inverse = np.unique(pairs, axis=0, return_inverse=True)
    vals = np.array([kernel(n, qi, si) for qi, si in uniq])
    return vals[np.ravel(inverse)]


def expected_win_exact(
    config: LotteryConfig, syn: SyndicateStrategy, crowd: CrowdStrategy
) -> ExpectationReport:
    """``v * sum_i p_i E[s_i / (s_i + K_i)]`` by direct binomial summation.

    Stakes may be fractional. The crowd-side return is included when ``c >= 1``.
    """
    _check_sizes(config, syn, crowd)
    v = jackpot(config, syn.s, crowd.c)
    n, probs = _crowd_marginals(crowd)
    stakes = syn.stakes
    shares = _per_ticket(n, probs, stakes, lambda c, q, s: share_expectation(c, q, s).value)
    win = v * math.fsum(config.p * shares)
    crowd_ret = None
    if crowd.c >= 1:
        crowd_shares = _per_ticket(n, probs, stakes, crowd_share_expectation)
        crowd_ret = (v * math.fsum(config.p * crowd_shares) - crowd.c) / crowd.c
    # carryover: nobody holds the winning ticket
    no_crowd = np.array([1.0 if n == 0 else _p_zero(n, pi) for pi in probs])
    carry = math.fsum(config.p * np.where(stakes > 0, 0.0, no_crowd))
    return make_report(
        v, win, syn.s, "exact", crowd_expected_return=crowd_ret, carryover_probability=carry
    )


def crowd_expected_return(
    config: LotteryConfig, syn: SyndicateStrategy, crowd: CrowdStrategy
) -> float:
    """``(v E[K_D / (s_D + K_D)] - c) / c``."""
    if crowd.c < 1:
        raise DomainError("crowd return needs c >= 1")
    return expected_win_exact(config, syn, crowd).crowd_expected_return
