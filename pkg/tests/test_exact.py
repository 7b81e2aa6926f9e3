import math
import warnings
from fractions import Fraction
from itertools import product

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from syndicate.exact import (
    binom_pmf,
    binom_pmf_row,
    crowd_expected_return,
    expected_share_factor,
    expected_win_exact,
    poisson_share_approx,
    share_expectation,
)
from syndicate.model import CrowdStrategy, DomainError, LotteryConfig, SyndicateStrategy

# high-precision reference values, frozen from mpmath at 50 digits
MP_SHARE_1000 = 0.63204023042338354


def _mp_pmf(c, q, k):
    mpmath.mp.dps = 50
    q = mpmath.mpf(q)
    return mpmath.binomial(c, k) * q**k * (1 - q) ** (c - k)


def test_pmf_examples():
    assert binom_pmf(2, 0.5, 1) == pytest.approx(0.5, abs=1e-15)
    assert binom_pmf(1000, 0.001, 0) == pytest.approx(0.999**1000, rel=1e-13)
    assert round(binom_pmf(1000, 0.001, 2), 3) == 0.184
    with pytest.raises(DomainError):
        binom_pmf(3, 0.5, 4)


@pytest.mark.parametrize("c,q", [(10, 0.3), (1000, 0.001), (5000, 0.37), (100_000, 1e-5)])
def test_pmf_against_mpmath(c, q):
    row = binom_pmf_row(c, q)
    mode = int(c * q)
    for k in {0, 1, mode, mode + 1, min(c, mode + 5)}:
        ref = float(_mp_pmf(c, q, k))
        assert row[k] == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("c,q", [(10**6, 1e-6), (10**6, 0.3), (123_457, 0.999)])
def test_pmf_row_sums_to_one(c, q):
    assert abs(math.fsum(binom_pmf_row(c, q)) - 1.0) <= 1e-12


def test_pmf_edges():
    assert binom_pmf_row(0, 0.3).tolist() == [1.0]
    assert binom_pmf_row(3, 0.0).tolist() == [1, 0, 0, 0]
    assert binom_pmf_row(3, 1.0).tolist() == [0, 0, 0, 1]


def _frac_share(c, q, stake):
    """Exact E[stake/(stake+K)] by rational arithmetic."""
    q = Fraction(q)
    stake = Fraction(stake)
    total = Fraction(0)
    for k in range(c + 1):
        pk = math.comb(c, k) * q**k * (1 - q) ** (c - k)
        if stake + k:
            total += pk * stake / (stake + k)
    return total


def test_share_factor_examples():
    assert expected_share_factor(2, 1.0).value == pytest.approx(1 / 3)
    assert expected_share_factor(2, 0.5).value == pytest.approx(7 / 12, abs=1e-15)
    assert expected_share_factor(1000, 0.001).value == pytest.approx(MP_SHARE_1000, abs=1e-13)
    series = share_expectation(1000, 0.001, 1.0)
    assert series.value == pytest.approx(MP_SHARE_1000, abs=1e-13)
    assert series.terms_used == 1001
    with pytest.raises(DomainError):
        expected_share_factor(5, 0.0)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(0, 30),
    st.fractions(Fraction(1, 1000), Fraction(1)),
    st.fractions(Fraction(1, 8), Fraction(12)),
)
def test_series_matches_rational_oracle(c, q, stake):
    ref = float(_frac_share(c, q, stake))
    assert share_expectation(c, float(q), float(stake)).value == pytest.approx(ref, rel=1e-13)
    if stake == 1:
        assert expected_share_factor(c, float(q)).value == pytest.approx(ref, rel=1e-13)


def test_poisson_approx():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert poisson_share_approx(1000, 0.001).value == pytest.approx(0.631856, abs=1e-6)
        assert poisson_share_approx(1000, 0.001, "mean").value == pytest.approx(1 - math.exp(-1), abs=1e-12)
    # c = 100 sits on the edge of the regime and is not flagged
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        out = poisson_share_approx(100, 1e-12, "mean")
    assert out.value == pytest.approx(1.0, abs=1e-9)
    with pytest.warns(RuntimeWarning):
        assert poisson_share_approx(99, 0.01).out_of_regime
    with pytest.warns(RuntimeWarning):
        assert poisson_share_approx(50, 0.2).out_of_regime


def _case(t, c, stakes, q=None, p=None):
    cfg = LotteryConfig(t, p if p is not None else np.full(t, 1 / t))
    crowd = CrowdStrategy(c, q if q is not None else np.full(t, 1 / t))
    return cfg, SyndicateStrategy.from_stakes(stakes), crowd


def test_worked_examples():
    rep = expected_win_exact(*_case(1000, 1000, np.ones(1000)))
    assert rep.expected_return == pytest.approx(0.2641, abs=5e-5)
    rep = expected_win_exact(*_case(2, 2, [1, 1]))
    assert rep.expected_win == pytest.approx(7 / 3, abs=1e-14)
    assert rep.expected_gain == pytest.approx(1 / 3, abs=1e-14)
    assert rep.expected_return == pytest.approx(1 / 6, abs=1e-14)
    assert rep.crowd_expected_return == pytest.approx(-1 / 6, abs=1e-14)
    assert crowd_expected_return(*_case(2, 2, [1, 1], q=[1.0, 0.0])) == pytest.approx(-1 / 3, abs=1e-14)


def test_zero_stakes_and_empty_crowd():
    rep = expected_win_exact(*_case(3, 4, [0, 0, 0]))
    assert rep.expected_win == 0 and rep.expected_gain == 0
    assert rep.expected_return is None
    assert rep.carryover_probability == pytest.approx((2 / 3) ** 4)
    with pytest.raises(DomainError):
        crowd_expected_return(*_case(2, 0, [1, 1]))


def test_size_mismatch():
    with pytest.raises(DomainError, match="size mismatch"):
        expected_win_exact(LotteryConfig.equiprobable(3), SyndicateStrategy.distinct(1, 2),
                           CrowdStrategy.uniform(2, 3))


def _brute_force(p, stakes, c, q, v):
    """Rational enumeration over ordered crowd picks."""
    t = len(p)
    win = Fraction(0)
    for picks in product(range(t), repeat=c):
        w = Fraction(1)
        counts = [0] * t
        for i in picks:
            w *= q[i]
            counts[i] += 1
        for d in range(t):
            if stakes[d]:
                win += w * p[d] * stakes[d] / (stakes[d] + counts[d])
    return v * win


def test_against_rational_enumeration():
    p = [Fraction(1, 2), Fraction(3, 10), Fraction(1, 5)]
    q = [Fraction(1, 10), Fraction(3, 5), Fraction(3, 10)]
    stakes = [Fraction(3, 2), Fraction(0), Fraction(5, 4)]
    c = 4
    v = sum(stakes) + c
    ref = float(_brute_force(p, stakes, c, q, v))
    rep = expected_win_exact(
        LotteryConfig(3, [float(x) for x in p]),
        SyndicateStrategy.from_stakes([float(x) for x in stakes]),
        CrowdStrategy(c, [float(x) for x in q]),
    )
    assert rep.expected_win == pytest.approx(ref, rel=1e-14)


def test_take_and_carryover_scale_jackpot():
    cfg, syn, crowd = _case(4, 6, [1, 1, 0, 0])
    base = expected_win_exact(cfg, syn, crowd)
    taxed = expected_win_exact(LotteryConfig.equiprobable(4, a=5, x=0.25), syn, crowd)
    assert taxed.jackpot == 5 + 8 * 0.75
    assert taxed.expected_win == pytest.approx(base.expected_win / 8 * taxed.jackpot)


def test_groups_use_group_marginals():
    cfg = LotteryConfig.equiprobable(10)
    syn = SyndicateStrategy.distinct(10, 10)
    rep = expected_win_exact(cfg, syn, CrowdStrategy.uniform(10, 10, groups=(10, 1)))
    plain = expected_win_exact(cfg, syn, CrowdStrategy.uniform(10, 10))
    assert rep.expected_win == pytest.approx(plain.expected_win, rel=1e-14)
    with pytest.raises(DomainError, match="uniform"):
        expected_win_exact(cfg, syn, CrowdStrategy(10, np.r_[0.2, np.full(9, 0.8 / 9)], groups=(5, 2)))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 40), st.floats(0.0, 10.0))
def test_win_bounded_by_jackpot(t, c, s):
    cfg = LotteryConfig.equiprobable(t)
    rep = expected_win_exact(cfg, SyndicateStrategy(s, np.full(t, 1 / t)), CrowdStrategy.uniform(c, t))
    assert -1e-12 <= rep.expected_win <= rep.jackpot + 1e-9
    assert rep.expected_gain == pytest.approx(rep.expected_win - s, abs=1e-9)
