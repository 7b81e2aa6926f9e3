import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from syndicate.exact import expected_win_exact
from syndicate.model import CrowdStrategy, DomainError, LotteryConfig, SizeError, SyndicateStrategy
from syndicate.simulator import (
    CategoricalSampler,
    enumerate_exact,
    enumeration_size,
    merge_blocks,
    plan_blocks,
    simulate,
    simulate_blocks,
)


def _two_by_two():
    return LotteryConfig.equiprobable(2), SyndicateStrategy.distinct(2, 2), CrowdStrategy.uniform(2, 2)


def test_enumerate_hand_checked_case():
    rep = enumerate_exact(*_two_by_two())
    assert rep.expected_win == pytest.approx(7 / 3, abs=1e-15)
    assert rep.method == "enumerate"
    assert rep.carryover_probability == 0.0


def test_enumerate_without_crowd():
    cfg = LotteryConfig(3, [0.5, 0.3, 0.2])
    syn = SyndicateStrategy.from_stakes([1, 0, 2])
    rep = enumerate_exact(cfg, syn, CrowdStrategy(0, [1 / 3] * 3))
    assert rep.expected_win == pytest.approx(3 * 0.7)
    assert rep.carryover_probability == pytest.approx(0.3)
    assert rep.crowd_expected_return is None


def test_enumeration_size_guard():
    big = CrowdStrategy.uniform(11, 4)
    assert enumeration_size(4, big) == 4**11 <= 10**7
    assert enumeration_size(4, CrowdStrategy.uniform(12, 4)) > 10**7
    with pytest.raises(SizeError):
        enumerate_exact(LotteryConfig.equiprobable(10), SyndicateStrategy.distinct(10, 10),
                        CrowdStrategy.uniform(10, 10))


def test_enumerate_groups_matches_engine():
    cfg = LotteryConfig.equiprobable(5)
    syn = SyndicateStrategy.from_stakes([1, 0.5, 0, 2, 1])
    crowd = CrowdStrategy.uniform(6, 5, groups=(3, 2))
    brute = enumerate_exact(cfg, syn, crowd)
    exact = expected_win_exact(cfg, syn, crowd)
    assert brute.expected_win == pytest.approx(exact.expected_win, rel=1e-12)
    assert brute.crowd_expected_return == pytest.approx(exact.crowd_expected_return, rel=1e-12)
    assert brute.carryover_probability == pytest.approx(exact.carryover_probability, abs=1e-14)


def test_simulate_two_by_two():
    res = simulate(*_two_by_two(), n_trials=10**6, seed=2024)
    assert abs(res.mean_syndicate_return - 1 / 6) <= 4 * res.std_error
    assert abs(res.mean_crowd_return + 1 / 6) <= 4 * res.crowd_std_error
    assert res.carryover_frequency == 0.0


def test_simulate_zero_stake():
    cfg = LotteryConfig.equiprobable(3)
    res = simulate(cfg, SyndicateStrategy.distinct(0, 3), CrowdStrategy.uniform(4, 3), 5000, seed=1)
    assert res.mean_syndicate_return == 0.0 and res.std_error == 0.0


def test_carryover_frequency_large_lottery():
    cfg = LotteryConfig.equiprobable(1000)
    res = simulate(cfg, SyndicateStrategy.distinct(0, 1000), CrowdStrategy.uniform(1000, 1000), 40_000, seed=5)
    p = 0.999**1000
    se = (p * (1 - p) / res.n_trials) ** 0.5
    assert abs(res.carryover_frequency - p) <= 4 * se


def test_determinism_and_partitions():
    cfg = LotteryConfig(3, [0.5, 0.3, 0.2])
    syn = SyndicateStrategy.from_stakes([1.5, 0, 0.5])
    crowd = CrowdStrategy(4, [0.2, 0.2, 0.6])
    n, bs = 50_000, 4096
    whole = simulate(cfg, syn, crowd, n, seed=99, block_size=bs)
    assert simulate(cfg, syn, crowd, n, seed=99, block_size=bs) == whole
    assert simulate(cfg, syn, crowd, n, seed=99, block_size=bs, workers=2) == whole
    nblocks = len(plan_blocks(n, bs))
    first = simulate_blocks(cfg, syn, crowd, 99, range(0, 5), bs, n)
    rest = simulate_blocks(cfg, syn, crowd, 99, range(5, nblocks), bs, n)
    assert merge_blocks(first + rest, 99, bs, True) == whole
    assert simulate(cfg, syn, crowd, n, seed=100, block_size=bs) != whole


def test_simulate_validation():
    with pytest.raises(DomainError):
        simulate(*_two_by_two(), n_trials=0, seed=1)
    with pytest.raises(DomainError):
        simulate(*_two_by_two(), n_trials=10, seed=-1)


def test_unseeded_run_records_seed():
    res = simulate(*_two_by_two(), n_trials=100)
    again = simulate(*_two_by_two(), n_trials=100, seed=res.seed)
    assert again == res


@pytest.mark.parametrize("t", [5, 80])
def test_categorical_sampler_frequencies(t):
    rng = np.random.default_rng(0)
    probs = rng.dirichlet(np.ones(t))
    probs[0] = 0.0
    probs /= probs.sum()
    sampler = CategoricalSampler(probs)
    assert sampler.use_alias == (t > 64)
    n = 400_000
    draws = sampler.sample(np.random.default_rng(1), n)
    freq = np.bincount(draws, minlength=t) / n
    assert freq[0] == 0.0
    assert np.all(np.abs(freq - probs) <= 5 * np.sqrt(probs * (1 - probs) / n) + 1e-12)


def test_group_sampling_marginals():
    # each group holds ticket D with probability l/t
    t, g, l = 7, 3, 3
    cfg = LotteryConfig.equiprobable(t)
    syn = SyndicateStrategy.distinct(1, t)
    crowd = CrowdStrategy.uniform(g * l, t, groups=(g, l))
    res = simulate(cfg, syn, crowd, 200_000, seed=11)
    exact = expected_win_exact(cfg, syn, crowd)
    assert abs(res.mean_syndicate_return - exact.expected_return) <= 4 * res.std_error
    assert abs(res.carryover_frequency - exact.carryover_probability) <= 0.005


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 3), st.integers(0, 4), st.integers(0, 2**32))
def test_enumeration_equals_engine(t, c, seed):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(t)) * 0.9 + 0.1 / t
    q = rng.dirichlet(np.ones(t))
    stakes = rng.uniform(0, 3, t)
    cfg, syn, crowd = LotteryConfig(t, p / p.sum()), SyndicateStrategy.from_stakes(stakes), CrowdStrategy(c, q / q.sum())
    assert enumerate_exact(cfg, syn, crowd).expected_win == pytest.approx(
        expected_win_exact(cfg, syn, crowd).expected_win, rel=1e-12)
