"""Verification oracles: seeded Monte Carlo and exhaustive enumeration.

Monte Carlo trials are cut into fixed-size blocks. Block ``b`` draws from a
Philox stream keyed by ``(seed, b)``, and block statistics are merged in block
order, so the result does not depend on how blocks are spread over workers.
"""

from __future__ import annotations

import math
import secrets
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from itertools import combinations

import numpy as np

from .model import (
    CrowdStrategy,
    DomainError,
    ExpectationReport,
    LotteryConfig,
    SizeError,
    SyndicateStrategy,
    jackpot,
    make_report,
)

BLOCK_SIZE = 1 << 14
ALIAS_THRESHOLD = 64
ENUMERATION_LIMIT = 10**7
# cap on categorical draws held in memory at once
_CHUNK_DRAWS = 1 << 22


@dataclass(frozen=True)
class SimulationResult:
    n_trials: int
    mean_syndicate_return: float
    std_error: float
    mean_crowd_return: float | None
    crowd_std_error: float | None
    mean_syndicate_win: float
    carryover_frequency: float
    seed: int
    block_size: int

    def as_dict(self) -> dict:
        return asdict(self)


# -- categorical sampling -----------------------------------------------------


class CategoricalSampler:
    """Draws ticket indices with law ``probs`` from uniform variates."""

    def __init__(self, probs):
        probs = np.asarray(probs, dtype=float)
        self.t = probs.size
        self.use_alias = self.t > ALIAS_THRESHOLD
        if self.use_alias:
            self.prob, self.alias = _build_alias(probs)
        else:
            cum = np.cumsum(probs) / probs.sum()
            last = np.nonzero(probs > 0)[0][-1]
            cum[last:] = 1.0
            self.cum = cum

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.use_alias:
            u = rng.random(shape)
            scaled = u * self.t
            col = np.minimum(scaled.astype(np.int64), self.t - 1)
            frac = scaled - col
            return np.where(frac < self.prob[col], col, self.alias[col])
        return np.searchsorted(self.cum, rng.random(shape), side="right")


def _build_alias(probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vose's alias tables."""
    t = probs.size
    scaled = probs * t / probs.sum()
    prob = np.zeros(t)
    alias = np.arange(t)
    small = [i for i in range(t) if scaled[i] < 1.0]
    large = [i for i in range(t) if scaled[i] >= 1.0]
    while small and large:
        s, l = small.pop(), large.pop()
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] = scaled[l] + scaled[s] - 1.0
        (small if scaled[l] < 1.0 else large).append(l)
    for i in large + small:
        prob[i] = 1.0
    return prob, alias


# -- Monte Carlo --------------------------------------------------------------


def _block_rng(seed: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(block,))
    return np.random.Generator(np.random.Philox(ss))


def _crowd_on_winner(rng, crowd: CrowdStrategy, sampler, winners: np.ndarray) -> np.ndarray:
    n = winners.size
    if crowd.c == 0:
        return np.zeros(n, dtype=np.int64)
    counts = np.zeros(n, dtype=np.int64)
    if crowd.groups is None:
        rows = max(1, _CHUNK_DRAWS // crowd.c)
        for lo in range(0, n, rows):
            hi = min(n, lo + rows)
            picks = sampler.sample(rng, (hi - lo, crowd.c))
            counts[lo:hi] = (picks == winners[lo:hi, None]).sum(axis=1)
        return counts
    g, l = crowd.groups
    t = crowd.t
    rows = max(1, _CHUNK_DRAWS // g)
    for lo in range(0, n, rows):
        hi = min(n, lo + rows)
        # partial Fisher-Yates over ticket indices for every group, tracking
        # only the position of the winning ticket: it is selected once a swap
        # moves it into the first l slots
        pos = np.broadcast_to(winners[lo:hi, None], (hi - lo, g)).copy()
        chosen = np.zeros((hi - lo, g), dtype=bool)
        for j in range(l):
            swap = j + np.floor(rng.random((hi - lo, g)) * (t - j)).astype(np.int64)
            swap = np.minimum(swap, t - 1)
            live = ~chosen
            hit = live & (swap == pos)
            moved = live & (pos == j) & ~hit
            chosen |= hit | (live & (pos == j) & (swap == j))
            pos = np.where(moved, swap, pos)
        counts[lo:hi] = chosen.sum(axis=1)
    return counts


def _merge(stats_a, stats_b):
    """Chan et al. merge of (n, mean, M2) triples."""
    na, ma, qa = stats_a
    nb, mb, qb = stats_b
    if na == 0:
        return stats_b
    n = na + nb
    delta = mb - ma
    return n, ma + delta * nb / n, qa + qb + delta * delta * na * nb / n


def _moments(x: np.ndarray):
    m = float(x.mean())
    return x.size, m, float(((x - m) ** 2).sum())


def _run_block(args):
    config, syn, crowd, seed, block, n = args
    rng = _block_rng(seed, block)
    draw_sampler = CategoricalSampler(config.p)
    crowd_sampler = CategoricalSampler(crowd.q)
    winners = draw_sampler.sample(rng, n)
    k = _crowd_on_winner(rng, crowd, crowd_sampler, winners)
    s_win = syn.stakes[winners]
    v = jackpot(config, syn.s, crowd.c)
    total = s_win + k
    # 0/(0+0) = 0: an unclaimed jackpot pays nobody
    safe = np.where(total > 0, total, 1.0)
    syn_win = np.where(total > 0, v * s_win / safe, 0.0)
    crowd_win = np.where(total > 0, v * k / safe, 0.0)
    ret = (syn_win - syn.s) / syn.s if syn.s > 0 else np.zeros(n)
    cret = (crowd_win - crowd.c) / crowd.c if crowd.c > 0 else np.zeros(n)
    return {
        "ret": _moments(ret),
        "crowd": _moments(cret),
        "win": _moments(syn_win),
        "carry": int((total == 0).sum()),
    }


def plan_blocks(n_trials: int, block_size: int = BLOCK_SIZE) -> list[int]:
    """Trial counts per block; the last block takes the remainder."""
    full, rest = divmod(n_trials, block_size)
    return [block_size] * full + ([rest] if rest else [])


def simulate_blocks(config, syn, crowd, seed: int, blocks, block_size: int = BLOCK_SIZE,
                    n_trials: int | None = None, workers: int = 1) -> list[dict]:
    """Statistics for the listed block indices of an ``n_trials`` plan."""
    plan = plan_blocks(n_trials, block_size)
    jobs = [(config, syn, crowd, seed, b, plan[b]) for b in blocks]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_block, jobs))
    return [_run_block(job) for job in jobs]


def merge_blocks(parts: list[dict], seed: int, block_size: int, has_crowd: bool) -> SimulationResult:
    """Combine block statistics in the order given (block order)."""
    ret = crowd = win = (0, 0.0, 0.0)
    carry = 0
    for part in parts:
        ret = _merge(ret, part["ret"])
        crowd = _merge(crowd, part["crowd"])
        win = _merge(win, part["win"])
        carry += part["carry"]
    n = ret[0]

    def se(st):
        return math.sqrt(st[2] / (st[0] - 1) / st[0]) if st[0] > 1 else 0.0

    return SimulationResult(
        n_trials=n,
        mean_syndicate_return=ret[1],
        std_error=se(ret),
        mean_crowd_return=crowd[1] if has_crowd else None,
        crowd_std_error=se(crowd) if has_crowd else None,
        mean_syndicate_win=win[1],
        carryover_frequency=carry / n,
        seed=seed,
        block_size=block_size,
    )


def new_seed() -> int:
    return secrets.randbits(64)


def simulate(
    config: LotteryConfig,
    syn: SyndicateStrategy,
    crowd: CrowdStrategy,
    n_trials: int,
    seed: int | None = None,
    workers: int = 1,
    block_size: int = BLOCK_SIZE,
) -> SimulationResult:
    """Plain Monte Carlo of draws and crowd picks.

    A grouped crowd draws each group's ``l`` distinct tickets uniformly. The
    result is a pure function of the inputs, ``seed`` and ``block_size``.
    """
    if n_trials < 1:
        raise DomainError("n_trials must be >= 1")
    if not (config.t == syn.r.size == crowd.t):
        raise DomainError("t, len(r) and len(q) must agree")
    if crowd.groups is not None and not np.all(crowd.q == crowd.q[0]):
        raise DomainError("grouped crowds pick tickets uniformly; q must be uniform")
    if seed is None:
        seed = new_seed()
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise DomainError("seed must be a 64-bit unsigned integer")
    nblocks = len(plan_blocks(n_trials, block_size))
    parts = simulate_blocks(config, syn, crowd, seed, range(nblocks), block_size, n_trials, workers)
    return merge_blocks(parts, seed, block_size, crowd.c > 0)


# -- exhaustive enumeration ---------------------------------------------------


def enumeration_size(t: int, crowd: CrowdStrategy) -> int:
    if crowd.groups is None:
        return t**crowd.c
    g, l = crowd.groups
    return math.comb(t, l) ** g


def _crowd_configurations(t: int, crowd: CrowdStrategy, chunk: int = 1 << 16):
    """Yield (counts, weights): per-ticket crowd counts and probabilities of
    every ordered crowd configuration, in chunks."""
    if crowd.groups is None:
        c = crowd.c
        total = t**c
        q = crowd.q
        for lo in range(0, total, chunk):
            idx = np.arange(lo, min(total, lo + chunk), dtype=np.int64)
            counts = np.zeros((idx.size, t), dtype=np.int64)
            weights = np.ones(idx.size)
            rem = idx
            for _ in range(c):
                digit = rem % t
                rem = rem // t
                counts[np.arange(idx.size), digit] += 1
                weights = weights * q[digit]
            yield counts, weights
        return
    g, l = crowd.groups
    subsets = np.array(list(combinations(range(t), l)), dtype=np.int64)
    member = np.zeros((len(subsets), t), dtype=np.int64)
    member[np.arange(len(subsets))[:, None], subsets] = 1
    m = len(subsets)
    total = m**g
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(total, lo + chunk), dtype=np.int64)
        counts = np.zeros((idx.size, t), dtype=np.int64)
        rem = idx
        for _ in range(g):
            counts += member[rem % m]
            rem = rem // m
        yield counts, np.full(idx.size, 1.0 / total)


def enumerate_exact(
    config: LotteryConfig, syn: SyndicateStrategy, crowd: CrowdStrategy,
    limit: int = ENUMERATION_LIMIT,
) -> ExpectationReport:
    """Expectation by summing over every crowd configuration and every draw.

    Independent of the binomial algebra in :mod:`syndicate.exact`.
    """
    t = config.t
    if not (t == syn.r.size == crowd.t):
        raise DomainError("t, len(r) and len(q) must agree")
    size = enumeration_size(t, crowd)
    if size > limit:
        raise SizeError(f"{size} crowd configurations exceed the limit {limit}")
    if crowd.groups is not None and not np.all(crowd.q == crowd.q[0]):
        raise DomainError("grouped crowds pick tickets uniformly; q must be uniform")
    v = jackpot(config, syn.s, crowd.c)
    stakes = syn.stakes
    syn_parts, crowd_parts, carry_parts = [], [], []
    for counts, weights in _crowd_configurations(t, crowd):
        total = stakes[None, :] + counts
        held = total > 0
        safe = np.where(held, total, 1.0)
        syn_share = np.where(held, stakes[None, :] / safe, 0.0)
        crowd_share = np.where(held, counts / safe, 0.0)
        syn_parts.append(math.fsum((weights[:, None] * syn_share * config.p).ravel()))
        crowd_parts.append(math.fsum((weights[:, None] * crowd_share * config.p).ravel()))
        carry_parts.append(math.fsum((weights[:, None] * ~held * config.p).ravel()))
    win = v * math.fsum(syn_parts)
    crowd_ret = (v * math.fsum(crowd_parts) - crowd.c) / crowd.c if crowd.c > 0 else None
    return make_report(
        v, win, syn.s, "enumerate",
        crowd_expected_return=crowd_ret,
        carryover_probability=math.fsum(carry_parts),
    )
