"""Domain types and elementary lottery arithmetic.

Money is measured in units of one ticket price. Probability vectors must sum
to one within ``PROB_TOL``; they are never renormalized on the caller's behalf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

PROB_TOL = 1e-12


class DomainError(ValueError):
    """An argument lies outside the domain of the requested operation."""


class SizeError(DomainError):
    """A brute-force computation would exceed its size budget."""


def _frozen_vector(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float).ravel()
    if arr.size == 0:
        raise DomainError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def check_simplex(vec: np.ndarray, name: str, strictly_positive: bool = False) -> None:
    if strictly_positive and np.any(vec <= 0):
        raise DomainError(f"{name} must be strictly positive")
    if np.any(vec < 0):
        raise DomainError(f"{name} must be nonnegative")
    total = math.fsum(vec)
    if abs(total - 1.0) > PROB_TOL:
        raise DomainError(f"{name} sums to {total!r}, not 1 within {PROB_TOL}")


def uniform(t: int) -> np.ndarray:
    """The equiprobable vector of length ``t``."""
    return np.full(t, 1.0 / t)


@dataclass(frozen=True)
class LotteryConfig:
    t: int
    p: np.ndarray
    a: float = 0.0
    x: float = 0.0

    def __post_init__(self):
        if int(self.t) != self.t or self.t < 1:
            raise DomainError(f"t must be a positive integer, got {self.t!r}")
        object.__setattr__(self, "t", int(self.t))
        p = _frozen_vector(self.p, "p")
        if p.size != self.t:
            raise DomainError(f"p has length {p.size}, expected t={self.t}")
        check_simplex(p, "p", strictly_positive=True)
        object.__setattr__(self, "p", p)
        if not self.a >= 0:
            raise DomainError(f"carryover a must be >= 0, got {self.a!r}")
        if not 0 <= self.x < 1:
            raise DomainError(f"take x must lie in [0, 1), got {self.x!r}")

    @classmethod
    def equiprobable(cls, t: int, a: float = 0.0, x: float = 0.0) -> "LotteryConfig":
        return cls(t, uniform(t), a, x)

    @property
    def is_equiprobable(self) -> bool:
        return bool(np.all(self.p == self.p[0]))


@dataclass(frozen=True)
class SyndicateStrategy:
    """Total stake ``s`` spread over tickets with weights ``r``."""

    s: float
    r: np.ndarray

    def __post_init__(self):
        if not self.s >= 0:
            raise DomainError(f"stake s must be >= 0, got {self.s!r}")
        r = _frozen_vector(self.r, "r")
        check_simplex(r, "r")
        object.__setattr__(self, "r", r)

    @property
    def stakes(self) -> np.ndarray:
        return self.s * self.r

    @classmethod
    def from_stakes(cls, stakes) -> "SyndicateStrategy":
        stakes = np.asarray(stakes, dtype=float)
        if np.any(stakes < 0):
            raise DomainError("stakes must be nonnegative")
        total = math.fsum(stakes)
        if total == 0:
            return cls(0.0, uniform(stakes.size))
        return cls(total, stakes / total)

    @classmethod
    def distinct(cls, s: int, t: int) -> "SyndicateStrategy":
        """One unit on each of the first ``s`` tickets (``s <= t``)."""
        if s == 0:
            return cls(0.0, uniform(t))
        return cls(float(s), uniform_support(s, t))


@dataclass(frozen=True)
class CrowdStrategy:
    """``c`` independent one-ticket bettors choosing tickets with law ``q``.

    With ``groups=(g, l)`` the crowd is ``g`` groups, each buying ``l``
    distinct tickets chosen uniformly at random.
    """

    c: int
    q: np.ndarray
    groups: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if int(self.c) != self.c or self.c < 0:
            raise DomainError(f"crowd size c must be a nonnegative integer, got {self.c!r}")
        object.__setattr__(self, "c", int(self.c))
        q = _frozen_vector(self.q, "q")
        check_simplex(q, "q")
        object.__setattr__(self, "q", q)
        if self.groups is not None:
            g, l = (int(v) for v in self.groups)
            if g * l != self.c:
                raise DomainError(f"groups g*l = {g * l} must equal c = {self.c}")
            if not 1 <= l <= q.size:
                raise DomainError(f"group size l must lie in [1, t], got {l}")
            object.__setattr__(self, "groups", (g, l))

    @property
    def t(self) -> int:
        return self.q.size

    @classmethod
    def uniform(cls, c: int, t: int, groups=None) -> "CrowdStrategy":
        return cls(c, uniform(t), groups)


@dataclass(frozen=True)
class ExpectationReport:
    jackpot: float
    expected_win: float
    expected_gain: float
    expected_return: Optional[float]  # None when s == 0
    method: str
    crowd_expected_return: Optional[float] = None
    carryover_probability: Optional[float] = None
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {
            "jackpot": self.jackpot,
            "expected_win": self.expected_win,
            "expected_gain": self.expected_gain,
            "expected_return": self.expected_return,
            "crowd_expected_return": self.crowd_expected_return,
            "carryover_probability": self.carryover_probability,
            "method": self.method,
        }
        out.update(self.extras)
        return out


def make_report(v: float, win: float, s: float, method: str, **kwargs) -> ExpectationReport:
    gain = win - s
    ret = gain / s if s > 0 else None
    return ExpectationReport(v, win, gain, ret, method, **kwargs)


def jackpot(config: LotteryConfig, s: float, c: float) -> float:
    """Cash jackpot ``a + (s + c)(1 - x)``."""
    if s < 0 or c < 0:
        raise DomainError("stakes s and c must be nonnegative")
    return config.a + (s + c) * (1.0 - config.x)


def uniform_support(s: int, t: int) -> np.ndarray:
    """Weight ``1/s`` on tickets ``0..s-1`` and zero elsewhere."""
    if int(s) != s or int(t) != t:
        raise DomainError("s and t must be integers")
    if not 1 <= s <= t:
        raise DomainError(f"need 1 <= s <= t, got s={s}, t={t}")
    out = np.zeros(int(t))
    out[: int(s)] = 1.0 / s
    return out


def integralize(r, s: int) -> np.ndarray:
    """Integer stakes summing to ``s`` by floor plus largest remainder.

    Ties in the remainder go to the lowest ticket index.
    """
    if int(s) != s or s < 0:
        raise DomainError(f"s must be a nonnegative integer, got {s!r}")
    r = np.asarray(r, dtype=float)
    check_simplex(r, "r")
    s = int(s)
    ideal = s * r
    base = np.floor(ideal).astype(np.int64)
    short = s - int(base.sum())
    if short > 0:
        rem = ideal - base
        # stable sort on -rem keeps lower indices first among equal remainders
        order = np.argsort(-rem, kind="stable")
        base[order[:short]] += 1
    return base
