"""Expected returns of a coordinating syndicate against an uncoordinated
crowd in pure-jackpot lotteries."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    CrowdStrategy,
    DomainError,
    ExpectationReport,
    LotteryConfig,
    SizeError,
    SyndicateStrategy,
    jackpot,
    uniform_support,
)
from .exact import expected_win_exact  # noqa: E402
from .simulator import enumerate_exact, simulate  # noqa: E402

__all__ = [
    "CrowdStrategy",
    "DomainError",
    "ExpectationReport",
    "LotteryConfig",
    "SizeError",
    "SyndicateStrategy",
    "enumerate_exact",
    "expected_win_exact",
    "jackpot",
    "simulate",
    "uniform_support",
]
