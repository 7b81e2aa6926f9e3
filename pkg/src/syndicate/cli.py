"""Batch command-line interface.

Every subcommand prints one JSON object (or CSV with ``--format csv``) and
exits 0 on success, 2 on bad usage, 3 when a brute-force size guard trips
and 4 when an optimizer fails to converge.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .closed_forms import breakeven, group_adjusted_win, lemma1_expected_win, optimal_budget_allocation, table1
from .equilibrium import (
    AsymptoticConfig,
    asymptotic_best_response,
    asymptotic_return,
    minimize_return_over_crowd,
)
from .exact import expected_win_exact
from .model import (
    CrowdStrategy,
    DomainError,
    LotteryConfig,
    SizeError,
    SyndicateStrategy,
    jackpot,
    make_report,
    uniform,
    uniform_support,
)
from .simulator import enumerate_exact, new_seed, simulate

EXIT_OK, EXIT_USAGE, EXIT_SIZE, EXIT_NONCONVERGED = 0, 2, 3, 4
SIG_DIGITS = 10


class UsageError(Exception):
    def __init__(self, flag: str, message: str):
        super().__init__(f"{flag}: {message}")
        self.flag = flag


class NonConvergence(Exception):
    pass


# -- formatting ---------------------------------------------------------------


def fmt_number(x) -> str:
    return format(float(x), f".{SIG_DIGITS}g")


def _round(obj):
    """Round floats to the printed precision, recursively."""
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_round(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return float(fmt_number(x))
    return obj


def to_json(obj) -> str:
    return json.dumps(_round(obj), indent=2) + "\n"


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else fmt_number(v) if isinstance(v, (float, np.floating)) else v
                    for v in row])
    return buf.getvalue()


def _record_csv(record: dict) -> str:
    flat = {k: v for k, v in _round(record).items() if not isinstance(v, (list, dict))}
    return to_csv(list(flat), [[flat[k] for k in flat]])


# -- flag parsing -------------------------------------------------------------


def parse_vector(arg: str, t: int, flag: str) -> np.ndarray:
    """``uniform``, an inline comma list, or ``@file.csv`` with one value per line."""
    if arg == "uniform":
        return uniform(t)
    try:
        if arg.startswith("@"):
            text = Path(arg[1:]).read_text()
            items = [ln.split(",")[0].strip() for ln in text.splitlines()]
            values = [float(v) for v in items if v]
        else:
            values = [float(v) for v in arg.split(",") if v.strip()]
    except OSError as exc:
        raise UsageError(flag, f"cannot read {arg[1:]!r}: {exc.strerror}") from None
    except ValueError:
        raise UsageError(flag, f"not a number list: {arg!r}") from None
    if len(values) != t:
        raise UsageError(flag, f"has {len(values)} entries, expected t={t}")
    return np.array(values)


def parse_range(arg: str, flag: str, step: int | None = None) -> list[int]:
    """Inclusive integer range ``a:b[:step]``."""
    parts = arg.split(":")
    try:
        nums = [int(v) for v in parts]
    except ValueError:
        raise UsageError(flag, f"expected integers a:b[:step], got {arg!r}") from None
    if len(nums) == 1:
        nums = [nums[0], nums[0]]
    if len(nums) not in (2, 3):
        raise UsageError(flag, f"expected a:b[:step], got {arg!r}")
    lo, hi = nums[0], nums[1]
    stride = step if step is not None else (nums[2] if len(nums) == 3 else 1)
    if stride < 1:
        raise UsageError("--step" if step is not None else flag, "step must be >= 1")
    values = list(range(lo, hi + 1, stride))
    if not values:
        raise UsageError(flag, f"range {arg!r} is empty")
    return values


def _wrap(flag, build):
    try:
        return build()
    except DomainError as exc:
        raise UsageError(flag, str(exc)) from None


def build_lottery(args) -> LotteryConfig:
    p = parse_vector(args.p, args.t, "--p")
    return _wrap("--p", lambda: LotteryConfig(args.t, p, args.a, args.x))


def default_weights(s: float, t: int) -> np.ndarray:
    """``e_s`` for integer ``s <= t``, the balanced integer split for larger
    integer ``s``, uniform otherwise."""
    if s == 0 or s != int(s):
        return uniform(t)
    if s <= t:
        return uniform_support(int(s), t)
    return optimal_budget_allocation(int(s), t) / s


def build_syndicate(args) -> SyndicateStrategy:
    if args.s < 0:
        raise UsageError("--s", "must be >= 0")
    r = default_weights(args.s, args.t) if args.r is None else parse_vector(args.r, args.t, "--r")
    return _wrap("--r", lambda: SyndicateStrategy(args.s, r))


def build_crowd(args) -> CrowdStrategy:
    if args.c < 0:
        raise UsageError("--c", "must be >= 0")
    q = parse_vector(args.q, args.t, "--q")
    groups = None
    if args.g is not None or args.l is not None:
        if args.g is None or args.l is None:
            raise UsageError("--g" if args.g is None else "--l", "--g and --l go together")
        groups = (args.g, args.l)
    return _wrap("--g" if groups else "--q", lambda: CrowdStrategy(args.c, q, groups))


# -- commands -----------------------------------------------------------------


def cmd_evaluate(args) -> tuple[str, dict]:
    if args.t < 1:
        raise UsageError("--t", "must be >= 1")
    config = build_lottery(args)
    syn = build_syndicate(args)
    crowd = build_crowd(args)
    method = args.method
    if method == "exact":
        rep = _wrap("--g", lambda: expected_win_exact(config, syn, crowd))
    elif method == "enumerate":
        rep = enumerate_exact(config, syn, crowd)
    elif method == "lemma1":
        if not config.is_equiprobable or args.a or args.x:
            raise UsageError("--method", "lemma1 needs uniform p and a = x = 0")
        if args.r is not None or args.s != int(args.s) or args.s > args.t:
            raise UsageError("--method", "lemma1 needs s <= t distinct unit tickets")
        if crowd.groups is not None:
            raise UsageError("--method", "lemma1 does not model groups")
        s = int(args.s)
        win = _wrap("--q", lambda: lemma1_expected_win(args.t, args.c, s, crowd.q))
        rep = make_report(jackpot(config, s, args.c), win, s, "lemma1")
    elif method == "asymptotic":
        if args.s <= 0:
            raise UsageError("--s", "asymptotic method needs s > 0")
        cfg = AsymptoticConfig(args.c / args.s, args.a / args.s, args.x)
        res = _wrap("--q", lambda: asymptotic_return(config.p, syn.r, crowd.q, cfg))
        win = args.s * (1.0 + res.syndicate_return)
        rep = make_report(jackpot(config, args.s, args.c), win, args.s, "asymptotic",
                          crowd_expected_return=res.crowd_return)
    elif method == "simulate":
        return cmd_simulate(args)
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError("--method", f"unknown method {method!r}")
    out = rep.as_dict()
    out["return_defined"] = rep.expected_return is not None
    return "evaluate", out


def _point(t, c, s, a, x):
    config = LotteryConfig.equiprobable(t, a, x)
    syn = SyndicateStrategy(s, default_weights(s, t)) if s > 0 else SyndicateStrategy.distinct(0, t)
    rep = expected_win_exact(config, syn, CrowdStrategy.uniform(c, t))
    return rep.expected_gain, rep.expected_return


def sweep_rows(t, c, s, a, x, var, values) -> list[tuple]:
    rows = []
    for v in values:
        cc, ss = (v, s) if var == "c" else (c, v)
        gain, ret = _point(t, cc, ss, a, x)
        rows.append((v, gain, ret))
    return rows


def cmd_sweep(args):
    if args.t < 1:
        raise UsageError("--t", "must be >= 1")
    if (args.s_range is None) == (args.c_range is None):
        raise UsageError("--s-range", "give exactly one of --s-range and --c-range")
    if args.s_range is not None:
        var, values = "s", parse_range(args.s_range, "--s-range", args.step)
        if values[0] < 0:
            raise UsageError("--s-range", "stakes must be >= 0")
    else:
        var, values = "c", parse_range(args.c_range, "--c-range", args.step)
        if values[0] < 0:
            raise UsageError("--c-range", "crowd sizes must be >= 0")
    rows = _wrap("--t", lambda: sweep_rows(args.t, args.c, args.s, args.a, args.x, var, values))
    if args.format == "csv":
        return "sweep", to_csv(["var", "gain", "return"], rows)
    return "sweep", {"var": var, "rows": [{"var": v, "gain": g, "return": r} for v, g, r in rows]}


def cmd_breakeven(args):
    rep = _wrap("--t", lambda: breakeven(args.t, args.c))
    return "breakeven", rep.as_dict()


TABLE1_HEADER = ["k", "prob", "payoff_s_t", "contrib_s_t", "payoff_s_1", "contrib_s_1"]


def cmd_table1(args):
    rows = _wrap("--kmax", lambda: table1(args.t, args.c, args.kmax, args.pmf))
    if args.format == "csv":
        return "table1", to_csv(TABLE1_HEADER, [[r[h] for h in TABLE1_HEADER] for r in rows])
    sums = {
        "contrib_s_t": math.fsum(r["contrib_s_t"] for r in rows),
        "contrib_s_1": math.fsum(r["contrib_s_1"] for r in rows),
    }
    return "table1", {"rows": rows, "column_sums": sums}


def cmd_groups(args):
    if args.g is None or args.l is None:
        raise UsageError("--g" if args.g is None else "--l", "required for groups")
    s = int(args.s)
    if s != args.s:
        raise UsageError("--s", "must be an integer number of tickets")
    rep = _wrap("--l", lambda: group_adjusted_win(args.t, args.c, s, args.g, args.l))
    return "groups", rep.as_dict()


def cmd_equilibrium(args):
    if args.mode == "crowd-min":
        s = int(args.s)
        if s != args.s:
            raise UsageError("--s", "must be an integer number of tickets")
        rep = _wrap("--s", lambda: minimize_return_over_crowd(args.t, args.c, s, max_iter=args.max_iter))
    else:
        p = parse_vector(args.p, args.t, "--p")
        if args.s <= 0:
            raise UsageError("--s", "best response needs s > 0")
        cfg = _wrap("--a", lambda: AsymptoticConfig(args.c / args.s, args.a / args.s, args.x))
        rep = _wrap("--p", lambda: asymptotic_best_response(p, cfg, side=args.side, max_iter=args.max_iter))
    out = rep.as_dict()
    if not rep.converged:
        raise NonConvergence(out)
    return "equilibrium", out


def cmd_simulate(args):
    config = build_lottery(args)
    syn = build_syndicate(args)
    crowd = build_crowd(args)
    if args.trials < 1:
        raise UsageError("--trials", "must be >= 1")
    if args.workers < 1:
        raise UsageError("--workers", "must be >= 1")
    if args.seed is None:
        args.seed = new_seed()
        print(f"seed: {args.seed}", file=sys.stderr)
    if not 0 <= args.seed < 2**64:
        raise UsageError("--seed", "must be a 64-bit unsigned integer")
    res = _wrap("--q", lambda: simulate(config, syn, crowd, args.trials, args.seed, args.workers))
    return "simulate", res.as_dict()


def cmd_rerun(args):
    try:
        manifest = json.loads(Path(args.manifest).read_text())
        argv = list(manifest["argv"])
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError("--manifest", f"unreadable manifest: {exc}") from None
    sub = build_parser().parse_args(argv)
    args.format = sub.format
    return sub.handler(sub)


# -- parser -------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, s_default=1000.0, c_default=1000):
    p.add_argument("--t", type=int, default=1000, help="number of tickets")
    p.add_argument("--c", type=int, default=c_default, help="crowd size")
    p.add_argument("--s", type=float, default=s_default, help="syndicate stake")
    p.add_argument("--a", type=float, default=0.0, help="carryover pool")
    p.add_argument("--x", type=float, default=0.0, help="take rate")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="write output here plus a sibling .manifest.json")


def _vectors(p: argparse.ArgumentParser):
    p.add_argument("--p", default="uniform", help="ticket probabilities: uniform | list | @file")
    p.add_argument("--q", default="uniform", help="crowd selection law")
    p.add_argument("--r", default=None, help="syndicate weights (default e_s)")
    p.add_argument("--g", type=int, default=None, help="crowd group count")
    p.add_argument("--l", type=int, default=None, help="tickets per group")


def _sim_flags(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="syndicate", description="Syndicate versus crowd lottery returns.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="expected win, gain and return")
    _common(p)
    _vectors(p)
    _sim_flags(p)
    p.add_argument("--method", choices=("exact", "lemma1", "asymptotic", "simulate", "enumerate"),
                   default="exact")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("sweep", help="gain and return over a stake or crowd range")
    _common(p)
    p.add_argument("--s-range", dest="s_range")
    p.add_argument("--c-range", dest="c_range")
    p.add_argument("--step", type=int, default=None)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("breakeven", help="gain-minimizing and breakeven stakes")
    _common(p)
    p.set_defaults(handler=cmd_breakeven)

    p = sub.add_parser("table1", help="per-k breakdown of the expected win")
    _common(p)
    p.add_argument("--kmax", type=int, default=4)
    p.add_argument("--pmf", choices=("poisson", "binomial"), default="poisson")
    p.set_defaults(handler=cmd_table1)

    p = sub.add_parser("groups", help="crowd of g groups buying l distinct tickets each")
    _common(p)
    p.add_argument("--g", type=int, default=None)
    p.add_argument("--l", type=int, default=None)
    p.set_defaults(handler=cmd_groups)

    p = sub.add_parser("equilibrium", help="crowd minimizer or asymptotic best response")
    _common(p)
    p.add_argument("--p", default="uniform")
    p.add_argument("--mode", choices=("crowd-min", "best-response"), default="crowd-min")
    p.add_argument("--side", choices=("crowd", "syndicate"), default="crowd")
    p.add_argument("--max-iter", dest="max_iter", type=int, default=100_000)
    p.set_defaults(handler=cmd_equilibrium)

    p = sub.add_parser("simulate", help="seeded Monte Carlo")
    _common(p)
    _vectors(p)
    _sim_flags(p)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("rerun", help="repeat a run from its manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_rerun)
    return parser


def _render(payload, fmt: str) -> str:
    if isinstance(payload, str):
        return payload
    if fmt == "csv":
        if "rows" in payload:
            rows = payload["rows"]
            return to_csv(list(rows[0]), [list(r.values()) for r in rows])
        return _record_csv(payload)
    return to_json(payload)


def _manifest(args, argv: list[str]) -> dict:
    params = {k: v for k, v in vars(args).items() if k not in ("handler", "out")}
    argv = list(argv)
    if "--out" in argv:
        i = argv.index("--out")
        del argv[i : i + 2]
    if getattr(args, "seed", None) is not None and "--seed" not in argv:
        argv += ["--seed", str(args.seed)]
    return {
        "command": args.command,
        "params": params,
        "argv": argv,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        name, payload = args.handler(args)
    except UsageError as exc:
        print(f"syndicate: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SizeError as exc:
        print(f"syndicate: infeasible size: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except NonConvergence as exc:
        print(to_json(exc.args[0]), end="")
        print("syndicate: optimizer did not converge", file=sys.stderr)
        return EXIT_NONCONVERGED
    except DomainError as exc:
        print(f"syndicate: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = _render(payload, args.format)
    if args.out:
        out = Path(args.out)
        out.write_text(text)
        if args.command == "rerun":
            man = json.loads(Path(args.manifest).read_text())
        else:
            man = _manifest(args, argv)
        out.with_suffix(".manifest.json").write_text(json.dumps(man, indent=2, default=str) + "\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
