"""Worked 1000-ticket example: trump-ticket return, breakeven, per-k table and both sweeps.

Writes CSV files next to the given output directory (default ./out).
"""

import argparse
import csv
from pathlib import Path

from syndicate.closed_forms import breakeven, table1, uniform_gain, uniform_return


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="out")
    ap.add_argument("--t", type=int, default=1000)
    ap.add_argument("--c", type=int, default=1000)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t, c = args.t, args.c

    print(f"return of one of every ticket: {uniform_return(t, c, t):.6f}")
    rep = breakeven(t, c)
    print(f"s_star={rep.s_star:.4f} g_min={rep.g_min:.4f} first profitable={rep.first_profitable_integer}")

    rows = table1(t, c)
    with open(out / "table1.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    print(f"table sums: {sum(r['contrib_s_t'] for r in rows):.2f} {sum(r['contrib_s_1'] for r in rows):.4f}")

    with open(out / "gain_vs_stake.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["var", "gain", "return"])
        for s in range(1, t + 1):
            w.writerow([s, uniform_gain(t, c, s), uniform_return(t, c, s)])
    with open(out / "return_vs_crowd.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["var", "gain", "return"])
        for cc in range(t, 10 * t + 1, t // 10 or 1):
            w.writerow([cc, uniform_gain(t, cc, t), uniform_return(t, cc, t)])
    print(f"wrote {out}/table1.csv, gain_vs_stake.csv, return_vs_crowd.csv")


if __name__ == "__main__":
    main()
