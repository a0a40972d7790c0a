"""Run `verify --suite all` twice with one seed, time both runs and compare the numeric columns.

    python3 scripts/run_verify.py --n 1e6 --seed 1 --out results/
"""

import argparse
import sys
import time
from pathlib import Path

from gaussreg.cli import run
from gaussreg.report import numeric_columns, read_csv


def main() -> int:
    ap = argparse.ArgumentParser(formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    ap.add_argument("--n", default="1e6", help="Monte Carlo sample count")
    ap.add_argument("--seed", default="1", help="seed shared by both runs")
    ap.add_argument("--suite", default="all", help="suite name")
    ap.add_argument("--out", default="results", help="directory for the two CSV reports")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    texts, status = [], 0
    for i in range(2):
        path = out / f"verify_{args.suite}_run{i}.csv"
        t0 = time.perf_counter()
        code = run(["verify", "--suite", args.suite, "--n", args.n, "--seed", args.seed, "--output", str(path)])
        secs = time.perf_counter() - t0
        texts.append(path.read_text())
        rows = read_csv(texts[-1])[1]
        counts = {}
        for r in rows:
            counts[r["verdict"]] = counts.get(r["verdict"], 0) + 1
        print(f"run {i}: exit {code}, {secs:.1f} s, {len(rows)} rows, " +
              ", ".join(f"{k} {v}" for k, v in sorted(counts.items())))
        status |= code
    same = numeric_columns(texts[0]) == numeric_columns(texts[1])
    print(f"numeric columns identical: {same}")
    return status or (0 if same else 1)


if __name__ == "__main__":
    sys.exit(main())
