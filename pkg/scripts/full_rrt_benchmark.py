#!/usr/bin/env python3
"""Full 8^5 round-robin tournament benchmark.

Enumerates all ~5.37e8 unordered pairs of distinct gain sets against the
similarity oracle and reports the recovered per-band argmax plus runtime.
This is deliberately not part of the test suite; expect a few minutes.

Usage: python3 scripts/full_rrt_benchmark.py [--true-set 3,4,5,2,3]
"""

import argparse
import sys
import time

from hearfit.independence import run_rrt, table_to_csv


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--true-set", default="3,4,5,2,3")
    parser.add_argument("--levels", type=int, default=8)
    parser.add_argument("--bands", type=int, default=5)
    parser.add_argument("--out", default=None, help="optional ratio-table CSV path")
    args = parser.parse_args()

    true_set = [int(v) for v in args.true_set.split(",")]
    space = args.levels**args.bands
    total_pairs = space * (space - 1) // 2
    print(f"enumerating {total_pairs:,} pairs over {space:,} gain sets...", file=sys.stderr)

    t0 = time.time()
    table = run_rrt(args.levels, args.bands, true_set, mode="full", force=True)
    elapsed = time.time() - t0

    recovered = list(table.argmax_levels())
    print(f"true levels:      {true_set}")
    print(f"recovered levels: {recovered}")
    print(f"match: {recovered == true_set}")
    print(f"elapsed: {elapsed:.1f} s ({total_pairs / elapsed:,.0f} pairs/s)")
    if args.out:
        table_to_csv(table.ratio, args.out)
        print(f"ratio table written to {args.out}")
    return 0 if recovered == true_set else 1


if __name__ == "__main__":
    sys.exit(main())
