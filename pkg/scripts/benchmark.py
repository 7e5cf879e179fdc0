#!/usr/bin/env python3
"""Wall-clock of the ordering phase with and without rank-1 downdates.

    python scripts/benchmark.py --d 20 50 100 200 500 --n 2000 --out results/bench.json
"""
import argparse
from pathlib import Path

from triopt import io
from triopt.experiments import bench, format_bench


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--d", type=int, nargs="+", default=[20, 50, 100, 200])
    ap.add_argument("--n", type=int, nargs="+", default=[1000, 2000])
    ap.add_argument("--graph", default="ER")
    ap.add_argument("--degree", type=int, default=1)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results/bench.json")
    args = ap.parse_args()

    rows = bench(args.d, args.n, args.graph, args.degree, repeats=args.repeats, workers=args.workers)
    io.ensure_dir(Path(args.out).parent)
    io.write_json(args.out, {"rows": rows})
    print(format_bench(rows))
    print(f"\nwritten to {args.out}")


if __name__ == "__main__":
    main()
