#!/usr/bin/env python3
"""Sensitivity of the ordered optimiser to corrupted causal orders.

Default is the full grid (ER1 / ER4 / SF4, d=100, n=5000, 5 seeds, all five
perturbation kinds at 1/5/10/20%). Use --quick for a CI-sized run.

    python scripts/perturbation_study.py --out results/perturb
"""
import argparse
from pathlib import Path

from triopt import io
from triopt.experiments import perturb_study
from triopt.metrics import PERTURB_KINDS


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--graphs", nargs="+", default=["ER1", "ER4", "SF4"])
    ap.add_argument("--d", type=int, default=100)
    ap.add_argument("--n", type=int, default=5000)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--fractions", nargs="+", type=float, default=[0.01, 0.05, 0.10, 0.20])
    ap.add_argument("--base-order", choices=("topological", "generative"), default="topological")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--quick", action="store_true", help="d=30, n=1000, 2 seeds")
    ap.add_argument("--out", default="results/perturb")
    args = ap.parse_args()
    if args.quick:
        args.d, args.n, args.seeds = 30, 1000, 2

    out = io.ensure_dir(args.out)
    for g in args.graphs:
        family, degree = g[:2], int(g[2:])
        res = perturb_study(family, degree, args.d, args.n, seeds=range(args.seeds), kinds=PERTURB_KINDS,
                            fractions=args.fractions, base_order=args.base_order, workers=args.workers)
        io.write_json(Path(out) / f"{g}.json", res)
        print(f"\n{g}  d={args.d} n={args.n} seeds={args.seeds}")
        print(f"{'kind':>15} " + " ".join(f"{100 * f:>11.0f}%" for f in args.fractions))
        by = {(c["kind"], c["fraction"]): c for c in res["cells"]}
        base = by[("baseline", 0.0)]["f1"]
        print(f"{'baseline':>15}  F1 {base['mean']:.3f} +- {base['std']:.3f}")
        for kind in PERTURB_KINDS:
            cells = [by[(kind, f)]["f1"] for f in args.fractions]
            print(f"{kind:>15} " + " ".join(f"{c['mean']:.3f}+-{c['std']:.3f}" for c in cells))


if __name__ == "__main__":
    main()
