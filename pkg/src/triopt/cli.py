"""``triopt`` command line interface."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments, io, metrics
from .config import DataConfig, GraphConfig, OrderConfig, OutputConfig, RunConfig
from .errors import TriOptError
from .graph_sim import DataMatrix, NoiseSpec, simulate
from .stein_order import center, order_with_diagnostics
from .tri_opt import OptConfig

log = logging.getLogger("triopt")


def _add_seed_flag(p: argparse.ArgumentParser) -> None:
    # accepted everywhere for a uniform interface; deterministic commands ignore it
    p.add_argument("--seed", type=int, default=0, help="unused: this command draws no randomness")


def _add_order_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eta", type=float, default=None, help="kernel ridge eta (default 0.9)")
    p.add_argument("--zeta", type=float, default=None, help="downdate denominator floor (default 1e-7)")
    p.add_argument("--tau", type=int, default=None, help="downdates between forced re-inversions (default 100)")
    p.add_argument("--sm", dest="use_downdate", action=argparse.BooleanOptionalAction, default=None,
                   help="maintain the kernel inverse with Sherman-Morrison downdates (default on)")
    p.add_argument("--refine", action=argparse.BooleanOptionalAction, default=None,
                   help="refine the downdate vector once (default on)")


def _add_opt_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="l1 weight (default 0.001)")
    p.add_argument("--epsilon", type=float, default=None, help="Charbonnier epsilon (default 1e-4)")
    p.add_argument("--max-iter", type=int, default=None, help="iteration budget (default 100)")
    p.add_argument("--threshold", dest="w_threshold", type=float, default=None, help="weight threshold (default 0.3)")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--method", choices=("newton", "pgd"), default=None)


def _override(obj, args, names):
    given = {k: getattr(args, k) for k in names if getattr(args, k, None) is not None}
    return replace(obj, **given) if given else obj


def _order_cfg(args, base: OrderConfig | None = None) -> OrderConfig:
    return _override(base or OrderConfig(), args, ("eta", "zeta", "tau", "use_downdate", "refine"))


def _opt_cfg(args, base: OptConfig | None = None) -> OptConfig:
    return _override(base or OptConfig(), args, ("lam", "epsilon", "max_iter", "w_threshold", "tol", "method"))


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    graph = _override(cfg.graph, args, ("family", "degree", "d", "weight_scale"))
    data = _override(cfg.data, args, ("n", "noise", "scale", "seed"))
    output = _override(cfg.output, args, ("out_dir",))
    if getattr(args, "header", False):
        output = replace(output, header=True)
    return RunConfig(graph, data, _order_cfg(args, cfg.ordering), _opt_cfg(args, cfg.opt), output)


def _read_data(path, header: bool) -> DataMatrix:
    return DataMatrix(io.read_csv(path, header=header))


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = io.ensure_dir(cfg.output.out_dir)
    dag, X = simulate(
        cfg.graph.family, cfg.graph.d, cfg.graph.degree, cfg.data.n,
        NoiseSpec(cfg.data.noise, cfg.data.scale), cfg.graph.weight_scale, cfg.data.seed,
    )
    io.write_csv(out / "data.csv", X.values)
    io.write_csv(out / "truth.csv", dag.weights)
    io.write_json(out / "truth.json", io.graph_to_json(dag.weights, dag.topo_order))
    cfg.save(out / "config.json")
    print(f"wrote {X.n}x{X.d} data and {dag.n_edges}-edge graph to {out}")
    return 0


def cmd_order(args) -> int:
    X = _read_data(args.input, args.header)
    oc = _order_cfg(args)
    perm, rounds = order_with_diagnostics(X, oc.eta, oc.zeta, oc.tau, oc.use_downdate, oc.refine)
    if args.output:
        io.write_json(args.output, perm.tolist())
    else:
        sys.stdout.write(io.dumps(perm.tolist()))
    if args.diagnostics:
        io.write_jsonl(args.diagnostics, rounds)
    return 0


def _write_graph(out: Path, stem: str, B: np.ndarray, order) -> None:
    io.write_csv(out / f"{stem}.csv", B)
    io.write_json(out / f"{stem}.json", io.graph_to_json(B, order))


def cmd_learn(args) -> int:
    X = _read_data(args.input, args.header)
    order = io.read_order(args.order)
    opt = _opt_cfg(args)
    B, _, res = experiments.learn(center(X), order, opt, apply_threshold=not args.no_threshold)
    out = io.ensure_dir(args.out_dir)
    _write_graph(out, "bhat", B, order)
    print(f"{int(np.count_nonzero(B))} edges, {res.iterations} iterations, objective {res.objectives[-1]:.6g}")
    return 0


def cmd_discover(args) -> int:
    cfg = _load_config(args)
    X = _read_data(args.input, cfg.output.header)
    truth = io.read_csv(args.truth) if args.truth else None
    result = experiments.discover(X, cfg.ordering, cfg.opt)
    out = io.ensure_dir(cfg.output.out_dir)
    _write_graph(out, "bhat", result.B, result.order)
    io.write_json(out / "order.json", result.order.tolist())
    if args.diagnostics:
        io.write_jsonl(out / "rounds.jsonl", result.rounds)
    report = experiments.build_report(result, X, cfg.ordering, cfg.opt, truth)
    io.write_json(out / "report.json", report)
    line = f"{report['n_edges']} edges in {sum(result.timings.values()):.2f}s"
    if truth is not None:
        m = report["metrics"]
        line += f"; SHD {m['shd']} (normalized {m['normalized_shd']:.3f}), F1 {m['f1']:.3f}"
    print(line)
    return 0


def cmd_eval(args) -> int:
    pred = io.read_csv(args.pred)
    truth = io.read_csv(args.truth)
    order = io.read_order(args.order) if args.order else None
    res = metrics.evaluate(pred, truth, order)
    text = io.dumps(res)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def cmd_perturb_study(args) -> int:
    res = experiments.perturb_study(
        args.graph, args.degree, args.d, args.n, args.noise,
        seeds=range(args.seed, args.seed + args.seeds),
        kinds=args.kinds, fractions=args.fractions,
        opt=_opt_cfg(args), base_order=args.base_order, workers=args.workers,
    )
    if args.output:
        io.write_json(args.output, res)
    for c in res["cells"]:
        print(f"{c['kind']:>15} {100 * c['fraction']:5.1f}%  "
              f"SHD {c['shd']['mean']:8.3f} +- {c['shd']['std']:7.3f}  "
              f"F1 {c['f1']['mean']:.3f} +- {c['f1']['std']:.3f}  ({c['delta_f1']:+.3f})")
    return 0


def cmd_bench(args) -> int:
    rows = experiments.bench(
        dims=args.d, ns=args.n, family=args.graph, degree=args.degree,
        repeats=args.repeats, seed=args.seed, ordering=_order_cfg(args), workers=args.workers,
    )
    if args.output:
        io.write_json(args.output, {"rows": rows})
    print(experiments.format_bench(rows))
    return 0


def cmd_selftest(args) -> int:
    from .oracle import run_battery

    ok = True
    for name, passed, detail in run_battery(args.seed):
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}  ({detail})")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="triopt", description="Linear causal discovery: Stein ordering + triangular least squares.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a DAG and linear SEM data")
    p.add_argument("--config")
    p.add_argument("--family", "--graph", dest="family", choices=("ER", "SF"), default=None)
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--weight-scale", dest="weight_scale", type=float, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--noise", choices=("gaussian_ev", "gaussian", "gumbel", "exponential"), default=None)
    p.add_argument("--scale", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", dest="out_dir", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("order", help="estimate a causal order")
    _add_seed_flag(p)
    p.add_argument("--input", required=True)
    p.add_argument("--header", action="store_true")
    p.add_argument("--output", help="order JSON (stdout if omitted)")
    p.add_argument("--diagnostics", help="per-round JSON lines")
    _add_order_flags(p)
    p.set_defaults(func=cmd_order)

    p = sub.add_parser("learn", help="fit weights under a given order")
    _add_seed_flag(p)
    p.add_argument("--input", required=True)
    p.add_argument("--order", required=True, help="JSON array, or object with an 'order' key")
    p.add_argument("--header", action="store_true")
    p.add_argument("--out", dest="out_dir", default=".")
    p.add_argument("--no-threshold", action="store_true", help="emit raw weights")
    _add_opt_flags(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("discover", help="order + learn in one go")
    p.add_argument("--seed", type=int, default=None, help="recorded in the config; the command itself draws no randomness")
    p.add_argument("--config")
    p.add_argument("--input", required=True)
    p.add_argument("--header", action="store_true")
    p.add_argument("--truth", help="true adjacency CSV; adds metrics to the report")
    p.add_argument("--out", dest="out_dir", default=None)
    p.add_argument("--diagnostics", action="store_true", help="also write rounds.jsonl")
    _add_order_flags(p)
    _add_opt_flags(p)
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("eval", help="compare a predicted graph with the truth")
    _add_seed_flag(p)
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--order")
    p.add_argument("--output")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("perturb-study", help="sensitivity of the optimiser to order errors")
    p.add_argument("--graph", choices=("ER", "SF"), default="ER")
    p.add_argument("--degree", type=int, default=1)
    p.add_argument("--d", type=int, default=100)
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--noise", default="gaussian_ev")
    p.add_argument("--seeds", type=int, default=5, help="number of seeds")
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--kinds", nargs="+", choices=metrics.PERTURB_KINDS, default=list(metrics.PERTURB_KINDS))
    p.add_argument("--fractions", nargs="+", type=float, default=[0.01, 0.05, 0.10, 0.20])
    p.add_argument("--base-order", choices=("topological", "generative"), default="topological")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output")
    _add_opt_flags(p)
    p.set_defaults(func=cmd_perturb_study)

    p = sub.add_parser("bench", help="time ordering with/without downdates and the optimiser")
    p.add_argument("--d", type=int, nargs="+", default=[20, 100])
    p.add_argument("--n", type=int, nargs="+", default=[2000])
    p.add_argument("--graph", choices=("ER", "SF"), default="ER")
    p.add_argument("--degree", type=int, default=1)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output")
    _add_order_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("selftest", help="run the oracle battery")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (TriOptError, OSError) as exc:
        print(f"triopt: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
