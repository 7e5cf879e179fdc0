"""End-to-end pipeline plus the perturbation study and timing benchmark."""
from __future__ import annotations

import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .config import OrderConfig
from .graph_sim import DataMatrix, NoiseSpec, WeightedDag, simulate, topological_order
from .stein_order import CausalOrder, center, order_with_diagnostics
from .tri_opt import OptConfig, optimize, permute_data, threshold, unpermute

REPORT_SCHEMA_VERSION = 1


@dataclass
class DiscoverResult:
    B: np.ndarray
    W_raw: np.ndarray
    order: CausalOrder
    rounds: list
    iterations: int
    converged: bool
    objective: float
    timings: dict = field(default_factory=dict)

    @property
    def fallback_events(self) -> int:
        return sum(r["event"] in ("alpha", "periodic") for r in self.rounds)


def learn(Xc: DataMatrix, order: CausalOrder, opt: OptConfig, apply_threshold: bool = True):
    """Ordered optimisation followed by thresholding; returns (B, raw W, OptResult)."""
    res = optimize(permute_data(Xc, order), opt, full=True)
    Wpi = threshold(res.W, opt.w_threshold) if apply_threshold else res.W
    return unpermute(Wpi, order).weights, unpermute(res.W, order).weights, res


def discover(X, ordering: OrderConfig | None = None, opt: OptConfig | None = None) -> DiscoverResult:
    """Center, order, then learn weights under that order."""
    ordering = ordering or OrderConfig()
    opt = opt or OptConfig()
    t0 = time.perf_counter()
    Xc = center(X)
    perm, rounds = order_with_diagnostics(
        Xc, ordering.eta, ordering.zeta, ordering.tau, ordering.use_downdate, ordering.refine
    )
    t1 = time.perf_counter()
    B, W_raw, res = learn(Xc, perm, opt)
    t2 = time.perf_counter()
    return DiscoverResult(
        B, W_raw, perm, rounds, res.iterations, res.converged, float(res.objectives[-1]),
        {"ordering_seconds": t1 - t0, "optimization_seconds": t2 - t1},
    )


def build_report(result: DiscoverResult, X: DataMatrix, ordering: OrderConfig, opt: OptConfig, truth=None) -> dict:
    from dataclasses import asdict

    rep = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "n": X.n,
        "d": X.d,
        "ordering": asdict(ordering),
        "opt": asdict(opt),
        "n_edges": int(np.count_nonzero(result.B)),
        "fallback_events": result.fallback_events,
        "downdates": sum(r["event"] == "downdate" for r in result.rounds),
        "iterations": result.iterations,
        "converged": result.converged,
        "objective": result.objective,
        "timings": result.timings,
    }
    if truth is not None:
        rep["metrics"] = metrics.evaluate(result.B, truth, result.order)
    return rep


def _mean_std(xs) -> dict:
    xs = [float(x) for x in xs]
    return {"mean": statistics.fmean(xs), "std": statistics.pstdev(xs) if len(xs) > 1 else 0.0}


def perturb_study(
    family: str = "ER",
    degree: int = 1,
    d: int = 100,
    n: int = 5000,
    noise: str = "gaussian_ev",
    seeds=range(5),
    kinds=metrics.PERTURB_KINDS,
    fractions=(0.01, 0.05, 0.10, 0.20),
    opt: OptConfig | None = None,
    base_order: str = "topological",
    workers: int = 1,
) -> dict:
    """F1 / SHD of the ordered optimiser when its input order is corrupted.

    ``base_order`` is the uncorrupted order: ``topological`` (layered Kahn
    sort of the true graph) or ``generative`` (the simulator's own order).
    """
    opt = opt or OptConfig()
    seeds = list(seeds)
    datasets = {}
    for s in seeds:
        dag, X = simulate(family, d, degree, n, NoiseSpec(noise), seed=s)
        base = topological_order(dag.weights) if base_order == "topological" else dag.topo_order
        datasets[s] = (dag, center(X), CausalOrder(base))

    cells = [("baseline", 0.0)] + [(k, f) for k in kinds for f in fractions]
    jobs = [(k, f, s) for (k, f) in cells for s in seeds]

    def run(job):
        kind, frac, s = job
        dag, Xc, base = datasets[s]
        if kind == "baseline":
            o = base
        else:
            spec = metrics.PerturbSpec(kind, frac, seed=s * 7919 + metrics.PERTURB_KINDS.index(kind) * 101 + int(round(frac * 1000)))
            o = metrics.perturb(base, dag.weights, spec)
        B, _, _ = learn(Xc, o, opt)
        return {
            "f1": metrics.f1(B, dag.weights),
            "shd": metrics.shd(B, dag.weights)["raw"],
            "order_divergence": metrics.order_divergence(o, dag.weights),
        }

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            outs = list(ex.map(run, jobs))
    else:
        outs = [run(j) for j in jobs]
    by_job = dict(zip(jobs, outs))

    rows = []
    base_f1 = _mean_std(by_job[("baseline", 0.0, s)]["f1"] for s in seeds)["mean"]
    base_shd = _mean_std(by_job[("baseline", 0.0, s)]["shd"] for s in seeds)["mean"]
    for kind, frac in cells:
        res = [by_job[(kind, frac, s)] for s in seeds]
        f1s = _mean_std(r["f1"] for r in res)
        shds = _mean_std(r["shd"] for r in res)
        rows.append({
            "kind": kind,
            "fraction": frac,
            "f1": f1s,
            "shd": shds,
            "delta_f1": f1s["mean"] - base_f1,
            "delta_shd": shds["mean"] - base_shd,
            "order_divergence": _mean_std(r["order_divergence"] for r in res),
            "per_seed": res,
        })
    return {
        "graph": f"{family.upper()}{degree}",
        "d": d,
        "n": n,
        "noise": noise,
        "seeds": seeds,
        "base_order": base_order,
        "cells": rows,
    }


def _time(fn, repeats: int) -> tuple[float, object]:
    times, out = [], None
    for _ in range(repeats):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return statistics.median(times), out


def bench(
    dims=(20, 100),
    ns=(2000,),
    family: str = "ER",
    degree: int = 1,
    repeats: int = 3,
    seed: int = 0,
    ordering: OrderConfig | None = None,
    opt: OptConfig | None = None,
    workers: int = 1,
) -> list[dict]:
    """Median wall-clock of ordering with/without downdates and of the optimiser."""
    ordering = ordering or OrderConfig()
    opt = opt or OptConfig()
    cells = [(d, n) for d in dims for n in ns]

    def run(cell):
        d, n = cell
        dag, X = simulate(family, d, degree, n, seed=seed)
        Xc = center(X)
        kw = dict(eta=ordering.eta, zeta=ordering.zeta, tau=ordering.tau, refine=ordering.refine)
        t_sm, (o_sm, _) = _time(lambda: order_with_diagnostics(Xc, use_downdate=True, **kw), repeats)
        t_nosm, (o_nosm, _) = _time(lambda: order_with_diagnostics(Xc, use_downdate=False, **kw), repeats)
        t_opt, _ = _time(lambda: optimize(permute_data(Xc, o_sm), opt), repeats)
        return {
            "d": d,
            "n": n,
            "graph": f"{family.upper()}{degree}",
            "order_sm_seconds": t_sm,
            "order_nosm_seconds": t_nosm,
            "optimize_seconds": t_opt,
            "speedup_sm": t_nosm / t_sm if t_sm > 0 else float("inf"),
            "order_divergence_sm": metrics.order_divergence(o_sm, dag.weights),
            "order_divergence_nosm": metrics.order_divergence(o_nosm, dag.weights),
            "repeats": repeats,
        }

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(run, cells))
    return [run(c) for c in cells]


def format_bench(rows: list[dict]) -> str:
    cols = [
        ("d", "d", "{}"),
        ("n", "n", "{}"),
        ("graph", "graph", "{}"),
        ("order_sm_seconds", "order+SM [s]", "{:.3f}"),
        ("order_nosm_seconds", "order-SM [s]", "{:.3f}"),
        ("optimize_seconds", "optimize [s]", "{:.3f}"),
        ("speedup_sm", "speedup", "{:.2f}x"),
    ]
    table = [[title for _, title, _ in cols]]
    for r in rows:
        table.append([fmt.format(r[key]) for key, _, fmt in cols])
    widths = [max(len(row[i]) for row in table) for i in range(len(cols))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in table]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
