"""Replica orchestration and aggregation for the command-line front end.

Replica ``k`` always draws from the stream derived from ``(seed, k)``, at
every sweep value, so sweep points are compared on matched seeds and the
aggregated output does not depend on execution order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .config import ExperimentConfig
from .geometry import Configuration
from .io import read_config_json
from .percolation import DiamondGeometry, crossing, site_field, site_percolation_summary
from .sampler import run_chain


def chain_for(cfg: ExperimentConfig, params, replica: int, snapshots: bool = True):
    return run_chain(params, cfg.window, cfg.boundary, cfg.K, cfg.n_steps, cfg.thinning, cfg.seed,
                     chain_index=replica, burn_in=cfg.burn_in,
                     snapshot_every=cfg.snapshot_every if snapshots else None, moves=cfg.moves)


def analysed_states(cfg, res) -> list[Configuration]:
    """Post-burn-in snapshots when configured, else the final state."""
    if res.snapshots:
        return [c for _, c in res.snapshots]
    return [res.state.configuration()]


def lattice_check(config: Configuration, geom: DiamondGeometry, direction: str, window=None) -> dict:
    """Site-field summary plus the continuum crossing over the extent a lattice crossing implies."""
    fld = site_field(config, geom, window)
    s = site_percolation_summary(fld, direction)
    s["continuumCrossing"] = crossing(config, fld.crossing_extent(direction), direction)
    s["counterexample"] = bool(s["latticeCrossing"] and not s["continuumCrossing"])
    return s, fld


def _mean(v):
    return float(np.mean(v)) if len(v) else math.nan


def replica_summary(cfg: ExperimentConfig, params, replica: int) -> dict:
    res = chain_for(cfg, params, replica)
    recs = res.after_burn_in() or res.records[-1:]
    area = cfg.area
    out = {
        "replica": replica,
        "meanN": _mean([r.n for r in recs]),
        "meanArea": _mean([r.area for r in recs]),
        "meanPerimeter": _mean([r.perimeter for r in recs]),
        "meanEuler": _mean([r.euler for r in recs]),
        "meanComponents": _mean([r.components for r in recs]),
        "meanHoles": _mean([r.holes for r in recs]),
    }
    out["holesPerArea"] = out["meanHoles"] / area
    states = analysed_states(cfg, res)
    out["crossing"] = _mean([float(crossing(c, cfg.window, cfg.crossing_direction)) for c in states])
    if cfg.diamond_ell is not None:
        geom = DiamondGeometry.for_radii(cfg.diamond_ell, params.r0, params.r1)
        sums = [lattice_check(c, geom, cfg.crossing_direction, cfg.window)[0] for c in states]
        out["pHat"] = _mean([s["pHat"] for s in sums])
        out["latticeCrossing"] = _mean([float(s["latticeCrossing"]) for s in sums])
        out["counterexamples"] = int(sum(s["counterexample"] for s in sums))
    return out


def multitype_summary(cfg: ExperimentConfig, params, replica: int) -> dict:
    res = chain_for(cfg, params, replica, snapshots=False)
    recs = res.after_burn_in() or res.records[-1:]
    ds = [max(r.type_counts) / r.n for r in recs if r.n > 0]
    dens = [[r.type_counts[k] / cfg.area for r in recs] for k in range(cfg.K)]
    return {"replica": replica, "meanD": _mean(ds), "nSamples": len(ds), "D": ds,
            "densities": [_mean(d) for d in dens], "meanN": _mean([r.n for r in recs])}


def _job(args):
    kind, cfg, overrides, replica = args
    params = cfg.params.replace(**overrides) if overrides else cfg.params
    if kind == "multitype":
        return multitype_summary(cfg, params, replica)
    return replica_summary(cfg, params, replica)


def run_jobs(jobs, threads: int = 1) -> list:
    """Evaluate jobs, in parallel when ``threads > 1``; results keep job order."""
    if threads <= 1 or len(jobs) <= 1:
        return [_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_job, jobs))


def mean_se(values) -> tuple[float, float]:
    v = np.asarray([x for x in values if not math.isnan(x)], dtype=float)
    if len(v) == 0:
        return math.nan, math.nan
    se = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else math.nan
    return float(v.mean()), se


SWEEP_FIELDS = ["meanN", "meanArea", "meanPerimeter", "meanEuler", "meanComponents", "meanHoles",
                "holesPerArea", "crossing"]


def sweep(cfg: ExperimentConfig, threads: int = 1) -> tuple[list[dict], list[dict]]:
    """Per-replica rows and per-value aggregates (mean and standard error)."""
    jobs = [("sweep", cfg, {cfg.sweep_parameter: v}, r)
            for v in cfg.sweep_values for r in range(cfg.n_replicas)]
    results = run_jobs(jobs, threads)
    rows, agg = [], []
    fields = SWEEP_FIELDS + (["pHat", "latticeCrossing"] if cfg.diamond_ell is not None else [])
    for k, v in enumerate(cfg.sweep_values):
        block = results[k * cfg.n_replicas:(k + 1) * cfg.n_replicas]
        for b in block:
            rows.append({"parameter": cfg.sweep_parameter, "value": v, **b})
        a = {"parameter": cfg.sweep_parameter, "value": v, "nReplicas": len(block)}
        for f in fields:
            a[f], a[f + "SE"] = mean_se([b[f] for b in block])
        if cfg.diamond_ell is not None:
            a["counterexamples"] = int(sum(b["counterexamples"] for b in block))
        agg.append(a)
    return rows, agg


def multitype(cfg: ExperimentConfig, threads: int = 1, bins: int = 10) -> dict:
    jobs = [("multitype", cfg, None, r) for r in range(cfg.n_replicas)]
    results = run_jobs(jobs, threads)
    m, se = mean_se([r["meanD"] for r in results])
    pooled = [d for r in results for d in r["D"]]
    edges = np.linspace(1.0 / cfg.K, 1.0, bins + 1)
    counts = np.histogram(pooled, bins=edges)[0] if pooled else np.zeros(bins, dtype=int)
    return {
        "K": cfg.K,
        "nReplicas": cfg.n_replicas,
        "meanD": m,
        "seD": se,
        "histogram": {"edges": [float(e) for e in edges], "counts": [int(c) for c in counts]},
        "perTypeDensity": [mean_se([r["densities"][k] for r in results])[0] for k in range(cfg.K)],
        "replicas": [{k: v for k, v in r.items() if k != "D"} for r in results],
    }


def percolate(cfg: ExperimentConfig) -> list[tuple[dict, object]]:
    """Site-field analysis of the input configuration, or of each replica's final state."""
    if cfg.diamond_ell is None:
        raise ValueError("percolate needs analysis.diamondEll")
    geom = DiamondGeometry.for_radii(cfg.diamond_ell, cfg.params.r0, cfg.params.r1)
    if cfg.input_path is not None:
        conf = read_config_json(cfg.input_path)
        window = cfg.window or conf.window
        configs = [conf]
    else:
        window = cfg.window
        configs = [chain_for(replace(cfg, snapshot_every=None), cfg.params, r).state.configuration()
                   for r in range(cfg.n_replicas)]
    out = []
    for k, c in enumerate(configs):
        s, fld = lattice_check(c, geom, cfg.crossing_direction, window)
        s["replica"] = k
        s["crossing"] = crossing(c, window, cfg.crossing_direction)
        out.append((s, fld))
    return out
