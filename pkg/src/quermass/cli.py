"""``quermass`` command line.

Subcommands: sample, sweep, multitype, validate, percolate.  Exit codes:
0 success, 1 failed validation, 2 configuration error, 3 explosion guard.
Primary outputs depend only on (config, seed); the wall-clock timestamp is
written to ``meta.json`` alone.
"""

from __future__ import annotations

import argparse
import datetime
import json
import logging
import platform
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from . import experiments as ex
from . import io
from .config import ConfigError, ExperimentConfig, load_config
from .percolation import WindowTooSmall
from .sampler import ExplosionError, run_chain
from .validation import run_validation

logger = logging.getLogger("quermass")


def _write_meta(out: Path, command: str, cfg_path, seed) -> None:
    meta = {
        "command": command,
        "config": str(cfg_path) if cfg_path else None,
        "seed": seed,
        "version": __version__,
        "python": platform.python_version(),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    io.write_text(out / "meta.json", io.dumps_json(meta))


def _suffix(k: int, n: int) -> str:
    return "" if n == 1 else f"_{k}"


def cmd_sample(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    for k in range(cfg.n_replicas):
        res = run_chain(cfg.params, cfg.window, cfg.boundary, cfg.K, cfg.n_steps, cfg.thinning, cfg.seed,
                        chain_index=k, burn_in=cfg.burn_in, snapshot_every=cfg.snapshot_every,
                        moves=cfg.moves)
        sfx = _suffix(k, cfg.n_replicas)
        io.write_trace_csv(res.records, out / f"trace{sfx}.csv")
        io.write_config_json(res.state.configuration(), out / f"snapshot{sfx}.json")
        for step, conf in res.snapshots:
            io.write_config_json(conf, out / f"snapshot{sfx}_step{step}.json")
        post = res.after_burn_in()
        mean_n = sum(r.n for r in post) / len(post) if post else float("nan")
        print(f"replica {k}: {len(res.records)} records, mean n after burn-in {mean_n:.3f}, "
              f"degenerate proposals {res.state.n_degenerate}")
    return 0


def cmd_sweep(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    rows, agg = ex.sweep(cfg, threads)
    cols = ["parameter", "value", "replica"] + ex.SWEEP_FIELDS
    if cfg.diamond_ell is not None:
        cols += ["pHat", "latticeCrossing", "counterexamples"]
    io.write_rows_csv(cols, ([r[c] for c in cols] for r in rows), out / "summary.csv")
    acols = [c for c in agg[0]]
    io.write_rows_csv(acols, ([a[c] for c in acols] for a in agg), out / "aggregate.csv")
    for a in agg:
        print(f"{a['parameter']}={a['value']:.6g}: crossing {a['crossing']:.3f} +/- {a['crossingSE']:.3f}, "
              f"mean n {a['meanN']:.2f}")
    return 0


def cmd_multitype(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    rep = ex.multitype(cfg, threads)
    io.write_text(out / "multitype.json", io.dumps_json(rep))
    cols = ["replica", "meanD", "nSamples", "meanN"] + [f"density{k + 1}" for k in range(cfg.K)]
    io.write_rows_csv(cols, ([r["replica"], r["meanD"], r["nSamples"], r["meanN"], *r["densities"]]
                             for r in rep["replicas"]), out / "multitype.csv")
    print(f"mean dominance D = {rep['meanD']:.4f} +/- {rep['seD']:.4f} over {rep['nReplicas']} replicas")
    return 0


def cmd_validate(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    results = run_validation(cfg.validate_scale, cfg.seed, cfg.oracle_cells_per_r0)
    ok = all(r.passed for r in results)
    for r in results:
        print(r.line())
    io.write_text(out / "validate.json",
                  io.dumps_json({"passed": ok, "properties": [r.to_dict() for r in results]}))
    return 0 if ok else 1


def cmd_percolate(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    if cfg.diamond_ell is None:
        raise ConfigError("<config>", 1, "percolate needs analysis.diamondEll")
    results = ex.percolate(cfg)
    n = len(results)
    for k, (s, fld) in enumerate(results):
        io.write_site_field_csv(fld, out / f"site_field{_suffix(k, n)}.csv")
        print(f"replica {k}: pHat {s['pHat']:.3f} (p* = {s['pStar']}), lattice crossing {s['latticeCrossing']}, "
              f"continuum crossing over extent {s['continuumCrossing']}")
    summaries = [s for s, _ in results]
    io.write_text(out / "percolation.json", io.dumps_json(summaries[0] if n == 1 else summaries))
    return 0


COMMANDS = {
    "sample": cmd_sample,
    "sweep": cmd_sweep,
    "multitype": cmd_multitype,
    "validate": cmd_validate,
    "percolate": cmd_percolate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quermass", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="experiment JSON (optional for validate)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--threads", type=int, default=1, help="worker processes for replicas")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cmd = args.command
    try:
        if args.config is None:
            if cmd != "validate":
                raise ConfigError("<args>", 0, f"{cmd} needs --config")
            from .config import parse_config
            cfg = parse_config("{}", "<defaults>", need_window=False)
        else:
            cfg = load_config(args.config, need_window=cmd != "validate")
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("<args>", 0, "--seed must be non-negative")
            cfg = replace(cfg, seed=args.seed)
        if cmd == "sweep" and not cfg.sweep_values:
            raise ConfigError(args.config, 1, "sweep needs a 'sweep' section with values")
        if cmd == "multitype" and cfg.K < 2:
            raise ConfigError(args.config, 1, "multitype needs model.K >= 2")
        if cmd == "percolate" and cfg.diamond_ell is None:
            raise ConfigError(args.config, 1, "percolate needs analysis.diamondEll")
        if cmd not in ("validate", "percolate") and cfg.window is None:
            raise ConfigError(args.config, 1, "'window' is required")
        out = io.ensure_dir(args.out or cfg.out_dir)
        code = COMMANDS[cmd](cfg, out, args.threads)
        _write_meta(out, cmd, args.config, cfg.seed)
        return code
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except WindowTooSmall as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ExplosionError as exc:
        print(f"error: explosion guard: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
