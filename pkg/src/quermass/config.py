"""Experiment configuration: a single JSON document.

Schema (all keys optional unless noted)::

    {
      "model": {
        "theta": [t1, t2, t3],            # or theta1/theta2/theta3
        "z": 1.0, "r0": 1.0, "r1": 1.0,
        "radiusLaw": {"kind": "uniform", "low": 0.5, "high": 1.0},
        "K": 1,
        "boundary": "free" | "periodic" | "fixed",
        "outside": "outside.json"         # required for "fixed"; relative to this file
      },
      "window": [x0, y0, x1, y1],         # required except for validate
      "chain": {"nSteps": 100000, "burnIn": null, "thinning": null, "nReplicas": 1,
                "snapshotEvery": null,
                "moves": {"pBirth": 0.4, "pDeath": 0.4, "pMove": 0.2, "moveScale": null}},
      "sweep": {"parameter": "z" | "theta1" | "theta2" | "theta3", "values": [...]},
      "analysis": {"crossingDirection": "horizontal" | "vertical", "diamondEll": null},
      "input": "config.json",             # percolate: analyse this configuration instead of sampling
      "validate": {"scale": "smoke" | "quick" | "full", "oracleCellsPerR0": 64},
      "seed": 0,
      "output": {"dir": "out"}
    }

Errors are reported as ``path:line: message`` with the line of the
offending key.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .io import read_config_json
from .params import QuermassParams, RadiusLaw
from .sampler import Boundary, MoveMix


class ConfigError(ValueError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path, self.line, self.message = path, line, message


@dataclass
class ExperimentConfig:
    params: QuermassParams
    K: int = 1
    boundary: Boundary = field(default_factory=Boundary)
    window: tuple | None = None
    n_steps: int = 100_000
    burn_in: int | None = None
    thinning: int | None = None
    n_replicas: int = 1
    snapshot_every: int | None = None
    moves: MoveMix = field(default_factory=MoveMix)
    sweep_parameter: str | None = None
    sweep_values: tuple = ()
    crossing_direction: str = "horizontal"
    diamond_ell: float | None = None
    input_path: str | None = None
    validate_scale: str = "quick"
    oracle_cells_per_r0: int = 64
    seed: int = 0
    out_dir: str = "out"

    @property
    def area(self) -> float:
        x0, y0, x1, y1 = self.window
        return (x1 - x0) * (y1 - y0)


class _Reader:
    def __init__(self, path, text):
        self.path, self.text = path, text

    def line(self, *keys) -> int:
        pos = 0
        for k in keys:
            i = self.text.find(f'"{k}"', pos)
            if i < 0:
                break
            pos = i
        return self.text.count("\n", 0, pos) + 1

    def fail(self, keys, msg):
        raise ConfigError(self.path, self.line(*keys), msg)

    def number(self, d, key, keys, default=None, integer=False, positive=False, allow_none=False):
        if key not in d or (d[key] is None and allow_none):
            return default
        v = d[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.fail(keys + (key,), f"'{key}' must be a finite number")
        if integer:
            if v != int(v):
                self.fail(keys + (key,), f"'{key}' must be an integer")
            v = int(v)
        if positive and not v > 0:
            self.fail(keys + (key,), f"'{key}' must be positive")
        return v

    def section(self, d, key) -> dict:
        v = d.get(key, {})
        if v is None:
            return {}
        if not isinstance(v, dict):
            self.fail((key,), f"'{key}' must be an object")
        return v


def parse_config(text: str, path="<config>", base_dir=None, need_window: bool = True) -> ExperimentConfig:
    rd = _Reader(path, text)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(path, exc.lineno, f"invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(path, 1, "top level must be a JSON object")
    base_dir = Path(base_dir) if base_dir is not None else Path(".")

    m = rd.section(doc, "model")
    theta = m.get("theta")
    if theta is not None:
        if not (isinstance(theta, list) and len(theta) == 3
                and all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in theta)):
            rd.fail(("model", "theta"), "'theta' must be a list of three numbers")
        t1, t2, t3 = (float(t) for t in theta)
    else:
        t1, t2, t3 = (float(rd.number(m, k, ("model",), 0.0)) for k in ("theta1", "theta2", "theta3"))
    z = rd.number(m, "z", ("model",), 1.0, positive=True)
    r0 = rd.number(m, "r0", ("model",), 1.0, positive=True)
    r1 = rd.number(m, "r1", ("model",), r0, positive=True)
    law = None
    if m.get("radiusLaw") is not None:
        try:
            law = RadiusLaw.from_dict(m["radiusLaw"])
        except (ValueError, KeyError, TypeError) as exc:
            rd.fail(("model", "radiusLaw"), f"bad radiusLaw: {exc}")
    try:
        params = QuermassParams(t1, t2, t3, z=z, r0=r0, r1=r1, radius_law=law)
    except ValueError as exc:
        rd.fail(("model",), str(exc))
    K = rd.number(m, "K", ("model",), 1, integer=True)
    if K < 1:
        rd.fail(("model", "K"), "'K' must be >= 1")
    kind = m.get("boundary", "free")
    if kind not in ("free", "periodic", "fixed"):
        rd.fail(("model", "boundary"), "'boundary' must be free, periodic or fixed")
    boundary = Boundary(kind) if kind != "fixed" else None

    window = doc.get("window")
    if window is not None:
        if not (isinstance(window, list) and len(window) == 4
                and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in window)):
            rd.fail(("window",), "'window' must be [x0, y0, x1, y1]")
        window = tuple(float(v) for v in window)
        if not (window[2] > window[0] and window[3] > window[1]):
            rd.fail(("window",), "'window' must have positive area")
    elif need_window and "input" not in doc:
        raise ConfigError(path, 1, "'window' is required")

    if kind == "fixed":
        src = m.get("outside")
        if not isinstance(src, str):
            rd.fail(("model", "boundary"), "fixed boundary needs 'outside': path to a configuration JSON")
        try:
            outside = read_config_json(base_dir / src, r_max=r1)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            rd.fail(("model", "outside"), f"cannot read outside configuration: {exc}")
        boundary = Boundary.fixed(outside)

    c = rd.section(doc, "chain")
    n_steps = rd.number(c, "nSteps", ("chain",), 100_000, integer=True, positive=True)
    burn_in = rd.number(c, "burnIn", ("chain",), None, integer=True, allow_none=True)
    if burn_in is not None and not 0 <= burn_in < n_steps:
        rd.fail(("chain", "burnIn"), "'burnIn' must be in [0, nSteps)")
    thinning = rd.number(c, "thinning", ("chain",), None, integer=True, positive=True, allow_none=True)
    n_rep = rd.number(c, "nReplicas", ("chain",), 1, integer=True, positive=True)
    snap = rd.number(c, "snapshotEvery", ("chain",), None, integer=True, positive=True, allow_none=True)
    mv = c.get("moves") or {}
    try:
        moves = MoveMix(
            rd.number(mv, "pBirth", ("chain", "moves"), 0.4),
            rd.number(mv, "pDeath", ("chain", "moves"), 0.4),
            rd.number(mv, "pMove", ("chain", "moves"), 0.2),
            rd.number(mv, "moveScale", ("chain", "moves"), None, positive=True, allow_none=True),
        )
    except ValueError as exc:
        rd.fail(("chain", "moves"), str(exc))

    sweep_param, sweep_vals = None, ()
    if doc.get("sweep") is not None:
        s = rd.section(doc, "sweep")
        sweep_param = s.get("parameter")
        if sweep_param not in ("z", "theta1", "theta2", "theta3"):
            rd.fail(("sweep", "parameter"), "'parameter' must be one of z, theta1, theta2, theta3")
        vals = s.get("values")
        if not isinstance(vals, list) or not vals:
            rd.fail(("sweep", "values"), "'values' must be a non-empty list")
        for v in vals:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                rd.fail(("sweep", "values"), "sweep values must be finite numbers")
            if sweep_param == "z" and not v > 0:
                rd.fail(("sweep", "values"), "z values must be positive")
        sweep_vals = tuple(float(v) for v in vals)

    a = rd.section(doc, "analysis")
    direction = a.get("crossingDirection", "horizontal")
    if direction not in ("horizontal", "vertical"):
        rd.fail(("analysis", "crossingDirection"), "'crossingDirection' must be horizontal or vertical")
    ell = rd.number(a, "diamondEll", ("analysis",), None, positive=True, allow_none=True)
    if ell is not None and not ell > 2 * r1 + 2 * r0:
        rd.fail(("analysis", "diamondEll"), f"'diamondEll' must exceed 2 r1 + 2 r0 = {2 * r1 + 2 * r0}")

    inp = doc.get("input")
    if inp is not None and not isinstance(inp, str):
        rd.fail(("input",), "'input' must be a path")
    if inp is not None:
        inp = str(base_dir / inp)

    v = rd.section(doc, "validate")
    scale = v.get("scale", "quick")
    if scale not in ("smoke", "quick", "full"):
        rd.fail(("validate", "scale"), "'scale' must be smoke, quick or full")
    cells = rd.number(v, "oracleCellsPerR0", ("validate",), 64, integer=True, positive=True)

    seed = rd.number(doc, "seed", (), 0, integer=True)
    if seed < 0:
        rd.fail(("seed",), "'seed' must be non-negative")
    o = rd.section(doc, "output")
    out_dir = o.get("dir", "out")
    if not isinstance(out_dir, str):
        rd.fail(("output", "dir"), "'dir' must be a string")

    return ExperimentConfig(params, K, boundary, window, n_steps, burn_in, thinning, n_rep, snap, moves,
                            sweep_param, sweep_vals, direction, ell, inp, scale, cells, seed, out_dir)


def load_config(path, need_window: bool = True) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(path, 0, f"cannot read config: {exc.strerror or exc}") from None
    return parse_config(text, path, Path(path).parent, need_window)
