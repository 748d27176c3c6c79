"""Serialization: configurations (JSON/CSV), traces, site fields and reports.

Floats are written with 17 significant digits so a read-back reproduces the
same double.  All text files are UTF-8 with Unix newlines.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable

from .geometry import Configuration
from .percolation import SiteField
from .sampler import TraceRecord

TRACE_HEADER = ["step", "n", "area", "perimeter", "euler", "components", "holes",
                "accepted", "move", "type_counts"]


def fmt(v: float) -> str:
    return format(float(v), ".17g")


def config_to_dict(config: Configuration) -> dict:
    d = {
        "window": [float(v) for v in config.window],
        "points": [[p.x, p.y, p.r] for p in config.points],
    }
    if config.types is not None:
        d["types"] = list(config.types)
    return d


def dumps_json(obj) -> str:
    # json emits repr(float), the shortest string that round-trips
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n"


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_config_json(config: Configuration, path) -> None:
    write_text(path, dumps_json(config_to_dict(config)))


def config_from_dict(d: dict, r_max: float | None = None) -> Configuration:
    if "points" not in d:
        raise ValueError("configuration JSON needs a 'points' array")
    pts = d["points"]
    for k, p in enumerate(pts):
        if len(p) != 3:
            raise ValueError(f"point {k} must be [x, y, r]")
    return Configuration(pts, window=d.get("window"), r_max=r_max, types=d.get("types"))


def read_config_json(path, r_max: float | None = None) -> Configuration:
    with open(path, encoding="utf-8") as fh:
        return config_from_dict(json.load(fh), r_max)


def write_config_csv(config: Configuration, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "r"])
        for p in config.points:
            w.writerow([fmt(p.x), fmt(p.y), fmt(p.r)])


def read_config_csv(path, window=None) -> Configuration:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return Configuration([(float(r["x"]), float(r["y"]), float(r["r"])) for r in rows], window=window)


def trace_rows(records: Iterable[TraceRecord]):
    for r in records:
        yield [r.step, r.n, fmt(r.area), fmt(r.perimeter), r.euler, r.components, r.holes,
               int(r.accepted), r.move, ";".join(map(str, r.type_counts))]


def write_trace_csv(records: Iterable[TraceRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        w.writerows(trace_rows(records))


def read_trace_csv(path) -> list[TraceRecord]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for r in csv.DictReader(fh):
            counts = tuple(int(c) for c in r["type_counts"].split(";")) if r["type_counts"] else ()
            out.append(TraceRecord(int(r["step"]), int(r["n"]), float(r["area"]), float(r["perimeter"]),
                                   int(r["euler"]), int(r["components"]), int(r["holes"]),
                                   r["accepted"] == "1", r["move"], counts))
    return out


def write_site_field_csv(fld: SiteField, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "xi"])
        for (i, j) in sorted(fld.sites):
            w.writerow([i, j, fld.sites[(i, j)]])


def write_rows_csv(header, rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, float) else v for v in row])


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
