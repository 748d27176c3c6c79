import json
import math

import pytest

from quermass import geometry
from quermass.cli import main
from quermass.config import ConfigError, parse_config
from quermass.io import read_config_json, read_trace_csv, write_config_json
from quermass.geometry import Configuration


def write_cfg(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc, indent=2))
    return str(p)


def outputs(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.name != "meta.json"}


POISSON = {"model": {"z": 1.0, "r0": 0.5, "r1": 1.0}, "window": [0, 0, 10, 10],
           "chain": {"nSteps": 5000, "thinning": 100}}


def test_sample_poisson_smoke(tmp_path, capsys):
    cfg = write_cfg(tmp_path, POISSON)
    assert main(["sample", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    recs = read_trace_csv(tmp_path / "o" / "trace.csv")
    assert len(recs) == 50 and recs[-1].step == 5000
    snap = read_config_json(tmp_path / "o" / "snapshot.json")
    assert len(snap) == recs[-1].n
    meta = json.loads((tmp_path / "o" / "meta.json").read_text())
    assert meta["command"] == "sample" and "timestamp" in meta
    assert "mean n after burn-in" in capsys.readouterr().out


def test_sample_is_byte_identical_across_runs(tmp_path):
    doc = dict(POISSON, model={"theta": [0.3, 0.1, -0.5], "z": 1.0, "r0": 0.5, "r1": 1.0},
               chain={"nSteps": 3000, "thinning": 50, "nReplicas": 2, "snapshotEvery": 1000})
    cfg = write_cfg(tmp_path, doc)
    for d in ("a", "b"):
        assert main(["sample", "--config", cfg, "--seed", "7", "--out", str(tmp_path / d)]) == 0
    a, b = outputs(tmp_path / "a"), outputs(tmp_path / "b")
    assert a == b and "trace_1.csv" in a
    assert main(["sample", "--config", cfg, "--seed", "8", "--out", str(tmp_path / "c")]) == 0
    assert outputs(tmp_path / "c")["trace_0.csv"] != a["trace_0.csv"]


def test_missing_config_file_exits_2(tmp_path, capsys):
    assert main(["sample", "--config", str(tmp_path / "nope.json")]) == 2
    assert "nope.json:0:" in capsys.readouterr().err


@pytest.mark.parametrize("doc,line,needle", [
    ('{\n "model": {\n  "z": -1\n },\n "window": [0,0,1,1]\n}', 3, "'z' must be positive"),
    ('{\n "window": [0, 0, 1]\n}', 2, "window"),
    ('{\n "window": [0,0,1,1],\n "sweep": {\n  "parameter": "z",\n  "values": []\n }\n}', 5, "non-empty"),
    ('{\n "window": [0,0,1,1],\n "model": {"boundary": "fixed"}\n}', 3, "outside"),
    ('{\n "window": [0,0,1,1],\n "chain": {\n  "nSteps": 10,\n  "burnIn": 20\n }\n}', 5, "burnIn"),
    ('{\n "window": [0,0,1,1],\n "analysis": {\n  "diamondEll": 1.0\n }\n}', 4, "diamondEll"),
    ('{\n "window": [0,0,1,1],\n', 3, "invalid JSON"),
])
def test_config_errors_are_line_anchored(tmp_path, capsys, doc, line, needle):
    p = tmp_path / "bad.json"
    p.write_text(doc)
    assert main(["sweep", "--config", str(p)]) == 2
    err = capsys.readouterr().err
    assert f"bad.json:{line}:" in err and needle in err


def test_parse_config_defaults():
    cfg = parse_config('{"window": [0, 0, 5, 5]}')
    assert cfg.params.z == 1.0 and cfg.K == 1 and cfg.boundary.kind == "free"
    assert cfg.moves.p_birth == 0.4 and cfg.seed == 0 and cfg.area == 25
    with pytest.raises(ConfigError):
        parse_config("{}")


def test_sweep_without_values_exits_2(tmp_path):
    assert main(["sweep", "--config", write_cfg(tmp_path, POISSON)]) == 2


def test_fixed_boundary_config(tmp_path):
    write_config_json(Configuration([(-0.5, 5, 1.0), (11, 5, 1.0)], window=(-3, -3, 13, 13)),
                      tmp_path / "outside.json")
    doc = dict(POISSON, model={"theta": [0.2, 0.0, 0.0], "z": 1.0, "r0": 0.5, "r1": 1.0,
                               "boundary": "fixed", "outside": "outside.json"},
               chain={"nSteps": 2000, "thinning": 500})
    cfg = write_cfg(tmp_path, doc)
    assert main(["sample", "--config", cfg, "--out", str(tmp_path / "o")]) == 0


def test_theta3_sweep_hole_counts(tmp_path):
    doc = {"model": {"z": 3.0, "r0": 0.5, "r1": 0.5}, "window": [0, 0, 8, 8],
           "chain": {"nSteps": 10000, "thinning": 200, "nReplicas": 2},
           "sweep": {"parameter": "theta3", "values": [-1.0, 1.0]}}
    cfg = write_cfg(tmp_path, doc)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o"), "--threads", "2"]) == 0
    lines = (tmp_path / "o" / "aggregate.csv").read_text().splitlines()
    head = lines[0].split(",")
    rows = [dict(zip(head, ln.split(","))) for ln in lines[1:]]
    holes = {float(r["value"]): float(r["holesPerArea"]) for r in rows}
    # H = theta3 * chi: positive theta3 penalises components and rewards holes
    assert holes[1.0] > holes[-1.0]
    summary = (tmp_path / "o" / "summary.csv").read_text().splitlines()
    assert len(summary) == 1 + 4


def test_sweep_threads_do_not_change_output(tmp_path):
    doc = {"model": {"z": 1.0, "r0": 0.5, "r1": 1.0}, "window": [0, 0, 8, 8],
           "chain": {"nSteps": 2000, "thinning": 100, "nReplicas": 3},
           "sweep": {"parameter": "z", "values": [0.5, 1.0]}}
    cfg = write_cfg(tmp_path, doc)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "b"), "--threads", "3"]) == 0
    assert outputs(tmp_path / "a") == outputs(tmp_path / "b")


def test_multitype_tiny_window_is_fully_dominated(tmp_path):
    doc = {"model": {"z": 2.0, "r0": 1.0, "r1": 1.0, "K": 2}, "window": [0, 0, 1.5, 1.5],
           "chain": {"nSteps": 3000, "thinning": 10, "nReplicas": 2}}
    cfg = write_cfg(tmp_path, doc)
    assert main(["multitype", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "multitype.json").read_text())
    # every pair of disks in a 1.5 x 1.5 window overlaps, so only one type can be present
    assert rep["meanD"] == 1.0
    assert sum(rep["histogram"]["counts"]) > 0


def test_multitype_needs_two_types(tmp_path):
    assert main(["multitype", "--config", write_cfg(tmp_path, POISSON)]) == 2


def test_explosion_exits_3(tmp_path, capsys):
    doc = {"model": {"theta": [0, -40, 0], "z": 0.1, "r0": 0.05, "r1": 0.05}, "window": [0, 0, 1, 1],
           "chain": {"nSteps": 20000}}
    assert main(["sample", "--config", write_cfg(tmp_path, doc), "--out", str(tmp_path / "o")]) == 3
    assert "explosion" in capsys.readouterr().err


def test_percolate_input_configuration(tmp_path, capsys):
    import numpy as np
    rng = np.random.default_rng(0)
    side = 42.0
    n = rng.poisson(3.0 / (math.pi * 0.25) * side * side)
    pts = [(float(x), float(y), 0.5) for x, y in rng.random((n, 2)) * side]
    write_config_json(Configuration(pts, window=(0, 0, side, side)), tmp_path / "in.json")
    doc = {"model": {"r0": 0.5, "r1": 0.5}, "input": "in.json", "analysis": {"diamondEll": 2.1}}
    cfg = write_cfg(tmp_path, doc)
    assert main(["percolate", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    s = json.loads((tmp_path / "o" / "percolation.json").read_text())
    assert s["nSites"] == 4 and 0 <= s["pHat"] <= 1
    assert not (s["latticeCrossing"] and not s["continuumCrossing"])
    assert (tmp_path / "o" / "site_field.csv").read_text().startswith("i,j")


def test_percolate_window_too_small_exits_2(tmp_path):
    doc = {"model": {"r0": 0.5, "r1": 0.5}, "window": [0, 0, 10, 10], "analysis": {"diamondEll": 2.1},
           "chain": {"nSteps": 100}}
    assert main(["percolate", "--config", write_cfg(tmp_path, doc), "--out", str(tmp_path / "o")]) == 2


# -- validate ------------------------------------------------------------------------


def smoke_cfg(tmp_path, **validate):
    return write_cfg(tmp_path, {"validate": {"scale": "smoke", **validate}})


def test_validate_smoke_passes(tmp_path, capsys):
    assert main(["validate", "--config", smoke_cfg(tmp_path), "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "validate.json").read_text())
    assert rep["passed"] and len(rep["properties"]) == 6
    out = capsys.readouterr().out
    assert out.count("PASS") == 6


def test_validate_catches_flipped_euler_sign(tmp_path, monkeypatch, capsys):
    real = geometry.local_delta

    def broken(p, nb):
        a, l, e = real(p, nb)
        return a, l, -e

    monkeypatch.setattr(geometry, "local_delta", broken)
    assert main(["validate", "--config", smoke_cfg(tmp_path), "--out", str(tmp_path / "o")]) == 1
    rep = json.loads((tmp_path / "o" / "validate.json").read_text())
    ident = next(p for p in rep["properties"] if p["name"] == "incremental identity")
    assert ident["status"] == "fail" and ident["violations"] > 0
    assert "FAIL incremental identity" in capsys.readouterr().out


def test_validate_coarse_oracle_is_skipped(tmp_path, capsys):
    cfg = smoke_cfg(tmp_path, oracleCellsPerR0=4)
    assert main(["validate", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "validate.json").read_text())
    orc = rep["properties"][0]
    assert orc["status"] == "skip" and "reason" in orc["details"]
    assert "SKIP kernel-oracle agreement" in capsys.readouterr().out
