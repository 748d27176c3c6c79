import math

import numpy as np
import pytest

from quermass.geometry import DegenerateGeometry, functionals
from quermass.oracle import (
    ResolutionTooCoarse,
    oracle_functionals,
    pixel_functionals,
    rasterize,
    write_pgm,
)


def test_empty_mask_is_all_uncovered():
    m = rasterize([], 1 / 64)
    assert not m.bitmap.any()
    f = pixel_functionals(m)
    assert (f.area, f.components, f.holes, f.euler) == (0.0, 0, 0, 0)


def test_single_disk_area_within_digitisation_bound():
    delta = 1 / 64
    m = rasterize([(0, 0, 1)], delta)
    area = m.bitmap.sum() * delta ** 2
    assert abs(area - math.pi) <= 4 * (2 * math.pi) * delta


def test_padding_ring_is_empty():
    m = rasterize([(0.3, 0.2, 1), (1.1, 0.4, 1.2)], 1 / 32)
    b = m.bitmap
    assert not (b[0].any() or b[-1].any() or b[:, 0].any() or b[:, -1].any())


def test_two_disjoint_disks():
    f = pixel_functionals(rasterize([(0, 0, 1), (5, 0, 1)], 1 / 64))
    assert (f.components, f.holes, f.euler) == (2, 0, 2)
    assert f.perimeterEstimate == pytest.approx(4 * math.pi, rel=0.02)


def test_one_disk_topology():
    f = pixel_functionals(rasterize([(0, 0, 1)], 1 / 64))
    assert (f.components, f.holes, f.euler) == (1, 0, 1)
    assert not f.degenerate


def test_triangle_hole_at_fine_resolution():
    h = 1.9 * math.sqrt(3) / 2
    f = oracle_functionals([(0, 0, 1), (1.9, 0, 1), (0.95, h, 1)], 1 / 128)
    assert (f.components, f.holes, f.euler) == (1, 1, 0)


def test_annulus_of_eight_disks():
    rho = 2.2
    pts = [(rho * math.cos(k * math.pi / 4), rho * math.sin(k * math.pi / 4), 1.0) for k in range(8)]
    assert 2 * rho * math.sin(math.pi / 8) < 2.0  # consecutive disks overlap
    f = oracle_functionals(pts, 1 / 64)
    assert f.holes == 1 and f.components == 1


def test_coarse_cells_rejected():
    with pytest.raises(ResolutionTooCoarse):
        rasterize([(0, 0, 1)], 0.25)


def test_near_tangent_pair_is_flagged():
    f = oracle_functionals([(0, 0, 1), (2.001, 0, 1)], 1 / 64)
    assert f.degenerate


def test_refinement_is_stable_on_clean_masks():
    rng = np.random.default_rng(5)
    checked = 0
    for _ in range(15):
        n = int(rng.integers(2, 12))
        pts = [(float(x), float(y), float(r)) for (x, y), r in zip(rng.random((n, 2)) * 6, 1 + rng.random(n))]
        a = oracle_functionals(pts, 1 / 64, r0=1)
        b = oracle_functionals(pts, 1 / 128, r0=1)
        if a.degenerate or b.degenerate:
            continue
        checked += 1
        assert (a.components, a.holes) == (b.components, b.holes)
    assert checked >= 5


def test_matches_kernel_on_a_few_configurations():
    rng = np.random.default_rng(8)
    for _ in range(10):
        n = int(rng.integers(1, 15))
        pts = [(float(x), float(y), float(r)) for (x, y), r in zip(rng.random((n, 2)) * 8, 1 + rng.random(n))]
        try:
            k = functionals(pts)
        except DegenerateGeometry:
            continue
        o = oracle_functionals(pts, 1 / 64, r0=1, refine_to=1 / 256)
        if o.degenerate:
            continue
        assert (o.components, o.holes) == (k.components, k.holes)
        assert abs(o.area - k.area) <= 2 * (1 / 64) * k.perimeter


def test_pbm_dump(tmp_path):
    m = rasterize([(0, 0, 1)], 1 / 16)
    path = tmp_path / "m.pbm"
    write_pgm(m, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "P1"
    nx, ny = map(int, lines[1].split())
    assert (ny, nx) == m.bitmap.shape and len(lines) == ny + 2
