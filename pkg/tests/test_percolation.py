import math

import numpy as np
import pytest
from scipy import ndimage

from quermass.geometry import Configuration
from quermass.oracle import rasterize
from quermass.percolation import (
    DiamondGeometry,
    SiteField,
    WindowTooSmall,
    components,
    crossing,
    lattice_crossing,
    site_field,
    site_percolation_summary,
    xi,
)


def boolean_sample(rng, eta, side, r=1.0):
    n = rng.poisson(eta / (math.pi * r * r) * side * side)
    xy = rng.random((n, 2)) * side
    return Configuration([(float(x), float(y), r) for x, y in xy], window=(0, 0, side, side), r_max=r)


def test_components_examples():
    assert components([(0, 0, 1), (5, 0, 1)]) == [[0], [1]]
    assert components([(k * 1.5, 0, 1) for k in range(6)]) == [list(range(6))]
    assert components([]) == []


def test_crossing_examples():
    chain = [(0.5 + 1.5 * k, 5, 1) for k in range(7)]
    assert crossing(chain, (0, 0, 10, 10))
    assert not crossing(chain, (0, 0, 10, 10), "vertical")
    assert not crossing([(5, 5, 1)], (0, 0, 10, 10))
    # closed edge test: a disk exactly reaching the edge counts
    assert crossing([(1, 5, 1), (2.5, 5, 1.5)], (0, 0, 4, 10))


def test_dense_boolean_crosses():
    rng = np.random.default_rng(0)
    eta = -math.log(1 - 0.9)
    hits = 0
    for k in range(200):
        conf = boolean_sample(rng, eta, 20.0)
        c = crossing(conf, (0, 0, 20, 20))
        hits += c
        if k < 10:
            assert c == _pixel_crossing(conf, (0, 0, 20, 20))
    assert hits / 200 > 0.95


def _pixel_crossing(conf, window, delta=1 / 16):
    """Independent check: a covered 4-connected pixel region reaching past both vertical edges."""
    m = rasterize(conf, delta, r0=1.0)
    lab, _ = ndimage.label(m.bitmap)
    xs, ys = m.centers()
    x0, y0, x1, y1 = window
    rows = (ys >= y0) & (ys <= y1)
    left = set(np.unique(lab[rows][:, xs <= x0])) - {0}
    right = set(np.unique(lab[rows][:, xs >= x1])) - {0}
    return bool(left & right)


def test_diamond_geometry():
    g = DiamondGeometry(1.0)
    assert len(g.octagon) == 8
    for bx0, by0, bx1, by1 in g.boxes.values():
        for x, y in [(bx0, by0), (bx0, by1), (bx1, by0), (bx1, by1)]:
            assert g.inside(np.array([x]), np.array([y]))[0]
    with pytest.raises(ValueError):
        DiamondGeometry.for_radii(4.0, 1.0, 1.0)


def _box_centres(g, origin=(0.0, 0.0)):
    return {k: (origin[0] + (b[0] + b[2]) / 2, origin[1] + (b[1] + b[3]) / 2) for k, b in g.boxes.items()}


def test_xi_examples():
    g = DiamondGeometry(5.0)
    assert xi([], (0, 0), g) == 0
    c = _box_centres(g)
    # four box germs joined through the centre by a plus-shaped chain
    mid = (22.5, 22.5)
    pts = [(c[k][0], c[k][1], 1.2) for k in c]
    for k in c:
        for t in np.linspace(0, 1, 15):
            pts.append((c[k][0] + t * (mid[0] - c[k][0]), c[k][1] + t * (mid[1] - c[k][1]), 1.2))
    assert xi(pts, (0, 0), g) == 1
    # only the box germs: four separate components
    assert xi([(c[k][0], c[k][1], 1.0) for k in c], (0, 0), g) == 0


def test_xi_locality_and_translation():
    rng = np.random.default_rng(2)
    g = DiamondGeometry(2.1)
    conf = boolean_sample(rng, 3.0, 60.0, r=0.5)
    pts = list(conf.points)
    base = xi(pts, (12.6, 12.6), g)
    far = [(float(x), float(y), 0.5) for x, y in rng.random((200, 2)) * 60
           if not (12.6 < x < 12.6 + 18.9 and 12.6 < y < 12.6 + 18.9)]
    assert xi(pts + far, (12.6, 12.6), g) == base
    v = (12.6, 25.2)
    moved = [(p.x + v[0], p.y + v[1], p.r) for p in pts]
    for origin in [(0.0, 0.0), (12.6, 12.6), (25.2, 0.0)]:
        assert xi(moved, (origin[0] + v[0], origin[1] + v[1]), g) == xi(pts, origin, g)


def test_site_field_examples():
    g = DiamondGeometry(2.0)
    one = site_field(Configuration([], window=(0, 0, 18, 18)), g)
    assert one.n_sites == 1 and list(one.sites) == [(0, 0)]
    empty = site_field(Configuration([], window=(0, 0, 60, 60)), g)
    assert empty.n_sites > 1 and not any(empty.sites.values())
    with pytest.raises(WindowTooSmall):
        site_field(Configuration([], window=(0, 0, 17, 17)), g)


@pytest.mark.slow
def test_dense_site_field_mostly_open():
    rng = np.random.default_rng(1)
    g = DiamondGeometry(5.0)
    side = 33 * 5.0
    eta = -math.log(0.05)
    fracs = []
    for _ in range(25):
        fld = site_field(boolean_sample(rng, eta, side), g)
        fracs.append(site_percolation_summary(fld)["pHat"])
    assert np.mean(fracs) > 0.8


def _field(a):
    sites = {(i, j): int(a[j, i]) for j in range(a.shape[0]) for i in range(a.shape[1])}
    return SiteField(1.0, sites, (0, a.shape[1] - 1), (0, a.shape[0] - 1))


def test_summary_examples():
    s = site_percolation_summary(_field(np.ones((5, 5), dtype=int)))
    assert s["pHat"] == 1.0 and s["latticeCrossing"] and s["largestSiteCluster"] == 25 and s["nSites"] == 25
    s = site_percolation_summary(_field(np.zeros((5, 5), dtype=int)))
    assert s["pHat"] == 0.0 and not s["latticeCrossing"] and s["largestSiteCluster"] == 0


def test_bernoulli_field_crosses():
    rng = np.random.default_rng(0)
    hits = sum(lattice_crossing(rng.random((50, 50)) < 0.7) for _ in range(100))
    assert hits / 100 > 0.9


def test_diagonal_contact_is_not_a_crossing():
    a = np.eye(4, dtype=int)
    assert not lattice_crossing(a)


def test_lattice_crossing_implies_continuum_crossing():
    rng = np.random.default_rng(3)
    g = DiamondGeometry(2.1)
    seen = 0
    for eta in (2.0, 2.5, 3.0, 4.0):
        for _ in range(5):
            conf = boolean_sample(rng, eta, 63.0, r=0.5)
            fld = site_field(conf, g)
            for d in ("horizontal", "vertical"):
                if site_percolation_summary(fld, d)["latticeCrossing"]:
                    seen += 1
                    assert crossing(conf, fld.crossing_extent(d), d)
    assert seen > 0
