"""Connectivity of disk unions and the diamond-box site field.

The site variable at a lattice site ``x`` looks at the germs inside the open
octagon ``x + Delta`` and is open when each of the four cardinal boxes holds
a germ and exactly one component of the union of those disks touches a
cardinal box.  Neighbouring octagons share a cardinal box, so a path of open
sites carries a connected chain of disks across the same extent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

from .geometry import Configuration, _pairs, _tuples
from .unionfind import UnionFind

# Site percolation threshold of the square lattice (external literature value,
# reported next to pHat only, never used for pass/fail decisions).
P_STAR = 0.592746


class WindowTooSmall(ValueError):
    pass


def _labels(pts) -> list[int]:
    uf = UnionFind(len(pts))
    for i, j, _ in _pairs(pts):
        uf.union(i, j)
    return uf.labels()


def components(config) -> list[list[int]]:
    """Point indices grouped by connected component of the union, ordered by smallest index."""
    pts = _tuples(config)
    groups: dict[int, list[int]] = {}
    for i, lab in enumerate(_labels(pts)):
        groups.setdefault(lab, []).append(i)
    return [groups[k] for k in sorted(groups)]


def _seg_dist(px, py, ax, ay, bx, by) -> float:
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    t = 0.0 if L2 == 0 else max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / L2))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def crossing(config, window: Sequence[float] | None = None, direction: str = "horizontal") -> bool:
    """Whether one component meets both opposite edges of ``window``.

    A disk meets an edge when its germ is within distance ``r`` (closed) of
    the edge segment.
    """
    if direction not in ("horizontal", "vertical"):
        raise ValueError(f"direction must be horizontal or vertical, not {direction!r}")
    if window is None:
        window = config.window
    x0, y0, x1, y1 = window
    pts = _tuples(config)
    if not pts:
        return False
    if direction == "horizontal":
        a_edge, b_edge = (x0, y0, x0, y1), (x1, y0, x1, y1)
    else:
        a_edge, b_edge = (x0, y0, x1, y0), (x0, y1, x1, y1)
    labels = _labels(pts)
    hit_a = {labels[i] for i, (x, y, r) in enumerate(pts) if _seg_dist(x, y, *a_edge) <= r}
    if not hit_a:
        return False
    return any(labels[i] in hit_a and _seg_dist(x, y, *b_edge) <= r
               for i, (x, y, r) in enumerate(pts))


def largest_cluster(config) -> int:
    """Number of disks in the largest component."""
    return max((len(c) for c in components(config)), default=0)


@dataclass(frozen=True)
class DiamondGeometry:
    ell: float

    def __post_init__(self):
        if not self.ell > 0:
            raise ValueError("ell must be positive")

    @classmethod
    def for_radii(cls, ell: float, r0: float, r1: float) -> "DiamondGeometry":
        if not ell > 2 * r1 + 2 * r0:
            raise ValueError(f"ell = {ell} must exceed 2 r1 + 2 r0 = {2 * r1 + 2 * r0}")
        return cls(float(ell))

    @property
    def octagon(self) -> list[tuple[float, float]]:
        l = self.ell
        return [(3 * l, 0), (6 * l, 0), (9 * l, 3 * l), (9 * l, 6 * l),
                (6 * l, 9 * l), (3 * l, 9 * l), (0, 6 * l), (0, 3 * l)]

    @property
    def boxes(self) -> dict[str, tuple[float, float, float, float]]:
        l = self.ell
        corners = {"N": (4, 7), "S": (4, 1), "E": (7, 4), "W": (1, 4)}
        return {k: (a * l, b * l, (a + 1) * l, (b + 1) * l) for k, (a, b) in corners.items()}

    @property
    def spacing(self) -> float:
        return 6.0 * self.ell

    def inside(self, x, y):
        """Open-octagon membership in local coordinates; works on arrays."""
        l = self.ell
        return ((x > 0) & (x < 9 * l) & (y > 0) & (y < 9 * l)
                & (x + y > 3 * l) & (x + y < 15 * l)
                & (x - y < 6 * l) & (y - x < 6 * l))


def _xi_local(xy: np.ndarray, r: np.ndarray, geom: DiamondGeometry) -> int:
    """Site variable for germs already shifted to the octagon's frame."""
    keep = geom.inside(xy[:, 0], xy[:, 1])
    xy, r = xy[keep], r[keep]
    if len(r) == 0:
        return 0
    in_box = np.zeros(len(r), dtype=bool)
    for bx0, by0, bx1, by1 in geom.boxes.values():
        hit = (xy[:, 0] >= bx0) & (xy[:, 0] <= bx1) & (xy[:, 1] >= by0) & (xy[:, 1] <= by1)
        if not hit.any():
            return 0
        in_box |= hit
    labels = _labels([(float(a), float(b), float(c)) for (a, b), c in zip(xy, r)])
    touching = {labels[i] for i in np.flatnonzero(in_box)}
    return int(len(touching) == 1)


def _arrays(config):
    pts = np.asarray(_tuples(config), dtype=float).reshape(-1, 3)
    return pts[:, :2], pts[:, 2]


def xi(config, origin: Sequence[float], geom: DiamondGeometry) -> int:
    """Site variable of the octagon anchored at ``origin`` (a point, not lattice indices)."""
    xy, r = _arrays(config)
    return _xi_local(xy - np.asarray(origin, dtype=float), r, geom)


@dataclass
class SiteField:
    ell: float
    sites: dict[tuple[int, int], int]
    i_range: tuple[int, int]
    j_range: tuple[int, int]
    window: tuple[float, float, float, float] = field(default=(0.0, 0.0, 0.0, 0.0))

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    def array(self) -> np.ndarray:
        """Field as a [j, i] array over the site rectangle."""
        (i0, i1), (j0, j1) = self.i_range, self.j_range
        a = np.zeros((j1 - j0 + 1, i1 - i0 + 1), dtype=np.int8)
        for (i, j), v in self.sites.items():
            a[j - j0, i - i0] = v
        return a

    def crossing_extent(self, direction: str = "horizontal") -> tuple[float, float, float, float]:
        """Rectangle a lattice crossing forces the union to cross.

        Horizontally: from the right side of the first column's west box to
        the left side of the last column's east box, over the full height of
        the octagons.
        """
        s, l = 6.0 * self.ell, self.ell
        (i0, i1), (j0, j1) = self.i_range, self.j_range
        if direction == "horizontal":
            return (s * i0 + 2 * l, s * j0, s * i1 + 7 * l, s * j1 + 9 * l)
        return (s * i0, s * j0 + 2 * l, s * i1 + 9 * l, s * j1 + 7 * l)


def site_field(config: Configuration, geom: DiamondGeometry, window=None) -> SiteField:
    """Evaluate the site variable at every lattice site whose closed octagon fits in the window."""
    if window is None:
        window = config.window
    x0, y0, x1, y1 = (float(v) for v in window)
    s, span = geom.spacing, 9.0 * geom.ell
    tol = 1e-9 * geom.ell
    i0, i1 = math.ceil(x0 / s - tol), math.floor((x1 - span) / s + tol)
    j0, j1 = math.ceil(y0 / s - tol), math.floor((y1 - span) / s + tol)
    if i1 < i0 or j1 < j0:
        raise WindowTooSmall(f"no octagon of size {span} fits in {window}")
    xy, r = _arrays(config)
    sites = {}
    for i in range(i0, i1 + 1):
        for j in range(j0, j1 + 1):
            ox, oy = s * i, s * j
            near = ((xy[:, 0] > ox) & (xy[:, 0] < ox + span)
                    & (xy[:, 1] > oy) & (xy[:, 1] < oy + span))
            sites[(i, j)] = _xi_local(xy[near] - (ox, oy), r[near], geom)
    return SiteField(geom.ell, sites, (i0, i1), (j0, j1), (x0, y0, x1, y1))


def lattice_crossing(a: np.ndarray, direction: str = "horizontal") -> bool:
    """Nearest-neighbour open-site crossing of a 0/1 array indexed [j, i]."""
    if direction == "vertical":
        a = a.T
    lab, n = ndimage.label(a > 0)
    if n == 0:
        return False
    left = set(np.unique(lab[:, 0])) - {0}
    right = set(np.unique(lab[:, -1])) - {0}
    return bool(left & right)


def site_percolation_summary(fld: SiteField, direction: str = "horizontal") -> dict:
    if fld.n_sites == 0:
        raise ValueError("empty site field")
    a = fld.array()
    lab, n = ndimage.label(a > 0)
    largest = int(np.bincount(lab.ravel())[1:].max()) if n else 0
    return {
        "pHat": float(a.sum()) / fld.n_sites,
        "latticeCrossing": lattice_crossing(a, direction),
        "largestSiteCluster": largest,
        "nSites": fld.n_sites,
        "pStar": P_STAR,
    }
