"""Pixel-grid reference for the union functionals.

Independent of the arc kernel.  Every cell stores the depth
``max_i (r_i - |c - x_i|)`` of its centre ``c``; a cell is covered when the
depth is non-negative, i.e. its centre lies in some closed disk.

Components are 4-connected covered regions and holes are 8-connected
uncovered regions not reaching the padding ring.  The digitised tips of
crescents and of the wedges at boundary cusps produce specks that are cut
off from their parent region; a region only counts when it reaches half a
cell past the boundary (depth >= delta/2 for components, <= -delta/2 for
holes).  A mask is flagged degenerate when this topology changes between
depth levels -delta, 0 and +delta, meaning some feature is at most about two
cells wide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree
from skimage import measure

EIGHT = np.ones((3, 3), dtype=bool)
FOUR = ndimage.generate_binary_structure(2, 1)


class ResolutionTooCoarse(ValueError):
    pass


@dataclass
class PixelMask:
    origin: tuple[float, float]
    delta: float
    depth: np.ndarray  # indexed [row=y, col=x]

    @property
    def bitmap(self) -> np.ndarray:
        return self.depth >= 0

    def centers(self):
        ny, nx = self.depth.shape
        xs = self.origin[0] + (np.arange(nx) + 0.5) * self.delta
        ys = self.origin[1] + (np.arange(ny) + 0.5) * self.delta
        return xs, ys

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return (int(math.floor((y - self.origin[1]) / self.delta)),
                int(math.floor((x - self.origin[0]) / self.delta)))


@dataclass
class PixelFunctionals:
    area: float
    euler: int
    components: int
    holes: int
    perimeterEstimate: float
    degenerate: bool


def _points(config):
    return [(float(p[0]), float(p[1]), float(p[2])) for p in config]


def rasterize(config, delta: float, r0: float | None = None, pad: int = 2) -> PixelMask:
    """Depth of every cell centre; the grid is the disks' bounding box grown by ``pad`` cells.

    ``r0`` defaults to the smallest radius present; ``delta`` must not exceed
    ``r0 / 8``.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    pts = _points(config)
    if r0 is None and pts:
        r0 = min(p[2] for p in pts)
    if r0 is not None and delta > r0 / 8 * (1 + 1e-12):
        raise ResolutionTooCoarse(f"cell {delta} coarser than r0/8 = {r0 / 8}")
    if not pts:
        return PixelMask((0.0, 0.0), delta, np.full((2 * pad + 1, 2 * pad + 1), -np.inf))
    x0 = min(x - r for x, y, r in pts) - pad * delta
    y0 = min(y - r for x, y, r in pts) - pad * delta
    x1 = max(x + r for x, y, r in pts) + pad * delta
    y1 = max(y + r for x, y, r in pts) + pad * delta
    nx = int(math.ceil((x1 - x0) / delta)) + 1
    ny = int(math.ceil((y1 - y0) / delta)) + 1
    depth = np.full((ny, nx), -np.inf)
    # each disk only needs to be evaluated over its own box grown by a margin
    # wide enough to hold every cell whose depth matters for the +/-delta levels
    m = 3
    for x, y, r in pts:
        c0 = max(int((x - r - x0) / delta) - m, 0)
        c1 = min(int((x + r - x0) / delta) + m + 1, nx)
        r0_ = max(int((y - r - y0) / delta) - m, 0)
        r1_ = min(int((y + r - y0) / delta) + m + 1, ny)
        cx = x0 + (np.arange(c0, c1) + 0.5) * delta
        cy = y0 + (np.arange(r0_, r1_) + 0.5) * delta
        d = r - np.sqrt((cx[None, :] - x) ** 2 + (cy[:, None] - y) ** 2)
        np.maximum(depth[r0_:r1_, c0:c1], d, out=depth[r0_:r1_, c0:c1])
    # single precision is ample at cell sizes down to r0/256 and halves memory traffic
    return PixelMask((x0, y0), delta, depth.astype(np.float32))


def component_labels(depth: np.ndarray, delta: float, level: float = 0.0):
    """4-connected covered regions reaching depth ``level + delta/2``."""
    lab, n = ndimage.label(depth >= level, structure=FOUR)
    if n == 0:
        return lab, 0
    reach = np.bincount(lab[depth >= level + 0.5 * delta], minlength=n + 1)
    reach[0] = 0
    keep = np.zeros(n + 1, dtype=np.int64)
    live = np.flatnonzero(reach)
    keep[live] = np.arange(1, len(live) + 1)
    return keep[lab], len(live)


def hole_labels(depth: np.ndarray, delta: float, level: float = 0.0):
    """Bounded 8-connected uncovered regions reaching depth ``level - delta/2``."""
    lab, n = ndimage.label(depth < level, structure=EIGHT)
    if n == 0:
        return lab, 0
    border = np.unique(np.concatenate([lab[0], lab[-1], lab[:, 0], lab[:, -1]]))
    reach = np.bincount(lab[depth <= level - 0.5 * delta], minlength=n + 1)
    reach[0] = 0
    reach[border] = 0
    keep = np.zeros(n + 1, dtype=np.int64)
    live = np.flatnonzero(reach)
    keep[live] = np.arange(1, len(live) + 1)
    return keep[lab], len(live)


def topology(depth, delta, level=0.0) -> tuple[int, int]:
    return component_labels(depth, delta, level)[1], hole_labels(depth, delta, level)[1]


def _nests(inner, n_inner, outer, n_outer) -> bool:
    """Every inner region sits in a distinct outer region and every outer region is hit."""
    if n_inner != n_outer:
        return False
    sel = inner > 0
    host = np.zeros(n_inner + 1, dtype=np.int64)
    host[inner[sel]] = outer[sel]
    hosts = host[1:]
    return bool(np.all(hosts > 0)) and len(np.unique(hosts)) == n_outer


def _levels(depth, delta):
    """Level-0 (components, holes) and whether the +/-delta levels nest one-to-one."""
    comps = [component_labels(depth, delta, lv) for lv in (delta, 0.0, -delta)]
    holes = [hole_labels(depth, delta, lv) for lv in (-delta, 0.0, delta)]
    stable = all(
        _nests(*seq[k], *seq[k + 1]) for seq in (comps, holes) for k in range(2)
    )
    return comps[1][1], holes[1][1], stable


def _depth_at(xy, r, q):
    return float(np.max(r - np.hypot(xy[:, 0] - q[0], xy[:, 1] - q[1])))


def near_degenerate(config, delta: float) -> bool:
    """Possible holes too shallow for cells of side ``delta`` to see.

    Looks for three crossing points of circle pairs on the union boundary,
    involving at least three circles, pairwise within ``6 delta`` and whose
    centroid is uncovered but less than ``1.5 delta`` from the union.  Thin gaps and necks need no such test: they change
    the pixel topology between neighbouring depth levels.
    """
    pts = np.array(_points(config), dtype=float).reshape(-1, 3)
    if len(pts) < 3:
        return False
    tol = 6.0 * delta
    xy, r = pts[:, :2], pts[:, 2]
    i, j = np.triu_indices(len(pts), 1)
    d = np.hypot(*(xy[j] - xy[i]).T)
    cross = (d < r[i] + r[j]) & (d > np.abs(r[i] - r[j]))
    i, j, d = i[cross], j[cross], d[cross]
    if len(i) < 2:
        return False
    u = (xy[j] - xy[i]) / d[:, None]
    a = (d * d + r[i] ** 2 - r[j] ** 2) / (2 * d)
    h = np.sqrt(np.maximum(r[i] ** 2 - a * a, 0.0))
    mid = xy[i] + a[:, None] * u
    perp = np.stack([-u[:, 1], u[:, 0]], axis=1) * h[:, None]
    cpts = np.concatenate([mid + perp, mid - perp])
    owners = np.concatenate([np.stack([i, j], 1), np.stack([i, j], 1)])
    depth = (r[None, :] - np.hypot(*(cpts[:, None, :] - xy[None, :, :]).transpose(2, 0, 1))).max(axis=1)
    keep = depth <= delta
    cpts, owners = cpts[keep], owners[keep]
    if len(cpts) < 3:
        return False
    tree = cKDTree(cpts)
    for a_, b_ in sorted(tree.query_pairs(tol)):
        for c_ in tree.query_ball_point((cpts[a_] + cpts[b_]) / 2, tol):
            if c_ in (a_, b_) or np.hypot(*(cpts[c_] - cpts[a_])) > tol or np.hypot(*(cpts[c_] - cpts[b_])) > tol:
                continue
            if len({*owners[a_], *owners[b_], *owners[c_]}) < 3:
                continue
            if -1.5 * delta < _depth_at(xy, r, (cpts[a_] + cpts[b_] + cpts[c_]) / 3) < 0:
                return True
    return False


def pixel_functionals(mask: PixelMask) -> PixelFunctionals:
    depth, delta = mask.depth, mask.delta
    covered = depth >= 0
    area = float(covered.sum()) * delta ** 2
    perim = 0.0
    comps = holes = 0
    degenerate = False
    if covered.any():
        finite = np.where(np.isfinite(depth), depth, -4.0 * delta)
        for contour in measure.find_contours(finite, 0.0):
            seg = np.diff(contour, axis=0)
            perim += float(np.hypot(seg[:, 0], seg[:, 1]).sum())
        perim *= delta
        comps, holes, stable = _levels(depth, delta)
        degenerate = not stable
    return PixelFunctionals(area, comps - holes, comps, holes, perim, degenerate)


def oracle_functionals(config, delta: float, r0: float | None = None,
                       refine_to: float | None = None) -> PixelFunctionals:
    """Rasterize and measure, halving ``delta`` down to ``refine_to`` while degenerate."""
    while True:
        res = pixel_functionals(rasterize(config, delta, r0=r0))
        if near_degenerate(config, delta):
            res.degenerate = True
        if not res.degenerate or refine_to is None or delta / 2 < refine_to * (1 - 1e-12):
            return res
        delta /= 2


def write_pgm(mask: PixelMask, path) -> None:
    """Plain PBM (P1) dump, top row = largest y."""
    bm = mask.bitmap[::-1].astype(np.uint8)
    ny, nx = bm.shape
    with open(path, "w", newline="\n") as fh:
        fh.write(f"P1\n{nx} {ny}\n")
        for row in bm:
            fh.write(" ".join(map(str, row.tolist())) + "\n")
