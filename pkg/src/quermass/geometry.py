"""Exact Minkowski functionals of finite unions of closed disks.

The boundary of a union of disks is a finite union of circular arcs.  For
every circle we compute the angular set left uncovered by the *open* other
disks, label each arc endpoint with the disk whose coverage starts or stops
there, and chain the arcs into closed loops by matching those labels.

All arcs are traversed counterclockwise about their own centre, so the union
always lies on the left.  Outer boundaries then have positive signed area and
hole boundaries negative signed area, and Green's theorem summed over every
arc gives the area of the union directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

from .unionfind import UnionFind, UniformGrid

TWO_PI = 2.0 * math.pi
REL_EPS = 1e-9
# arc endpoint matching is checked at a much looser tolerance than tangency
MATCH_TOL = 1e-6


class DegenerateGeometry(ArithmeticError):
    """Configuration is within tolerance of a tangency, triple point or coincidence."""


class MarkedPoint(NamedTuple):
    x: float
    y: float
    r: float


COINCIDENT = "coincident"


def circle_intersections(d1: MarkedPoint, d2: MarkedPoint, eps: float | None = None):
    """Intersection points of the circles bounding two disks.

    Returns a tuple of zero, one or two ``(x, y)`` points, or the string
    ``COINCIDENT`` for identical circles.  Distances within ``eps`` of a
    tangency return the single tangent point.
    """
    if eps is None:
        eps = REL_EPS * min(d1.r, d2.r)
    dx, dy = d2.x - d1.x, d2.y - d1.y
    d = math.hypot(dx, dy)
    if d <= eps and abs(d1.r - d2.r) <= eps:
        return COINCIDENT
    if d <= eps:
        return ()
    outer = d1.r + d2.r
    inner = abs(d1.r - d2.r)
    if d > outer + eps or d < inner - eps:
        return ()
    ux, uy = dx / d, dy / d
    if abs(d - outer) <= eps or abs(d - inner) <= eps:
        s = d1.r if abs(d - outer) <= eps or d1.r > d2.r else -d1.r
        return ((d1.x + s * ux, d1.y + s * uy),)
    a = (d * d + d1.r * d1.r - d2.r * d2.r) / (2.0 * d)
    h = math.sqrt(max(d1.r * d1.r - a * a, 0.0))
    mx, my = d1.x + a * ux, d1.y + a * uy
    return ((mx - h * uy, my + h * ux), (mx + h * uy, my - h * ux))


@dataclass(frozen=True)
class Functionals:
    area: float = 0.0
    perimeter: float = 0.0
    euler: int = 0
    components: int = 0
    holes: int = 0

    def __sub__(self, other: "Functionals") -> "FunctionalDelta":
        return FunctionalDelta(
            self.area - other.area,
            self.perimeter - other.perimeter,
            self.euler - other.euler,
            self.components - other.components,
            self.holes - other.holes,
        )


@dataclass(frozen=True)
class FunctionalDelta:
    dArea: float = 0.0
    dPerimeter: float = 0.0
    dEuler: int = 0
    dComponents: int = 0
    dHoles: int = 0


@dataclass(frozen=True)
class Arc:
    """Counterclockwise arc of circle ``disk`` from angle ``start`` to ``end``.

    ``start_owner`` is the disk whose coverage ends at ``start`` and
    ``end_owner`` the disk whose coverage begins at ``end``; both are -1 for a
    full uncovered circle.  ``end`` may exceed 2*pi for arcs crossing angle 0.
    """

    disk: int
    start: float
    end: float
    start_owner: int
    end_owner: int

    @property
    def sweep(self) -> float:
        return self.end - self.start

    @property
    def is_full(self) -> bool:
        return self.start_owner < 0


@dataclass
class ArcArrangement:
    arcs: list[Arc]
    by_disk: list[list[int]]
    vertices: list[tuple[float, float]]
    loops: list[list[int]]
    loop_areas: list[float]

    @property
    def n_outer(self) -> int:
        return sum(1 for a in self.loop_areas if a > 0)

    @property
    def n_inner(self) -> int:
        return sum(1 for a in self.loop_areas if a < 0)


class Configuration:
    """Finite set of disks with germs in a rectangular window.

    Treated as immutable; the grid index and component labels are built on
    first use.  ``r_max`` fixes the grid cell at ``2 * r_max`` and defaults to
    the largest radius present.
    """

    def __init__(
        self,
        points: Sequence[Sequence[float]] = (),
        window: Sequence[float] | None = None,
        r_max: float | None = None,
        types: Sequence[int] | None = None,
    ):
        pts = tuple(MarkedPoint(float(p[0]), float(p[1]), float(p[2])) for p in points)
        for p in pts:
            if not p.r > 0:
                raise ValueError(f"radius must be positive, got {p.r}")
            if not (math.isfinite(p.x) and math.isfinite(p.y) and math.isfinite(p.r)):
                raise ValueError(f"non-finite point {p}")
        if window is None:
            if pts:
                window = (
                    min(p.x for p in pts), min(p.y for p in pts),
                    max(p.x for p in pts), max(p.y for p in pts),
                )
            else:
                window = (0.0, 0.0, 0.0, 0.0)
        window = tuple(float(v) for v in window)
        if len(window) != 4 or window[2] < window[0] or window[3] < window[1]:
            raise ValueError(f"bad window {window}")
        for p in pts:
            if not (window[0] <= p.x <= window[2] and window[1] <= p.y <= window[3]):
                raise ValueError(f"germ {p} outside window {window}")
        if types is not None:
            types = tuple(int(t) for t in types)
            if len(types) != len(pts):
                raise ValueError("types must match points")
        self.points = pts
        self.window = window
        self.types = types
        rmax = max((p.r for p in pts), default=1.0)
        self.r_max = float(r_max) if r_max is not None else rmax
        if self.r_max < rmax:
            raise ValueError("r_max smaller than a radius present")

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __repr__(self) -> str:
        return f"Configuration(n={len(self.points)}, window={self.window})"

    @cached_property
    def index(self) -> UniformGrid:
        grid = UniformGrid(2.0 * self.r_max)
        for i, p in enumerate(self.points):
            grid.insert(i, p.x, p.y)
        return grid

    def near(self, x: float, y: float, radius: float) -> list[int]:
        """Indices of germs within ``radius`` of (x, y)."""
        return sorted(self.index.query(x, y, radius))

    def overlapping(self, p: MarkedPoint) -> list[int]:
        """Indices of disks whose interior meets the open disk ``p`` (d < r + r')."""
        pts = self.points
        out = []
        for j in self.index.candidates(p.x, p.y, p.r + self.r_max):
            q = pts[j]
            if math.hypot(q.x - p.x, q.y - p.y) < p.r + q.r:
                out.append(j)
        out.sort()
        return out

    @cached_property
    def overlap_pairs(self) -> list[tuple[int, int]]:
        pts = self.points
        grid = self.index
        pairs = []
        for i, p in enumerate(pts):
            for j in grid.candidates(p.x, p.y, 2.0 * self.r_max):
                if j > i:
                    q = pts[j]
                    if math.hypot(q.x - p.x, q.y - p.y) < p.r + q.r:
                        pairs.append((i, j))
        pairs.sort()
        return pairs

    @cached_property
    def component_labels(self) -> list[int]:
        """Per-point label: the smallest point index of its component."""
        uf = UnionFind(len(self.points))
        for i, j in self.overlap_pairs:
            uf.union(i, j)
        return uf.labels()

    def restrict(self, rect: Sequence[float], open_: bool = False) -> "Configuration":
        """Points whose germ lies in ``rect`` (closed unless ``open_``)."""
        x0, y0, x1, y1 = rect
        keep = []
        for i, p in enumerate(self.points):
            if open_:
                inside = x0 < p.x < x1 and y0 < p.y < y1
            else:
                inside = x0 <= p.x <= x1 and y0 <= p.y <= y1
            if inside:
                keep.append(i)
        return self.subset(keep, window=self.window)

    def subset(self, indices: Sequence[int], window=None) -> "Configuration":
        types = None if self.types is None else [self.types[i] for i in indices]
        return Configuration(
            [self.points[i] for i in indices],
            window=self.window if window is None else window,
            r_max=self.r_max,
            types=types,
        )

    def with_point(self, p: MarkedPoint, type_: int | None = None) -> "Configuration":
        types = None
        if self.types is not None:
            types = list(self.types) + [1 if type_ is None else type_]
        x0, y0, x1, y1 = self.window
        window = (min(x0, p.x), min(y0, p.y), max(x1, p.x), max(y1, p.y))
        return Configuration(
            list(self.points) + [p], window=window,
            r_max=max(self.r_max, p.r), types=types,
        )

    def transformed(self, angle: float = 0.0, shift: tuple[float, float] = (0.0, 0.0)) -> "Configuration":
        """Rotate germs about the origin then translate; window becomes the new bounding box."""
        c, s = math.cos(angle), math.sin(angle)
        pts = [(c * p.x - s * p.y + shift[0], s * p.x + c * p.y + shift[1], p.r) for p in self.points]
        return Configuration(pts, r_max=self.r_max, types=self.types)


# ---------------------------------------------------------------------------
# arrangement core; works on plain (x, y, r) tuples in local coordinates


def _pairs(pts: Sequence[tuple[float, float, float]], slack: float = 0.0):
    """All (i, j, d) with i < j and d < r_i + r_j + slack.

    The arrangement passes its tolerance as ``slack`` so near-tangent pairs
    reach the degeneracy check instead of being silently dropped.
    """
    n = len(pts)
    out = []
    if n <= 32:
        for i in range(n):
            xi, yi, ri = pts[i]
            for j in range(i + 1, n):
                xj, yj, rj = pts[j]
                d = math.hypot(xj - xi, yj - yi)
                if d < ri + rj + slack:
                    out.append((i, j, d))
        return out
    rmax = max(p[2] for p in pts)
    grid = UniformGrid(2.0 * rmax)
    for i, (x, y, _) in enumerate(pts):
        grid.insert(i, x, y)
    for i, (xi, yi, ri) in enumerate(pts):
        for j in grid.candidates(xi, yi, 2.0 * rmax + slack):
            if j > i:
                xj, yj, rj = pts[j]
                d = math.hypot(xj - xi, yj - yi)
                if d < ri + rj + slack:
                    out.append((i, j, d))
    return out


def _covers(pts, pairs, eps):
    """Per-disk covering intervals and the swallowed flags."""
    n = len(pts)
    cover: list[list[tuple[float, float, int]]] = [[] for _ in range(n)]
    swallowed = [False] * n
    for i, j, d in pairs:
        xi, yi, ri = pts[i]
        xj, yj, rj = pts[j]
        if ri + rj - d <= eps:
            raise DegenerateGeometry(f"disks {i} and {j} externally tangent")
        gap = d - abs(ri - rj)
        if abs(gap) <= eps:
            if d <= eps:
                raise DegenerateGeometry(f"disks {i} and {j} coincide")
            raise DegenerateGeometry(f"disks {i} and {j} internally tangent")
        if gap < 0:
            # one disk strictly inside the other
            if ri < rj:
                swallowed[i] = True
            else:
                swallowed[j] = True
            continue
        phi = math.atan2(yj - yi, xj - xi)
        ca = (d * d + ri * ri - rj * rj) / (2.0 * d * ri)
        cb = (d * d + rj * rj - ri * ri) / (2.0 * d * rj)
        a = math.acos(max(-1.0, min(1.0, ca)))
        b = math.acos(max(-1.0, min(1.0, cb)))
        s = (phi - a) % TWO_PI
        cover[i].append((s, s + 2.0 * a, j))
        s = (phi + math.pi - b) % TWO_PI
        cover[j].append((s, s + 2.0 * b, i))
    return cover, swallowed


def _uncovered(i, intervals, r, eps):
    """Uncovered arcs of circle ``i`` given its covering intervals."""
    if not intervals:
        return [(0.0, TWO_PI, -1, -1)]
    pieces = []
    for s, e, o in intervals:
        if e >= TWO_PI:
            pieces.append((s, TWO_PI, o, -2))
            pieces.append((0.0, e - TWO_PI, -2, o))
        else:
            pieces.append((s, e, o, o))
    pieces.sort()
    gaps = []
    cur, cur_owner = 0.0, -2
    for cs, ce, cso, ceo in pieces:
        if cs > cur:
            gaps.append([cur, cs, cur_owner, cso])
        if ce >= cur:
            cur, cur_owner = ce, ceo
    if cur < TWO_PI:
        gaps.append([cur, TWO_PI, cur_owner, -2])
    if not gaps:
        return []
    if len(gaps) > 1 and gaps[0][2] == -2 and gaps[-1][3] == -2:
        first = gaps.pop(0)
        gaps[-1][1] = first[1] + TWO_PI
        gaps[-1][3] = first[3]
    eps_ang = eps / r
    out = []
    for s, e, so, eo in gaps:
        if so < 0 or eo < 0:
            raise DegenerateGeometry(f"unresolved arc endpoint on circle {i}")
        if e - s <= eps_ang:
            raise DegenerateGeometry(f"vanishing arc on circle {i}")
        out.append((s, e, so, eo))
    return out


def _arrangement(pts, pairs, eps, want_vertices=False):
    cover, swallowed = _covers(pts, pairs, eps)
    arcs = []
    by_disk = []
    for i, (x, y, r) in enumerate(pts):
        ids = []
        if not swallowed[i]:
            for s, e, so, eo in _uncovered(i, cover[i], r, eps):
                ids.append(len(arcs))
                arcs.append(Arc(i, s, e, so, eo))
        by_disk.append(ids)

    start_of = {}
    for k, a in enumerate(arcs):
        if a.start_owner >= 0:
            key = (a.disk, a.start_owner)
            if key in start_of:
                raise DegenerateGeometry(f"two arcs of circle {a.disk} leave disk {a.start_owner}")
            start_of[key] = k

    nxt = [0] * len(arcs)
    hit = [False] * len(arcs)
    for k, a in enumerate(arcs):
        if a.is_full:
            nxt[k] = k
            hit[k] = True
            continue
        m = start_of.get((a.end_owner, a.disk))
        if m is None or hit[m]:
            raise DegenerateGeometry(f"arc of circle {a.disk} has no unique successor")
        hit[m] = True
        nxt[k] = m
        xi, yi, ri = pts[a.disk]
        b = arcs[m]
        xk, yk, rk = pts[b.disk]
        px, py = xi + ri * math.cos(a.end), yi + ri * math.sin(a.end)
        qx, qy = xk + rk * math.cos(b.start), yk + rk * math.sin(b.start)
        if math.hypot(px - qx, py - qy) > MATCH_TOL * max(ri, rk):
            raise DegenerateGeometry(f"arc endpoints of circles {a.disk}, {b.disk} disagree")

    # per-arc contributions to the line integral 1/2 (x dy - y dx)
    contrib = []
    for a in arcs:
        x, y, r = pts[a.disk]
        contrib.append(0.5 * (
            r * r * (a.end - a.start)
            + x * r * (math.sin(a.end) - math.sin(a.start))
            - y * r * (math.cos(a.end) - math.cos(a.start))
        ))

    seen = [False] * len(arcs)
    loops, loop_areas = [], []
    for k in range(len(arcs)):
        if seen[k]:
            continue
        loop = []
        m = k
        while not seen[m]:
            seen[m] = True
            loop.append(m)
            m = nxt[m]
        if m != k:
            raise DegenerateGeometry("boundary walk did not close")
        loops.append(loop)
        loop_areas.append(sum(contrib[m] for m in loop))

    vertices = []
    if want_vertices:
        for a in arcs:
            if not a.is_full:
                x, y, r = pts[a.disk]
                vertices.append((x + r * math.cos(a.start), y + r * math.sin(a.start)))
    return ArcArrangement(arcs, by_disk, vertices, loops, loop_areas)


def _measure(pts, eps=None):
    """(area, perimeter, components, holes) of the union of ``pts``."""
    n = len(pts)
    if n == 0:
        return 0.0, 0.0, 0, 0
    if eps is None:
        eps = REL_EPS * min(p[2] for p in pts)
    ox, oy = pts[0][0], pts[0][1]
    local = [(x - ox, y - oy, r) for x, y, r in pts]
    pairs = _pairs(local, eps)
    arr = _arrangement(local, pairs, eps)
    uf = UnionFind(n)
    for i, j, _ in pairs:
        uf.union(i, j)
    components = uf.n_sets
    n_outer = arr.n_outer
    holes = len(arr.loops) - components
    if n_outer != components or holes < 0:
        raise DegenerateGeometry(
            f"{n_outer} outer loops for {components} components"
        )
    area = sum(arr.loop_areas)
    perimeter = sum(pts[a.disk][2] * a.sweep for a in arr.arcs)
    return area, perimeter, components, holes


def _tuples(config) -> list[tuple[float, float, float]]:
    if isinstance(config, Configuration):
        return list(config.points)
    return [tuple(map(float, p[:3])) for p in config]


def boundary_arcs(config) -> ArcArrangement:
    """Arc arrangement of the union boundary, in the configuration's own coordinates."""
    pts = _tuples(config)
    if not pts:
        return ArcArrangement([], [], [], [], [])
    eps = REL_EPS * min(p[2] for p in pts)
    return _arrangement(pts, _pairs(pts, eps), eps, want_vertices=True)


def functionals(config) -> Functionals:
    """Area, perimeter, Euler characteristic, components and holes of the union."""
    area, perimeter, c, h = _measure(_tuples(config))
    return Functionals(area, perimeter, c - h, c, h)


def local_delta(p, neighbors) -> tuple[float, float, int]:
    """(dArea, dPerimeter, dEuler) for adding ``p`` to a union whose disks meeting ``p`` are ``neighbors``.

    Exact by additivity: every functional F satisfies
    F(U + p) - F(U) = F(p) - F(U & p), and U & p only involves disks meeting p.
    """
    p = tuple(p)
    if not neighbors:
        return math.pi * p[2] ** 2, TWO_PI * p[2], 1
    nb = [tuple(q) for q in neighbors]
    a1, l1, c1, h1 = _measure(nb + [p])
    a0, l0, c0, h0 = _measure(nb)
    return a1 - a0, l1 - l0, (c1 - h1) - (c0 - h0)


def delta_functionals(p, config: Configuration) -> FunctionalDelta:
    """Change in every functional when disk ``p`` is added to ``config``."""
    p = MarkedPoint(*map(float, p))
    if not p.r > 0:
        raise ValueError("radius must be positive")
    idx = config.overlapping(p)
    dA, dL, dE = local_delta(p, [config.points[j] for j in idx])
    labels = config.component_labels
    dC = 1 - len({labels[j] for j in idx})
    return FunctionalDelta(dA, dL, dE, dC, dC - dE)


def local_energy(p, config: Configuration, params) -> float:
    """Energy change when ``p`` is added; independent of any enclosing window."""
    t1, t2, t3 = params.theta
    if t1 == 0 and t2 == 0 and t3 == 0:
        return 0.0
    p = MarkedPoint(*map(float, p))
    idx = config.overlapping(p)
    dA, dL, dE = local_delta(p, [config.points[j] for j in idx])
    return t1 * dA + t2 * dL + t3 * dE


def energy(config, params) -> float:
    f = functionals(config)
    t1, t2, t3 = params.theta
    return t1 * f.area + t2 * f.perimeter + t3 * f.euler


def energy_in(region: Sequence[float], config: Configuration, params) -> float:
    """Energy inside ``region``: H(config restricted to D) - H(config restricted to D minus region).

    D is the region grown by twice the largest radius, which contains the
    Minkowski sum required for the difference to be independent of D.
    """
    x0, y0, x1, y1 = region
    g = 2.0 * params.r1
    big = config.restrict((x0 - g, y0 - g, x1 + g, y1 + g))
    outer = [i for i, p in enumerate(big.points)
             if not (x0 <= p.x <= x1 and y0 <= p.y <= y1)]
    if len(outer) == len(big):
        return 0.0
    return energy(big, params) - energy(big.subset(outer), params)
