"""Birth-death-move Metropolis-Hastings for the Quermass density in a window.

Targets the density proportional to ``z**n * exp(-H)`` with respect to the
unit-rate Poisson process of marked points in the window, where ``H`` is the
energy inside the window given the boundary condition.  All energy changes
come from :func:`quermass.geometry.local_delta`, so each step only touches
disks within reach of the proposed one.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import Configuration, DegenerateGeometry, MarkedPoint, functionals, local_delta
from .params import QuermassParams, local_bounds
from .unionfind import UnionFind, UniformGrid

logger = logging.getLogger(__name__)

BIRTH, DEATH, MOVE = "birth", "death", "translate"


class ExplosionError(RuntimeError):
    """Point count ran past the guard threshold; the parameters look unstable."""


class Unsupported(ValueError):
    pass


class CacheMismatch(AssertionError):
    pass


@dataclass(frozen=True)
class Boundary:
    """``free``, ``periodic`` or ``fixed`` (with the frozen outside configuration)."""

    kind: str = "free"
    outside: Configuration | None = None

    def __post_init__(self):
        if self.kind not in ("free", "periodic", "fixed"):
            raise ValueError(f"unknown boundary {self.kind!r}")
        if self.kind == "fixed" and self.outside is None:
            raise ValueError("fixed boundary needs an outside configuration")

    @classmethod
    def fixed(cls, outside: Configuration) -> "Boundary":
        return cls("fixed", outside)


@dataclass(frozen=True)
class MoveMix:
    p_birth: float = 0.4
    p_death: float = 0.4
    p_move: float = 0.2
    move_scale: float | None = None  # default r0 / 2

    def __post_init__(self):
        ps = (self.p_birth, self.p_death, self.p_move)
        if any(p < 0 for p in ps) or abs(sum(ps) - 1.0) > 1e-12:
            raise ValueError("move probabilities must be non-negative and sum to 1")
        if (self.p_birth == 0) != (self.p_death == 0):
            raise ValueError("birth and death must both be enabled or both disabled")


@dataclass
class TraceRecord:
    step: int
    n: int
    area: float
    perimeter: float
    euler: int
    components: int
    holes: int
    accepted: bool
    move: str
    type_counts: tuple[int, ...] = ()


def poisson_sandwich_bounds(params: QuermassParams) -> tuple[float, float]:
    """Uniform lower and upper bounds (C0, C1) on the local energy when theta3 = 0."""
    if params.theta3 != 0:
        raise Unsupported("uniform bounds on the local energy need theta3 = 0")
    b = local_bounds(params.r0, params.r1)
    area = [params.theta1 * v for v in b["area"]]
    perim = [params.theta2 * v for v in b["perimeter"]]
    return min(area) + min(perim), max(area) + max(perim)


class ChainState:
    """Mutable chain state; single writer.

    Points carry integer ids that only grow, so neighbour lists sorted by id
    are reproducible and a birth followed by the death of the same disk sees
    exactly the same neighbourhood.
    """

    def __init__(
        self,
        params: QuermassParams,
        window: Sequence[float],
        boundary: Boundary | None = None,
        K: int = 1,
        rng: np.random.Generator | None = None,
        moves: MoveMix | None = None,
        initial: Configuration | None = None,
    ):
        self.params = params
        self.window = tuple(float(v) for v in window)
        x0, y0, x1, y1 = self.window
        self.width, self.height = x1 - x0, y1 - y0
        if not (self.width > 0 and self.height > 0):
            raise ValueError("window must have positive area")
        self.area = self.width * self.height
        self.boundary = boundary or Boundary()
        if K < 1:
            raise ValueError("K must be >= 1")
        self.K = int(K)
        self.rng = rng if rng is not None else np.random.default_rng()
        self.moves = moves or MoveMix()
        self.move_scale = self.moves.move_scale or params.r0 / 2.0
        r1 = params.r1
        if self.boundary.kind == "periodic" and min(self.width, self.height) < 4 * r1:
            raise ValueError("periodic window must be at least 4 * r1 wide")
        self.slack = 1e-9 * params.r0
        self.step = 0
        self.points: dict[int, tuple[float, float, float, int]] = {}
        self.ids: list[int] = []
        self.slot: dict[int, int] = {}
        self.next_id = 0
        self.grid = UniformGrid(2.0 * r1)
        self.outside_grid = None
        self.outside_pts: list[tuple[float, float, float]] = []
        if self.boundary.kind == "fixed":
            self.outside_grid = UniformGrid(2.0 * r1)
            for k, p in enumerate(self.boundary.outside.points):
                if x0 <= p.x <= x1 and y0 <= p.y <= y1:
                    raise ValueError("outside configuration has a germ inside the window")
                self.outside_pts.append((p.x, p.y, p.r))
                self.outside_grid.insert(k, p.x, p.y)
        self.log_zl = math.log(params.z * self.area)
        # proposal asymmetry between birth and death
        mix = self.moves
        self.log_pdb = (math.log(mix.p_death) - math.log(mix.p_birth)) if mix.p_birth > 0 else 0.0
        self.guard = 50.0 * params.z * self.area
        self.geometry = not params.is_poisson
        self.cache: list[float] | None = [0.0, 0.0, 0] if self.geometry else None
        self.n_degenerate = 0
        if initial is not None:
            types = initial.types or (1,) * len(initial)
            for p, t in zip(initial.points, types):
                self._insert(p.x, p.y, p.r, t)
            self.cache = list(self.energy_terms()) if self.geometry else None

    # -- storage -----------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.ids)

    def _insert(self, x, y, r, t=1) -> int:
        pid = self.next_id
        self.next_id += 1
        self.points[pid] = (x, y, r, t)
        self.slot[pid] = len(self.ids)
        self.ids.append(pid)
        self.grid.insert(pid, x, y)
        return pid

    def _remove(self, pid) -> None:
        k = self.slot.pop(pid)
        last = self.ids.pop()
        if last != pid:
            self.ids[k] = last
            self.slot[last] = k
        del self.points[pid]
        self.grid.remove(pid)

    def _relocate(self, pid, x, y) -> None:
        _, _, r, t = self.points[pid]
        self.points[pid] = (x, y, r, t)
        self.grid.move(pid, x, y)

    # -- geometry ------------------------------------------------------------

    def _shifts(self, x, y, reach):
        if self.boundary.kind != "periodic":
            return ((0.0, 0.0),)
        x0, y0, x1, y1 = self.window
        sx = [0.0]
        sy = [0.0]
        if x - reach < x0:
            sx.append(-self.width)
        if x + reach > x1:
            sx.append(self.width)
        if y - reach < y0:
            sy.append(-self.height)
        if y + reach > y1:
            sy.append(self.height)
        return [(a, b) for a in sx for b in sy]

    def neighbours(self, x, y, r, exclude=None, with_ids=False):
        """Disks meeting the open disk (x, y, r): inside points (sorted by id) then outside ones.

        Under periodic boundary the images nearest to (x, y) are returned.
        Each entry is ``(x, y, r, type)``; ``type`` is 0 for outside points.
        """
        reach = r + self.params.r1
        # near-tangent disks are included so the kernel rejects them as degenerate
        slack = self.slack
        found = []
        pts = self.points
        for sx, sy in self._shifts(x, y, reach):
            # a point at q is seen through the image q + shift
            qx0, qy0 = x - sx, y - sy
            for pid in self.grid.candidates(qx0, qy0, reach):
                if pid == exclude:
                    continue
                px, py, pr, pt = pts[pid]
                ex, ey = px + sx, py + sy
                if math.hypot(ex - x, ey - y) < r + pr + slack:
                    found.append((pid, (ex, ey, pr, pt)))
        found.sort(key=lambda e: e[0])
        out = [e[1] for e in found]
        ids = [e[0] for e in found]
        if self.outside_grid is not None:
            for k in sorted(self.outside_grid.candidates(x, y, reach)):
                px, py, pr = self.outside_pts[k]
                if math.hypot(px - x, py - y) < r + pr + slack:
                    out.append((px, py, pr, 0))
        return (out, ids) if with_ids else out

    def hardcore_clash(self, x, y, r, t, exclude=None) -> bool:
        """True when a disk of another type is within (closed) contact distance."""
        if self.K == 1:
            return False
        reach = r + self.params.r1
        for sx, sy in self._shifts(x, y, reach):
            for pid in self.grid.candidates(x - sx, y - sy, reach):
                if pid == exclude:
                    continue
                px, py, pr, pt = self.points[pid]
                if pt != t and math.hypot(px + sx - x, py + sy - y) <= r + pr:
                    return True
        return False

    def delta(self, x, y, r, exclude=None):
        nb = self.neighbours(x, y, r, exclude=exclude)
        return local_delta((x, y, r), [q[:3] for q in nb])

    def energy_change(self, d) -> float:
        t1, t2, t3 = self.params.theta
        return t1 * d[0] + t2 * d[1] + t3 * d[2]

    # -- acceptance ratios (log, before min with 1) ----------------------------

    def log_birth_ratio(self, x, y, r, t=1):
        """Returns (log ratio, functional delta or None)."""
        if self.hardcore_clash(x, y, r, t):
            return -math.inf, None
        base = (self.log_zl - math.log(self.n + 1)) + self.log_pdb
        if not self.geometry:
            return base, None
        d = self.delta(x, y, r)
        return base - self.energy_change(d), d

    def log_death_ratio(self, pid):
        x, y, r, _ = self.points[pid]
        base = (math.log(self.n) - self.log_zl) + -self.log_pdb
        if not self.geometry:
            return base, None
        d = self.delta(x, y, r, exclude=pid)
        return base + self.energy_change(d), d

    def log_move_ratio(self, pid, nx, ny):
        x, y, r, t = self.points[pid]
        if self.hardcore_clash(nx, ny, r, t, exclude=pid):
            return -math.inf, None
        if not self.geometry:
            return 0.0, None
        d_old = self.delta(x, y, r, exclude=pid)
        d_new = self.delta(nx, ny, r, exclude=pid)
        d = (d_new[0] - d_old[0], d_new[1] - d_old[1], d_new[2] - d_old[2])
        return -self.energy_change(d), d

    # -- proposals -------------------------------------------------------------

    def _reflect(self, v, lo, hi):
        span = hi - lo
        if self.boundary.kind == "periodic":
            return lo + (v - lo) % span
        while v < lo or v > hi:
            v = 2 * lo - v if v < lo else 2 * hi - v
        return v

    def _accept(self, log_ratio) -> bool:
        u = self.rng.random()
        if log_ratio >= 0:
            return True
        return u < math.exp(log_ratio)

    def _apply(self, d, sign=1):
        if d is None:
            self.cache = None
        elif self.cache is not None:
            self.cache[0] += sign * d[0]
            self.cache[1] += sign * d[1]
            self.cache[2] += sign * d[2]

    def advance(self) -> tuple[bool, str]:
        """One Metropolis-Hastings step; returns (accepted, move kind)."""
        rng = self.rng
        self.step += 1
        u = rng.random()
        mix = self.moves
        x0, y0, x1, y1 = self.window
        try:
            if u < mix.p_birth:
                kind = BIRTH
                x = x0 + self.width * rng.random()
                y = y0 + self.height * rng.random()
                r = self.params.radius_law.sample(rng)
                t = 1 + int(rng.random() * self.K) if self.K > 1 else 1
                lr, d = self.log_birth_ratio(x, y, r, t)
                ok = lr > -math.inf and self._accept(lr)
                if ok:
                    self._insert(x, y, r, t)
                    self._apply(d)
                    if self.n > self.guard:
                        raise ExplosionError(
                            f"{self.n} points exceed 50 z |window| = {self.guard:.1f} at step {self.step}"
                        )
            elif u < mix.p_birth + mix.p_death:
                kind = DEATH
                if not self.ids:
                    return False, kind
                pid = self.ids[int(rng.random() * self.n)]
                lr, d = self.log_death_ratio(pid)
                ok = self._accept(lr)
                if ok:
                    self._remove(pid)
                    self._apply(d, -1)
            else:
                kind = MOVE
                if not self.ids:
                    return False, kind
                pid = self.ids[int(rng.random() * self.n)]
                x, y, r, t = self.points[pid]
                nx = self._reflect(x + self.move_scale * rng.standard_normal(), x0, x1)
                ny = self._reflect(y + self.move_scale * rng.standard_normal(), y0, y1)
                lr, d = self.log_move_ratio(pid, nx, ny)
                ok = lr > -math.inf and self._accept(lr)
                if ok:
                    self._relocate(pid, nx, ny)
                    self._apply(d)
        except DegenerateGeometry as exc:
            self.n_degenerate += 1
            logger.debug("degenerate proposal rejected at step %d: %s", self.step, exc)
            return False, kind
        return ok, kind

    # -- observables -----------------------------------------------------------

    def configuration(self) -> Configuration:
        pts = [self.points[i][:3] for i in sorted(self.points)]
        types = [self.points[i][3] for i in sorted(self.points)] if self.K > 1 else None
        return Configuration(pts, window=self.window, r_max=self.params.r1, types=types)

    def energy_terms(self) -> tuple[float, float, int]:
        """(area, perimeter, euler) entering the energy, recomputed from scratch.

        free: the union of the window's disks.  fixed: the union with the
        outside disks minus the union of the outside disks.  periodic: the
        flat-torus union, accumulated by inserting disks one at a time against
        the nearest images of those already present.
        """
        kind = self.boundary.kind
        if kind == "free":
            f = functionals(self.configuration())
            return f.area, f.perimeter, f.euler
        if kind == "fixed":
            x0, y0, x1, y1 = self.window
            g = 2.0 * self.params.r1
            near = [p for p in self.outside_pts
                    if x0 - g <= p[0] <= x1 + g and y0 - g <= p[1] <= y1 + g]
            inside = [self.points[i][:3] for i in sorted(self.points)]
            a = functionals(inside + near)
            b = functionals(near)
            return a.area - b.area, a.perimeter - b.perimeter, a.euler - b.euler
        sub = ChainState(self.params.replace(theta1=1.0), self.window, self.boundary)
        tot = [0.0, 0.0, 0]
        for pid in sorted(self.points):
            x, y, r, _ = self.points[pid]
            d = sub.delta(x, y, r)
            tot[0] += d[0]
            tot[1] += d[1]
            tot[2] += d[2]
            sub._insert(x, y, r)
        return tuple(tot)

    def functional_terms(self) -> tuple[float, float, int]:
        if self.cache is None:
            self.cache = list(self.energy_terms())
        return tuple(self.cache)

    def check_cache(self, rel: float = 1e-7) -> None:
        if self.cache is None:
            return
        fresh = self.energy_terms()
        for name, c, f in zip(("area", "perimeter", "euler"), self.cache, fresh):
            if abs(c - f) > rel * max(1.0, abs(f)):
                raise CacheMismatch(f"cached {name} {c} != recomputed {f} at step {self.step}")
        self.cache = list(fresh)

    def component_count(self) -> int:
        pts = self.points
        ids = sorted(pts)
        where = {pid: k for k, pid in enumerate(ids)}
        uf = UnionFind(len(ids))
        for pid in ids:
            x, y, r, _ = pts[pid]
            for (_, _, _, _), qid in zip(*self.neighbours(x, y, r, exclude=pid, with_ids=True)):
                uf.union(where[pid], where[qid])
        return uf.n_sets

    def record(self, accepted: bool, move: str) -> TraceRecord:
        if self.boundary.kind == "fixed":
            f = functionals(self.configuration())
            area, perim, euler, comps = f.area, f.perimeter, f.euler, f.components
        else:
            area, perim, euler = self.functional_terms()
            comps = self.component_count()
        counts = ()
        if self.K > 1:
            c = [0] * self.K
            for _, _, _, t in self.points.values():
                c[t - 1] += 1
            counts = tuple(c)
        return TraceRecord(self.step, self.n, area, perim, int(round(euler)), comps,
                           comps - int(round(euler)), accepted, move, counts)


def propose_and_step(state: ChainState) -> tuple[ChainState, TraceRecord]:
    accepted, move = state.advance()
    return state, state.record(accepted, move)


def chain_rng(seed: int, chain_index: int = 0) -> np.random.Generator:
    """Independent stream for replica ``chain_index`` of run ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(chain_index)]))


@dataclass
class ChainResult:
    records: list[TraceRecord]
    snapshots: list[tuple[int, Configuration]]
    state: ChainState
    burn_in: int
    accepted: dict[str, int] = field(default_factory=dict)
    proposed: dict[str, int] = field(default_factory=dict)

    def after_burn_in(self) -> list[TraceRecord]:
        return [r for r in self.records if r.step > self.burn_in]


def run_chain(
    params: QuermassParams,
    window: Sequence[float],
    boundary: Boundary | None = None,
    K: int = 1,
    n_steps: int = 100_000,
    thinning: int | None = None,
    seed: int = 0,
    *,
    chain_index: int = 0,
    burn_in: int | None = None,
    snapshot_every: int | None = None,
    moves: MoveMix | None = None,
    initial: Configuration | None = None,
    check_every: int = 10_000,
) -> ChainResult:
    """Run one chain and return its thinned trace.

    ``thinning`` defaults to ``z * |window|`` steps and ``burn_in`` to 20% of
    ``n_steps``.  Records are emitted every ``thinning`` steps from the start;
    snapshots every ``snapshot_every`` steps after burn-in.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    rng = chain_rng(seed, chain_index)
    state = ChainState(params, window, boundary, K, rng, moves, initial)
    if thinning is None:
        thinning = max(1, int(round(params.z * state.area)))
    if burn_in is None:
        burn_in = int(0.2 * n_steps)
    records, snaps = [], []
    accepted = {BIRTH: 0, DEATH: 0, MOVE: 0}
    proposed = {BIRTH: 0, DEATH: 0, MOVE: 0}
    for step in range(1, n_steps + 1):
        ok, kind = state.advance()
        proposed[kind] += 1
        accepted[kind] += ok
        if check_every and step % check_every == 0:
            state.check_cache()
        if step % thinning == 0:
            records.append(state.record(ok, kind))
        if snapshot_every and step > burn_in and step % snapshot_every == 0:
            snaps.append((step, state.configuration()))
    state.check_cache()
    return ChainResult(records, snaps, state, burn_in, accepted, proposed)
