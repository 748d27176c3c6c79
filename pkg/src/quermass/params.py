"""Model parameters and radius laws."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class RadiusLaw:
    """Reference law of the radii: ``fixed``, ``uniform`` or ``discrete``."""

    kind: str = "fixed"
    r: float | None = None
    low: float | None = None
    high: float | None = None
    values: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == "fixed":
            if self.r is None or not self.r > 0:
                raise ValueError("fixed radius law needs r > 0")
        elif self.kind == "uniform":
            if self.low is None or self.high is None or not 0 < self.low <= self.high:
                raise ValueError("uniform radius law needs 0 < low <= high")
        elif self.kind == "discrete":
            if not self.values or len(self.values) != len(self.weights):
                raise ValueError("discrete radius law needs matching values and weights")
            if any(v <= 0 for v in self.values) or any(w < 0 for w in self.weights) or sum(self.weights) <= 0:
                raise ValueError("discrete radius law needs positive values and non-negative weights")
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        else:
            raise ValueError(f"unknown radius law {self.kind!r}")

    @classmethod
    def fixed(cls, r: float) -> "RadiusLaw":
        return cls("fixed", r=float(r))

    @classmethod
    def uniform(cls, low: float, high: float) -> "RadiusLaw":
        return cls("uniform", low=float(low), high=float(high))

    @classmethod
    def discrete(cls, values, weights) -> "RadiusLaw":
        return cls("discrete", values=tuple(values), weights=tuple(weights))

    @property
    def support(self) -> tuple[float, float]:
        if self.kind == "fixed":
            return self.r, self.r
        if self.kind == "uniform":
            return self.low, self.high
        live = [v for v, w in zip(self.values, self.weights) if w > 0]
        return min(live), max(live)

    def sample(self, rng: np.random.Generator) -> float:
        if self.kind == "fixed":
            return self.r
        if self.kind == "uniform":
            return self.low + (self.high - self.low) * rng.random()
        p = np.asarray(self.weights) / sum(self.weights)
        return float(self.values[rng.choice(len(self.values), p=p)])

    def cdf(self, x):
        """CDF, vectorised over ``x``; used for goodness-of-fit checks."""
        x = np.asarray(x, dtype=float)
        if self.kind == "fixed":
            return (x >= self.r).astype(float)
        if self.kind == "uniform":
            if self.high == self.low:
                return (x >= self.low).astype(float)
            return np.clip((x - self.low) / (self.high - self.low), 0.0, 1.0)
        vals = np.asarray(self.values)
        w = np.asarray(self.weights) / sum(self.weights)
        return (w[None, :] * (x[..., None] >= vals)).sum(axis=-1)

    def to_dict(self) -> dict:
        if self.kind == "fixed":
            return {"kind": "fixed", "r": self.r}
        if self.kind == "uniform":
            return {"kind": "uniform", "low": self.low, "high": self.high}
        return {"kind": "discrete", "values": list(self.values), "weights": list(self.weights)}

    @classmethod
    def from_dict(cls, d: dict) -> "RadiusLaw":
        kind = d.get("kind")
        if kind == "fixed":
            return cls.fixed(d["r"])
        if kind == "uniform":
            return cls.uniform(d["low"], d["high"])
        if kind == "discrete":
            return cls.discrete(d["values"], d["weights"])
        raise ValueError(f"unknown radius law {kind!r}")


@dataclass(frozen=True)
class QuermassParams:
    """Energy weights (area, perimeter, Euler characteristic), activity and radii."""

    theta1: float = 0.0
    theta2: float = 0.0
    theta3: float = 0.0
    z: float = 1.0
    r0: float = 1.0
    r1: float = 1.0
    radius_law: RadiusLaw = field(default=None)

    def __post_init__(self):
        if not (self.z > 0 and math.isfinite(self.z)):
            raise ValueError("activity z must be positive")
        if not 0 < self.r0 <= self.r1:
            raise ValueError("radii must satisfy 0 < r0 <= r1")
        for t in self.theta:
            if not math.isfinite(t):
                raise ValueError("theta must be finite")
        law = self.radius_law
        if law is None:
            law = RadiusLaw.uniform(self.r0, self.r1) if self.r0 < self.r1 else RadiusLaw.fixed(self.r0)
            object.__setattr__(self, "radius_law", law)
        lo, hi = law.support
        tol = 1e-12 * self.r1
        if lo < self.r0 - tol or hi > self.r1 + tol:
            raise ValueError(f"radius law support [{lo}, {hi}] not inside [{self.r0}, {self.r1}]")
        if lo > self.r0 + tol or hi < self.r1 - tol:
            warnings.warn(
                "radius law puts no mass near r0 or r1; the bounds could be tightened",
                stacklevel=2,
            )

    @property
    def theta(self) -> tuple[float, float, float]:
        return (self.theta1, self.theta2, self.theta3)

    @property
    def is_poisson(self) -> bool:
        return self.theta1 == 0 and self.theta2 == 0 and self.theta3 == 0

    def replace(self, **kw) -> "QuermassParams":
        d = dict(theta1=self.theta1, theta2=self.theta2, theta3=self.theta3,
                 z=self.z, r0=self.r0, r1=self.r1, radius_law=self.radius_law)
        d.update(kw)
        return QuermassParams(**d)


def local_bounds(r0: float, r1: float) -> dict[str, tuple[float, float]]:
    """Uniform bounds on the area, perimeter and component-count changes of one added disk."""
    return {
        "area": (0.0, math.pi * r1 ** 2),
        "perimeter": (-2.0 * math.pi * (r1 + r0) ** 2 / r0, 2.0 * math.pi * r1),
        "components": (-math.pi * (1.0 + r1 / r0), 1.0),
    }
