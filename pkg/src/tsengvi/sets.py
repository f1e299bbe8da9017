"""Closed convex sets with closed-form metric projections.

All three families project in the inner product of their space. For the
half-space and the ball this means the weighted norm enters the formulas;
the box projection stays a componentwise clamp because the weighted
squared distance is a sum of independent one-dimensional terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .space import HilbertSpace

# rounding slack for boundary points, so projections are exactly idempotent
_REL_SLACK = 64 * np.finfo(float).eps


class FeasibleSet:
    space: HilbertSpace

    def project(self, x) -> np.ndarray:
        raise NotImplementedError

    def violation(self, x) -> float:
        """Amount by which ``x`` violates the defining inequality (0 if member)."""
        raise NotImplementedError

    def contains(self, x, tol: float = 0.0) -> bool:
        if tol < 0:
            raise ValueError("tol must be nonnegative")
        return self.violation(x) <= tol

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class HalfSpace(FeasibleSet):
    """``{x : <u, x> <= v}``."""

    space: HilbertSpace
    u: np.ndarray
    v: float

    def __post_init__(self):
        u = self.space.check(self.u).copy()
        if not np.any(u != 0):
            raise ValueError("half-space normal must be nonzero")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", float(self.v))

    def violation(self, x) -> float:
        return max(self.space.inner(self.u, x) - self.v, 0.0)

    def project(self, x) -> np.ndarray:
        x = self.space.check(x)
        excess = self.space.inner(self.u, x) - self.v
        scale = abs(self.v) + self.space.norm(self.u) * self.space.norm(x)
        if excess <= _REL_SLACK * scale:
            return x.copy()
        return x - (excess / self.space.inner(self.u, self.u)) * self.u

    def sample(self, rng):
        # centred on the boundary point closest to the origin
        uu = self.space.inner(self.u, self.u)
        centre = (self.v / uu) * self.u
        scale = 1.0 + abs(self.v) / np.sqrt(uu)
        return self.project(centre + scale * rng.standard_normal(self.space.dim))


@dataclass(frozen=True, eq=False)
class Box(FeasibleSet):
    """``{x : a <= x <= b}`` componentwise."""

    space: HilbertSpace
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        dim = self.space.dim
        a = np.broadcast_to(np.asarray(self.a, dtype=float), (dim,)).copy()
        b = np.broadcast_to(np.asarray(self.b, dtype=float), (dim,)).copy()
        if np.any(a > b):
            raise ValueError("box requires a <= b componentwise")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def violation(self, x) -> float:
        x = self.space.check(x)
        return float(max(np.max(self.a - x), np.max(x - self.b), 0.0))

    def project(self, x) -> np.ndarray:
        x = self.space.check(x)
        return np.minimum(self.b, np.maximum(x, self.a))

    def sample(self, rng):
        return rng.uniform(self.a, self.b)


@dataclass(frozen=True, eq=False)
class Ball(FeasibleSet):
    """``{x : ||x - p|| <= q}``."""

    space: HilbertSpace
    p: np.ndarray
    q: float

    def __post_init__(self):
        p = np.broadcast_to(np.asarray(self.p, dtype=float), (self.space.dim,)).copy()
        if not self.q > 0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", float(self.q))

    def violation(self, x) -> float:
        return max(self.space.dist(x, self.p) - self.q, 0.0)

    def project(self, x) -> np.ndarray:
        x = self.space.check(x)
        r = self.space.dist(x, self.p)
        if r <= self.q * (1 + _REL_SLACK):
            return x.copy()
        return self.p + (self.q / r) * (x - self.p)

    def sample(self, rng):
        d = rng.standard_normal(self.space.dim)
        d /= self.space.norm(d)
        # radius uniform in [0, q): not volume-uniform, but reaches the centre
        return self.p + self.q * rng.uniform() * d


def project(feasible_set: FeasibleSet, x) -> np.ndarray:
    return feasible_set.project(x)


def contains(feasible_set: FeasibleSet, x, tol: float = 0.0) -> bool:
    return feasible_set.contains(x, tol)


def sample(feasible_set: FeasibleSet, rng) -> np.ndarray:
    return feasible_set.sample(rng)
