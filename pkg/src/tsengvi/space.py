"""Weighted inner-product spaces.

Points are plain 1-D float64 numpy arrays; a :class:`HilbertSpace` only
carries the quadrature weights that define ``<x, y> = sum_i w_i x_i y_i``.
Euclidean R^m uses unit weights, and L2[0, 1] is discretized on a uniform
grid with trapezoidal weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class HilbertSpace:
    weights: np.ndarray
    nodes: np.ndarray | None = field(default=None)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty 1-D sequence")
        if not np.all(w > 0):
            raise ValueError("all weights must be positive")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if self.nodes is not None:
            t = np.array(self.nodes, dtype=float)
            if t.shape != w.shape:
                raise ValueError("nodes and weights must have the same length")
            t.setflags(write=False)
            object.__setattr__(self, "nodes", t)

    @property
    def dim(self) -> int:
        return self.weights.size

    @property
    def is_euclidean(self) -> bool:
        return bool(np.all(self.weights == 1.0))

    def check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a point of shape ({self.dim},), got {x.shape}")
        return x

    def inner(self, x, y) -> float:
        x, y = self.check(x), self.check(y)
        return float(np.dot(self.weights * x, y))

    def norm(self, x) -> float:
        return float(np.sqrt(self.inner(x, x)))

    def dist(self, x, y) -> float:
        return self.norm(self.check(x) - self.check(y))

    def zeros(self) -> np.ndarray:
        return np.zeros(self.dim)

    def __repr__(self):
        kind = "euclidean" if self.is_euclidean else "weighted"
        return f"HilbertSpace(dim={self.dim}, {kind})"


def euclidean(dim: int) -> HilbertSpace:
    if dim < 1:
        raise ValueError("dim must be positive")
    return HilbertSpace(np.ones(dim))


def l2_grid(N: int = 200, a: float = 0.0, b: float = 1.0) -> HilbertSpace:
    """Trapezoidal discretization of L2[a, b] on ``N + 1`` uniform nodes.

    Weights are ``(h/2, h, ..., h, h/2)`` with ``h = (b - a) / N``, so a
    point holds the function values at the nodes.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    h = (b - a) / N
    w = np.full(N + 1, h)
    w[0] = w[-1] = h / 2
    return HilbertSpace(w, nodes=np.linspace(a, b, N + 1))


def inner(space: HilbertSpace, x, y) -> float:
    return space.inner(x, y)


def norm(space: HilbertSpace, x) -> float:
    return space.norm(x)


def combine(a: float, x, b: float, y) -> np.ndarray:
    """Return ``a*x + b*y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return a * x + b * y
