"""Variational inequality test problems.

A :class:`Problem` bundles an operator oracle with a feasible set and
counts every operator evaluation and every projection onto the feasible
set, so that solvers can be compared on cost without self-reporting.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .rng import make_rng
from .sets import Ball, Box, FeasibleSet
from .space import HilbertSpace, euclidean, l2_grid


class _Counter:
    def __init__(self):
        self._lock = threading.Lock()
        self._value = 0

    def increment(self):
        with self._lock:
            self._value += 1

    @property
    def value(self) -> int:
        return self._value


@dataclass(eq=False)
class Problem:
    """Find ``x* in C`` with ``<A x*, z - x*> >= 0`` for all ``z in C``.

    ``operator`` is the raw map; call :meth:`evaluate` (or the instance
    itself) for a counted evaluation and :meth:`project` for a counted
    projection onto ``feasible_set``.
    """

    space: HilbertSpace
    operator: Callable[[np.ndarray], np.ndarray]
    feasible_set: FeasibleSet
    lipschitz: float | None = None
    known_solution: np.ndarray | None = None
    name: str = "problem"
    _evals: _Counter = field(default_factory=_Counter, repr=False)
    _projections: _Counter = field(default_factory=_Counter, repr=False)

    @property
    def eval_count(self) -> int:
        return self._evals.value

    @property
    def projection_count(self) -> int:
        return self._projections.value

    def evaluate(self, x) -> np.ndarray:
        self._evals.increment()
        return np.asarray(self.operator(x), dtype=float)

    __call__ = evaluate

    def project(self, x) -> np.ndarray:
        self._projections.increment()
        return self.feasible_set.project(x)

    def clone(self) -> Problem:
        """Same problem data with fresh counters."""
        return Problem(self.space, self.operator, self.feasible_set,
                       self.lipschitz, self.known_solution, self.name)


# ---------------------------------------------------------------- example 1

def _cubic_root(r: float) -> float:
    """Unique real root of ``rho**3 + rho = r`` for ``r >= 0``."""
    if r == 0.0:
        return 0.0
    # min(r, r**(1/3)) bounds the root from above; Newton then decreases
    # monotonically on this convex branch
    rho = min(r, np.cbrt(r))
    for _ in range(100):
        res = rho ** 3 + rho - r
        if abs(res) <= 1e-14 * max(1.0, r):
            break
        step = res / (3 * rho * rho + 1)
        if step <= 0:
            break
        rho -= step
    return rho


def quartic_prox(x) -> np.ndarray:
    """``argmin_y ||y||^4/4 + ||x - y||^2/2`` (Euclidean norm)."""
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        return np.zeros_like(x)
    return (_cubic_root(r) / r) * x


def eval_example1(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return quartic_prox(x) / (float(np.dot(x, x)) + 1.0)


def example1_problem(m: int) -> Problem:
    """Pseudomonotone, non-monotone operator on the box ``[-5, 5]^m``.

    The operator is a positive multiple of ``x`` and vanishes only at 0,
    so the unique solution is the origin.
    """
    space = euclidean(m)
    return Problem(space, eval_example1, Box(space, -5.0, 5.0),
                   known_solution=np.zeros(m), name=f"example1(m={m})")


# ---------------------------------------------------------------- example 2

@dataclass(frozen=True, eq=False)
class AffineOperator:
    """``x -> G x + g`` with ``G = B B^T + M + E``."""

    G: np.ndarray
    g: np.ndarray
    B: np.ndarray | None = None
    M: np.ndarray | None = None
    E: np.ndarray | None = None

    def __call__(self, x):
        return self.G @ x + self.g

    @classmethod
    def random(cls, m: int, rng: np.random.Generator) -> AffineOperator:
        B = rng.uniform(-2.0, 2.0, (m, m))
        upper = np.triu(rng.uniform(-2.0, 2.0, (m, m)), k=1)
        M = upper - upper.T
        E = np.diag(rng.uniform(0.0, 2.0, m))
        return cls(B @ B.T + M + E, np.zeros(m), B, M, E)


def spectral_norm(G, max_iter: int = 200, rtol: float = 1e-12, seed: int = 0) -> float:
    """Largest singular value of ``G`` by power iteration on ``G^T G``."""
    G = np.asarray(G, dtype=float)
    v = make_rng(seed, stream=99).standard_normal(G.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        w = G.T @ (G @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        new = np.sqrt(nw)
        if abs(new - sigma) <= rtol * new:
            sigma = new
            break
        sigma = new
    return float(np.linalg.norm(G @ v))


def generate_example2(m: int, seed: int) -> Problem:
    """Random strongly pseudomonotone affine problem on ``[-2, 5]^m``.

    ``B`` and the strict upper triangle of ``M`` are uniform in [-2, 2]
    (``M`` is then antisymmetrized, so its entries stay in [-2, 2]); the
    diagonal of ``E`` is uniform in [0, 2]; ``g = 0``. The solution is 0.
    """
    if m < 1:
        raise ValueError("m must be positive")
    op = AffineOperator.random(m, make_rng(seed))
    space = euclidean(m)
    return Problem(space, op, Box(space, -2.0, 5.0),
                   lipschitz=spectral_norm(op.G), known_solution=np.zeros(m),
                   name=f"example2(m={m},seed={seed})")


# ---------------------------------------------------------------- example 3

def eval_softsphere(Bcap: float, x, space: HilbertSpace) -> np.ndarray:
    """``(Bcap - ||x||) x`` in the norm of ``space``."""
    x = space.check(x)
    return (Bcap - space.norm(x)) * x


def example3_problem(N: int = 200, Bcap: float = 1.5, radius: float = 1.0,
                     m_scalar: float = 1.1) -> Problem:
    """Pseudomonotone, non-monotone operator on the unit ball of L2[0, 1].

    Requires ``Bcap/(m_scalar + 1) < radius/m_scalar < radius < Bcap``.
    """
    if not (Bcap / (m_scalar + 1) < radius / m_scalar < radius < Bcap and m_scalar > 1):
        raise ValueError("need B/(m+1) < b/m < b < B with m > 1")
    space = l2_grid(N)
    return Problem(space, lambda x: eval_softsphere(Bcap, x, space),
                   Ball(space, 0.0, radius), known_solution=space.zeros(),
                   name="example3")


EXAMPLE3_STARTS = {
    "t2": lambda t: t ** 2,
    "cos": np.cos,
    "sin2t": lambda t: np.sin(2 * t),
    "exp2": lambda t: 2.0 ** t,
}


def monotonicity_gap(problem: Problem, x, y) -> float:
    """``<A x - A y, x - y>``; negative values witness non-monotonicity."""
    sp = problem.space
    return sp.inner(problem.operator(x) - problem.operator(y), np.asarray(x) - np.asarray(y))


# ---------------------------------------------------------------- diagnostics

def minty_certificate(problem: Problem, candidate, samples: int,
                      rng: np.random.Generator) -> float:
    """Smallest ``<A x, x - candidate>`` over ``samples`` points drawn from C.

    A negative value proves ``candidate`` is not a solution; a nonnegative
    value is only consistent with it being one.
    """
    candidate = problem.space.check(candidate)
    if not problem.feasible_set.contains(candidate, 1e-8):
        raise ValueError("candidate lies outside the feasible set")
    best = np.inf
    for _ in range(samples):
        x = problem.feasible_set.sample(rng)
        best = min(best, problem.space.inner(problem.evaluate(x), x - candidate))
    return float(best)
