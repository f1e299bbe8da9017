"""Terminal-cost optimal control with box-constrained controls, posed as a VI.

The control is piecewise constant on ``N`` uniform intervals of ``[0, T]``
and the state follows ``x' = A x + b u`` integrated by classical RK4 with a
fixed number of substeps per interval. The VI operator is the exact
gradient of the discretized objective ``J_N(u) = cost(x_N)``, obtained by
one forward and one adjoint sweep through the discrete integrator.
Controls live in R^N with the inner product ``(T/N) sum_k u_k v_k``, so
norms approximate the L2[0, T] norm; the operator is therefore the
gradient with respect to that inner product, ``dJ_N/du_k / (T/N)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .problems import Problem
from .sets import Box
from .solvers import DivergenceError
from .space import HilbertSpace


@dataclass(frozen=True, eq=False)
class ControlProblem:
    """Minimize ``cost(x(T))`` s.t. ``x' = A x + b u``, ``x(0) = x0``, ``lo <= u <= hi``."""

    dynamics_matrix: np.ndarray
    control_vector: np.ndarray
    horizon: float
    x0: np.ndarray
    terminal_cost: Callable[[np.ndarray], float]
    terminal_grad: Callable[[np.ndarray], np.ndarray]
    control_bounds: tuple[float, float] = (-1.0, 1.0)
    N: int = 100
    substeps: int = 4
    name: str = "control"
    _phi: np.ndarray = field(init=False, repr=False)
    _gam: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.dynamics_matrix, dtype=float))
        d = A.shape[0]
        if A.shape != (d, d):
            raise ValueError("dynamics matrix must be square")
        b = np.asarray(self.control_vector, dtype=float).reshape(d)
        x0 = np.asarray(self.x0, dtype=float).reshape(d)
        lo, hi = map(float, self.control_bounds)
        if not lo < hi:
            raise ValueError("control bounds need lo < hi")
        if self.N < 1 or self.substeps < 1 or not self.horizon > 0:
            raise ValueError("need N >= 1, substeps >= 1 and a positive horizon")
        for name, val in [("dynamics_matrix", A), ("control_vector", b),
                          ("x0", x0), ("control_bounds", (lo, hi))]:
            object.__setattr__(self, name, val)
        _check_gradient(self.terminal_cost, self.terminal_grad, d)
        # the interval map x -> phi x + gam u is affine, so probing it with
        # unit inputs recovers it exactly from the integrator itself
        phi = np.column_stack([self._interval(e, 0.0) for e in np.eye(d)])
        gam = self._interval(np.zeros(d), 1.0)
        object.__setattr__(self, "_phi", phi)
        object.__setattr__(self, "_gam", gam)

    @property
    def state_dim(self) -> int:
        return self.x0.size

    @property
    def dt(self) -> float:
        return self.horizon / self.N

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.N + 1)

    def _interval(self, x, uk):
        A, b = self.dynamics_matrix, self.control_vector
        h = self.dt / self.substeps

        def rhs(v):
            return A @ v + b * uk

        for _ in range(self.substeps):
            k1 = rhs(x)
            k2 = rhs(x + 0.5 * h * k1)
            k3 = rhs(x + 0.5 * h * k2)
            k4 = rhs(x + h * k3)
            x = x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        return x


def _check_gradient(cost, grad, dim, rtol=1e-6):
    rng = np.random.default_rng(12345)
    for _ in range(3):
        x = rng.uniform(-2, 2, dim)
        g = np.asarray(grad(x), dtype=float)
        fd = np.empty(dim)
        for i in range(dim):
            e = np.zeros(dim)
            e[i] = 1e-5
            fd[i] = (cost(x + e) - cost(x - e)) / 2e-5
        if np.max(np.abs(fd - g)) > rtol * max(1.0, np.max(np.abs(g))):
            raise ValueError("terminal-cost gradient fails the finite-difference check")


def _controls(problem: ControlProblem, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (problem.N,):
        raise ValueError(f"expected {problem.N} control values, got shape {u.shape}")
    return u


def simulate_state(problem: ControlProblem, u) -> np.ndarray:
    """States at the ``N + 1`` grid nodes, shape ``(N + 1, state_dim)``."""
    u = _controls(problem, u)
    states = np.empty((problem.N + 1, problem.state_dim))
    states[0] = x = problem.x0
    for k in range(problem.N):
        x = problem._interval(x, u[k])
        states[k + 1] = x
    if not np.all(np.isfinite(states)):
        raise DivergenceError(0)
    return states


def _forward(problem, u):
    phi, gam = problem._phi, problem._gam
    x = problem.x0
    for uk in u:
        x = phi @ x + gam * uk
    return x


def objective(problem: ControlProblem, u) -> float:
    return float(problem.terminal_cost(simulate_state(problem, u)[-1]))


def discrete_gradient(problem: ControlProblem, u) -> np.ndarray:
    """Gradient of ``J_N`` in the ``(T/N)``-weighted control inner product.

    Partial derivatives are ``dJ_N/du_k = dt * gradient[k]``.
    """
    u = _controls(problem, u)
    xN = _forward(problem, u)
    lam = np.asarray(problem.terminal_grad(xN), dtype=float)
    phiT, gam = problem._phi.T, problem._gam
    partials = np.empty(problem.N)
    for k in range(problem.N - 1, -1, -1):
        partials[k] = gam @ lam
        lam = phiT @ lam
    if not np.all(np.isfinite(partials)):
        raise DivergenceError(0)
    return partials / problem.dt


def control_space(problem: ControlProblem) -> HilbertSpace:
    return HilbertSpace(np.full(problem.N, problem.dt),
                        nodes=(np.arange(problem.N) + 0.5) * problem.dt)


def build_vi_problem(problem: ControlProblem) -> Problem:
    space = control_space(problem)
    lo, hi = problem.control_bounds
    return Problem(space, lambda u: discrete_gradient(problem, u), Box(space, lo, hi),
                   name=problem.name)


# ---------------------------------------------------------------- presets

def example41_problem(N: int = 100) -> ControlProblem:
    """Harmonic oscillator on [0, 3 pi]: minimize ``x2(3 pi)``."""
    return ControlProblem(
        dynamics_matrix=[[0.0, 1.0], [-1.0, 0.0]], control_vector=[0.0, 1.0],
        horizon=3 * np.pi, x0=[0.0, 0.0],
        terminal_cost=lambda x: x[1], terminal_grad=lambda x: np.array([0.0, 1.0]),
        N=N, name="control41")


def example42_problem(N: int = 100) -> ControlProblem:
    """Double integrator on [0, 2]: minimize ``-x1(2) + x2(2)^2``."""
    return ControlProblem(
        dynamics_matrix=[[0.0, 1.0], [0.0, 0.0]], control_vector=[0.0, 1.0],
        horizon=2.0, x0=[0.0, 0.0],
        terminal_cost=lambda x: -x[0] + x[1] ** 2,
        terminal_grad=lambda x: np.array([-1.0, 2.0 * x[1]]),
        N=N, name="control42")


def example41_optimal(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    h = np.pi / 2
    plus = (t < h) | ((t > 3 * h) & (t < 5 * h))
    return np.where(plus, 1.0, -1.0)


def example42_optimal(t) -> np.ndarray:
    return np.where(np.asarray(t, dtype=float) < 1.2, 1.0, -1.0)


EXACT_SWITCHES = {"control41": (np.pi / 2, 3 * np.pi / 2, 5 * np.pi / 2),
                  "control42": (1.2,)}


def switching_times(u, horizon: float) -> list[float]:
    """Times where the sign of a piecewise-constant control flips.

    Cells with ``|u| < 0.5`` are treated as undecided and skipped; each
    switch is reported halfway between the centres of the two decided
    cells on either side of it.
    """
    u = np.asarray(u, dtype=float)
    h = horizon / u.size
    centres = (np.arange(u.size) + 0.5) * h
    keep = np.abs(u) >= 0.5
    c, sgn = centres[keep], np.sign(u[keep])
    flips = np.nonzero(sgn[1:] != sgn[:-1])[0]
    return [float(0.5 * (c[i] + c[i + 1])) for i in flips]


def write_trajectory_csv(problem: ControlProblem, u, path) -> None:
    """CSV with columns ``t,u,x1,x2,...`` at the grid nodes.

    The control value at node ``k`` is that of interval ``k``; the last
    node repeats the final interval.
    """
    u = _controls(problem, u)
    states = simulate_state(problem, u)
    uu = np.append(u, u[-1])
    path = Path(path)
    header = ["t", "u"] + [f"x{i + 1}" for i in range(problem.state_dim)]
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for t, uk, x in zip(problem.grid(), uu, states):
                w.writerow([f"{v:.17g}" for v in (t, uk, *x)])
    except OSError as exc:
        raise OSError(f"cannot write trajectory to {path}: {exc}") from exc
