"""Projection-type solvers for pseudomonotone variational inequalities.

The main method is the self-adaptive inertial viscosity Tseng extragradient
iteration (:func:`tseng_inertial_step`)::

    s_n     = x_n + delta_n (x_n - x_{n-1})
    y_n     = P_C(s_n - gamma_n A s_n)
    z_n     = y_n - gamma_n (A y_n - A s_n)
    x_{n+1} = phi_n f(z_n) + (1 - phi_n) z_n

with the inertia ``delta_n`` from :func:`inertia_coefficient` and the step
``gamma_{n+1}`` from :func:`step_size_update`. It needs one projection and
two operator evaluations per iteration and no Lipschitz constant.

Baselines: projected gradient (PGM), projected reflected gradient (PRGM),
extragradient (EGM), Tseng's forward-backward-forward (TEGM), subgradient
extragradient (SEGM), the Mann-type Tseng method with Armijo search
(MaTEGM) and the viscosity inertial subgradient extragradient method
(ViSEGM).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Callable, NamedTuple

import numpy as np

from .problems import Problem
from .rng import make_rng
from .sets import HalfSpace


class DivergenceError(RuntimeError):
    def __init__(self, iteration: int, trace: IterationTrace | None = None):
        super().__init__(f"non-finite iterate at iteration {iteration}")
        self.iteration = iteration
        self.trace = trace


class LineSearchError(RuntimeError):
    pass


class AlgorithmKind(str, Enum):
    TSENG_INERTIAL = "tseng_inertial"
    TSENG_VISCOSITY = "tseng_viscosity"
    VISEGM = "visegm"
    MATEGM = "mategm"
    PGM = "pgm"
    PRGM = "prgm"
    EGM = "egm"
    TEGM = "tegm"
    SEGM = "segm"

    @classmethod
    def parse(cls, name: str) -> AlgorithmKind:
        key = name.strip().lower().replace("-", "_")
        key = {"matsegm": "mategm", "alg1": "tseng_inertial"}.get(key, key)
        return cls(key)


class StopReason(str, Enum):
    TOLERANCE = "tolerance"
    MAX_ITERS = "max_iters"
    DIVERGENCE = "divergence"


# ---------------------------------------------------------------- configuration

@dataclass(frozen=True)
class PowerSchedule:
    """``n -> scale / (n + 1)**power``."""

    scale: float = 1.0
    power: float = 1.0

    def __call__(self, n: int) -> float:
        return self.scale / (n + 1) ** self.power


@dataclass(frozen=True)
class TauSchedule:
    """MaTEGM relaxation ``tau_n = factor * (1 - phi_n)``."""

    visc: Callable[[int], float]
    factor: float = 0.5

    def __call__(self, n: int) -> float:
        return self.factor * (1.0 - self.visc(n))


@dataclass(frozen=True)
class Scaling:
    """Contraction ``x -> coeff * x`` with modulus ``|coeff|``."""

    coeff: float

    def __call__(self, x):
        return self.coeff * np.asarray(x)

    @property
    def modulus(self) -> float:
        return abs(self.coeff)


def _check_contraction(f, rho: float, dim: int = 5, pairs: int = 100):
    if not 0 <= rho < 1:
        raise ValueError(f"contraction modulus must lie in [0, 1), got {rho}")
    rng = make_rng(0, stream=7)
    for _ in range(pairs):
        x, y = rng.standard_normal((2, dim)) * 3
        lhs = np.linalg.norm(np.asarray(f(x)) - np.asarray(f(y)))
        if lhs > rho * np.linalg.norm(x - y) + 1e-10:
            raise ValueError(f"map is not {rho}-contractive on sampled pairs")


@dataclass(frozen=True)
class SolverConfig:
    """Tunables of all solvers.

    Defaults are the benchmark settings: ``phi=0.8``, ``gamma1=1``,
    ``delta=0.3``, ``eps_n = 1/(n+1)^2``, ``phi_n = 1/(n+1)``,
    ``f(x) = 0.9 x``; MaTEGM uses ``alpha = ell = 0.5``, ``armijo_phi = 0.4``
    and ``tau_n = 0.5 (1 - phi_n)``. Fixed-step baselines use
    ``fixed_step`` or, when it is None, ``0.5 / L`` if the problem knows L.
    """

    delta: float = 0.3
    gamma1: float = 1.0
    phi: float = 0.8
    eps_schedule: Callable[[int], float] = PowerSchedule(1.0, 2.0)
    phi_schedule: Callable[[int], float] = PowerSchedule(1.0, 1.0)
    contraction: Callable = Scaling(0.9)
    contraction_modulus: float | None = None
    max_iters: int = 1000
    stop_tol: float = 0.0
    record_trace: bool = True
    time_iterations: bool = True
    fixed_step: float | None = None
    alpha: float = 0.5
    ell: float = 0.5
    armijo_phi: float = 0.4
    tau_schedule: Callable[[int], float] | None = None
    max_backtracks: int = 60

    def __post_init__(self):
        if not 0 < self.phi < 1:
            raise ValueError(f"phi must lie in (0, 1), got {self.phi}")
        if not self.gamma1 > 0:
            raise ValueError("gamma1 must be positive")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.max_iters < 0 or self.stop_tol < 0:
            raise ValueError("max_iters and stop_tol must be nonnegative")
        if not (self.alpha > 0 and 0 < self.ell < 1 and 0 < self.armijo_phi < 1):
            raise ValueError("need alpha > 0 and ell, armijo_phi in (0, 1)")
        if self.fixed_step is not None and not self.fixed_step > 0:
            raise ValueError("fixed_step must be positive")
        rho = self.contraction_modulus
        if rho is None:
            rho = getattr(self.contraction, "modulus", None)
            if rho is None:
                raise ValueError("contraction_modulus is required for a custom contraction")
            object.__setattr__(self, "contraction_modulus", float(rho))
        _check_contraction(self.contraction, self.contraction_modulus)
        if self.tau_schedule is None:
            object.__setattr__(self, "tau_schedule", TauSchedule(self.phi_schedule))

    def replace(self, **changes) -> SolverConfig:
        if "phi_schedule" in changes and "tau_schedule" not in changes:
            changes["tau_schedule"] = None
        if "contraction" in changes and "contraction_modulus" not in changes:
            changes["contraction_modulus"] = None
        return replace(self, **changes)


def default_config(**overrides) -> SolverConfig:
    return SolverConfig(**overrides)


def control_config(**overrides) -> SolverConfig:
    """Settings for the optimal-control examples."""
    base = dict(phi=0.1, gamma1=0.4, delta=0.3,
                eps_schedule=PowerSchedule(1e-4, 2.0),
                phi_schedule=PowerSchedule(1e-4, 1.0),
                contraction=Scaling(0.1), max_iters=1000, stop_tol=1e-4)
    base.update(overrides)
    return SolverConfig(**base)


CONFIG_FIELDS = tuple(f.name for f in fields(SolverConfig))


# ---------------------------------------------------------------- state, trace

@dataclass
class SolverState:
    n: int
    x_prev: np.ndarray
    x_cur: np.ndarray
    gamma: float


@dataclass
class StepRecord:
    """Step-local quantities of one iteration (``None`` if not used)."""

    x_next: np.ndarray
    s: np.ndarray
    gamma: float
    gamma_next: float
    delta: float = 0.0
    y: np.ndarray | None = None
    z: np.ndarray | None = None
    As: np.ndarray | None = None
    backtracks: int = 0


class TraceRow(NamedTuple):
    n: int
    D_n: float
    E_n: float
    gamma_n: float
    delta_n: float
    error: float
    op_evals: int
    elapsed_ns: int


TRACE_COLUMNS = TraceRow._fields


@dataclass
class IterationTrace:
    """Row ``n`` describes the step from ``x_n`` to ``x_{n+1}``.

    ``D_n = ||x_{n+1} - x_n||``, ``E_n`` is the natural residual at ``s_n``,
    ``error = ||x_{n+1} - x*||`` (NaN without a known solution),
    ``op_evals`` is cumulative and ``elapsed_ns`` is time since the start.
    """

    rows: list[TraceRow] = field(default_factory=list)
    x0: np.ndarray | None = None
    x1: np.ndarray | None = None

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def column(self, name: str) -> np.ndarray:
        i = TRACE_COLUMNS.index(name)
        return np.array([r[i] for r in self.rows])


class SolveResult(NamedTuple):
    x: np.ndarray
    trace: IterationTrace
    reason: StopReason


# ---------------------------------------------------------------- parameter rules

def inertia_coefficient(n: int, x_n, x_prev, eps_n: float, delta: float, space=None) -> float:
    """Inertia ``delta_n = min(eps_n / ||x_n - x_{n-1}||, delta)``.

    Returns ``delta`` when the two iterates coincide. Guarantees
    ``delta_n * ||x_n - x_{n-1}|| <= eps_n``.
    """
    diff = np.asarray(x_n, dtype=float) - np.asarray(x_prev, dtype=float)
    if not np.any(diff):
        return delta
    d = space.norm(diff) if space is not None else float(np.linalg.norm(diff))
    q = eps_n / d
    while q * d > eps_n:  # keep the bound exact after rounding
        q = np.nextafter(q, 0.0)
    return min(q, delta)


def step_size_update(gamma_n: float, phi: float, s, y, As, Ay, space=None) -> float:
    """Self-adaptive step ``min(phi ||s - y|| / ||A s - A y||, gamma_n)``.

    ``A s == A y`` is tested by exact componentwise equality.
    """
    dA = np.asarray(As, dtype=float) - np.asarray(Ay, dtype=float)
    if not np.any(dA):
        return gamma_n
    nrm = space.norm if space is not None else np.linalg.norm
    return min(phi * nrm(np.asarray(s) - np.asarray(y)) / nrm(dA), gamma_n)


def residuals(problem: Problem, s_n, gamma_n: float, x_n, x_prev, As=None):
    """Return ``(D_n, E_n)``.

    ``D_n = ||x_n - x_prev||`` and ``E_n = ||s_n - P_C(s_n - gamma_n A s_n)||``.
    Neither the operator evaluation (when ``As`` is not supplied) nor the
    projection touches the problem's counters.
    """
    sp = problem.space
    if As is None:
        As = problem.operator(s_n)
    s_n = np.asarray(s_n, dtype=float)
    E = sp.norm(s_n - problem.feasible_set.project(s_n - gamma_n * np.asarray(As)))
    return sp.dist(x_n, x_prev), E


def _finite(n, *arrays):
    for a in arrays:
        if a is not None and not np.all(np.isfinite(a)):
            raise DivergenceError(n)


def _viscosity(config: SolverConfig, n: int, z):
    phi_n = config.phi_schedule(n)
    return phi_n * np.asarray(config.contraction(z)) + (1 - phi_n) * z


# ---------------------------------------------------------------- main method

def tseng_inertial_step(state: SolverState, problem: Problem, config: SolverConfig,
                        inertial: bool = True):
    """One iteration of the inertial viscosity Tseng method.

    With ``inertial=False`` the inertia is switched off (``s_n = x_n``).
    """
    sp, n, x, g = problem.space, state.n, state.x_cur, state.gamma
    if inertial:
        d = inertia_coefficient(n, x, state.x_prev, config.eps_schedule(n), config.delta, sp)
    else:
        d = 0.0
    s = x + d * (x - state.x_prev)
    As = problem.evaluate(s)
    y = problem.project(s - g * As)
    Ay = problem.evaluate(y)
    z = y - g * (Ay - As)
    x_next = _viscosity(config, n, z)
    _finite(n, s, As, y, Ay, x_next)
    g_next = step_size_update(g, config.phi, s, y, As, Ay, sp)
    rec = StepRecord(x_next, s, g, g_next, d, y, z, As)
    return SolverState(n + 1, x, x_next, g_next), rec


# ---------------------------------------------------------------- baselines

def _fixed_step(problem: Problem, config: SolverConfig) -> float:
    if config.fixed_step is not None:
        return config.fixed_step
    if problem.lipschitz:
        return 0.5 / problem.lipschitz
    raise ValueError("fixed-step methods need config.fixed_step or a known Lipschitz constant")


def _pgm(state, problem, config):
    x, g = state.x_cur, _fixed_step(problem, config)
    Ax = problem.evaluate(x)
    x_next = problem.project(x - g * Ax)
    _finite(state.n, x_next)
    return SolverState(state.n + 1, x, x_next, g), StepRecord(x_next, x, g, g, As=Ax, y=x_next)


def _prgm(state, problem, config):
    x, g = state.x_cur, _fixed_step(problem, config)
    w = 2 * x - state.x_prev
    x_next = problem.project(x - g * problem.evaluate(w))
    _finite(state.n, x_next)
    return SolverState(state.n + 1, x, x_next, g), StepRecord(x_next, x, g, g)


def _egm(state, problem, config):
    x, g = state.x_cur, _fixed_step(problem, config)
    Ax = problem.evaluate(x)
    y = problem.project(x - g * Ax)
    x_next = problem.project(x - g * problem.evaluate(y))
    _finite(state.n, y, x_next)
    return SolverState(state.n + 1, x, x_next, g), StepRecord(x_next, x, g, g, y=y, As=Ax)


def _tegm(state, problem, config):
    x, g = state.x_cur, _fixed_step(problem, config)
    Ax = problem.evaluate(x)
    y = problem.project(x - g * Ax)
    x_next = y - g * (problem.evaluate(y) - Ax)
    _finite(state.n, y, x_next)
    return SolverState(state.n + 1, x, x_next, g), StepRecord(x_next, x, g, g, y=y, As=Ax)


def _subgradient_projection(problem, base, y, target):
    """Project ``target`` onto ``T = {w : <base - y, w - y> <= 0}``."""
    normal = base - y
    if not np.any(normal):
        return np.array(target, dtype=float)  # T is the whole space
    T = HalfSpace(problem.space, normal, problem.space.inner(normal, y))
    return T.project(target)


def _segm(state, problem, config):
    x, g = state.x_cur, _fixed_step(problem, config)
    Ax = problem.evaluate(x)
    w = x - g * Ax
    y = problem.project(w)
    x_next = _subgradient_projection(problem, w, y, x - g * problem.evaluate(y))
    _finite(state.n, y, x_next)
    return SolverState(state.n + 1, x, x_next, g), StepRecord(x_next, x, g, g, y=y, As=Ax)


def _visegm(state, problem, config):
    sp, n, x, g = problem.space, state.n, state.x_cur, state.gamma
    d = inertia_coefficient(n, x, state.x_prev, config.eps_schedule(n), config.delta, sp)
    s = x + d * (x - state.x_prev)
    As = problem.evaluate(s)
    w = s - g * As
    y = problem.project(w)
    Ay = problem.evaluate(y)
    z = _subgradient_projection(problem, w, y, s - g * Ay)
    x_next = _viscosity(config, n, z)
    _finite(n, s, As, y, Ay, x_next)
    g_next = step_size_update(g, config.phi, s, y, As, Ay, sp)
    return SolverState(n + 1, x, x_next, g_next), StepRecord(x_next, s, g, g_next, d, y, z, As)


def _mategm(state, problem, config):
    sp, n, x = problem.space, state.n, state.x_cur
    Ax = problem.evaluate(x)
    for q in range(config.max_backtracks + 1):
        g = config.alpha * config.ell ** q
        y = problem.project(x - g * Ax)
        Ay = problem.evaluate(y)
        _finite(n, y, Ay)
        if g * sp.norm(Ax - Ay) <= config.armijo_phi * sp.dist(x, y):
            break
    else:
        raise LineSearchError(f"Armijo search failed after {config.max_backtracks} "
                              f"reductions at iteration {n}")
    z = y - g * (Ay - Ax)
    phi_n, tau_n = config.phi_schedule(n), config.tau_schedule(n)
    x_next = (1 - phi_n - tau_n) * x + tau_n * z
    _finite(n, x_next)
    rec = StepRecord(x_next, x, g, g, y=y, z=z, As=Ax, backtracks=q)
    return SolverState(n + 1, x, x_next, g), rec


STEPS = {
    AlgorithmKind.TSENG_INERTIAL: tseng_inertial_step,
    AlgorithmKind.TSENG_VISCOSITY: lambda st, pr, cf: tseng_inertial_step(st, pr, cf, inertial=False),
    AlgorithmKind.VISEGM: _visegm,
    AlgorithmKind.MATEGM: _mategm,
    AlgorithmKind.PGM: _pgm,
    AlgorithmKind.PRGM: _prgm,
    AlgorithmKind.EGM: _egm,
    AlgorithmKind.TEGM: _tegm,
    AlgorithmKind.SEGM: _segm,
}


def baseline_step(kind, state: SolverState, problem: Problem, config: SolverConfig):
    """One iteration of the method named by ``kind``."""
    return STEPS[AlgorithmKind.parse(kind) if isinstance(kind, str) else kind](state, problem, config)


# ---------------------------------------------------------------- driver

def solve(problem: Problem, config: SolverConfig, algorithm="tseng_inertial",
          x0=None, x1=None, callback=None) -> SolveResult:
    """Iterate until ``||x_{n+1} - x_n|| <= stop_tol`` or ``max_iters`` steps.

    ``x0`` and ``x1`` are projected onto C first (uncounted); ``x0``
    defaults to ``x1``. ``callback(state, record, new_state)`` runs after
    every step. Raises :class:`DivergenceError` carrying the partial trace
    if an iterate becomes non-finite.
    """
    kind = AlgorithmKind.parse(algorithm) if isinstance(algorithm, str) else algorithm
    step = STEPS[kind]
    sp = problem.space
    if x1 is None:
        raise ValueError("an initial point x1 is required")
    x1 = problem.feasible_set.project(sp.check(x1))
    x0 = x1.copy() if x0 is None else problem.feasible_set.project(sp.check(x0))
    trace = IterationTrace(x0=x0.copy(), x1=x1.copy())
    state = SolverState(1, x0, x1, config.gamma1)
    known = problem.known_solution
    t0 = time.perf_counter_ns()

    for _ in range(config.max_iters):
        try:
            new, rec = step(state, problem, config)
        except DivergenceError as err:
            err.trace = trace
            raise
        if callback is not None:
            callback(state, rec, new)
        if config.record_trace:
            D, E = residuals(problem, rec.s, rec.gamma, rec.x_next, state.x_cur, As=rec.As)
            err = sp.dist(rec.x_next, known) if known is not None else float("nan")
            elapsed = time.perf_counter_ns() - t0 if config.time_iterations else 0
            trace.rows.append(TraceRow(state.n, D, E, rec.gamma, rec.delta, err,
                                       problem.eval_count, elapsed))
            done = D <= config.stop_tol
        else:
            done = sp.dist(rec.x_next, state.x_cur) <= config.stop_tol
        state = new
        if done:
            return SolveResult(state.x_cur, trace, StopReason.TOLERANCE)
    return SolveResult(state.x_cur, trace, StopReason.MAX_ITERS)
