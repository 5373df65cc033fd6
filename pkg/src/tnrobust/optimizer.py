"""L-BFGS minimization and warm-start ladders over system size and error magnitude."""

from __future__ import annotations

import logging
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import line_search
from scipy.optimize._linesearch import LineSearchWarning

from .model import ControlProblem, PulseSchedule, Task, build_problem
from .io import load_schedule, save_schedule
from .objective import ensemble_infidelity, make_objective
from .tensor_core import NumericalError

logger = logging.getLogger(__name__)

_CONVERGED = 1e-12

Objective = Callable[[np.ndarray], "tuple[float, np.ndarray]"]


@dataclass(frozen=True)
class OptimizerConfig:
    max_iters: int = 1000
    memory: int = 10
    grad_tol: float = 1e-9
    f_target: float | None = None
    c1: float = 1e-4
    c2: float = 0.9
    max_trials: int = 40
    amp_cap: float | None = None

    def __post_init__(self) -> None:
        if not 0 < self.c1 < self.c2 < 1:
            raise ValueError(f"need 0 < c1 < c2 < 1, got c1={self.c1}, c2={self.c2}")
        if self.memory < 1:
            raise ValueError("memory must be >= 1")


@dataclass
class IterationRecord:
    iteration: int
    value: float
    grad_norm: float
    step: float
    prev_value: float
    slope_start: float
    slope_end: float
    evaluations: int


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    history: list[IterationRecord]
    status: str
    evaluations: int

    @property
    def iterations(self) -> int:
        return len(self.history)


class _Cache:
    """Memoizes the last few ``(value, gradient)`` pairs so the line search
    can ask for ``f`` and ``f'`` separately at no extra cost."""

    def __init__(self, fun: Objective, size: int = 4):
        self.fun = fun
        self.size = size
        self.store: dict[bytes, tuple[float, np.ndarray]] = {}
        self.calls = 0

    def __call__(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        key = np.ascontiguousarray(x).tobytes()
        hit = self.store.get(key)
        if hit is not None:
            return hit
        f, g = self.fun(x)
        g = np.asarray(g, dtype=float)
        self.calls += 1
        if not np.isfinite(f) or not np.all(np.isfinite(g)) or g.shape != x.shape:
            raise NumericalError(f"objective returned non-finite or misshaped output at evaluation {self.calls}")
        if len(self.store) >= self.size:
            self.store.pop(next(iter(self.store)))
        self.store[key] = (float(f), g)
        return float(f), g


def _two_loop(g: np.ndarray, s_hist: list, y_hist: list) -> np.ndarray:
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(s_hist), reversed(y_hist)):
        rho = 1.0 / (y @ s)
        a = rho * (s @ q)
        alphas.append((rho, a))
        q -= a * y
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= (s @ y) / (y @ y)
    else:
        # no curvature yet: a unit-length first trial step, independent of |g|
        q /= max(np.linalg.norm(q), 1e-300)
    for (s, y), (rho, a) in zip(zip(s_hist, y_hist), reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return -q


def _wolfe_step(fval, fgrad, x, p, g, f, f_old_old, config: OptimizerConfig) -> float | None:
    with warnings.catch_warnings():
        # failure is reported through the ``None`` step and handled by the caller
        warnings.simplefilter("ignore", LineSearchWarning)
        alpha, *_ = line_search(
            fval, fgrad, x, p, gfk=g, old_fval=f, old_old_fval=f_old_old,
            c1=config.c1, c2=config.c2, maxiter=config.max_trials,
        )
    return alpha


def lbfgs_minimize(
    fun: Objective,
    x0: np.ndarray,
    config: OptimizerConfig = OptimizerConfig(),
    callback: Callable[[np.ndarray, IterationRecord], None] | None = None,
) -> OptimizeResult:
    """Minimize ``fun`` (returning value and gradient) from ``x0``.

    Steps satisfy the strong Wolfe conditions. A failed line search first
    retries along the steepest-descent direction with the memory cleared; if
    that also fails the best point so far is returned.
    """
    cache = _Cache(fun)
    x = np.array(x0, dtype=float)
    if config.amp_cap is not None:
        x = np.clip(x, -config.amp_cap, config.amp_cap)
    try:
        f, g = cache(x)
    except NumericalError as exc:
        raise NumericalError(f"iteration 0: {exc}") from exc
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    history: list[IterationRecord] = []
    f_old_old = None
    status = "max_iters"

    def fval(z):
        return cache(z)[0]

    def fgrad(z):
        return cache(z)[1]

    for it in range(1, config.max_iters + 1):
        gnorm = float(np.linalg.norm(g))
        if gnorm < config.grad_tol:
            status = "grad_tol"
            break
        if config.f_target is not None and f <= config.f_target:
            status = "f_target"
            break
        p = _two_loop(g, s_hist, y_hist)
        if p @ g >= 0:
            s_hist.clear()
            y_hist.clear()
            p = _two_loop(g, [], [])
        try:
            alpha = _wolfe_step(fval, fgrad, x, p, g, f, f_old_old, config)
            if alpha is None and s_hist:
                s_hist.clear()
                y_hist.clear()
                p = _two_loop(g, [], [])
                alpha = _wolfe_step(fval, fgrad, x, p, g, f, None, config)
        except NumericalError as exc:
            raise NumericalError(f"iteration {it}: {exc}") from exc
        if alpha is None:
            status = "line_search"
            break
        x_new = x + alpha * p
        if config.amp_cap is not None:
            x_new = np.clip(x_new, -config.amp_cap, config.amp_cap)
        f_new, g_new = cache(x_new)
        s, y = x_new - x, g_new - g
        if s @ y > 1e-14 * np.linalg.norm(s) * np.linalg.norm(y):
            s_hist.append(s)
            y_hist.append(y)
            if len(s_hist) > config.memory:
                s_hist.pop(0)
                y_hist.pop(0)
        rec = IterationRecord(
            iteration=it,
            value=f_new,
            grad_norm=float(np.linalg.norm(g_new)),
            step=float(alpha),
            prev_value=f,
            slope_start=float(g @ p),
            slope_end=float(g_new @ p),
            evaluations=cache.calls,
        )
        history.append(rec)
        if callback is not None:
            callback(x_new, rec)
        f_old_old, x, f, g = f, x_new, f_new, g_new
    else:
        status = "max_iters"
    return OptimizeResult(x=x, fun=f, grad=g, history=history, status=status, evaluations=cache.calls)


# -- initial guesses and warm starts ----------------------------------------


def extend_schedule(s: PulseSchedule, new_n: int) -> PulseSchedule:
    """Append qubits whose pulses copy the last existing row."""
    if new_n < s.n:
        raise ValueError(f"cannot shrink a schedule from {s.n} to {new_n} qubits")
    if new_n == s.n:
        return s
    extra = new_n - s.n
    x = np.vstack([s.x] + [s.x[-1:]] * extra)
    y = np.vstack([s.y] + [s.y[-1:]] * extra)
    return PulseSchedule(x, y, s.dt)


def cnot_seed_pulse(bins: int, duration: float, seed: int = 0, attempts: int = 20) -> PulseSchedule:
    """Two-qubit CNOT pulse under ZZ coupling ``g = 1``, found by restarts at n = 2."""
    problem = build_problem(Task.PARALLEL_CNOT, 2, 0.0, bins=bins, duration=duration, m=1)
    samples = problem.samples()
    fun = make_objective(problem, problem.schedule, samples)
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(attempts):
        v0 = rng.uniform(-2.0, 2.0, size=problem.schedule.to_vector().size)
        res = lbfgs_minimize(fun, v0, OptimizerConfig(max_iters=300, f_target=1e-12))
        if best is None or res.fun < best.fun:
            best = res
        if best.fun < 1e-10:
            break
    return problem.schedule.with_vector(best.x)


def initial_guess(problem: ControlProblem, seed: int = 0) -> PulseSchedule:
    """Task-specific start when no warm-start seed exists."""
    rng = np.random.default_rng(seed)
    sch = problem.schedule
    n, bins = sch.n, sch.bins
    if problem.task is Task.PARALLEL_X:
        amp = (np.pi / 2) / sch.total_time
        x = amp * (1 + 0.01 * rng.uniform(-1, 1, (n, bins)))
        y = 0.01 * amp * rng.uniform(-1, 1, (n, bins))
        return PulseSchedule(x, y, sch.dt)
    if problem.task is Task.PARALLEL_CNOT:
        pair = cnot_seed_pulse(bins, sch.total_time, seed)
        reps = n // 2
        return PulseSchedule(np.tile(pair.x, (reps, 1)), np.tile(pair.y, (reps, 1)), sch.dt)
    scale = 0.1 * problem.energy_scale
    return PulseSchedule(rng.uniform(-scale, scale, (n, bins)), rng.uniform(-scale, scale, (n, bins)), sch.dt)


# -- ladder -------------------------------------------------------------------


@dataclass
class LadderPlan:
    sizes: list[int]
    errors: list[float] = field(default_factory=lambda: [0.0, 0.01, 0.02, 0.03, 0.04, 0.05])

    def __post_init__(self) -> None:
        if not self.sizes or not self.errors:
            raise ValueError("ladder plan needs at least one size and one error value")
        for seq in (self.sizes, self.errors):
            if any(b <= a for a, b in zip(seq, seq[1:])):
                raise ValueError(f"ladder sequence must be strictly increasing: {seq}")


@dataclass
class LadderCell:
    n: int
    delta_j: float
    schedule: PulseSchedule
    value: float
    seed_value: float
    seed_source: str
    flagged: bool
    result: OptimizeResult | None


def _checkpoint_path(directory: Path, n: int, delta_j: float) -> Path:
    return directory / f"cell_n{n}_dj{delta_j:.4f}.json"


def save_checkpoint(path: Path, problem: ControlProblem, schedule: PulseSchedule, history, **extra) -> None:
    save_schedule(path, schedule, problem, history=[asdict(h) for h in history], **extra)


def ladder_optimize(
    plan: LadderPlan,
    task_factory: Callable[[int, float], ControlProblem],
    config: OptimizerConfig = OptimizerConfig(),
    checkpoint_dir: str | Path | None = None,
    workers: int = 1,
    seed: int = 0,
    improve_tol: float = 0.0,
) -> dict[tuple[int, float], LadderCell]:
    """Optimize every ``(n, delta_j)`` cell, warm-starting from its neighbours.

    A cell's candidate seeds are the ``(n - 1, delta_j)`` solution extended by
    one qubit and the ``(n, previous delta_j)`` solution; the one with the
    lower objective on the cell's own ensemble wins. Cells with no neighbours
    use :func:`initial_guess`. Finished cells are checkpointed and reused on
    rerun when their fingerprint matches.
    """
    cells: dict[tuple[int, float], LadderCell] = {}
    ckdir = Path(checkpoint_dir) if checkpoint_dir is not None else None
    for i, n in enumerate(plan.sizes):
        for k, dj in enumerate(plan.errors):
            problem = task_factory(n, dj)
            samples = problem.samples()
            path = _checkpoint_path(ckdir, n, dj) if ckdir else None
            if path is not None and path.exists():
                sched, rec = load_schedule(path)
                if rec.get("fingerprint") == problem.fingerprint() and rec.get("complete"):
                    logger.info("resuming cell n=%d dj=%g from %s", n, dj, path)
                    cells[(n, dj)] = LadderCell(
                        n, dj, sched, rec["value"], rec["seed_value"],
                        rec["seed_source"], rec["flagged"], None,
                    )
                    continue
            candidates = []
            if i > 0 and (plan.sizes[i - 1], dj) in cells:
                prev = cells[(plan.sizes[i - 1], dj)].schedule
                candidates.append((f"size n={plan.sizes[i - 1]}", extend_schedule(prev, n)))
            if k > 0:
                candidates.append((f"error dj={plan.errors[k - 1]}", cells[(n, plan.errors[k - 1])].schedule))
            if not candidates:
                candidates.append(("initial guess", initial_guess(problem, seed)))
            scored = [
                (ensemble_infidelity(problem, s, samples, workers).mean_infidelity, src, s)
                for src, s in candidates
            ]
            seed_value, source, start = min(scored, key=lambda t: t[0])
            fun = make_objective(problem, start, samples, workers)
            res = lbfgs_minimize(fun, start.to_vector(), config)
            schedule = start.with_vector(res.x)
            # a seed already at machine precision has nothing left to improve
            flagged = seed_value > _CONVERGED and not res.fun < seed_value - improve_tol
            if flagged:
                logger.warning("cell n=%d dj=%g did not improve on its seed (%g)", n, dj, seed_value)
            if res.fun > seed_value:
                schedule, value = start, seed_value
            else:
                value = res.fun
            cells[(n, dj)] = LadderCell(n, dj, schedule, value, seed_value, source, flagged, res)
            logger.info("cell n=%d dj=%g: %.3e -> %.3e (%s)", n, dj, seed_value, value, res.status)
            if path is not None:
                save_checkpoint(
                    path, problem, schedule, res.history, value=value, seed_value=seed_value,
                    seed_source=source, flagged=flagged, status=res.status,
                    delta_j=dj, seed=problem.ensemble.seed, complete=True,
                )
    return cells


def optimize_problem(
    problem: ControlProblem,
    config: OptimizerConfig = OptimizerConfig(),
    start: PulseSchedule | None = None,
    workers: int = 1,
    seed: int = 0,
) -> tuple[PulseSchedule, OptimizeResult]:
    """Single optimization on the problem's own ensemble."""
    start = start if start is not None else initial_guess(problem, seed)
    fun = make_objective(problem, start, problem.samples(), workers)
    res = lbfgs_minimize(fun, start.to_vector(), config)
    return start.with_vector(res.x), res

