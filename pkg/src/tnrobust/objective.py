"""Infidelities, their exact gradients, and ensemble averages.

For a sample with overlap ``O`` (state overlap, or trace overlap divided by
``2**n``) the infidelity is ``1 - |O|**2`` and its derivative with respect to
an amplitude ``theta`` is ``-2 Re(conj(O) dO/dtheta)``.

Inside slice ``l`` the X rotations act last, so for ``x[j, l]``::

    dO = -i dt <b[l+1]| X_j |a[l+1]>

while the Y derivative has to be inserted before the X layer::

    dO = -i dt <Xlayer^dagger b[l+1]| Y_j |a_mid[l]>
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .model import ControlProblem, CouplingPattern, ParasiticSample, PulseSchedule
from .mpo import MPO, trace_overlap
from .mps import MPS, TensorChain
from .tebd import GradientTape, propagate, propagate_backward
from .tensor_core import X, Y, NumericalError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ObjectiveValue:
    mean_infidelity: float
    per_sample: np.ndarray
    overlaps: np.ndarray
    discarded: np.ndarray

    @property
    def std_error(self) -> float:
        m = len(self.per_sample)
        if m < 2:
            return 0.0
        return float(np.std(self.per_sample, ddof=1) / np.sqrt(m))


@dataclass(frozen=True)
class GradientField:
    gx: np.ndarray
    gy: np.ndarray

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.gx.ravel(), self.gy.ravel()])


def _scale(chain: TensorChain) -> float:
    return 2.0 ** (-chain.n * chain.overlap_scale_power)


def gate_infidelity(u: MPO, target: MPO) -> float:
    return 1.0 - abs(trace_overlap(u, target)) ** 2


def state_infidelity(psi: MPS, target: MPS) -> float:
    return 1.0 - abs(target.inner(psi)) ** 2


def per_gate_infidelity(mean_chi: float, n: int, gate_span: int = 1) -> float:
    """Infidelity per gate when ``n / gate_span`` gates run in parallel."""
    if gate_span not in (1, 2):
        raise ValueError(f"gate_span must be 1 or 2, got {gate_span}")
    if not 0 <= mean_chi < 1:
        raise ValueError(f"mean infidelity must lie in [0, 1), got {mean_chi}")
    return 1.0 - (1.0 - mean_chi) ** (gate_span / n)


def overlap_gradient(tape: GradientTape, schedule: PulseSchedule) -> tuple[complex, np.ndarray]:
    """``O`` and ``dO`` with shape ``(n, L, 2)`` (last axis: x, y)."""
    if tape is None or tape.backward is None:
        raise ValueError("tape with forward and backward passes required")
    n, L, dt = schedule.n, schedule.bins, schedule.dt
    final = tape.forward[-1]
    scale = _scale(final)
    o = tape.backward[-1].inner(final) * scale
    grad = np.zeros((n, L, 2), dtype=complex)
    if L == 0:
        return o, grad
    px, py = final.lift_one(X), final.lift_one(Y)
    for l in range(L):
        b = tape.backward[l + 1]
        grad[:, l, 0] = b.insertions(tape.forward[l + 1], px)
        for j, g in enumerate(tape.circuits[l].x_gates):
            b = b.apply_local(final.lift_one(g.conj().T), j)
        grad[:, l, 1] = b.insertions(tape.intra[l], py)
    grad *= -1j * dt * scale
    return o, grad


def sample_overlap(
    initial: TensorChain,
    target: TensorChain,
    schedule: PulseSchedule,
    coupling: CouplingPattern,
    sample: ParasiticSample,
    d_max: int,
    cutoff: float,
    with_grad: bool = True,
) -> tuple[complex, np.ndarray | None, float]:
    """Overlap ``<target|U|initial>`` for one sample, optionally with ``dO``."""
    final, tape, disc = propagate(initial, schedule, coupling, sample, d_max, cutoff, keep_tape=with_grad)
    if not with_grad:
        return target.inner(final) * _scale(final), None, disc
    tape.backward, tape.backward_discarded = propagate_backward(
        target, schedule, coupling, sample, d_max, cutoff, circuits=tape.circuits
    )
    o, grad = overlap_gradient(tape, schedule)
    return o, grad, disc


def _job(args):
    initial, target, schedule, coupling, sample, d_max, cutoff, with_grad, substeps = args
    fine = schedule.refine(substeps)
    o, grad, disc = sample_overlap(initial, target, fine, coupling, sample, d_max, cutoff, with_grad)
    if grad is not None and substeps > 1:
        grad = grad.reshape(schedule.n, schedule.bins, substeps, 2).sum(axis=2)
    return o, grad, disc


def _run_samples(
    problem: ControlProblem,
    schedule: PulseSchedule,
    samples: Sequence[ParasiticSample],
    with_grad: bool,
    workers: int,
):
    if not samples:
        raise ValueError("empty sample list")
    if schedule.n != problem.n:
        raise ValueError(f"schedule has {schedule.n} qubits, problem {problem.n}")
    jobs = [
        (problem.initial, problem.target, schedule, problem.coupling, s,
         problem.d_max, problem.cutoff, with_grad, problem.substeps)
        for s in samples
    ]
    results = []
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_job, job) for job in jobs]
            for k, fut in enumerate(futures):
                try:
                    results.append(fut.result())
                except Exception as exc:
                    raise NumericalError(f"sample {k} failed: {exc}") from exc
    else:
        for k, job in enumerate(jobs):
            try:
                results.append(_job(job))
            except Exception as exc:
                raise NumericalError(f"sample {k} failed: {exc}") from exc
    return results


def _objective(results) -> ObjectiveValue:
    overlaps = np.array([r[0] for r in results], dtype=complex)
    per = 1.0 - np.abs(overlaps) ** 2
    return ObjectiveValue(
        mean_infidelity=float(np.mean(per)),
        per_sample=per,
        overlaps=overlaps,
        discarded=np.array([r[2] for r in results]),
    )


def ensemble_infidelity(
    problem: ControlProblem,
    schedule: PulseSchedule,
    samples: Sequence[ParasiticSample],
    workers: int = 1,
) -> ObjectiveValue:
    """Mean infidelity over ``samples`` without gradients."""
    return _objective(_run_samples(problem, schedule, samples, False, workers))


def infidelity_gradient(
    problem: ControlProblem,
    schedule: PulseSchedule,
    samples: Sequence[ParasiticSample],
    workers: int = 1,
) -> tuple[ObjectiveValue, GradientField]:
    """Mean infidelity and its exact gradient; samples are reduced in list order."""
    results = _run_samples(problem, schedule, samples, True, workers)
    value = _objective(results)
    gx = np.zeros((schedule.n, schedule.bins))
    gy = np.zeros((schedule.n, schedule.bins))
    for o, dO, _ in results:
        d = -2.0 * np.real(np.conj(o) * dO)
        gx += d[:, :, 0]
        gy += d[:, :, 1]
    m = len(results)
    return value, GradientField(gx / m, gy / m)


def make_objective(
    problem: ControlProblem,
    template: PulseSchedule,
    samples: Sequence[ParasiticSample],
    workers: int = 1,
) -> Callable[[np.ndarray], tuple[float, np.ndarray]]:
    """Flat-vector ``(value, gradient)`` callback for the optimizer."""

    def fun(v: np.ndarray) -> tuple[float, np.ndarray]:
        value, grad = infidelity_gradient(problem, template.with_vector(v), samples, workers)
        return value.mean_infidelity, grad.to_vector()

    return fun


def finite_difference_gradient(
    f: Callable[[np.ndarray], float], v: np.ndarray, step: float = 1e-5
) -> np.ndarray:
    """Central differences of a scalar function."""
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    for k in range(v.size):
        e = np.zeros_like(v)
        e[k] = step
        out[k] = (f(v + e) - f(v - e)) / (2 * step)
    return out


def relative_error(analytic: np.ndarray, reference: np.ndarray) -> float:
    """Largest componentwise deviation relative to the reference's scale.

    Computes ``max_k |a_k - f_k| / max_k |f_k|``. Normalizing by the largest
    component rather than by each ``|f_k|`` keeps components that are zero up
    to the finite-difference noise from dominating. An all-zero reference
    falls back to the absolute error.
    """
    analytic = np.asarray(analytic)
    reference = np.asarray(reference)
    if reference.size == 0:
        return 0.0
    scale = float(np.max(np.abs(reference)))
    err = float(np.max(np.abs(analytic - reference)))
    return err / scale if scale > 0 else err


def gradient_check(
    problem: ControlProblem,
    schedule: PulseSchedule,
    samples: Sequence[ParasiticSample],
    step: float = 1e-5,
) -> float:
    """Max relative error of the analytic gradient against central differences."""
    _, grad = infidelity_gradient(problem, schedule, samples)
    v0 = schedule.to_vector()

    def f(v):
        return ensemble_infidelity(problem, schedule.with_vector(v), samples).mean_infidelity

    fd = finite_difference_gradient(f, v0, step)
    return relative_error(grad.to_vector(), fd)
