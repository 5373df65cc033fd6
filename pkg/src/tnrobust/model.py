"""Control problems: pulses, couplings, parasitic ensembles and targets.

Units: the main energy scale is 1. For the parallel-X gate this is the
amplitude ``x`` of the reference pi pulse, so ``tau_pi = pi / 2``; for the
coupling-driven tasks it is ``g``, so ``tau_g = 2 pi``. Parasitic strengths are
quoted as fractions of that scale.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any

import numpy as np

from .mpo import MPO, identity_mpo, parallel_cnot_mpo, parallel_x_mpo
from .mps import MPS, ghz_state, product_state
from .tensor_core import I2, X, Y, Z

TAU_PI = np.pi / 2
TAU_G = 2 * np.pi
DEFAULT_CUTOFF = 1e-12
VERIFY_SEED_OFFSET = 1_000_003


class Task(str, enum.Enum):
    PARALLEL_X = "parallel_x"
    PARALLEL_CNOT = "parallel_cnot"
    GHZ = "ghz"
    HEISENBERG = "heisenberg"

    @property
    def is_gate(self) -> bool:
        return self in (Task.PARALLEL_X, Task.PARALLEL_CNOT)

    @property
    def gate_span(self) -> int:
        return 2 if self is Task.PARALLEL_CNOT else 1


@dataclass(frozen=True, eq=False)
class PulseSchedule:
    """Piecewise-constant amplitudes on the X and Y quadratures.

    ``x[j, l]`` and ``y[j, l]`` drive qubit ``j`` during bin ``l`` of width ``dt``.
    """

    x: np.ndarray
    y: np.ndarray
    dt: float

    def __post_init__(self) -> None:
        x = np.array(self.x, dtype=float, ndmin=2)
        y = np.array(self.y, dtype=float, ndmin=2)
        if x.shape != y.shape:
            raise ValueError(f"x and y shapes differ: {x.shape} vs {y.shape}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("pulse amplitudes must be finite")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def bins(self) -> int:
        return self.x.shape[1]

    @property
    def total_time(self) -> float:
        return self.bins * self.dt

    @classmethod
    def zeros(cls, n: int, bins: int, duration: float) -> PulseSchedule:
        if bins < 1:
            raise ValueError("use PulseSchedule(x, y, dt) directly for an empty schedule")
        return cls(np.zeros((n, bins)), np.zeros((n, bins)), duration / bins)

    def to_vector(self) -> np.ndarray:
        """Flat parameters: x row-major (qubit, bin), then y."""
        return np.concatenate([self.x.ravel(), self.y.ravel()])

    def with_vector(self, v: np.ndarray) -> PulseSchedule:
        v = np.asarray(v, dtype=float)
        size = self.x.size
        if v.size != 2 * size:
            raise ValueError(f"expected {2 * size} parameters, got {v.size}")
        return PulseSchedule(v[:size].reshape(self.x.shape), v[size:].reshape(self.x.shape), self.dt)

    def refine(self, substeps: int) -> PulseSchedule:
        """Split every bin into ``substeps`` Trotter slices with the same amplitudes."""
        if substeps == 1:
            return self
        return PulseSchedule(
            np.repeat(self.x, substeps, axis=1), np.repeat(self.y, substeps, axis=1), self.dt / substeps
        )

    def clipped(self, cap: float | None) -> PulseSchedule:
        if cap is None:
            return self
        return PulseSchedule(np.clip(self.x, -cap, cap), np.clip(self.y, -cap, cap), self.dt)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.x).tobytes())
        h.update(np.ascontiguousarray(self.y).tobytes())
        h.update(np.float64(self.dt).tobytes())
        return h.hexdigest()


@dataclass(frozen=True, eq=False)
class CouplingPattern:
    """Tunable ZZ strengths ``g[j]`` on bond ``(j, j + 1)``, constant in time."""

    g: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "g", np.asarray(self.g, dtype=float).reshape(-1))

    @classmethod
    def alternating(cls, n: int, g: float = 1.0) -> CouplingPattern:
        """``g`` on bonds (0,1), (2,3), ...; zero in between."""
        return cls(np.array([g if j % 2 == 0 else 0.0 for j in range(n - 1)]))

    @classmethod
    def uniform(cls, n: int, g: float = 1.0) -> CouplingPattern:
        return cls(np.full(n - 1, float(g)))

    @classmethod
    def off(cls, n: int) -> CouplingPattern:
        return cls(np.zeros(n - 1))


@dataclass(frozen=True, eq=False)
class ParasiticSample:
    """One realization of the per-bond ``J^x, J^y, J^z`` strengths."""

    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> ParasiticSample:
        z = np.zeros(n - 1)
        return cls(z, z.copy(), z.copy())

    def as_array(self) -> np.ndarray:
        return np.stack([self.jx, self.jy, self.jz])


@dataclass(frozen=True)
class EnsembleSpec:
    """Uniform parasitic ensemble on ``[-delta_j, delta_j]``.

    Attributes:
        delta_j: Maximum error magnitude.
        m: Number of samples; ``None`` means ``2 * n_J``.
        seed: Base seed of the counter-based stream.
    """

    delta_j: float
    m: int | None = None
    seed: int = 0

    def size(self, n: int) -> int:
        return self.m if self.m is not None else 2 * n_parasitic_terms(n)

    def verification(self, factor: int = 5, n: int | None = None) -> EnsembleSpec:
        """Larger, disjointly seeded ensemble for validation."""
        if self.m is None and n is None:
            raise ValueError("need n to size the verification ensemble")
        m = self.size(n) if n is not None else self.m
        return EnsembleSpec(self.delta_j, factor * m, self.seed + VERIFY_SEED_OFFSET)


def n_parasitic_terms(n: int) -> int:
    return 3 * (n - 1)


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Philox4x64 stream for sample ``index``: keyed by ``SeedSequence(seed, spawn_key=(index,))``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def draw_sample(spec: EnsembleSpec, n: int, index: int) -> ParasiticSample:
    rng = sample_rng(spec.seed, index)
    j = rng.uniform(-spec.delta_j, spec.delta_j, size=(3, n - 1))
    if spec.delta_j == 0:
        j = np.zeros_like(j)
    return ParasiticSample(j[0], j[1], j[2])


def sample_ensemble(spec: EnsembleSpec, n: int) -> list[ParasiticSample]:
    """Deterministic i.i.d. uniform draws, one independent substream per sample."""
    if spec.delta_j < 0:
        raise ValueError(f"delta_j must be non-negative, got {spec.delta_j}")
    m = spec.size(n)
    if m < 1:
        raise ValueError(f"ensemble size must be >= 1, got {m}")
    return [draw_sample(spec, n, s) for s in range(m)]


def heisenberg_mpo(n: int) -> MPO:
    """``sum_j X_j X_{j+1} + Y_j Y_{j+1} + Z_j Z_{j+1}`` with bond dimension 5.

    Bulk tensor in lower-triangular form with states
    ``(done, X, Y, Z, start)``::

        [[1, 0, 0, 0, 0],
         [X, 0, 0, 0, 0],
         [Y, 0, 0, 0, 0],
         [Z, 0, 0, 0, 0],
         [0, X, Y, Z, 1]]
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    w = np.zeros((5, 5, 2, 2), dtype=complex)  # (left, right, out, in)
    w[0, 0] = I2
    w[4, 4] = I2
    for k, p in enumerate((X, Y, Z), start=1):
        w[k, 0] = p
        w[4, k] = p
    w = w.transpose(0, 3, 2, 1)  # (left, in, out, right)
    cores = [w[4:5]] + [w] * (n - 2) + [w[:, :, :, 0:1]]
    return MPO(tuple(c.copy() for c in cores))


@dataclass(frozen=True, eq=False)
class ControlProblem:
    """Everything needed to evaluate one robust control task.

    ``schedule`` fixes the bin layout and doubles as the default starting point.
    """

    task: Task
    n: int
    coupling: CouplingPattern
    schedule: PulseSchedule
    ensemble: EnsembleSpec
    d_max: int
    cutoff: float = DEFAULT_CUTOFF
    substeps: int = 1
    energy_scale: float = 1.0
    target_d_max: int = 20
    amp_cap: float | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def tau_g(self) -> float:
        return TAU_G / self.energy_scale

    @property
    def time_unit(self) -> tuple[str, float]:
        return ("tau_pi", TAU_PI) if self.task is Task.PARALLEL_X else ("tau_g", self.tau_g)

    def samples(self) -> list[ParasiticSample]:
        """The optimization ensemble; collapses to one noiseless member when ``delta_j == 0``."""
        if self.ensemble.delta_j == 0:
            return [ParasiticSample.zeros(self.n)]
        return sample_ensemble(self.ensemble, self.n)

    def verification_samples(self, factor: int = 5) -> list[ParasiticSample]:
        if self.ensemble.delta_j == 0:
            return [ParasiticSample.zeros(self.n)]
        return sample_ensemble(self.ensemble.verification(factor, self.n), self.n)

    @cached_property
    def initial(self) -> MPS | MPO:
        if self.task.is_gate:
            return identity_mpo(self.n)
        return product_state([0] * self.n)

    @cached_property
    def target(self) -> MPS | MPO:
        if self.task is Task.PARALLEL_X:
            return parallel_x_mpo(self.n)
        if self.task is Task.PARALLEL_CNOT:
            return parallel_cnot_mpo(self.n)
        if self.task is Task.GHZ:
            return ghz_state(self.n)
        from .dmrg import dmrg_ground_state

        psi, _ = dmrg_ground_state(heisenberg_mpo(self.n), d_max=self.target_d_max)
        return psi

    def with_delta_j(self, delta_j: float) -> ControlProblem:
        return replace(self, ensemble=replace(self.ensemble, delta_j=delta_j))

    def describe(self) -> dict[str, Any]:
        return {
            "task": self.task.value,
            "n": self.n,
            "g": [float(v) for v in self.coupling.g],
            "bins": self.schedule.bins,
            "dt": self.schedule.dt,
            "delta_j": self.ensemble.delta_j,
            "m": self.ensemble.size(self.n),
            "seed": self.ensemble.seed,
            "d_max": self.d_max,
            "cutoff": self.cutoff,
            "substeps": self.substeps,
            "target_d_max": self.target_d_max if self.task is Task.HEISENBERG else None,
        }

    def fingerprint(self) -> str:
        """Hash of the task definition; ignores ensemble size and seed so a
        schedule can be re-evaluated on any ensemble of the same task."""
        d = self.describe()
        for key in ("delta_j", "m", "seed"):
            d.pop(key)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


_DEFAULTS = {
    # (duration in the task's time unit, bins, d_max); callables take n
    Task.PARALLEL_X: (lambda n: TAU_PI, lambda n: 10, 20),
    Task.PARALLEL_CNOT: (lambda n: TAU_G / 2, lambda n: 20, 20),
    Task.GHZ: (lambda n: n * TAU_G / 8, lambda n: 20 * n, 10),
    Task.HEISENBERG: (lambda n: n * TAU_G / 2, lambda n: 20 * n, 20),
}


def build_problem(task: Task | str, n: int, delta_j: float, **overrides: Any) -> ControlProblem:
    """Problem with the default duration, bins and bond cap for ``task``.

    Recognized overrides: ``duration``, ``bins``, ``d_max``, ``m``, ``seed``,
    ``cutoff``, ``substeps``, ``g``, ``amp_cap``, ``target_d_max``.
    """
    task = Task(task)
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if task in (Task.PARALLEL_CNOT, Task.HEISENBERG) and n % 2:
        raise ValueError(f"{task.value} requires even n, got {n}")
    unknown = set(overrides) - {
        "duration", "bins", "d_max", "m", "seed", "cutoff", "substeps", "g", "amp_cap", "target_d_max",
    }
    if unknown:
        raise ValueError(f"unknown overrides: {sorted(unknown)}")
    dur_fn, bins_fn, d_max = _DEFAULTS[task]
    g = float(overrides.get("g", 1.0))
    duration = float(overrides.get("duration") or dur_fn(n))
    bins = int(overrides.get("bins") or bins_fn(n))
    if task is Task.PARALLEL_X:
        coupling = CouplingPattern.off(n)
    elif task is Task.PARALLEL_CNOT:
        coupling = CouplingPattern.alternating(n, g)
    else:
        coupling = CouplingPattern.uniform(n, g)
    return ControlProblem(
        task=task,
        n=n,
        coupling=coupling,
        schedule=PulseSchedule.zeros(n, bins, duration),
        ensemble=EnsembleSpec(float(delta_j), overrides.get("m"), int(overrides.get("seed", 0))),
        d_max=int(overrides.get("d_max") or d_max),
        cutoff=float(overrides.get("cutoff", DEFAULT_CUTOFF)),
        substeps=int(overrides.get("substeps", 1)),
        energy_scale=1.0 if task is Task.PARALLEL_X else g,
        target_d_max=int(overrides.get("target_d_max", 20)),
        amp_cap=overrides.get("amp_cap"),
    )
