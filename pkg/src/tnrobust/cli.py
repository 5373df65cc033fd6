"""Command line entry point: ``tnrobust {optimize,evaluate,sweep,heatmap,gradcheck}``.

Runs are driven by a flat JSON config. Durations in the config are in the
task's natural time unit (``tau_pi`` for the parallel-X gate, ``tau_g``
otherwise); amplitudes and parasitic strengths are in units of the main
energy scale. Exit codes: 0 success, 1 configuration error, 2 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io as _io
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .io import FormatError, load_schedule, save_schedule
from .model import TAU_G, TAU_PI, ControlProblem, PulseSchedule, Task, build_problem
from .objective import ensemble_infidelity, gradient_check, per_gate_infidelity
from .optimizer import LadderPlan, OptimizerConfig, ladder_optimize
from .tensor_core import NumericalError

logger = logging.getLogger("tnrobust")

GRADCHECK_MAX_N = 5


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    task: str = "parallel_x"
    n: int | None = None
    sizes: list[int] | None = None
    delta_j: float = 0.0
    errors: list[float] | None = None
    error_step: float = 0.01
    duration: float | None = None
    bins: int | None = None
    amp_cap: float | None = None
    m: int | None = None
    verify_factor: int = 5
    seed: int = 0
    d_max: int | None = None
    cutoff: float = 1e-12
    substeps: int = 1
    max_iters: int = 1000
    memory: int = 10
    grad_tol: float = 1e-9
    f_target: float | None = None
    out_dir: str = "runs/out"
    checkpoint: str | None = None

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> RunConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> RunConfig:
        try:
            d = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True))

    def fingerprint(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]

    def validate(self) -> None:
        try:
            task = Task(self.task)
        except ValueError as exc:
            raise ConfigError(f"unknown task {self.task!r}") from exc
        sizes = self.size_list()
        if not sizes:
            raise ConfigError("no system size given (set 'n' or 'sizes')")
        if any(s < 2 for s in sizes):
            raise ConfigError("system sizes must be >= 2")
        if task in (Task.PARALLEL_CNOT, Task.HEISENBERG) and any(s % 2 for s in sizes):
            raise ConfigError(f"{task.value} needs even system sizes, got {sizes}")
        if self.delta_j < 0:
            raise ConfigError("delta_j must be non-negative")

    def size_list(self) -> list[int]:
        if self.sizes is not None:
            return [int(s) for s in self.sizes]
        return [int(self.n)] if self.n is not None else []

    def error_list(self) -> list[float]:
        """The warm-start error ladder ending at ``delta_j``."""
        if self.errors is not None:
            return [float(e) for e in self.errors]
        if self.delta_j == 0:
            return [0.0]
        steps = int(np.ceil(self.delta_j / self.error_step - 1e-9))
        vals = [round(k * self.error_step, 12) for k in range(steps)]
        return vals + [self.delta_j]

    def time_unit(self) -> float:
        return TAU_PI if Task(self.task) is Task.PARALLEL_X else TAU_G

    def problem(self, n: int, delta_j: float, m: int | None = None, seed: int | None = None) -> ControlProblem:
        overrides: dict[str, Any] = {
            "m": self.m if m is None else m,
            "seed": self.seed if seed is None else seed,
            "cutoff": self.cutoff,
            "substeps": self.substeps,
            "amp_cap": self.amp_cap,
        }
        if self.duration is not None:
            overrides["duration"] = self.duration * self.time_unit()
        if self.bins is not None:
            overrides["bins"] = self.bins
        if self.d_max is not None:
            overrides["d_max"] = self.d_max
        return build_problem(self.task, n, delta_j, **overrides)

    def optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(
            max_iters=self.max_iters, memory=self.memory, grad_tol=self.grad_tol,
            f_target=self.f_target, amp_cap=self.amp_cap,
        )


def _fmt(v: float) -> str:
    return repr(float(v))


def verification_record(cfg: RunConfig, problem: ControlProblem, schedule: PulseSchedule, workers: int) -> dict:
    samples = problem.verification_samples(cfg.verify_factor)
    value = ensemble_infidelity(problem, schedule, samples, workers)
    half = len(samples) // 2
    per = value.per_sample
    rec = {
        "mean_infidelity": value.mean_infidelity,
        "std_error": value.std_error,
        "m": len(samples),
        "seed": problem.ensemble.verification(cfg.verify_factor, problem.n).seed,
        "variance": float(np.var(per)),
        "half_means": [float(np.mean(per[:half])) if half else None, float(np.mean(per[half:]))],
        "max_discarded_weight": float(np.max(value.discarded)),
    }
    if problem.task.is_gate and value.mean_infidelity < 1:
        rec["per_gate_infidelity"] = per_gate_infidelity(value.mean_infidelity, problem.n, problem.task.gate_span)
    return rec


def _optimize(cfg: RunConfig, sizes: list[int], errors: list[float], out: Path, workers: int, resume: bool):
    ckdir = Path(cfg.checkpoint) if cfg.checkpoint else out / "checkpoints"
    if not resume and ckdir.exists():
        for f in ckdir.glob("cell_*.json"):
            f.unlink()
    return ladder_optimize(
        LadderPlan(sizes, errors),
        lambda n, dj: cfg.problem(n, dj),
        cfg.optimizer(),
        checkpoint_dir=ckdir,
        workers=workers,
        seed=cfg.seed,
    )


def cmd_optimize(cfg: RunConfig, out: Path, workers: int = 1, resume: bool = False) -> dict:
    """Run the warm-start ladder; write the final schedules and a summary."""
    sizes, errors = cfg.size_list(), cfg.error_list()
    cells = _optimize(cfg, sizes, errors, out, workers, resume)
    summary: dict[str, Any] = {"config": cfg.to_dict(), "config_fingerprint": cfg.fingerprint(), "cells": []}
    for n in sizes:
        cell = cells[(n, errors[-1])]
        problem = cfg.problem(n, errors[-1])
        path = out / f"schedule_n{n}.json"
        save_schedule(path, cell.schedule, problem, delta_j=errors[-1], seed=cfg.seed)
        entry = {
            "n": n,
            "delta_j": errors[-1],
            "schedule_file": path.name,
            "schedule_hash": cell.schedule.content_hash(),
            "problem_fingerprint": problem.fingerprint(),
            "optimization": {"mean_infidelity": cell.value, "m": problem.ensemble.size(n), "seed": cfg.seed},
            "verification": verification_record(cfg, problem, cell.schedule, workers),
            "flagged": cell.flagged,
        }
        if cell.result is not None:
            entry["iterations"] = cell.result.iterations
            entry["status"] = cell.result.status
            (out / f"history_n{n}.json").write_text(
                json.dumps([dataclasses.asdict(h) for h in cell.result.history], indent=1)
            )
        summary["cells"].append(entry)
    (out / "summary.json").write_text(json.dumps(summary, indent=1))
    return summary


def cmd_evaluate(cfg: RunConfig, schedule_file: str | Path, workers: int = 1) -> dict:
    """Verification-ensemble infidelity of a stored schedule at ``cfg.delta_j``."""
    schedule, record = load_schedule(schedule_file)
    problem = cfg.problem(schedule.n, cfg.delta_j)
    if record.get("fingerprint") != problem.fingerprint():
        raise ConfigError(
            f"schedule fingerprint {record.get('fingerprint')} does not match config ({problem.fingerprint()})"
        )
    rec = verification_record(cfg, problem, schedule, workers)
    rec.update(
        {"n": schedule.n, "delta_j": cfg.delta_j, "schedule_hash": schedule.content_hash(),
         "config_fingerprint": cfg.fingerprint()}
    )
    return rec


SWEEP_COLUMNS = ["task", "n", "deltaJ", "robust", "meanInfidelity", "stdError", "M", "seed"]


def cmd_sweep(cfg: RunConfig, out: Path, workers: int = 1, resume: bool = False) -> str:
    """Robust and non-robust solutions over the size list, compared on the same verification ensembles."""
    sizes = cfg.size_list()
    if not sizes:
        raise ConfigError("empty size list")
    errors = cfg.error_list()
    cells = _optimize(cfg, sizes, errors, out, workers, resume)
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    dj = errors[-1]
    for n in sizes:
        problem = cfg.problem(n, dj)
        for robust, key in ((False, (n, errors[0])), (True, (n, dj))):
            rec = verification_record(cfg, problem, cells[key].schedule, workers)
            writer.writerow(
                [cfg.task, n, _fmt(dj), int(robust), _fmt(rec["mean_infidelity"]),
                 _fmt(rec["std_error"]), rec["m"], rec["seed"]]
            )
    text = buf.getvalue()
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(text)
    return text


def cmd_heatmap(schedule_file: str | Path, out: Path) -> tuple[Path, Path]:
    """Write x and y amplitudes as qubit-by-bin CSV matrices."""
    schedule, record = load_schedule(schedule_file)
    unit = record.get("time_unit", "time")
    unit_value = float(record.get("time_unit_value", 1.0))
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, mat in (("x", schedule.x), ("y", schedule.y)):
        p = out / f"heatmap_{name}.csv"
        with p.open("w") as f:
            f.write(f"# quadrature={name} rows=qubits({schedule.n}) cols=bins({schedule.bins})\n")
            f.write(f"# amplitude_unit=energy_scale bin_width={schedule.dt / unit_value!r} {unit}\n")
            np.savetxt(f, mat, delimiter=",", fmt="%.17g")
        paths.append(p)
    return paths[0], paths[1]


def cmd_gradcheck(cfg: RunConfig, step: float = 1e-5) -> dict:
    """Analytic versus central-difference gradients on a seeded random schedule."""
    n = cfg.size_list()[0]
    if n > GRADCHECK_MAX_N:
        raise ConfigError(f"gradcheck is limited to n <= {GRADCHECK_MAX_N}, got {n}")
    problem = cfg.problem(n, cfg.delta_j)
    rng = np.random.default_rng(cfg.seed)
    sch = problem.schedule
    schedule = sch.with_vector(rng.uniform(-1, 1, sch.to_vector().size))
    samples = problem.samples()
    err = gradient_check(problem, schedule, samples, step)
    return {"n": n, "task": cfg.task, "parameters": schedule.to_vector().size, "max_relative_error": err}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tnrobust", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True, out=True):
        if config:
            p.add_argument("--config", required=True, help="JSON run config")
        if out:
            p.add_argument("--out", help="output directory (overrides config out_dir)")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
        p.add_argument("--seed", type=int, help="override the ensemble seed")

    p = sub.add_parser("optimize", help="run the warm-start ladder")
    common(p)
    p.add_argument("--resume", action="store_true", help="reuse finished ladder cells")
    p = sub.add_parser("evaluate", help="verification-ensemble infidelity of a schedule")
    common(p, out=False)
    p.add_argument("--schedule", required=True)
    p = sub.add_parser("sweep", help="robust vs non-robust table over system sizes")
    common(p)
    p.add_argument("--resume", action="store_true")
    p = sub.add_parser("heatmap", help="export pulse matrices as CSV")
    common(p, config=False)
    p.add_argument("--schedule", required=True)
    p = sub.add_parser("gradcheck", help="finite-difference check of the gradient")
    common(p, out=False)
    p.add_argument("--step", type=float, default=1e-5)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = None
        if getattr(args, "config", None):
            cfg = RunConfig.load(args.config)
            if args.seed is not None:
                cfg.seed = args.seed
        out = Path(getattr(args, "out", None) or (cfg.out_dir if cfg else "."))
        if args.command == "optimize":
            result = cmd_optimize(cfg, out, args.workers, args.resume)
            print(json.dumps([{k: c[k] for k in ("n", "delta_j", "verification")} for c in result["cells"]], indent=1))
        elif args.command == "evaluate":
            print(json.dumps(cmd_evaluate(cfg, args.schedule, args.workers), indent=1))
        elif args.command == "sweep":
            sys.stdout.write(cmd_sweep(cfg, out, args.workers, args.resume))
        elif args.command == "heatmap":
            for p in cmd_heatmap(args.schedule, out):
                print(p)
        elif args.command == "gradcheck":
            rep = cmd_gradcheck(cfg, args.step)
            print(f"max relative error {rep['max_relative_error']:.3e} over {rep['parameters']} parameters")
    except (ConfigError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
