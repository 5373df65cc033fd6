"""On-disk formats.

* Networks (MPS/MPO) go to ``.npz``: one complex array per site plus
  ``kind``, ``fused`` and ``center`` entries. MPO cores are stored with the
  fused ``(in, out)`` physical axis, flagged by ``fused = True``.
* Schedules go to JSON records holding the flat parameter vector (x row-major
  by qubit then bin, followed by y), ``dt``, the shape, a content hash and
  the fingerprint of the problem they were optimized for. Extra keys (history,
  objective values, seeds) ride along.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .model import ControlProblem, PulseSchedule
from .mpo import MPO
from .mps import MPS, TensorChain


class FormatError(ValueError):
    """A file could not be parsed as the expected record."""


def save_network(path: str | Path, chain: TensorChain) -> None:
    arrays = {f"site{k}": c for k, c in enumerate(chain.cores)}
    np.savez(
        path,
        kind=np.array("mpo" if isinstance(chain, MPO) else "mps"),
        fused=np.array(isinstance(chain, MPO)),
        center=np.array(-1 if chain.center is None else chain.center),
        n=np.array(chain.n),
        **arrays,
    )


def load_network(path: str | Path) -> MPS | MPO:
    try:
        with np.load(path) as f:
            kind = str(f["kind"])
            n = int(f["n"])
            center = int(f["center"])
            cores = tuple(f[f"site{k}"] for k in range(n))
    except (OSError, KeyError, ValueError) as exc:
        raise FormatError(f"cannot read network from {path}: {exc}") from exc
    cls = MPO if kind == "mpo" else MPS
    return cls(cores, None if center < 0 else center)


def schedule_record(
    schedule: PulseSchedule, problem: ControlProblem | None = None, **extra: Any
) -> dict[str, Any]:
    unit_name, unit = problem.time_unit if problem is not None else ("time", 1.0)
    record = {
        "format": "tnrobust-schedule/1",
        "n": schedule.n,
        "bins": schedule.bins,
        "dt": schedule.dt,
        "time_unit": unit_name,
        "time_unit_value": unit,
        "amplitude_unit": "energy_scale",
        "params": schedule.to_vector().tolist(),
        "schedule_hash": schedule.content_hash(),
    }
    if problem is not None:
        record["fingerprint"] = problem.fingerprint()
        record["problem"] = problem.describe()
    record.update(extra)
    return record


def save_schedule(
    path: str | Path, schedule: PulseSchedule, problem: ControlProblem | None = None, **extra: Any
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(schedule_record(schedule, problem, **extra), indent=1))
    tmp.replace(path)


def load_schedule(path: str | Path) -> tuple[PulseSchedule, dict[str, Any]]:
    """Returns the schedule and the full record."""
    try:
        record = json.loads(Path(path).read_text())
        n, bins = int(record["n"]), int(record["bins"])
        v = np.asarray(record["params"], dtype=float)
        if v.size != 2 * n * bins:
            raise ValueError(f"expected {2 * n * bins} parameters, found {v.size}")
        schedule = PulseSchedule(
            v[: n * bins].reshape(n, bins), v[n * bins :].reshape(n, bins), float(record["dt"])
        )
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"cannot read schedule from {path}: {exc}") from exc
    if "schedule_hash" in record and record["schedule_hash"] != schedule.content_hash():
        raise FormatError(f"schedule hash mismatch in {path}")
    return schedule, record
