from __future__ import annotations

import json

import numpy as np
import pytest

from tnrobust.io import FormatError, load_network, load_schedule, save_network, save_schedule
from tnrobust.model import build_problem
from tnrobust.mpo import parallel_cnot_mpo
from tnrobust.mps import random_mps


def test_network_round_trip(tmp_path, rng):
    psi = random_mps(4, 3, rng)
    save_network(tmp_path / "psi.npz", psi)
    back = load_network(tmp_path / "psi.npz")
    np.testing.assert_array_equal(back.to_dense(), psi.to_dense())
    assert back.center == psi.center
    u = parallel_cnot_mpo(4)
    save_network(tmp_path / "u.npz", u)
    back = load_network(tmp_path / "u.npz")
    np.testing.assert_array_equal(back.to_dense(), u.to_dense())
    assert type(back).__name__ == "MPO"


def test_schedule_round_trip(tmp_path, rng):
    problem = build_problem("ghz", 3, 0.01)
    sch = problem.schedule.with_vector(rng.standard_normal(problem.schedule.to_vector().size))
    save_schedule(tmp_path / "s.json", sch, problem, note="hello")
    back, rec = load_schedule(tmp_path / "s.json")
    np.testing.assert_array_equal(back.to_vector(), sch.to_vector())
    assert back.dt == sch.dt
    assert rec["fingerprint"] == problem.fingerprint()
    assert rec["time_unit"] == "tau_g" and rec["note"] == "hello"


def test_tampered_schedule_is_rejected(tmp_path):
    problem = build_problem("ghz", 3, 0.0)
    path = tmp_path / "s.json"
    save_schedule(path, problem.schedule, problem)
    rec = json.loads(path.read_text())
    rec["params"][0] = 1.0
    path.write_text(json.dumps(rec))
    with pytest.raises(FormatError, match="hash"):
        load_schedule(path)
    path.write_text("{not json")
    with pytest.raises(FormatError):
        load_schedule(path)
    with pytest.raises(FormatError):
        load_network(tmp_path / "missing.npz")
