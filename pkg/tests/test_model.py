from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tnrobust.dense import heisenberg_dense
from tnrobust.model import (
    TAU_G,
    TAU_PI,
    CouplingPattern,
    EnsembleSpec,
    PulseSchedule,
    Task,
    build_problem,
    draw_sample,
    heisenberg_mpo,
    sample_ensemble,
)


def test_schedule_vector_layout():
    x = np.arange(6.0).reshape(2, 3)
    s = PulseSchedule(x, -x, 0.5)
    v = s.to_vector()
    np.testing.assert_array_equal(v, np.concatenate([x.ravel(), -x.ravel()]))
    back = s.with_vector(v)
    np.testing.assert_array_equal(back.x, x)
    assert back.total_time == pytest.approx(1.5)


def test_schedule_is_read_only():
    s = PulseSchedule.zeros(2, 3, 1.0)
    with pytest.raises(ValueError):
        s.x[0, 0] = 1.0


@pytest.mark.parametrize("bad", [dict(dt=0.0), dict(dt=-1.0)])
def test_schedule_validation(bad):
    with pytest.raises(ValueError):
        PulseSchedule(np.zeros((2, 2)), np.zeros((2, 2)), **bad)
    with pytest.raises(ValueError):
        PulseSchedule(np.zeros((2, 2)), np.zeros((2, 3)), 0.1)
    with pytest.raises(ValueError):
        PulseSchedule(np.array([[np.nan]]), np.zeros((1, 1)), 0.1)


def test_refine_keeps_time_and_amplitudes():
    s = PulseSchedule(np.array([[1.0, 2.0]]), np.array([[0.5, 0.0]]), 0.4)
    r = s.refine(3)
    assert r.bins == 6 and r.total_time == pytest.approx(s.total_time)
    np.testing.assert_array_equal(r.x[0], [1, 1, 1, 2, 2, 2])


def test_content_hash_tracks_values():
    s = PulseSchedule.zeros(2, 3, 1.0)
    assert s.content_hash() == PulseSchedule.zeros(2, 3, 1.0).content_hash()
    assert s.content_hash() != s.with_vector(np.ones(12)).content_hash()


def test_coupling_patterns():
    np.testing.assert_array_equal(CouplingPattern.alternating(6, 1.0).g, [1, 0, 1, 0, 1])
    np.testing.assert_array_equal(CouplingPattern.uniform(4, 2.0).g, [2, 2, 2])
    np.testing.assert_array_equal(CouplingPattern.off(3).g, [0, 0])


def test_default_ensemble_size():
    for n in range(2, 12):
        assert EnsembleSpec(0.05).size(n) == 2 * 3 * (n - 1) == 6 * (n - 1)


def test_sampling_is_counter_based():
    spec = EnsembleSpec(0.05, m=20, seed=7)
    full = sample_ensemble(spec, 5)
    # any single sample can be regenerated from its index alone
    np.testing.assert_array_equal(draw_sample(spec, 5, 13).as_array(), full[13].as_array())
    # different seeds give different streams
    other = sample_ensemble(EnsembleSpec(0.05, m=20, seed=8), 5)
    assert not np.allclose(full[0].as_array(), other[0].as_array())


@settings(max_examples=20, deadline=None)
@given(dj=st.floats(0, 1), seed=st.integers(0, 2**32))
def test_samples_within_bounds(dj, seed):
    for s in sample_ensemble(EnsembleSpec(dj, m=4, seed=seed), 4):
        assert np.all(np.abs(s.as_array()) <= dj)


def test_negative_error_rejected():
    with pytest.raises(ValueError):
        sample_ensemble(EnsembleSpec(-0.1), 3)


def test_verification_ensemble_is_disjoint():
    spec = EnsembleSpec(0.05, seed=3)
    ver = spec.verification(5, 4)
    assert ver.size(4) == 5 * spec.size(4)
    assert ver.seed != spec.seed


@pytest.mark.parametrize("n", [2, 3, 5])
def test_heisenberg_mpo_matches_pauli_sum(n):
    np.testing.assert_allclose(heisenberg_mpo(n).to_dense(), heisenberg_dense(n), atol=1e-12)


def test_build_problem_defaults():
    px = build_problem("parallel_x", 4, 0.05)
    assert px.schedule.total_time == pytest.approx(TAU_PI) and px.schedule.bins == 10
    assert px.ensemble.size(4) == 18 and px.d_max == 20
    cn = build_problem(Task.PARALLEL_CNOT, 4, 0.0)
    assert cn.schedule.total_time == pytest.approx(TAU_G / 2) and cn.schedule.bins == 20
    ghz = build_problem("ghz", 6, 0.0)
    assert ghz.schedule.total_time == pytest.approx(6 * TAU_G / 8) and ghz.schedule.bins == 120
    assert ghz.d_max == 10
    hb = build_problem("heisenberg", 4, 0.0)
    assert hb.schedule.total_time == pytest.approx(2 * TAU_G) and hb.schedule.bins == 80


def test_build_problem_validation():
    with pytest.raises(ValueError):
        build_problem("parallel_cnot", 3, 0.0)
    with pytest.raises(ValueError):
        build_problem("heisenberg", 5, 0.0)
    with pytest.raises(ValueError):
        build_problem("ghz", 1, 0.0)
    with pytest.raises(ValueError):
        build_problem("ghz", 3, 0.0, colour="red")
    with pytest.raises(ValueError):
        build_problem("nonsense", 3, 0.0)


def test_fingerprint_ignores_ensemble_only():
    a = build_problem("ghz", 4, 0.01, seed=1)
    assert a.fingerprint() == build_problem("ghz", 4, 0.05, seed=9, m=3).fingerprint()
    assert a.fingerprint() != build_problem("ghz", 4, 0.01, bins=40).fingerprint()


def test_noiseless_problem_uses_one_sample():
    p = build_problem("ghz", 4, 0.0)
    assert len(p.samples()) == 1 and len(p.verification_samples()) == 1
    assert not np.any(p.samples()[0].as_array())
