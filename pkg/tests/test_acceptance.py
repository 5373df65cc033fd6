"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v -s`` or
``python -m pytest -m acceptance``. Every check runs at its stated tolerance;
timings are measured and enforced as part of the criterion.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

from tnrobust.cli import RunConfig, cmd_sweep
from tnrobust.dense import dense_propagate, exact_ground, heisenberg_dense, kron_all
from tnrobust.dmrg import dmrg_ground_state, energy_variance
from tnrobust.model import (
    TAU_G,
    CouplingPattern,
    EnsembleSpec,
    PulseSchedule,
    build_problem,
    draw_sample,
    heisenberg_mpo,
    sample_ensemble,
)
from tnrobust.mpo import CNOT, identity_mpo, parallel_cnot_mpo, parallel_x_mpo
from tnrobust.mps import ghz_state, product_state
from tnrobust.objective import (
    ensemble_infidelity,
    finite_difference_gradient,
    gate_infidelity,
    infidelity_gradient,
    per_gate_infidelity,
    relative_error,
)
from tnrobust.optimizer import LadderPlan, OptimizerConfig, ladder_optimize, optimize_problem
from tnrobust.tebd import propagate
from tnrobust.tensor_core import X

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    """Print ``CRITERION k: PASS|FAIL`` and then fail the test if needed."""

    def _report(k: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\nCRITERION {k:2d}: {'PASS' if ok else 'FAIL'} | {detail}")
        assert ok, f"criterion {k} failed: {detail}"

    return _report


def _random_schedule(problem, rng, scale=1.0):
    v = rng.uniform(-scale, scale, problem.schedule.to_vector().size)
    return problem.schedule.with_vector(v)


def test_criterion_01_gradient_exactness(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    errors = {}
    for task in ("parallel_x", "parallel_cnot", "ghz", "heisenberg"):
        problem = build_problem(task, 4, 0.05, d_max=64, bins=10, m=2, seed=11)
        schedule = _random_schedule(problem, rng)
        samples = problem.samples()
        _, grad = infidelity_gradient(problem, schedule, samples)

        def f(v):
            return ensemble_infidelity(problem, schedule.with_vector(v), samples).mean_infidelity

        fd = finite_difference_gradient(f, schedule.to_vector(), step=1e-5)
        errors[task] = relative_error(grad.to_vector(), fd)
    elapsed = time.perf_counter() - t0
    ok = all(e < 1e-6 for e in errors.values()) and elapsed < 120
    detail = ", ".join(f"{k} {v:.1e}" for k, v in errors.items())
    report(1, ok, f"max rel. error {detail}; {elapsed:.0f}s (< 120s)")


def _random_slice_inputs(rng, n):
    sch = PulseSchedule(rng.uniform(-3, 3, (n, 1)), rng.uniform(-3, 3, (n, 1)), rng.uniform(0.05, 0.5))
    coupling = CouplingPattern(rng.uniform(0.0, 2.0, n - 1))
    sample = draw_sample(EnsembleSpec(0.2, seed=int(rng.integers(1 << 30))), n, 0)
    return sch, coupling, sample


def test_criterion_02_dense_oracle_equivalence(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    worst_state = worst_gate = 0.0
    n_s, n_u = 6, 5
    d_s, d_u = 2 ** (n_s // 2), 2 ** (n_u // 2)
    # 50 independent random slices on random product inputs
    for _ in range(50):
        sch, cp, smp = _random_slice_inputs(rng, n_s)
        psi0 = product_state(rng.integers(0, 2, n_s))
        out, _, _ = propagate(psi0, sch, cp, smp, d_max=d_s)
        ref = dense_propagate(psi0.to_dense(), sch, cp, smp)
        worst_state = max(worst_state, abs(1 - abs(np.vdot(ref, out.to_dense()))))
        sch, cp, smp = _random_slice_inputs(rng, n_u)
        u, _, _ = propagate(identity_mpo(n_u), sch, cp, smp, d_max=d_u)
        ref = dense_propagate(np.eye(2**n_u), sch, cp, smp)
        worst_gate = max(worst_gate, abs(1 - abs(np.trace(ref.conj().T @ u.to_dense()) / 2**n_u)))
    # and one 50-slice schedule for states, which dMax = 2^(n/2) still represents exactly
    sch = PulseSchedule(rng.uniform(-3, 3, (n_s, 50)), rng.uniform(-3, 3, (n_s, 50)), 0.2)
    cp = CouplingPattern(rng.uniform(0.0, 2.0, n_s - 1))
    smp = draw_sample(EnsembleSpec(0.2, seed=5), n_s, 0)
    out, _, _ = propagate(product_state([0] * n_s), sch, cp, smp, d_max=d_s)
    ref = dense_propagate(product_state([0] * n_s).to_dense(), sch, cp, smp)
    worst_chain = abs(1 - abs(np.vdot(ref, out.to_dense())))
    elapsed = time.perf_counter() - t0
    ok = max(worst_state, worst_gate, worst_chain) < 1e-10 and elapsed < 60
    report(
        2, ok,
        f"state deficit {worst_state:.1e}, 50-slice chain {worst_chain:.1e}, "
        f"trace deficit {worst_gate:.1e}; {elapsed:.1f}s (< 60s)",
    )


def test_criterion_03_closed_form_targets(report):
    h = 2.0**-0.5
    first = np.array([[[h, 0.0], [0.0, h]]])  # (1, phys, 2)
    bulk = np.zeros((2, 2, 2))
    bulk[:, 0, :] = [[1, 0], [0, 0]]
    bulk[:, 1, :] = [[0, 0], [0, 1]]
    last = np.zeros((2, 2, 1))
    last[:, 0, 0] = [1, 0]
    last[:, 1, 0] = [0, 1]
    exact, dense_err = True, 0.0
    for n in range(2, 11):
        cores = ghz_state(n).cores
        want = [first] + [bulk] * (n - 2) + [last]
        exact &= all(np.array_equal(c, w) for c, w in zip(cores, want))
        ref = np.zeros(2**n)
        ref[0] = ref[-1] = h
        dense_err = max(dense_err, np.max(np.abs(ghz_state(n).to_dense() - ref)))
    gate_err = 0.0
    for n in range(2, 7):
        gate_err = max(gate_err, np.max(np.abs(parallel_x_mpo(n).to_dense() - kron_all([X] * n))))
        if n % 2 == 0:
            ref = kron_all([CNOT] * (n // 2))
            gate_err = max(gate_err, np.max(np.abs(parallel_cnot_mpo(n).to_dense() - ref)))
    ok = exact and dense_err < 1e-12 and gate_err < 1e-12
    report(3, ok, f"GHZ tensors bit-exact={exact}, GHZ dense err {dense_err:.1e}, gate MPO err {gate_err:.1e}")


def test_criterion_04_dmrg(report):
    t0 = time.perf_counter()
    _, e2 = dmrg_ground_state(heisenberg_mpo(2), d_max=20)
    _, e4 = dmrg_ground_state(heisenberg_mpo(4), d_max=20)
    e4_exact, _ = exact_ground(heisenberg_dense(4))
    h20 = heisenberg_mpo(20)
    psi, e20 = dmrg_ground_state(h20, d_max=20)
    var_per_site = energy_variance(psi, h20) / 20
    elapsed = time.perf_counter() - t0
    ok = (
        abs(e2 + 3) < 1e-8
        and abs(e4 - e4_exact) < 1e-8
        and var_per_site < 1e-6
        and elapsed < 300
    )
    report(
        4, ok,
        f"E(2)={e2:.10f}, |E(4)-ED|={abs(e4 - e4_exact):.1e}, "
        f"n=20 D=20 E={e20:.8f} variance/site={var_per_site:.3e} (< 1e-6); {elapsed:.0f}s",
    )


def test_criterion_05_trivial_pi_pulse(report):
    worst = 0.0
    for n in range(2, 9):
        problem = build_problem("parallel_x", n, 0.0)
        sch = problem.schedule
        pulse = PulseSchedule(np.full((n, sch.bins), (np.pi / 2) / sch.total_time), np.zeros((n, sch.bins)), sch.dt)
        u, _, _ = propagate(problem.initial, pulse, problem.coupling, problem.samples()[0], problem.d_max)
        worst = max(worst, gate_infidelity(u, problem.target))
    report(5, worst < 1e-10, f"max gate infidelity over n=2..8: {worst:.1e}")


def test_criterion_06_robustness_improvement(report, tmp_path):
    t0 = time.perf_counter()
    delta_j = 0.05
    config = OptimizerConfig(max_iters=1000, grad_tol=1e-9)

    def factory(n, dj):
        return build_problem("parallel_x", n, dj, seed=2024)

    cells = ladder_optimize(LadderPlan([2, 4, 6], [0.0]), factory, config)
    nonrobust = {}
    for n in (2, 4, 6):
        problem = factory(n, delta_j)
        nonrobust[n] = ensemble_infidelity(problem, cells[(n, 0.0)].schedule, problem.verification_samples())
    # robust rung, warm-started from the noiseless n=6 solution
    problem = factory(6, delta_j)
    robust_cfg = OptimizerConfig(max_iters=300, grad_tol=1e-9)
    robust, res = optimize_problem(problem, robust_cfg, start=cells[(6, 0.0)].schedule)
    robust_val = ensemble_infidelity(problem, robust, problem.verification_samples())
    elapsed = time.perf_counter() - t0
    ratio = nonrobust[6].mean_infidelity / robust_val.mean_infidelity
    means = [nonrobust[n].mean_infidelity for n in (2, 4, 6)]
    monotone = all(b >= a for a, b in zip(means, means[1:]))
    ok = ratio >= 10 and monotone and elapsed < 1800
    report(
        6, ok,
        f"n=6 verification: non-robust {means[2]:.2e}, robust {robust_val.mean_infidelity:.2e} "
        f"(ratio {ratio:.1f}, need >= 10, {res.iterations} it); non-robust n=2,4,6: "
        + ", ".join(f"{m:.2e}" for m in means)
        + f" monotone={monotone}; {elapsed:.0f}s (< 1800s)",
    )


def test_criterion_07_per_gate_formula(report):
    a = per_gate_infidelity(5.0e-3, 50, 1)
    b = per_gate_infidelity(2.7e-2, 50, 2)
    ok = f"{a:.1e}" == "1.0e-04" and f"{b:.1e}" == "1.1e-03"
    report(7, ok, f"(5.0e-3, 50, 1) -> {a:.3e}; (2.7e-2, 50, 2) -> {b:.3e}")


def test_criterion_08_ensemble_statistics(report):
    delta_j = 0.05
    n_samples = 10_000
    vals = np.concatenate(
        [s.as_array().ravel() for s in sample_ensemble(EnsembleSpec(delta_j, m=n_samples, seed=9), 2)]
    )
    sigma = delta_j / np.sqrt(3)
    mean_ok = abs(vals.mean()) < 3 * sigma / np.sqrt(vals.size)
    var_ok = abs(vals.var() / (delta_j**2 / 3) - 1) < 0.05
    m_ok = all(EnsembleSpec(delta_j).size(n) == 2 * 3 * (n - 1) == 6 * (n - 1) for n in range(2, 51))
    default_ok = len(build_problem("parallel_x", 7, delta_j).samples()) == 36
    ok = mean_ok and var_ok and m_ok and default_ok
    report(
        8, ok,
        f"mean {vals.mean():.2e} (3 sigma {3 * sigma / np.sqrt(vals.size):.1e}), "
        f"var ratio {vals.var() / (delta_j**2 / 3):.4f}, M=6(n-1) for n=2..50: {m_ok and default_ok}",
    )


def test_criterion_09_determinism(report, tmp_path):
    cfg = RunConfig.from_dict(
        {"task": "parallel_x", "sizes": [2, 3], "delta_j": 0.02, "bins": 5, "max_iters": 25, "seed": 3}
    )
    texts = []
    for k, workers in enumerate((1, 2, 1, 3)):
        texts.append(cmd_sweep(cfg, tmp_path / f"run{k}", workers=workers))
    blobs = [(tmp_path / f"run{k}" / "sweep.csv").read_bytes() for k in range(4)]
    ok = all(b == blobs[0] for b in blobs) and all(t == texts[0] for t in texts)
    report(9, ok, f"4 sweeps (workers 1, 2, 1, 3), {len(blobs[0])} bytes each, identical={ok}")


def test_criterion_10_ghz_preparation(report):
    t0 = time.perf_counter()
    problem = build_problem("ghz", 4, 0.0, duration=TAU_G, bins=80, d_max=10)
    _, res = optimize_problem(problem, OptimizerConfig(max_iters=1000, f_target=1e-6))
    elapsed = time.perf_counter() - t0
    ok = res.fun < 1e-3 and res.iterations <= 1000 and elapsed < 1200
    report(10, ok, f"state infidelity {res.fun:.2e} after {res.iterations} iterations; {elapsed:.0f}s (< 1200s)")
