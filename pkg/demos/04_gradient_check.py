"""Comparing the adjoint gradient with finite differences."""

from __future__ import annotations

import numpy as np

from tnrobust import build_problem, gradient_check

rng = np.random.default_rng(0)
for task, n in (("parallel_x", 3), ("parallel_cnot", 4), ("ghz", 3), ("heisenberg", 4)):
    problem = build_problem(task, n, 0.05, bins=6, m=2, d_max=64)
    schedule = problem.schedule.with_vector(rng.uniform(-1, 1, problem.schedule.to_vector().size))
    print(f"{task:>14}: max relative error {gradient_check(problem, schedule, problem.samples()):.1e}")
