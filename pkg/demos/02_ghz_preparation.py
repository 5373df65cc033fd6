"""Preparing a GHZ state with the always-on ZZ coupling.

Starting from ``|0000>``, the pulses are optimized so that the chain ends in
``(|0000> + |1111>)/sqrt(2)``. Afterwards the amplitudes are written as CSV
heatmaps (qubit by time bin) next to this script.
"""

from __future__ import annotations

from pathlib import Path

from tnrobust import OptimizerConfig, build_problem, optimize_problem
from tnrobust.cli import cmd_heatmap
from tnrobust.io import save_schedule
from tnrobust.model import TAU_G

problem = build_problem("ghz", 4, 0.0, duration=TAU_G, bins=80)
schedule, res = optimize_problem(problem, OptimizerConfig(max_iters=1000, f_target=1e-6))
print(f"state infidelity {res.fun:.2e} after {res.iterations} iterations")

out = Path(__file__).with_name("ghz_out")
save_schedule(out / "ghz_schedule.json", schedule, problem)
for path in cmd_heatmap(out / "ghz_schedule.json", out):
    print("wrote", path)
