"""The Heisenberg ground state used as a preparation target.

DMRG finds the ground state of the nearest-neighbour XX + YY + ZZ chain; for
small chains we can compare with exact diagonalization.
"""

from __future__ import annotations

from tnrobust import dmrg_ground_state, energy_variance, heisenberg_mpo
from tnrobust.dense import exact_ground, heisenberg_dense

for n in (4, 8, 12):
    h = heisenberg_mpo(n)
    psi, energy = dmrg_ground_state(h, d_max=20)
    line = f"n={n:2d}  E_dmrg={energy:.10f}  variance={energy_variance(psi, h):.1e}"
    if n <= 10:
        line += f"  E_exact={exact_ground(heisenberg_dense(n))[0]:.10f}"
    print(line)
