from __future__ import annotations

import numpy as np
import pytest

from tnrobust.dense import exact_ground, heisenberg_dense
from tnrobust.dmrg import dmrg_ground_state, energy_variance
from tnrobust.model import heisenberg_mpo
from tnrobust.mpo import from_site_matrices
from tnrobust.tensor_core import I2, Z


def test_two_site_singlet():
    psi, e = dmrg_ground_state(heisenberg_mpo(2), d_max=4)
    assert e == pytest.approx(-3.0, abs=1e-12)
    singlet = np.array([0, 1, -1, 0]) / np.sqrt(2)
    assert abs(np.vdot(singlet, psi.to_dense())) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("n", [4, 6, 8])
def test_matches_exact_diagonalization(n):
    e_exact, v = exact_ground(heisenberg_dense(n))
    psi, e = dmrg_ground_state(heisenberg_mpo(n), d_max=16)
    assert e == pytest.approx(e_exact, abs=1e-8)
    assert abs(np.vdot(v, psi.to_dense())) == pytest.approx(1.0, abs=1e-6)
    assert energy_variance(psi, heisenberg_mpo(n)) < 1e-8


def test_history_is_monotone_and_seeded():
    _, e1, hist = dmrg_ground_state(heisenberg_mpo(10), d_max=8, seed=3, return_history=True)
    assert all(b <= a + 1e-9 for a, b in zip(hist, hist[1:]))
    _, e2 = dmrg_ground_state(heisenberg_mpo(10), d_max=8, seed=3)
    assert e1 == e2


def test_classical_hamiltonian():
    # -Z on every site has the product ground state |0...0>
    h = from_site_matrices([-Z, I2, I2])
    psi, e = dmrg_ground_state(h, d_max=4)
    assert e == pytest.approx(-1.0)


def test_rejects_tiny_bond():
    with pytest.raises(ValueError):
        dmrg_ground_state(heisenberg_mpo(4), d_max=1)
