from __future__ import annotations

import numpy as np
import pytest

from tnrobust.dense import apply_gate, embed, kron_all
from tnrobust.mpo import (
    CNOT,
    MPO,
    apply_to_mps,
    from_dense,
    from_site_matrices,
    identity_mpo,
    mpo_apply_one_site,
    mpo_apply_two_site,
    mpo_product,
    parallel_cnot_mpo,
    parallel_x_mpo,
    trace_overlap,
)
from tnrobust.mps import random_mps
from tnrobust.tensor_core import I2, X, Z

from scipy.stats import unitary_group


def test_site_matrices_dense(rng):
    mats = [unitary_group.rvs(2, random_state=rng) for _ in range(3)]
    np.testing.assert_allclose(from_site_matrices(mats).to_dense(), kron_all(mats), atol=1e-14)


def test_tensors_axis_convention():
    """W[a, in, out, b] multiplies |out><in|."""
    m = np.array([[1, 2], [3, 4]], dtype=complex)
    w = from_site_matrices([m, I2]).tensors[0]
    for i in range(2):
        for o in range(2):
            assert w[0, i, o, 0] == m[o, i]


@pytest.mark.parametrize("n", [2, 4, 6])
def test_named_targets(n):
    np.testing.assert_allclose(parallel_x_mpo(n).to_dense(), kron_all([X] * n), atol=1e-12)
    np.testing.assert_allclose(parallel_cnot_mpo(n).to_dense(), kron_all([CNOT] * (n // 2)), atol=1e-12)
    np.testing.assert_allclose(identity_mpo(n).to_dense(), np.eye(2**n), atol=1e-12)


def test_parallel_cnot_bonds():
    assert parallel_cnot_mpo(6).bond_dims == [2, 1, 2, 1, 2]
    with pytest.raises(ValueError):
        parallel_cnot_mpo(5)


def test_from_dense_round_trip(rng):
    u = unitary_group.rvs(8, random_state=rng)
    np.testing.assert_allclose(from_dense(u).to_dense(), u, atol=1e-12)


def test_trace_overlap(rng):
    a, b = unitary_group.rvs(8, random_state=rng), unitary_group.rvs(8, random_state=rng)
    got = trace_overlap(from_dense(a), from_dense(b))
    assert got == pytest.approx(np.trace(a.conj().T @ b) / 8)
    assert trace_overlap(parallel_x_mpo(5), parallel_x_mpo(5)) == pytest.approx(1.0)


def test_gates_act_from_the_left(rng):
    u0 = unitary_group.rvs(8, random_state=rng)
    g1, g2 = unitary_group.rvs(2, random_state=rng), unitary_group.rvs(4, random_state=rng)
    u = mpo_apply_one_site(from_dense(u0), g1, 1)
    u, rep = mpo_apply_two_site(u, g2, 1, d_max=64)
    ref = apply_gate(apply_gate(u0, g1, (1,), 3), g2, (1, 2), 3)
    np.testing.assert_allclose(u.to_dense(), ref, atol=1e-12)
    assert rep.discarded_weight < 1e-20


def test_mpo_truncation_is_not_renormalized(rng):
    u = from_dense(unitary_group.rvs(16, random_state=rng))
    v, rep = mpo_apply_two_site(u, unitary_group.rvs(4, random_state=rng), 1, d_max=2)
    assert rep.discarded_weight > 0
    # Frobenius norm of a unitary is 2^(n/2); truncation lowers it
    assert np.linalg.norm(v.to_dense()) ** 2 == pytest.approx(16 - rep.discarded_weight, rel=1e-10)


def test_apply_to_mps_and_product(rng):
    a, b = from_dense(unitary_group.rvs(8, random_state=rng)), from_dense(unitary_group.rvs(8, random_state=rng))
    psi = random_mps(3, 2, rng)
    np.testing.assert_allclose(apply_to_mps(a, psi).to_dense(), a.to_dense() @ psi.to_dense(), atol=1e-12)
    np.testing.assert_allclose(mpo_product(a, b).to_dense(), a.to_dense() @ b.to_dense(), atol=1e-12)


def test_four_axis_cores_are_accepted():
    core = np.zeros((1, 2, 2, 1), dtype=complex)
    core[0, :, :, 0] = Z.T
    mpo = MPO((core, core))
    np.testing.assert_allclose(mpo.to_dense(), np.kron(Z, Z))
    np.testing.assert_allclose(mpo.to_dense(), embed(Z, 0, 2) @ embed(Z, 1, 2))
