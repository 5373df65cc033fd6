"""Brute-force dense propagation and diagonalization for small chains.

Gates are embedded by reshaping the state into ``(2,) * n`` axes and
contracting the gate on the acted-on axes; no full-space Kronecker products
are formed. Unitaries are propagated column by column as a trailing axis.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

from .tensor_core import I2, PAULIS

MAX_STATE_QUBITS = 10
MAX_UNITARY_QUBITS = 7


def apply_gate(psi: np.ndarray, gate: np.ndarray, sites: tuple[int, ...], n: int) -> np.ndarray:
    """Apply a ``2**k x 2**k`` gate on ``sites`` of a state or unitary.

    ``psi`` has shape ``(2**n,)`` or ``(2**n, cols)``.
    """
    k = len(sites)
    cols = psi.shape[1:] if psi.ndim > 1 else ()
    t = psi.reshape((2,) * n + cols)
    g = gate.reshape((2,) * (2 * k))
    t = np.tensordot(g, t, axes=(list(range(k, 2 * k)), list(sites)))
    # acted-on axes are now in front; move them back
    t = np.moveaxis(t, list(range(k)), list(sites))
    return t.reshape(psi.shape)


def apply_slice(psi: np.ndarray, circuit, n: int) -> np.ndarray:
    for j, g in enumerate(circuit.v_gates):
        psi = apply_gate(psi, g, (j, j + 1), n)
    for j, g in enumerate(circuit.y_gates):
        psi = apply_gate(psi, g, (j,), n)
    for j, g in enumerate(circuit.x_gates):
        psi = apply_gate(psi, g, (j,), n)
    return psi


def dense_propagate(initial: np.ndarray, schedule, coupling, sample) -> np.ndarray:
    """Run the Trotterized pulse on a dense state vector or unitary matrix."""
    from .tebd import build_slice

    initial = np.asarray(initial, dtype=complex)
    n = schedule.n
    if initial.shape[0] != 2**n:
        raise ValueError(f"initial has leading dimension {initial.shape[0]}, expected {2**n}")
    cap = MAX_STATE_QUBITS if initial.ndim == 1 else MAX_UNITARY_QUBITS
    if n > cap:
        raise ValueError(f"dense propagation limited to n <= {cap}, got {n}")
    psi = initial
    for l in range(schedule.bins):
        psi = apply_slice(psi, build_slice(schedule, l, coupling, sample), n)
    return psi


def pauli_string(labels: str) -> np.ndarray:
    """Dense Kronecker product, e.g. ``pauli_string("XIZ")``."""
    return reduce(np.kron, [PAULIS[c] for c in labels])


def heisenberg_dense(n: int) -> np.ndarray:
    """``sum_j XX + YY + ZZ`` on neighbouring pairs, summed from Pauli strings."""
    h = np.zeros((2**n, 2**n), dtype=complex)
    for j in range(n - 1):
        for p in "XYZ":
            labels = ["I"] * n
            labels[j] = labels[j + 1] = p
            h += pauli_string("".join(labels))
    return h


def exact_ground(h: np.ndarray) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of a dense Hermitian matrix."""
    h = np.asarray(h, dtype=complex)
    if h.shape[0] > 2**MAX_STATE_QUBITS:
        raise ValueError("matrix too large for dense diagonalization")
    if not np.allclose(h, h.conj().T, atol=1e-12):
        raise ValueError("matrix is not Hermitian")
    w, v = np.linalg.eigh(h)
    return float(w[0]), v[:, 0]


def kron_all(mats) -> np.ndarray:
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


def embed(op: np.ndarray, site: int, n: int) -> np.ndarray:
    """``1 (x) ... op_site ... (x) 1`` as a dense matrix (tests only)."""
    return kron_all([op if k == site else I2 for k in range(n)])
