"""Trotterized propagation of MPS and MPO under a pulse schedule.

One slice per bin. Acting on a ket, a slice applies the bond gates left to
right, then every Y rotation, then every X rotation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import CouplingPattern, ParasiticSample, PulseSchedule
from .mps import TensorChain
from .tensor_core import bond_gate, single_quadrature_gate


@dataclass(frozen=True)
class SliceCircuit:
    v_gates: list[np.ndarray]
    y_gates: list[np.ndarray]
    x_gates: list[np.ndarray]

    def dense(self) -> np.ndarray:
        """Full ``2**n`` unitary of the slice (small n only)."""
        from .dense import apply_slice

        n = len(self.x_gates)
        return apply_slice(np.eye(2**n, dtype=complex), self, n)


@dataclass
class GradientTape:
    """Snapshots for exact gradients.

    ``forward[l]`` is the state before slice ``l`` (``forward[L]`` is final),
    ``intra[l]`` the state inside slice ``l`` after its bond and Y layers, and
    ``backward[l]`` the target pulled back to the same time as ``forward[l]``.
    """

    forward: list[TensorChain]
    intra: list[TensorChain]
    circuits: list[SliceCircuit]
    backward: list[TensorChain] | None = None
    discarded: float = 0.0
    backward_discarded: float = field(default=0.0)


def build_slice(
    schedule: PulseSchedule, l: int, coupling: CouplingPattern, sample: ParasiticSample
) -> SliceCircuit:
    """Gates of bin ``l``: bond gates with the parasitic terms folded in, then Y and X rotations."""
    if not 0 <= l < schedule.bins:
        raise IndexError(f"bin {l} outside [0, {schedule.bins - 1}]")
    n, dt = schedule.n, schedule.dt
    if len(coupling.g) != n - 1 or len(sample.jx) != n - 1:
        raise ValueError("coupling/sample do not match the schedule size")
    v = [
        bond_gate(coupling.g[j], sample.jx[j], sample.jy[j], sample.jz[j], dt) for j in range(n - 1)
    ]
    y = [single_quadrature_gate(schedule.y[j, l], dt, "Y") for j in range(n)]
    x = [single_quadrature_gate(schedule.x[j, l], dt, "X") for j in range(n)]
    return SliceCircuit(v, y, x)


def _check(chain: TensorChain, schedule: PulseSchedule, d_max: int) -> None:
    if d_max < 2:
        raise ValueError(f"d_max must be >= 2, got {d_max}")
    if chain.n != schedule.n:
        raise ValueError(f"chain has {chain.n} sites, schedule {schedule.n} qubits")


def apply_slice(
    chain: TensorChain, circuit: SliceCircuit, d_max: int, cutoff: float
) -> tuple[TensorChain, TensorChain, float]:
    """Returns ``(after slice, after bond+Y layers, discarded weight)``."""
    discarded = 0.0
    for j, g in enumerate(circuit.v_gates):
        chain, rep = chain.apply_pair(chain.lift_two(g), j, d_max, cutoff, absorb="right")
        discarded += rep.discarded_weight
    for j, g in enumerate(circuit.y_gates):
        chain = chain.apply_local(chain.lift_one(g), j, unitary=True)
    mid = chain
    for j, g in enumerate(circuit.x_gates):
        chain = chain.apply_local(chain.lift_one(g), j, unitary=True)
    return chain, mid, discarded


def apply_slice_adjoint(
    chain: TensorChain, circuit: SliceCircuit, d_max: int, cutoff: float
) -> tuple[TensorChain, float]:
    discarded = 0.0
    for j, g in enumerate(circuit.x_gates):
        chain = chain.apply_local(chain.lift_one(g.conj().T), j, unitary=True)
    for j, g in enumerate(circuit.y_gates):
        chain = chain.apply_local(chain.lift_one(g.conj().T), j, unitary=True)
    for j in range(len(circuit.v_gates) - 1, -1, -1):
        g = circuit.v_gates[j].conj().T
        chain, rep = chain.apply_pair(chain.lift_two(g), j, d_max, cutoff, absorb="left")
        discarded += rep.discarded_weight
    return chain, discarded


def propagate(
    initial: TensorChain,
    schedule: PulseSchedule,
    coupling: CouplingPattern,
    sample: ParasiticSample,
    d_max: int,
    cutoff: float = 1e-12,
    keep_tape: bool = False,
) -> tuple[TensorChain, GradientTape | None, float]:
    """Apply all slices in order.

    Returns:
        ``(final, tape, total discarded weight)``; ``tape`` is ``None`` unless
        ``keep_tape``.
    """
    _check(initial, schedule, d_max)
    chain = initial
    total = 0.0
    tape = GradientTape([initial], [], []) if keep_tape else None
    for l in range(schedule.bins):
        circuit = build_slice(schedule, l, coupling, sample)
        chain, mid, w = apply_slice(chain, circuit, d_max, cutoff)
        total += w
        if tape is not None:
            tape.forward.append(chain)
            tape.intra.append(mid)
            tape.circuits.append(circuit)
    if tape is not None:
        tape.discarded = total
    return chain, tape, total


def propagate_backward(
    target: TensorChain,
    schedule: PulseSchedule,
    coupling: CouplingPattern,
    sample: ParasiticSample,
    d_max: int,
    cutoff: float = 1e-12,
    circuits: list[SliceCircuit] | None = None,
) -> tuple[list[TensorChain], float]:
    """Pull the target back through every slice adjoint.

    Returns ``(b, discarded)`` where ``b[L]`` is the target and
    ``b[l] = U_l^dagger b[l + 1]``, so ``<b[l]|a[l]>`` is the same for all ``l``.
    """
    _check(target, schedule, d_max)
    L = schedule.bins
    b: list[TensorChain] = [target] * (L + 1)
    total = 0.0
    chain = target
    for l in range(L - 1, -1, -1):
        circuit = circuits[l] if circuits is not None else build_slice(schedule, l, coupling, sample)
        chain, w = apply_slice_adjoint(chain, circuit, d_max, cutoff)
        total += w
        b[l] = chain
    return b, total
