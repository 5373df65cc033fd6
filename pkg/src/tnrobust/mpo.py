"""Matrix product operators for unitaries and Hamiltonians.

Public site tensors have axes ``(left, in, out, right)``: entry
``W[a, j, i, b]`` multiplies ``|i><j|``. Internally an MPO is a
:class:`~tnrobust.mps.TensorChain` whose physical index fuses ``(in, out)``
into ``2 * in + out``, so gauge moves and compression reuse the MPS code.
Gates act from the left (``G @ U``) on the ``out`` index. Truncation is plain
Frobenius-optimal SVD with no rescaling.
"""

from __future__ import annotations

from typing import ClassVar, Sequence

import numpy as np

from .mps import MPS, TensorChain
from .tensor_core import I2, X, TruncationReport, svd_truncate

CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


class MPO(TensorChain):
    """Matrix product operator on qubits."""

    phys_dim: ClassVar[int] = 4
    overlap_scale_power: ClassVar[int] = 1

    def __post_init__(self) -> None:
        cores = tuple(np.asarray(c, dtype=complex) for c in self.cores)
        # accept either fused (l, 4, r) or (l, in, out, r) cores
        cores = tuple(c.reshape(c.shape[0], 4, c.shape[-1]) if c.ndim == 4 else c for c in cores)
        object.__setattr__(self, "cores", cores)
        super().__post_init__()
        if any(c.shape[1] != 4 for c in self.cores):
            raise ValueError("MPO cores must have fused physical extent 4")

    @property
    def tensors(self) -> tuple[np.ndarray, ...]:
        """Site tensors reshaped to ``(left, in, out, right)``."""
        return tuple(c.reshape(c.shape[0], 2, 2, c.shape[2]) for c in self.cores)

    def lift_one(self, gate: np.ndarray) -> np.ndarray:
        # identity on ``in``, gate on ``out``: block diagonal in the fused index
        out = np.zeros((4, 4), dtype=complex)
        out[:2, :2] = gate
        out[2:, 2:] = gate
        return out

    def lift_two(self, gate: np.ndarray) -> np.ndarray:
        g = gate.reshape(2, 2, 2, 2)  # (o1, o2, o1', o2')
        full = np.einsum("ij,kl,abxy->iakbjxly", I2, I2, g)
        return full.reshape(16, 16)

    def to_dense(self) -> np.ndarray:
        """Dense ``2**n x 2**n`` matrix, rows indexed by ``out``."""
        n = self.n
        t = self.to_dense_vector().reshape([2] * (2 * n))  # (in1, out1, in2, out2, ...)
        perm = list(range(1, 2 * n, 2)) + list(range(0, 2 * n, 2))
        return t.transpose(perm).reshape(2**n, 2**n)


def from_site_matrices(mats: Sequence[np.ndarray]) -> MPO:
    """Bond-1 MPO of a tensor product of 2x2 matrices."""
    cores = []
    for m in mats:
        m = np.asarray(m, dtype=complex)
        cores.append(m.T.reshape(1, 2, 2, 1))  # (in, out) from m[out, in]
    return MPO(tuple(cores), center=None)


def from_dense(u: np.ndarray, d_max: int | None = None) -> MPO:
    """MPO of a dense operator by sequential SVD."""
    u = np.asarray(u, dtype=complex)
    n = int(round(np.log2(u.shape[0])))
    t = u.reshape([2] * (2 * n))  # (out1..outn, in1..inn)
    perm = []
    for k in range(n):
        perm += [n + k, k]
    return _fused_from_vector(t.transpose(perm).reshape(-1), n, d_max)


def _fused_from_vector(vec: np.ndarray, n: int, d_max: int | None) -> MPO:
    d_max = d_max or 4**n
    cores = []
    rest = vec.reshape(1, -1)
    for _ in range(n - 1):
        l = rest.shape[0]
        u, s, v, _ = svd_truncate(rest.reshape(l * 4, -1), d_max)
        cores.append(u.reshape(l, 4, -1))
        rest = s[:, None] * v
    cores.append(rest.reshape(rest.shape[0], 4, 1))
    return MPO(tuple(cores), center=n - 1)


def identity_mpo(n: int) -> MPO:
    """``1^{(x) n}`` with bond dimension 1."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    return from_site_matrices([I2] * n)


def parallel_x_mpo(n: int) -> MPO:
    """``X^{(x) n}`` with bond dimension 1."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    return from_site_matrices([X] * n)


def parallel_cnot_mpo(n: int) -> MPO:
    """CNOT on every pair ``(2k, 2k + 1)``, control on the even site.

    Each CNOT is split exactly as ``|0><0| (x) 1 + |1><1| (x) X``, giving bond 2
    inside a pair and bond 1 between pairs.
    """
    if n < 2 or n % 2:
        raise ValueError(f"parallel CNOT needs even n >= 2, got {n}")
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    ctrl = np.zeros((1, 2, 2, 2), dtype=complex)
    targ = np.zeros((2, 2, 2, 1), dtype=complex)
    for k, (proj, op) in enumerate(((p0, I2), (p1, X))):
        ctrl[0, :, :, k] = proj.T
        targ[k, :, :, 0] = op.T
    cores = []
    for _ in range(n // 2):
        cores += [ctrl.copy(), targ.copy()]
    return MPO(tuple(cores), center=None)


def trace_overlap(a: MPO, b: MPO) -> complex:
    """``tr(a^dagger b) / 2**n``."""
    return a.inner(b) / 2**a.n


def mpo_apply_one_site(u: MPO, gate: np.ndarray, site: int) -> MPO:
    """``gate_site @ u``."""
    return u.apply_local(u.lift_one(np.asarray(gate, dtype=complex)), site)


def mpo_apply_two_site(
    u: MPO,
    gate: np.ndarray,
    left_site: int,
    d_max: int,
    cutoff: float = 0.0,
    absorb: str = "right",
) -> tuple[MPO, TruncationReport]:
    """``gate_{left, left+1} @ u`` followed by SVD truncation to ``d_max``."""
    return u.apply_pair(u.lift_two(np.asarray(gate, dtype=complex)), left_site, d_max, cutoff, absorb)


def apply_to_mps(op: MPO, psi: MPS) -> MPS:
    """Exact ``op |psi>``; bond dimensions multiply."""
    if op.n != psi.n:
        raise ValueError(f"length mismatch: {op.n} vs {psi.n}")
    cores = []
    for w, a in zip(op.tensors, psi.cores):
        t = np.einsum("wior,kis->wkors", w, a)
        s = t.shape
        cores.append(t.reshape(s[0] * s[1], s[2], s[3] * s[4]))
    return MPS(tuple(cores))


def mpo_product(a: MPO, b: MPO) -> MPO:
    """Exact ``a @ b``."""
    if a.n != b.n:
        raise ValueError(f"length mismatch: {a.n} vs {b.n}")
    cores = []
    for wa, wb in zip(a.tensors, b.tensors):
        # (a @ b)[o, i] = sum_k a[o, k] b[k, i]
        t = np.einsum("akos,bikt->abiost", wa, wb)
        s = t.shape
        cores.append(t.reshape(s[0] * s[1], s[2], s[3], s[4] * s[5]))
    return MPO(tuple(cores))
