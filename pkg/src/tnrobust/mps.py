"""Matrix product states.

Site tensors use the axis order ``(left bond, physical, right bond)``. Sites are
indexed from 0. The first site is the most significant bit of the dense
computational-basis index, i.e. dense vectors follow ``kron`` ordering.

:class:`TensorChain` holds the gauge bookkeeping shared with
:class:`tnrobust.mpo.MPO`, which is stored internally as a chain with a fused
``(in, out)`` physical index of extent 4.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, ClassVar, Sequence

import numpy as np

from .tensor_core import TruncationReport, svd_truncate

if TYPE_CHECKING:
    from .mpo import MPO


def _left_qr(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    l, d, r = t.shape
    q, rr = np.linalg.qr(t.reshape(l * d, r))
    return q.reshape(l, d, -1), rr


def _right_qr(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # t = L @ Q with Q right-orthonormal
    l, d, r = t.shape
    q, rr = np.linalg.qr(t.reshape(l, d * r).T)
    return q.T.reshape(-1, d, r), rr.T


@dataclass(frozen=True, eq=False)
class TensorChain:
    """Open-boundary chain of rank-3 cores ``(left, phys, right)``.

    Instances are treated as immutable: every operation returns a new chain and
    never writes into an existing core.

    Attributes:
        cores: Site tensors.
        center: Orthogonality center, or ``None`` if the gauge is unknown.
    """

    cores: tuple[np.ndarray, ...]
    center: int | None = None

    #: whether two-site truncation rescales the kept spectrum to unit norm
    renormalize: ClassVar[bool] = False

    def __post_init__(self) -> None:
        cores = tuple(np.asarray(c, dtype=complex) for c in self.cores)
        object.__setattr__(self, "cores", cores)
        if len(cores) < 1:
            raise ValueError("a chain needs at least one site")
        if cores[0].shape[0] != 1 or cores[-1].shape[2] != 1:
            raise ValueError("boundary bonds must have extent 1")
        for k in range(len(cores) - 1):
            if cores[k].shape[2] != cores[k + 1].shape[0]:
                raise ValueError(
                    f"bond mismatch between sites {k} and {k + 1}: "
                    f"{cores[k].shape} vs {cores[k + 1].shape}"
                )
        if self.center is not None and not 0 <= self.center < len(cores):
            raise ValueError(f"center {self.center} out of range")

    # -- basic properties -------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.cores)

    @property
    def bond_dims(self) -> list[int]:
        return [c.shape[2] for c in self.cores[:-1]]

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)

    def _new(self, cores: Sequence[np.ndarray], center: int | None) -> TensorChain:
        # internal constructor: shapes are consistent by construction, skip validation
        obj = object.__new__(type(self))
        object.__setattr__(obj, "cores", tuple(cores))
        object.__setattr__(obj, "center", center)
        return obj

    def _check_site(self, site: int, hi: int | None = None) -> None:
        hi = self.n - 1 if hi is None else hi
        if not 0 <= site <= hi:
            raise IndexError(f"site {site} outside [0, {hi}]")

    # -- gauge -----------------------------------------------------------------

    def canonicalize(self, center: int) -> TensorChain:
        """Mixed-canonical form with the orthogonality center at ``center``."""
        self._check_site(center)
        if self.center == center:
            return self
        cores = list(self.cores)
        if self.center is None:
            lo, hi = 0, self.n - 1
        else:
            lo = hi = self.center
        for k in range(lo, center):
            q, r = _left_qr(cores[k])
            cores[k] = q
            cores[k + 1] = np.tensordot(r, cores[k + 1], axes=(1, 0))
        for k in range(hi, center, -1):
            q, lmat = _right_qr(cores[k])
            cores[k] = q
            cores[k - 1] = np.tensordot(cores[k - 1], lmat, axes=(2, 0))
        return self._new(cores, center)

    def norm(self) -> float:
        if self.center is not None:
            return float(np.linalg.norm(self.cores[self.center]))
        return float(np.sqrt(abs(self.inner(self))))

    # -- gates -----------------------------------------------------------------

    def apply_local(self, op: np.ndarray, site: int, unitary: bool | None = None) -> TensorChain:
        """Apply a ``phys x phys`` matrix to one core.

        Unitary ``op`` keeps the gauge, so the center is carried over; any
        other ``op`` resets it unless it acts on the center itself. Pass
        ``unitary`` to skip the numerical check when the caller knows.
        """
        self._check_site(site)
        cores = list(self.cores)
        cores[site] = np.einsum("ij,ljr->lir", op, cores[site])
        center = self.center
        if center != site and center is not None:
            if unitary is None:
                unitary = np.allclose(op.conj().T @ op, np.eye(op.shape[0]), atol=1e-13)
            if not unitary:
                center = None
        return self._new(cores, center)

    def apply_pair(
        self,
        op: np.ndarray,
        left: int,
        d_max: int,
        cutoff: float = 0.0,
        absorb: str = "right",
    ) -> tuple[TensorChain, TruncationReport]:
        """Apply a two-core operator on ``(left, left + 1)`` and split by truncated SVD.

        The center is first moved into the pair so the truncation is optimal.
        ``absorb`` chooses which side receives the singular values; the center
        ends there.
        """
        self._check_site(left, self.n - 2)
        if absorb not in ("left", "right"):
            raise ValueError(f"absorb must be 'left' or 'right', got {absorb!r}")
        chain = self
        if chain.center not in (left, left + 1):
            chain = chain.canonicalize(left if absorb == "right" else left + 1)
        a, b = chain.cores[left], chain.cores[left + 1]
        l, d, _ = a.shape
        r = b.shape[2]
        theta = np.tensordot(a, b, axes=(2, 0))
        op4 = op.reshape(d, d, d, d)
        theta = np.einsum("abij,lijr->labr", op4, theta).reshape(l * d, d * r)
        u, s, v, report = svd_truncate(theta, d_max, cutoff)
        if self.renormalize and report.discarded_weight > 0:
            s = s / np.linalg.norm(s)
        cores = list(chain.cores)
        k = s.size
        if absorb == "right":
            cores[left] = u.reshape(l, d, k)
            cores[left + 1] = (s[:, None] * v).reshape(k, d, r)
            center = left + 1
        else:
            cores[left] = (u * s[None, :]).reshape(l, d, k)
            cores[left + 1] = v.reshape(k, d, r)
            center = left
        return chain._new(cores, center), report

    # -- contractions ---------------------------------------------------------

    def inner(self, other: TensorChain) -> complex:
        """``sum(conj(self) * other)`` over all physical indices."""
        if self.n != other.n:
            raise ValueError(f"length mismatch: {self.n} vs {other.n}")
        env = np.ones((1, 1), dtype=complex)
        for a, b in zip(self.cores, other.cores):
            env = np.tensordot(env, a.conj(), axes=(0, 0))  # (kb, p, ka')
            env = np.tensordot(env, b, axes=([0, 1], [0, 1]))  # (ka', kb')
        return complex(env[0, 0])

    def insertions(self, other: TensorChain, op: np.ndarray) -> np.ndarray:
        """``<self| op_j |other>`` for every site ``j`` (raw, unscaled inner products)."""
        if self.n != other.n:
            raise ValueError(f"length mismatch: {self.n} vs {other.n}")
        n = self.n
        left = [np.ones((1, 1), dtype=complex)]
        for a, b in zip(self.cores[:-1], other.cores[:-1]):
            env = np.tensordot(left[-1], a.conj(), axes=(0, 0))
            left.append(np.tensordot(env, b, axes=([0, 1], [0, 1])))
        right = [np.ones((1, 1), dtype=complex)]
        for a, b in zip(self.cores[:0:-1], other.cores[:0:-1]):
            env = np.tensordot(a.conj(), right[-1], axes=(2, 0))  # (ka, p, kb')
            right.append(np.tensordot(env, b, axes=([1, 2], [1, 2])))
        right.reverse()
        out = np.empty(n, dtype=complex)
        for j in range(n):
            ket = np.einsum("pi,lir->lpr", op, other.cores[j])
            env = np.tensordot(left[j], self.cores[j].conj(), axes=(0, 0))
            env = np.tensordot(env, ket, axes=([0, 1], [0, 1]))
            out[j] = np.sum(env * right[j])
        return out

    def to_dense_vector(self) -> np.ndarray:
        psi = self.cores[0]
        for c in self.cores[1:]:
            psi = np.tensordot(psi, c, axes=(psi.ndim - 1, 0))
        return psi.reshape(-1)


class MPS(TensorChain):
    """Matrix product state of qubits, cores ``(left, 2, right)``."""

    renormalize: ClassVar[bool] = True
    phys_dim: ClassVar[int] = 2
    overlap_scale_power: ClassVar[int] = 0

    def __post_init__(self) -> None:
        super().__post_init__()
        if any(c.shape[1] != 2 for c in self.cores):
            raise ValueError("MPS cores must have physical extent 2")

    @property
    def tensors(self) -> tuple[np.ndarray, ...]:
        return self.cores

    def lift_one(self, gate: np.ndarray) -> np.ndarray:
        return gate

    def lift_two(self, gate: np.ndarray) -> np.ndarray:
        return gate

    def to_dense(self) -> np.ndarray:
        return self.to_dense_vector()


# -- constructors -------------------------------------------------------------


def product_state(bits: Sequence[int]) -> MPS:
    """Computational basis state ``|bits>`` with bond dimension 1."""
    bits = list(bits)
    if not bits:
        raise ValueError("bits must be non-empty")
    cores = []
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"bits must be 0/1, got {b!r}")
        t = np.zeros((1, 2, 1), dtype=complex)
        t[0, b, 0] = 1.0
        cores.append(t)
    return MPS(tuple(cores), center=0)


def ghz_state(n: int) -> MPS:
    """``(|0...0> + |1...1>)/sqrt(2)`` in its exact bond-2 form.

    The first core carries the ``2**-0.5`` amplitude, bulk cores are the
    projectors ``diag(1, 0)`` and ``diag(0, 1)``, the last core selects the
    branch. This form is right-canonical, so the center is site 0.
    """
    if n < 2:
        raise ValueError(f"GHZ state needs n >= 2, got {n}")
    h = 2.0**-0.5
    first = np.zeros((1, 2, 2), dtype=complex)
    first[0, 0, :] = (h, 0.0)
    first[0, 1, :] = (0.0, h)
    bulk = np.zeros((2, 2, 2), dtype=complex)
    bulk[:, 0, :] = [[1.0, 0.0], [0.0, 0.0]]
    bulk[:, 1, :] = [[0.0, 0.0], [0.0, 1.0]]
    last = np.zeros((2, 2, 1), dtype=complex)
    last[:, 0, 0] = (1.0, 0.0)
    last[:, 1, 0] = (0.0, 1.0)
    cores = [first] + [bulk.copy() for _ in range(n - 2)] + [last]
    return MPS(tuple(cores), center=0)


def random_mps(n: int, bond: int, rng: np.random.Generator) -> MPS:
    """Normalized random MPS with bonds capped at ``bond`` and at the exact ceiling."""
    dims = [1] + [min(bond, 2**k, 2 ** (n - k)) for k in range(1, n)] + [1]
    cores = []
    for k in range(n):
        shape = (dims[k], 2, dims[k + 1])
        cores.append(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    psi = MPS(tuple(cores)).canonicalize(0)
    c0 = psi.cores[0] / np.linalg.norm(psi.cores[0])
    return MPS((c0,) + psi.cores[1:], center=0)


def from_dense(vec: np.ndarray, d_max: int | None = None) -> MPS:
    """Exact (or truncated) MPS of a dense ``2**n`` state vector by sequential SVD."""
    vec = np.asarray(vec, dtype=complex)
    n = int(round(np.log2(vec.size)))
    if 2**n != vec.size:
        raise ValueError("vector length must be a power of two")
    d_max = d_max or 2**n
    cores = []
    rest = vec.reshape(1, -1)
    for _ in range(n - 1):
        l = rest.shape[0]
        u, s, v, _ = svd_truncate(rest.reshape(l * 2, -1), d_max)
        cores.append(u.reshape(l, 2, -1))
        rest = s[:, None] * v
    cores.append(rest.reshape(rest.shape[0], 2, 1))
    return MPS(tuple(cores), center=n - 1)


# -- operations ---------------------------------------------------------------


def overlap(a: MPS, b: MPS) -> complex:
    """``<a|b>``."""
    return a.inner(b)


def canonicalize(psi: MPS, center: int) -> MPS:
    return psi.canonicalize(center)


def apply_one_site(psi: MPS, gate: np.ndarray, site: int) -> MPS:
    return psi.apply_local(np.asarray(gate, dtype=complex), site)


def apply_two_site(
    psi: MPS,
    gate: np.ndarray,
    left_site: int,
    d_max: int,
    cutoff: float = 0.0,
    absorb: str = "right",
) -> tuple[MPS, TruncationReport]:
    """Apply a 4x4 gate on ``(left_site, left_site + 1)``.

    The result is renormalized to unit norm whenever the SVD discards weight.
    """
    return psi.apply_pair(np.asarray(gate, dtype=complex), left_site, d_max, cutoff, absorb)


def expectation(psi: MPS, op: MPO) -> float:
    """Real part of ``<psi|op|psi>``; ``psi`` is assumed normalized."""
    return float(np.real(expectation_complex(psi, op)))


def expectation_complex(psi: MPS, op: MPO) -> complex:
    if psi.n != op.n:
        raise ValueError(f"length mismatch: {psi.n} vs {op.n}")
    env = np.ones((1, 1, 1), dtype=complex)  # (bra, mpo, ket)
    for a, w in zip(psi.cores, op.tensors):
        env = np.tensordot(env, a.conj(), axes=(0, 0))  # (w, k, o, a')
        env = np.tensordot(env, w, axes=([0, 2], [0, 2]))  # (k, a', i, w')
        env = np.tensordot(env, a, axes=([0, 2], [0, 1]))  # (a', w', k')
    return complex(env[0, 0, 0])
