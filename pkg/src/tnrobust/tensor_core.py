"""Dense tensor kernels shared by the tensor-network modules.

Tensors are plain ``numpy.ndarray`` objects of dtype ``complex128`` in
row-major order. Everything here is a pure function.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

logger = logging.getLogger(__name__)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


class NumericalError(RuntimeError):
    """A numerical kernel failed (SVD nonconvergence, eigensolver failure, non-finite output)."""


@dataclass(frozen=True)
class TruncationReport:
    """Outcome of a single truncated SVD.

    Attributes:
        kept_rank: Number of singular values retained.
        discarded_weight: Sum of squares of the dropped singular values.
        largest_discarded: Largest dropped singular value (0 if none).
    """

    kept_rank: int
    discarded_weight: float
    largest_discarded: float


def contract(
    a: np.ndarray, b: np.ndarray, axes_a: Sequence[int], axes_b: Sequence[int]
) -> np.ndarray:
    """Sum over paired axes of ``a`` and ``b``.

    The result carries the unpaired axes of ``a`` followed by those of ``b``.

    Raises:
        ValueError: If the paired axes differ in extent or count.
    """
    axes_a = list(axes_a)
    axes_b = list(axes_b)
    if len(axes_a) != len(axes_b):
        raise ValueError(f"axis lists differ in length: {axes_a} vs {axes_b}")
    for i, j in zip(axes_a, axes_b):
        if a.shape[i] != b.shape[j]:
            raise ValueError(
                f"extent mismatch pairing axis {i} (size {a.shape[i]}) "
                f"with axis {j} (size {b.shape[j]})"
            )
    return np.tensordot(a, b, axes=(axes_a, axes_b))


def _svd(m: np.ndarray):
    try:
        return np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        logger.debug("gesdd failed on %s matrix, retrying with gesvd", m.shape)
    try:
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge for matrix of shape {m.shape}") from exc


def svd_truncate(
    m: np.ndarray, d_max: int, cutoff: float = 0.0
) -> tuple[np.ndarray, np.ndarray, np.ndarray, TruncationReport]:
    """Truncated SVD ``m ~ u @ diag(s) @ v``.

    Keeps the ``min(d_max, #{s_k > cutoff * s_1}, rank)`` largest singular
    values (at least one). Singular values come out sorted descending, so ties
    at the boundary are resolved by position.

    Returns:
        ``(u, s, v, report)`` with ``u`` of shape ``(rows, k)`` and ``v`` of
        shape ``(k, cols)``.
    """
    if d_max < 1:
        raise ValueError(f"d_max must be >= 1, got {d_max}")
    if cutoff < 0:
        raise ValueError(f"cutoff must be non-negative, got {cutoff}")
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericalError("non-finite entries passed to svd_truncate")
    u, s, v = _svd(m)
    keep = min(d_max, len(s))
    if s.size:
        keep = min(keep, int(np.count_nonzero(s > cutoff * s[0])))
    keep = max(keep, 1)
    dropped = s[keep:]
    report = TruncationReport(
        kept_rank=keep,
        discarded_weight=float(np.sum(dropped**2)),
        largest_discarded=float(dropped[0]) if dropped.size else 0.0,
    )
    return u[:, :keep], s[:keep], v[:keep, :], report


def single_quadrature_gate(amp: float, dt: float, axis: str) -> np.ndarray:
    """``exp(-i * amp * dt * P)`` for ``P`` the Pauli ``X`` or ``Y``."""
    if axis not in ("X", "Y"):
        raise ValueError(f"axis must be 'X' or 'Y', got {axis!r}")
    theta = amp * dt
    if not np.isfinite(theta):
        raise ValueError("non-finite pulse amplitude or time step")
    return np.cos(theta) * I2 - 1j * np.sin(theta) * PAULIS[axis]


def bond_gate(g: float, jx: float, jy: float, jz: float, dt: float) -> np.ndarray:
    """``exp(-i dt (jx XX + jy YY + (g + jz) ZZ))`` as a 4x4 matrix.

    The three couplings commute and are simultaneously diagonal in the Bell
    basis, so the exponential splits into two 2x2 blocks: ``{|00>, |11>}`` with
    mixing ``jx - jy`` and ``{|01>, |10>}`` with mixing ``jx + jy``.
    """
    zz = g + jz
    if not np.all(np.isfinite([jx, jy, zz, dt])):
        raise ValueError("non-finite coupling or time step")
    even = np.exp(-1j * zz * dt)
    odd = np.exp(1j * zz * dt)
    ce, se = np.cos((jx - jy) * dt), np.sin((jx - jy) * dt)
    co, so = np.cos((jx + jy) * dt), np.sin((jx + jy) * dt)
    gate = np.zeros((4, 4), dtype=complex)
    gate[0, 0] = gate[3, 3] = even * ce
    gate[0, 3] = gate[3, 0] = -1j * even * se
    gate[1, 1] = gate[2, 2] = odd * co
    gate[1, 2] = gate[2, 1] = -1j * odd * so
    return gate
