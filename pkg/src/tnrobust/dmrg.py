"""Two-site DMRG for ground states of MPO Hamiltonians."""

from __future__ import annotations

import logging

import numpy as np
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, LinearOperator, eigsh

from .mpo import MPO, mpo_product
from .mps import MPS, _left_qr, _right_qr, expectation, random_mps
from .tensor_core import NumericalError, svd_truncate

logger = logging.getLogger(__name__)

_DENSE_LIMIT = 128


def _grow_left(env, a, w):
    t = np.tensordot(env, a.conj(), axes=(0, 0))  # (w, k, o, a')
    t = np.tensordot(t, w, axes=([0, 2], [0, 2]))  # (k, a', i, w')
    return np.tensordot(t, a, axes=([0, 2], [0, 1]))  # (a', w', k')


def _grow_right(env, b, w):
    t = np.tensordot(b.conj(), env, axes=(2, 0))  # (a', o, w', k)
    t = np.tensordot(t, w, axes=([1, 2], [2, 3]))  # (a', k, w, i)
    return np.tensordot(t, b, axes=([1, 3], [2, 1]))  # (a', w, k')


def _two_site_matvec(left, w1, w2, right, theta):
    t = np.tensordot(left, theta, axes=(2, 0))  # (a', w, i1, i2, c)
    t = np.tensordot(t, w1, axes=([1, 2], [0, 1]))  # (a', i2, c, o1, v)
    t = np.tensordot(t, w2, axes=([4, 1], [0, 1]))  # (a', c, o1, o2, u)
    return np.tensordot(t, right, axes=([1, 4], [2, 1]))  # (a', o1, o2, c')


def _one_site_matvec(left, w, right, t):
    t = np.tensordot(left, t, axes=(2, 0))  # (a', w, i, c)
    t = np.tensordot(t, w, axes=([1, 2], [0, 1]))  # (a', c, o, v)
    return np.tensordot(t, right, axes=([1, 3], [2, 1]))  # (a', o, c')


def _lowest(apply, theta0, tol, maxiter, where):
    shape = theta0.shape
    dim = theta0.size

    def mv(v):
        return apply(v.reshape(shape)).reshape(-1)

    if dim <= _DENSE_LIMIT:
        h = np.stack([mv(e) for e in np.eye(dim, dtype=complex)], axis=1)
        h = 0.5 * (h + h.conj().T)
        vals, vecs = np.linalg.eigh(h)
        return float(vals[0]), vecs[:, 0].reshape(shape)
    op = LinearOperator((dim, dim), matvec=mv, dtype=complex)
    try:
        vals, vecs = eigsh(op, k=1, which="SA", v0=theta0.reshape(-1), tol=tol, maxiter=maxiter)
    except (ArpackNoConvergence, ArpackError) as exc:
        raise NumericalError(f"Lanczos failed at {where}: {exc}") from exc
    return float(vals[0]), vecs[:, 0].reshape(shape)


def dmrg_ground_state(
    h: MPO,
    d_max: int = 20,
    sweeps: int = 20,
    tol: float = 1e-10,
    seed: int = 0,
    eig_tol: float = 1e-10,
    eig_maxiter: int = 200,
    polish_sweeps: int = 2,
    return_history: bool = False,
):
    """Variational ground state of ``h`` by two-site sweeps.

    Starts from a seeded random MPS at bond ``d_max``, right-canonicalized.
    One sweep is a left-to-right pass followed by a right-to-left pass; it
    stops once the energy changes by less than ``tol`` between sweeps. Then
    ``polish_sweeps`` single-site sweeps relax the truncated tensors at fixed
    bond dimension.

    Returns:
        ``(psi, energy)``, or ``(psi, energy, energies per sweep)`` with
        ``return_history``.
    """
    if d_max < 2:
        raise ValueError(f"d_max must be >= 2, got {d_max}")
    n = h.n
    ws = h.tensors
    psi = random_mps(n, d_max, np.random.default_rng(seed)).canonicalize(0)
    cores = list(psi.cores)
    one = np.ones((1, 1, 1), dtype=complex)
    right = [one] * (n + 1)
    for j in range(n - 1, 0, -1):
        right[j] = _grow_right(right[j + 1], cores[j], ws[j])
    left = [one] * (n + 1)
    energies: list[float] = []
    energy = np.inf
    for sweep in range(sweeps):
        for direction in ("right", "left"):
            sites = range(n - 1) if direction == "right" else range(n - 2, -1, -1)
            for j in sites:
                theta = np.tensordot(cores[j], cores[j + 1], axes=(2, 0))
                energy, theta = _lowest(
                    lambda t: _two_site_matvec(left[j], ws[j], ws[j + 1], right[j + 2], t),
                    theta, eig_tol, eig_maxiter, f"sweep {sweep}, sites ({j}, {j + 1})",
                )
                l, _, _, r = theta.shape
                u, s, v, _ = svd_truncate(theta.reshape(2 * l, 2 * r), d_max, 1e-14)
                s = s / np.linalg.norm(s)
                k = s.size
                if direction == "right":
                    cores[j] = u.reshape(l, 2, k)
                    cores[j + 1] = (s[:, None] * v).reshape(k, 2, r)
                    left[j + 1] = _grow_left(left[j], cores[j], ws[j])
                else:
                    cores[j] = (u * s).reshape(l, 2, k)
                    cores[j + 1] = v.reshape(k, 2, r)
                    right[j + 1] = _grow_right(right[j + 2], cores[j + 1], ws[j + 1])
        energies.append(energy)
        logger.debug("sweep %d energy %.14f", sweep, energy)
        if len(energies) > 1 and abs(energies[-2] - energies[-1]) < tol:
            break
    for sweep in range(polish_sweeps):
        for j in range(n - 1):
            energy, t = _lowest(
                lambda t: _one_site_matvec(left[j], ws[j], right[j + 1], t),
                cores[j], eig_tol, eig_maxiter, f"polish sweep {sweep}, site {j}",
            )
            cores[j], r = _left_qr(t)
            cores[j + 1] = np.tensordot(r, cores[j + 1], axes=(1, 0))
            left[j + 1] = _grow_left(left[j], cores[j], ws[j])
        for j in range(n - 1, 0, -1):
            energy, t = _lowest(
                lambda t: _one_site_matvec(left[j], ws[j], right[j + 1], t),
                cores[j], eig_tol, eig_maxiter, f"polish sweep {sweep}, site {j}",
            )
            cores[j], lmat = _right_qr(t)
            cores[j - 1] = np.tensordot(cores[j - 1], lmat, axes=(2, 0))
            right[j] = _grow_right(right[j + 1], cores[j], ws[j])
        energies.append(energy)
    cores[0] = cores[0] / np.linalg.norm(cores[0])
    psi = MPS(tuple(cores), center=0)
    if return_history:
        return psi, energy, energies
    return psi, energy


def energy_variance(psi: MPS, h: MPO) -> float:
    """``<H^2> - <H>^2`` for normalized ``psi``."""
    e = expectation(psi, h)
    e2 = expectation(psi, mpo_product(h, h))
    return e2 - e**2
