"""Dense amplitude kernels.

Arrays have a leading axis of length ``2**m``; any trailing axes are carried
along, which lets the same kernels build unitaries column by column.  Qubit
``q`` is bit ``q`` of the basis index (qubit 0 is the least significant bit).
"""

from functools import lru_cache

import numpy as np

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


@lru_cache(maxsize=64)
def _indices(m):
    idx = np.arange(1 << m)
    idx.setflags(write=False)
    return idx


def apply_1q(psi, m, q, u):
    """Apply the 2x2 matrix ``u`` to qubit ``q``."""
    rest = psi.shape[1:]
    view = psi.reshape((1 << (m - 1 - q), 2, 1 << q) + rest)
    out = np.einsum("ij,ajb...->aib...", u, view)
    return out.reshape(psi.shape)


def apply_x(psi, m, q):
    return apply_mcx(psi, m, (), q)


def apply_mcx(psi, m, controls, target):
    """Flip ``target`` on every basis state whose ``controls`` are all 1."""
    idx = _indices(m)
    cmask = 0
    for c in controls:
        cmask |= 1 << c
    tbit = 1 << target
    src = idx[((idx & cmask) == cmask) & ((idx & tbit) == 0)]
    out = psi.copy()
    out[src] = psi[src | tbit]
    out[src | tbit] = psi[src]
    return out


def apply_phase(psi, m, qubits, phase):
    """Multiply amplitudes whose ``qubits`` are all 1 by ``phase``."""
    idx = _indices(m)
    mask = 0
    for q in qubits:
        mask |= 1 << q
    out = psi.copy()
    out[(idx & mask) == mask] *= phase
    return out


def apply_matrix(psi, m, qubits, u):
    """Apply a ``2**k x 2**k`` matrix to the listed qubits.

    Bit ``j`` of the row/column index of ``u`` addresses ``qubits[j]``.
    """
    k = len(qubits)
    rest = psi.shape[1:]
    tensor = psi.reshape((2,) * m + rest)
    axes = [m - 1 - q for q in reversed(qubits)]
    ut = u.reshape((2,) * (2 * k))
    moved = np.tensordot(ut, tensor, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(moved, list(range(k)), axes)
    return out.reshape(psi.shape)


def ry(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def marginal(probs, m, qubits):
    """Marginal distribution of ``qubits`` as an array indexed by their bits."""
    idx = _indices(m)
    key = np.zeros_like(idx)
    for j, q in enumerate(qubits):
        key |= ((idx >> q) & 1) << j
    return np.bincount(key, weights=probs, minlength=1 << len(qubits))


def align_phase(v, tol=1e-12):
    """Rotate ``v`` so that its first significant entry is real and positive."""
    flat = v.ravel()
    nz = np.flatnonzero(np.abs(flat) > tol)
    if nz.size == 0:
        return v
    z = flat[nz[0]]
    return v * (abs(z) / z)
