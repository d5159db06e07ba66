"""Harmonic-oscillator basis operators and tensor-product helpers.

Energies are in GHz (h = 1) and phases in radians throughout.  All matrices
are dense numpy arrays; mode Hamiltonians come out real symmetric.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ModeBasis:
    """Truncated harmonic-oscillator basis for one circuit mode.

    `ell` is the dimensionless oscillator length; for a mode with charging
    energy E_C and inductive energy E_L it is (8 E_C / E_L)**0.25.
    """

    dim: int
    ell: float

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"mode basis needs dim >= 2, got {self.dim}")
        if not self.ell > 0.0:
            raise ValueError(f"oscillator length must be positive, got {self.ell}")

    @classmethod
    def from_energies(cls, e_c, e_l, dim):
        return cls(dim, (8.0 * e_c / e_l) ** 0.25)


def build_mode_operators(basis):
    """Phase, charge and lowering operators of one mode.

    phi = ell (a + a^dag)/sqrt(2),  n = i (a^dag - a)/(sqrt(2) ell),
    so that [phi, n] = i on all but the last retained level.
    """
    a = destroy(basis.dim)
    phi = basis.ell / np.sqrt(2.0) * (a + a.T)
    n = 1j / (np.sqrt(2.0) * basis.ell) * (a.T - a)
    return {"phase_op": phi, "charge_op": n, "lowering_op": a}


def tensor_embed(op, mode_index, dims):
    """Embed a single-mode operator into the product space at mode_index."""
    if not 0 <= mode_index < len(dims):
        raise IndexError(f"mode index {mode_index} outside {len(dims)} modes")
    if op.shape != (dims[mode_index], dims[mode_index]):
        raise ValueError(
            f"operator shape {op.shape} does not match mode dim {dims[mode_index]}")
    return embed(op, mode_index, dims)


def destroy(dim):
    """Annihilation operator in a truncated number basis."""
    return np.diag(np.sqrt(np.arange(1.0, dim)), 1)


def oscillator_length(e_c, e_l):
    """Dimensionless oscillator length ell = (8 E_C / E_L)**0.25 of an LC mode."""
    return (8.0 * e_c / e_l) ** 0.25


def phase_operator(e_c, e_l, dim):
    """Phase operator phi = ell (a + a^dag)/sqrt(2) in the mode's HO basis."""
    a = destroy(dim)
    return oscillator_length(e_c, e_l) / np.sqrt(2.0) * (a + a.T)


def charge_operator(e_c, e_l, dim):
    """Conjugate charge n = i (a^dag - a)/(sqrt(2) ell); purely imaginary."""
    a = destroy(dim)
    return 1j / (np.sqrt(2.0) * oscillator_length(e_c, e_l)) * (a.T - a)


def charge_squared(e_c, e_l, dim):
    """n^2 as a real symmetric matrix, -(a^dag - a)^2 / (2 ell^2)."""
    a = destroy(dim)
    d = a.T - a
    return -(d @ d) / (2.0 * oscillator_length(e_c, e_l) ** 2)


def cos_phi(phi, offset=0.0):
    """cos(phi + offset) by spectral calculus.

    phi must be real symmetric.  Used for junction terms, where `offset`
    carries the external flux in radians.
    """
    w, v = np.linalg.eigh(phi)
    m = (v * np.cos(w + offset)) @ v.T
    return 0.5 * (m + m.T)


def kron_chain(mats):
    """Tensor product of a list of matrices, left factor = slowest index."""
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def embed(op, slot, dims):
    """Embed a single-mode operator at position `slot` of the product space."""
    mats = [np.eye(d) for d in dims]
    mats[slot] = op
    return kron_chain(mats)


def embed_pair(op_i, slot_i, op_j, slot_j, dims):
    """Product op_i (x) op_j acting on two distinct slots."""
    if slot_i == slot_j:
        raise ValueError("slots must differ")
    mats = [np.eye(d) for d in dims]
    mats[slot_i] = op_i
    mats[slot_j] = op_j
    return kron_chain(mats)


def product_index(indices, dims):
    """Flat index of the bare product state |indices> for C-ordered kron."""
    idx = 0
    for n, d in zip(indices, dims):
        if not 0 <= n < d:
            raise ValueError(f"label {indices} outside truncation {dims}")
        idx = idx * d + n
    return idx


def fix_eigenvector_signs(vecs):
    """Flip eigenvector columns so each column's largest |entry| is positive.

    Makes eigh output deterministic so downstream matrix elements have
    reproducible signs.
    """
    idx = np.argmax(np.abs(vecs), axis=0)
    picked = vecs[idx, np.arange(vecs.shape[1])]
    if np.iscomplexobj(vecs):
        phase = picked / np.abs(picked)
        return vecs * phase.conj()
    signs = np.where(picked < 0.0, -1.0, 1.0)
    return vecs * signs


def hermiticity_defect(m):
    """Largest |m - m^dag| entry."""
    return float(np.max(np.abs(m - m.conj().T)))
