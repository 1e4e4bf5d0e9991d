"""Truncated photon x phonon Hilbert space.

States and operators are plain complex numpy arrays. Composite indices are
photon-major: ``index = photon_level * phonon_cutoff + n``, so every photon
level owns a contiguous block of phonon Fock states and operators factor as
``np.kron(photon_op, phonon_op)``.

Photon levels are labelled ``g`` (0), ``e`` (1) and ``e'`` (2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import ShapeError

G, E, EP = 0, 1, 2
LEVEL_NAMES = ("g", "e", "e'")


@dataclass(frozen=True)
class SpaceShape:
    """Dimensions of the truncated photon x phonon product space."""

    photon_levels: int
    phonon_cutoff: int

    def __post_init__(self):
        if self.photon_levels not in (2, 3):
            raise ShapeError(f"photon_levels must be 2 or 3, got {self.photon_levels}")
        if self.phonon_cutoff < 2:
            raise ShapeError(f"phonon_cutoff must be >= 2, got {self.phonon_cutoff}")

    @property
    def dim(self) -> int:
        return self.photon_levels * self.phonon_cutoff

    def index(self, n: int, level: int) -> int:
        """Composite index of ``|n, level>``."""
        if not 0 <= n < self.phonon_cutoff or not 0 <= level < self.photon_levels:
            raise ShapeError(f"|{n},{level}> outside {self}")
        return level * self.phonon_cutoff + n

    def phonon_numbers(self) -> np.ndarray:
        return np.tile(np.arange(self.phonon_cutoff), self.photon_levels)

    def photon_numbers(self) -> np.ndarray:
        return np.repeat(np.arange(self.photon_levels), self.phonon_cutoff)


def default_cutoff(max_fock: int) -> int:
    """Phonon cutoff leaving six empty Fock levels above ``max_fock``."""
    return max(int(max_fock) + 6, 2)


def basis_ket(shape: SpaceShape, n: int, level: int = G) -> np.ndarray:
    psi = np.zeros(shape.dim, dtype=complex)
    psi[shape.index(n, level)] = 1.0
    return psi


def product_ket(shape: SpaceShape, phonon_amplitudes, level: int = G) -> np.ndarray:
    """``sum_n c_n |n, level>``; amplitudes beyond the cutoff are rejected."""
    amps = np.asarray(phonon_amplitudes, dtype=complex)
    if amps.size > shape.phonon_cutoff:
        raise ShapeError(
            f"{amps.size} phonon amplitudes do not fit cutoff {shape.phonon_cutoff}"
        )
    psi = np.zeros(shape.dim, dtype=complex)
    start = level * shape.phonon_cutoff
    psi[start:start + amps.size] = amps
    return psi


def ket_to_dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def phonon_ladder(cutoff: int) -> np.ndarray:
    """Annihilation operator ``b`` with ``<n-1|b|n> = sqrt(n)``."""
    if cutoff < 2:
        raise ShapeError(f"cutoff must be >= 2, got {cutoff}")
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), k=1).astype(complex)


def photon_lowering(levels: int) -> np.ndarray:
    """Cavity ``a`` projected on the lowest levels: ``|g><e| + sqrt(2)|e><e'|``."""
    if levels not in (2, 3):
        raise ShapeError(f"photon levels must be 2 or 3, got {levels}")
    return np.diag(np.sqrt(np.arange(1, levels, dtype=float)), k=1).astype(complex)


def embed_photon(op: np.ndarray, shape: SpaceShape) -> np.ndarray:
    op = np.asarray(op)
    if op.shape != (shape.photon_levels,) * 2:
        raise ShapeError(f"photon operator shape {op.shape} does not match {shape}")
    return np.kron(op, np.eye(shape.phonon_cutoff))


def embed_phonon(op: np.ndarray, shape: SpaceShape) -> np.ndarray:
    op = np.asarray(op)
    if op.shape != (shape.phonon_cutoff,) * 2:
        raise ShapeError(f"phonon operator shape {op.shape} does not match {shape}")
    return np.kron(np.eye(shape.photon_levels), op)


def composite_ladders(shape: SpaceShape) -> tuple[np.ndarray, np.ndarray]:
    """``(a, b)`` acting on the composite space."""
    a = embed_photon(photon_lowering(shape.photon_levels), shape)
    b = embed_phonon(phonon_ladder(shape.phonon_cutoff), shape)
    return a, b


def displacement(eta: float, cutoff: int) -> np.ndarray:
    """``exp(eta (b^dag - b))`` on the truncated Fock space.

    The generator is anti-Hermitian on the truncation, so the result is
    exactly unitary there; matrix elements within a few levels of the cutoff
    deviate from the infinite-space values.
    """
    b = phonon_ladder(cutoff)
    return expm(eta * (b.conj().T - b))


def polaron_dress(a: np.ndarray, b: np.ndarray, eta: float) -> tuple[np.ndarray, np.ndarray]:
    """Dressed ladders ``a exp(-eta (b^dag - b))`` and ``b - eta a^dag a``.

    ``a`` and ``b`` are composite-space operators (photon and phonon ladders
    tensored with the identity on the other factor).
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"ladder shapes differ: {a.shape} vs {b.shape}")
    a_dressed = a @ expm(-eta * (b.conj().T - b))
    b_dressed = b - eta * (a.conj().T @ a)
    return a_dressed, b_dressed


def partial_trace_photon(rho: np.ndarray, shape: SpaceShape) -> np.ndarray:
    """Reduced phonon density matrix; the result is symmetrized to be Hermitian."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (shape.dim, shape.dim):
        raise ShapeError(f"density matrix shape {rho.shape} does not match {shape}")
    p, n = shape.photon_levels, shape.phonon_cutoff
    reduced = np.einsum("iaib->ab", rho.reshape(p, n, p, n))
    return 0.5 * (reduced + reduced.conj().T)


def phonon_populations(rho: np.ndarray, shape: SpaceShape) -> np.ndarray:
    return np.real(np.diag(partial_trace_photon(rho, shape)))


def unitarity_error(u: np.ndarray) -> float:
    """``max |U^dag U - I|``."""
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))
