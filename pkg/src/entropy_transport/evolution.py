"""Exact propagation through a full eigendecomposition (hbar = 1)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .basis import FockBasis, SystemSpec

MAX_DENSE_DIMENSION = 10_000


@dataclass(frozen=True)
class EigenSystem:
    energies: np.ndarray
    vectors: np.ndarray

    def reconstruction_error(self, H) -> float:
        dense = H.toarray() if sp.issparse(H) else np.asarray(H)
        rebuilt = (self.vectors * self.energies) @ self.vectors.conj().T
        return float(np.abs(dense - rebuilt).max())

    def orthonormality_error(self) -> float:
        V = self.vectors
        return float(np.abs(V.conj().T @ V - np.eye(V.shape[1])).max())


def initial_state(basis: FockBasis, spec: SystemSpec) -> np.ndarray:
    """Product state with amplitude 1 on the ``spec.initial_placement`` configuration."""
    psi = np.zeros(basis.dimension, dtype=complex)
    psi[basis.index_of_placement(spec.initial_placement)] = 1.0
    return psi


def eigendecompose(H) -> EigenSystem:
    dense = H.toarray() if sp.issparse(H) else np.asarray(H, dtype=float)
    if dense.shape[0] > MAX_DENSE_DIMENSION:
        raise ValueError(
            f"dimension {dense.shape[0]} exceeds dense limit {MAX_DENSE_DIMENSION}"
        )
    try:
        energies, vectors = np.linalg.eigh(dense)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigendecomposition failed: {exc}") from exc
    return EigenSystem(energies, vectors)


def evolve(psi0: np.ndarray, eig: EigenSystem, times) -> np.ndarray:
    """Return ``psi(t) = V exp(-i E t) V† psi0`` stacked as ``(len(times), dim)``."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1:
        raise ValueError("times must be one-dimensional")
    if times.size and (times[0] < 0 or np.any(np.diff(times) < 0)):
        raise ValueError("times must be nonnegative and ascending")
    coeffs = eig.vectors.conj().T @ psi0
    phases = np.exp(-1j * np.outer(times, eig.energies))
    psis = (phases * coeffs) @ eig.vectors.T
    # the identity propagator is applied exactly, without V V† round-off
    psis[times == 0.0] = psi0
    return psis


def energy_expectation(psis: np.ndarray, H) -> np.ndarray:
    psis = np.atleast_2d(psis)
    return np.real(np.einsum("ti,ti->t", psis.conj(), (H @ psis.T).T))
