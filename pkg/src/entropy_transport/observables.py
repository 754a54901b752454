"""Post-barrier density and bipartite von Neumann entropy.

A configuration of a block of sites is encoded as a base-4 integer, most
significant digit first, where each site contributes ``2 * n_up + n_down``.
For one site this is the qubit order ``(n_up, n_down)`` of the Jordan-Wigner
string restricted to that site.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .basis import DOWN, UP, FockBasis

EIGENVALUE_CLAMP = 1e-12


@dataclass(frozen=True)
class Bipartition:
    """Subsystem A is a trailing block of sites; B is everything before it."""

    L: int
    A_sites: tuple[int, ...]

    def __post_init__(self):
        a = tuple(sorted(int(s) for s in self.A_sites))
        object.__setattr__(self, "A_sites", a)
        if a and (a[0] < 1 or a[-1] > self.L):
            raise ValueError(f"A sites {a} outside 1..{self.L}")
        if a != tuple(range(self.L - len(a) + 1, self.L + 1)):
            raise ValueError(f"A must be a contiguous trailing block of sites, got {a}")

    @classmethod
    def post_barrier(cls, L: int) -> "Bipartition":
        """A = ``{L/2 + 2, ..., L}``, the sites behind the two barrier sites."""
        return cls(L, tuple(range(L // 2 + 2, L + 1)))

    @property
    def B_sites(self) -> tuple[int, ...]:
        return tuple(range(1, self.L - len(self.A_sites) + 1))


def block_codes(basis: FockBasis, sites) -> np.ndarray:
    """Base-4 configuration code of ``sites`` for every basis state."""
    occ = basis.occupations()
    code = np.zeros(basis.dimension, dtype=np.int64)
    for s in sites:
        code = 4 * code + 2 * occ[:, s - 1, UP] + occ[:, s - 1, DOWN]
    return code


def region_density(psis: np.ndarray, basis: FockBasis, sites) -> np.ndarray | float:
    """``<n_A>`` for one state or a stack of states."""
    occ = basis.occupations().sum(axis=2)
    counts = occ[:, [s - 1 for s in sites]].sum(axis=1).astype(float)
    probs = np.abs(psis) ** 2
    return probs @ counts


@dataclass(frozen=True)
class ReducedDensityMatrix:
    """``rho_A`` restricted to the A configurations that occur in the basis.

    Rows and columns outside ``labels`` are identically zero in the full
    ``4**|A|`` matrix, so they carry no spectral weight.
    """

    matrix: np.ndarray
    labels: np.ndarray
    n_sites: int

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    @property
    def full_dimension(self) -> int:
        return 4**self.n_sites

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def to_dense(self) -> np.ndarray:
        full = np.zeros((self.full_dimension,) * 2, dtype=self.matrix.dtype)
        full[np.ix_(self.labels, self.labels)] = self.matrix
        return full


def _schmidt_matrices(psis, basis, part):
    a_code = block_codes(basis, part.A_sites)
    b_code = block_codes(basis, part.B_sites)
    a_labels, a_idx = np.unique(a_code, return_inverse=True)
    b_labels, b_idx = np.unique(b_code, return_inverse=True)
    psis = np.atleast_2d(psis)
    M = np.zeros((psis.shape[0], b_labels.size, a_labels.size), dtype=complex)
    M[:, b_idx, a_idx] = psis
    return M, a_labels


def reduced_density_matrices(psis, basis: FockBasis, part: Bipartition):
    """Stack of ``rho_A`` matrices for a stack of states, plus their labels."""
    if part.L != basis.L:
        raise ValueError("bipartition and basis disagree on L")
    M, labels = _schmidt_matrices(psis, basis, part)
    rhos = np.einsum("tba,tbc->tac", M, M.conj())
    return rhos, labels


def reduced_density_matrix(psi, basis: FockBasis, part: Bipartition) -> ReducedDensityMatrix:
    rhos, labels = reduced_density_matrices(psi, basis, part)
    return ReducedDensityMatrix(rhos[0], labels, len(part.A_sites))


def entropy_from_eigenvalues(lam: np.ndarray) -> np.ndarray:
    """``-Σ λ ln λ`` along the last axis with ``0 ln 0 = 0``."""
    lam = np.where(lam < EIGENVALUE_CLAMP, 0.0, lam)
    safe = np.where(lam > 0, lam, 1.0)
    # + 0.0 turns the -0.0 of a pure state into 0.0
    return -(lam * np.log(safe)).sum(axis=-1) + 0.0


def von_neumann_entropy(rho) -> float:
    """Entropy in nats of a ``ReducedDensityMatrix`` or a plain Hermitian matrix."""
    if isinstance(rho, ReducedDensityMatrix):
        lam = rho.eigenvalues
    else:
        lam = np.linalg.eigvalsh(np.asarray(rho))
    return float(entropy_from_eigenvalues(lam))


def entanglement_entropy(psis, basis: FockBasis, part: Bipartition, chunk: int = 256) -> np.ndarray:
    """``S_A`` for every state in a stack, in nats."""
    psis = np.atleast_2d(psis)
    out = np.empty(psis.shape[0])
    for start in range(0, psis.shape[0], chunk):
        rhos, _ = reduced_density_matrices(psis[start : start + chunk], basis, part)
        out[start : start + chunk] = entropy_from_eigenvalues(np.linalg.eigvalsh(rhos))
    return out
