"""Sparse Fermi-Hubbard Hamiltonian with a two-site potential barrier."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .basis import DOWN, UP, FockBasis, SystemSpec, hop_element


def hubbard_matrix(basis: FockBasis, J: float, U: float, potentials) -> sp.csr_matrix:
    """Assemble ``-J Σ hops + U Σ n_up n_down + Σ V_j n_j`` in ``basis``.

    ``potentials`` is a length-``L`` array with the on-site potential of site
    ``j`` at index ``j - 1``.
    """
    potentials = np.asarray(potentials, dtype=float)
    if potentials.shape != (basis.L,):
        raise ValueError(f"need {basis.L} site potentials, got shape {potentials.shape}")

    occ = basis.occupations()
    diag = U * (occ[:, :, UP] * occ[:, :, DOWN]).sum(axis=1) + occ.sum(axis=2) @ potentials

    rows, cols, vals = [], [], []
    if J != 0.0:
        for i in range(basis.dimension):
            for j in range(1, basis.L):
                for spin in (UP, DOWN):
                    hit = hop_element(basis, i, j, spin, "right")
                    if hit is None:
                        continue
                    k, sign = hit
                    # c†_{j+1} c_j and its conjugate c†_j c_{j+1} share the sign
                    rows += [k, i]
                    cols += [i, k]
                    vals += [-J * sign, -J * sign]

    n = basis.dimension
    hop = sp.coo_matrix((vals, (rows, cols)), shape=(n, n))
    return (hop + sp.diags(diag)).tocsr()


def build_hamiltonian(basis: FockBasis, spec: SystemSpec) -> sp.csr_matrix:
    if (basis.L, basis.n_up, basis.n_down) != (spec.L, spec.n_up, spec.n_down):
        raise ValueError("basis was not built from this spec")
    return hubbard_matrix(basis, spec.J, spec.U, spec.potentials())


def region_number_operator(basis: FockBasis, sites) -> sp.dia_matrix:
    """Diagonal operator counting particles on ``sites`` (1-based)."""
    sites = sorted(set(int(s) for s in sites))
    if sites and (sites[0] < 1 or sites[-1] > basis.L):
        raise ValueError(f"sites must lie in 1..{basis.L}, got {sites}")
    occ = basis.occupations().sum(axis=2)
    counts = occ[:, [s - 1 for s in sites]].sum(axis=1).astype(float)
    return sp.diags(counts)


def is_hermitian(H) -> bool:
    return (abs(H - H.getH()) > 0).nnz == 0


def write_coo(path, H) -> None:
    """Write ``H`` as zero-based ``row col value`` lines, sorted by (row, col)."""
    coo = sp.coo_matrix(H)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {v:.17g}\n")


def read_coo(path, dimension: int) -> sp.csr_matrix:
    data = np.loadtxt(path, ndmin=2)
    if data.size == 0:
        return sp.csr_matrix((dimension, dimension))
    return sp.coo_matrix(
        (data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))),
        shape=(dimension, dimension),
    ).tocsr()
