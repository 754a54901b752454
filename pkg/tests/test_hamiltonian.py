import numpy as np
import pytest

from entropy_transport.basis import FockBasis, SystemSpec, build_basis
from entropy_transport.hamiltonian import (
    build_hamiltonian,
    hubbard_matrix,
    is_hermitian,
    read_coo,
    region_number_operator,
    write_coo,
)

import oracles


def test_dimer_spectrum():
    H = hubbard_matrix(FockBasis(2, 1, 1), J=1.0, U=0.0, potentials=[0, 0])
    np.testing.assert_allclose(np.linalg.eigvalsh(H.toarray()), [-2, 0, 0, 2], atol=1e-12)


def test_doublon_is_eigenstate_without_hopping():
    b = FockBasis(3, 1, 1)
    H = hubbard_matrix(b, J=0.0, U=3.0, potentials=[0, 0, 0]).toarray()
    i = b.lookup(0b010, 0b010)
    v = np.zeros(b.dimension)
    v[i] = 1
    np.testing.assert_array_equal(H @ v, 3 * v)


def test_barrier_is_additive_diagonal():
    spec = SystemSpec(L=4, U=2.0, barrier=(2.5, 5.0))
    b = build_basis(spec)
    H = build_hamiltonian(b, spec).toarray()
    H0 = hubbard_matrix(b, 1.0, 2.0, np.zeros(4)).toarray()
    occ = b.occupations().sum(axis=2)
    expected = occ[:, 1] * 2.5 + occ[:, 2] * 5.0
    np.testing.assert_allclose(H - H0, np.diag(expected), atol=1e-14)


def test_diagonal_matches_counts():
    spec = SystemSpec(L=6, U=3.5, barrier=(1.0, 4.0))
    b = build_basis(spec)
    H = build_hamiltonian(b, spec)
    occ = b.occupations()
    doubly = (occ[:, :, 0] * occ[:, :, 1]).sum(axis=1)
    n = occ.sum(axis=2)
    np.testing.assert_allclose(H.diagonal(), 3.5 * doubly + 1.0 * n[:, 2] + 4.0 * n[:, 3])


@pytest.mark.parametrize("nu,nd", [(1, 1), (2, 0), (0, 2), (1, 0)])
def test_matches_jordan_wigner_full_space(nu, nd):
    L = 4
    pot = [0.0, 2.5, 5.0, 0.0]
    b = FockBasis(L, nu, nd)
    H = hubbard_matrix(b, 1.0, 2.0, pot).toarray()
    Hfull = oracles.hubbard_full(L, 1.0, 2.0, pot)
    idx = [oracles.full_index(L, u, d) for u, d in b.states]
    np.testing.assert_array_equal(H, Hfull[np.ix_(idx, idx)])


def test_full_space_hamiltonian_conserves_spin_numbers():
    Hfull = oracles.hubbard_full(4, 1.0, 2.0, [0.0, 2.5, 5.0, 0.0])
    for N in oracles.number_ops(4):
        assert np.abs(Hfull @ N - N @ Hfull).max() == 0.0


def test_hermitian_and_sparse():
    spec = SystemSpec(L=8, U=3.0, barrier=(3.0, 6.0))
    b = build_basis(spec)
    H = build_hamiltonian(b, spec)
    assert is_hermitian(H)
    dense = H.toarray()
    np.fill_diagonal(dense, 0.0)
    per_row = (dense != 0).sum(axis=1)
    assert per_row.max() <= 2 * (spec.n_up + spec.n_down)


def test_region_number_operator():
    b = FockBasis(4, 1, 1)
    np.testing.assert_array_equal(region_number_operator(b, range(1, 5)).diagonal(), 2.0)
    assert region_number_operator(b, []).count_nonzero() == 0
    op = region_number_operator(b, {4})
    assert op.diagonal()[b.lookup(0b1000, 0b0001)] == 1.0
    with pytest.raises(ValueError):
        region_number_operator(b, {5})


def test_coo_export_roundtrip(tmp_path):
    spec = SystemSpec(L=4, U=2.0, barrier=(2.5, 5.0))
    b = build_basis(spec)
    H = build_hamiltonian(b, spec)
    path = tmp_path / "h.coo"
    write_coo(path, H)
    back = read_coo(path, b.dimension)
    assert (abs(H - back) > 0).nnz == 0
    first = path.read_text().splitlines()[0].split()
    assert len(first) == 3
