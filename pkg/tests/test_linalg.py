import json

import numpy as np
import pytest
from hypothesis import given, strategies as hst

from phasedicke.basis import TypeVector, dicke_state, full_basis, w_state
from phasedicke.errors import PreconditionError, TargetNotFixed
from phasedicke.graphspec import build_graph
from phasedicke.linalg import (
    DensityOperator,
    HermitianOperator,
    eig_hermitian,
    embed_two_party,
    fixed_residual,
    second_largest_eigenvalue,
    sum_operators,
)
from phasedicke import protocols as pr
from phasedicke.strategies import build_dicke_strategy
from phasedicke.symmetry import build_w3_symmetrized_strategy

from oracles import block_decomposition, random_density


def random_hermitian(dim, rng):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


def test_identity_spectrum():
    sp = eig_hermitian(HermitianOperator.identity(full_basis(2, 2), 2))
    assert np.allclose(sp.eigenvalues, [1, 1, 1, 1])


def test_rank_one_spectrum():
    psi = w_state(4)
    sp = eig_hermitian(HermitianOperator.projector(psi, full_basis(4, 2)))
    assert sp.eigenvalues[0] == pytest.approx(1)
    assert np.allclose(sp.eigenvalues[1:], 0)


def test_transposition_graph_spectrum():
    g = build_graph(TypeVector((1, 1, 1)))
    op = HermitianOperator(g.vertices, g.adjacency.astype(float), 3)
    assert np.allclose(eig_hermitian(op).eigenvalues, [3, 0, 0, 0, 0, -3])


@given(hst.integers(1, 12), hst.integers(0, 2**32 - 1))
def test_spectrum_reconstruction_and_order(dim, seed):
    rng = np.random.default_rng(seed)
    basis = full_basis(1, dim)
    H = HermitianOperator(basis, random_hermitian(dim, rng), dim)
    sp = eig_hermitian(H)
    V = sp.eigenvectors
    assert np.all(np.diff(sp.eigenvalues) <= 0)
    assert sp.reconstruction_error(H) <= 1e-9 * dim
    assert np.allclose(V.conj().T @ V, np.eye(dim), atol=1e-10)
    assert H.norm() == pytest.approx(max(abs(sp.eigenvalues[0]), abs(sp.eigenvalues[-1])), abs=1e-10)
    first = V[np.argmax(np.abs(V) > 1e-10, axis=0), np.arange(dim)]
    assert np.all(first.real > 0) and np.allclose(first.imag, 0)


def test_eig_cap_and_hermiticity():
    H = HermitianOperator.identity(full_basis(3, 2), 2)
    with pytest.raises(PreconditionError):
        eig_hermitian(H, cap=4)
    with pytest.raises(PreconditionError):
        HermitianOperator(full_basis(1, 2), np.array([[0, 1], [0, 0]]), 2)


def test_second_eigenvalue_examples():
    psi = dicke_state(TypeVector((2, 1)), 2)
    assert second_largest_eigenvalue(HermitianOperator.projector(psi), psi) == pytest.approx(0, abs=1e-15)
    S = build_dicke_strategy(TypeVector((2, 1)), 2)
    assert second_largest_eigenvalue(S.omega, psi) == pytest.approx(2 / 3, abs=1e-12)
    S2 = build_w3_symmetrized_strategy(1 / 8, 5 / 8)
    assert second_largest_eigenvalue(S2.omega, w_state(3)) == pytest.approx(3 / 8, abs=1e-12)


def test_second_eigenvalue_requires_fixed_target():
    psi = w_state(3)
    op = HermitianOperator.identity(full_basis(3, 2), 2) * 0.5
    with pytest.raises(TargetNotFixed):
        second_largest_eigenvalue(op, psi)


def test_embed_identity():
    rest = [(0,), (1,)]
    op = embed_two_party(np.eye(4), 0, 2, rest, 2)
    assert op.basis == tuple(full_basis(3, 2))
    assert np.allclose(op.matrix, np.eye(8))


def test_embed_same_symbol_term():
    # |11⟩⟨11| on parties (0, 1) times the projector onto rest sequences with content (1,)
    d = 2
    ss = np.zeros((4, 4))
    ss[3, 3] = 1
    op = embed_two_party(ss, 0, 1, [(0,)], d)
    assert op.basis == ((1, 1, 0),)
    assert np.allclose(op.matrix, [[1]])


def test_embed_collision():
    with pytest.raises(PreconditionError):
        embed_two_party(np.eye(4), 1, 1, [(0,)], 2)


def test_pair_test_symmetric_in_labels():
    k = TypeVector((2, 1, 1))
    a = pr.dicke_test(k, 3, 1, 3)[0].op
    # relabel parties 1 <-> 3: the pair test for {1,3} maps to itself
    from phasedicke.symmetry import GroupElement, apply_group_element

    swapped = apply_group_element(a, GroupElement((0, 3, 2, 1), (0.0, 0.0, 0.0)))
    assert swapped.dist(a) < 1e-12


def test_restrict():
    H = build_dicke_strategy(TypeVector((2, 1)), 2).omega
    assert H.restrict(H.basis).dist(H) == 0
    assert H.restrict([]).dim == 0
    with pytest.raises(PreconditionError):
        H.restrict([(1, 1, 1)])


@pytest.mark.parametrize("k", ["2,1", "1,1,1", "2,2", "3,1", "2,1,1", "1,1,1,1", "3,2", "2,2,1", "2,1,1,1"])
def test_block_decomposition(k):
    k = TypeVector.parse(k)
    S = build_dicke_strategy(k, len(k.parts))
    om = S.omega
    blocks = block_decomposition(k)
    covered = set()
    union_eigs = []
    for basis, m in blocks:
        assert np.abs(om.on_basis(union(om.basis, basis)).restrict(basis).matrix - m).max() < 1e-12
        covered.update(basis)
        union_eigs.extend(np.linalg.eigvalsh(m))
    # the blocks exhaust the support of Ω
    assert set(om.support(1e-14)) <= covered
    full = np.linalg.eigvalsh(om.on_basis(union(om.basis, covered)).matrix)
    assert np.allclose(sorted(full), sorted(union_eigs), atol=1e-9)


def union(a, b):
    return sorted(set(a) | set(b))


def test_json_roundtrip():
    rng = np.random.default_rng(3)
    basis = full_basis(2, 2)
    H = HermitianOperator(basis, random_hermitian(4, rng), 2)
    obj = json.loads(json.dumps(H.to_json()))
    assert set(obj) >= {"basis", "entries"}
    assert obj["basis"][0] == "00"
    assert all(r <= c for r, c, _, _ in obj["entries"])
    assert HermitianOperator.from_json(obj).dist(H) < 1e-15


def test_density_validation():
    basis = full_basis(1, 2)
    with pytest.raises(PreconditionError):
        DensityOperator(basis, np.diag([1.5, -0.5]), 2)
    with pytest.raises(PreconditionError):
        DensityOperator(basis, np.diag([0.5, 0.6]), 2)
    rho = random_density(2, np.random.default_rng(0))
    assert DensityOperator(basis, rho, 2).trace() == pytest.approx(1)


def test_fixed_residual_sees_out_of_basis_weight():
    psi = w_state(3)
    op = HermitianOperator.identity([(0, 0, 1), (0, 1, 0)], 2)
    assert fixed_residual(op, psi) == pytest.approx(np.sqrt(1 / 3))


def test_sum_operators_union_basis():
    a = HermitianOperator.identity([(0, 1)], 2)
    b = HermitianOperator.identity([(1, 0)], 2)
    s = sum_operators([a, b], [0.25, 0.75])
    assert s.basis == ((0, 1), (1, 0))
    assert np.allclose(s.matrix, np.diag([0.25, 0.75]))
