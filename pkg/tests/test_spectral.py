import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import commuting_tuple, random_herm, random_unitary
from jensentrace.errors import DimensionMismatch, NonAbelianError, NotHermitian
from jensentrace.factory import compatible_family_eq8
from jensentrace.spectral import (
    AbelianTuple,
    commutator,
    compatible,
    fro,
    hermitian,
    is_abelian,
    jacobi_joint_diagonalize,
    joint_diagonalize,
    psd_leq,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0]).astype(complex)


def test_hermitian_symmetrizes_and_is_read_only():
    h = hermitian([[1, 2], [0, 3]])
    assert np.allclose(h, [[1, 1], [1, 3]])
    with pytest.raises(ValueError):
        h[0, 0] = 5


def test_hermitian_rejects_bad_input():
    with pytest.raises(NotHermitian):
        hermitian(np.zeros((2, 3)))
    with pytest.raises(NotHermitian):
        hermitian([[np.nan, 0], [0, 1]])


def test_commutator_of_diagonals_vanishes():
    assert fro(commutator(np.diag([1.0, 2]), np.diag([3.0, 4]))) == 0.0


def test_pauli_commutator_norm():
    c = commutator(SX, SZ)
    assert np.allclose(c, -2j * SY)
    assert fro(c) == pytest.approx(2 * np.sqrt(2), rel=1e-14)


def test_polynomial_commutes(rng):
    x = random_herm(rng, 5)
    assert fro(commutator(x, x @ x)) <= 1e-12 * (1 + fro(x) ** 3)


def test_commutator_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        commutator(np.eye(2), np.eye(3))


def test_is_abelian_cases(rng):
    members, _, _ = commuting_tuple(rng, 6, 3)
    assert is_abelian(members)[0]
    ok, worst = is_abelian([SX, SZ])
    assert not ok and worst > 0.1
    assert is_abelian([SX])[0]


def test_diagonal_tuple_decomposition():
    a, b = np.diag([1.0, 2, 3]), np.diag([4.0, 4, 5])
    dec = joint_diagonalize([a, b])
    # basis is a permutation with phases; the table rows are the diagonals
    assert np.allclose(np.abs(dec.basis) ** 2 @ np.ones(3), 1)
    assert np.allclose(np.sort(np.abs(dec.basis), axis=0)[-1], 1)
    rows = {tuple(np.round(r, 12)) for r in dec.table}
    assert rows == {(1.0, 4.0), (2.0, 4.0), (3.0, 5.0)}


def test_functional_relation_in_table(rng):
    x = random_herm(rng, 7)
    dec = joint_diagonalize([x, x @ x @ x])
    assert np.max(np.abs(dec.table[:, 1] - dec.table[:, 0] ** 3)) <= 1e-8


def test_tensor_tuple_reconstruction():
    t = compatible_family_eq8(3, (2, 2, 2), count=1)[0]
    dec = joint_diagonalize(t)
    assert dec.residual(t.members) <= 1e-9
    assert dec.dim == 8


@given(st.integers(0, 10_000), st.integers(1, 9), st.integers(1, 4), st.booleans())
def test_joint_diagonalization_reconstructs(seed, dim, n, degenerate):
    rng = np.random.default_rng(seed)
    members, _, _ = commuting_tuple(rng, dim, n, degenerate)
    dec = joint_diagonalize(members)
    assert dec.residual(members) <= 1e-9
    u = dec.basis
    assert fro(u.conj().T @ u - np.eye(dim)) <= 1e-10


@given(st.integers(0, 10_000), st.integers(2, 8))
def test_jacobi_route_agrees(seed, dim):
    rng = np.random.default_rng(seed)
    members, _, table = commuting_tuple(rng, dim, 3, degenerate=True)
    v = jacobi_joint_diagonalize(members)
    for m in members:
        d = v.conj().T @ m @ v
        assert fro(d - np.diag(np.diag(d))) <= 1e-9 * (1 + fro(m))
    # the joint spectrum is a multiset independent of the route
    tab = np.real(np.array([np.diag(v.conj().T @ m @ v) for m in members])).T
    gen = joint_diagonalize(members).table
    assert np.allclose(np.sort(tab, axis=0), np.sort(gen, axis=0), atol=1e-9)
    assert np.allclose(np.sort(tab, axis=0), np.sort(table, axis=0), atol=1e-9)


def test_joint_diagonalize_is_deterministic(rng):
    members, _, _ = commuting_tuple(rng, 6, 2, degenerate=True)
    a, b = joint_diagonalize(members), joint_diagonalize(members)
    assert np.array_equal(a.basis, b.basis) and np.array_equal(a.table, b.table)


def test_projections_resolve_identity(rng):
    members, _, _ = commuting_tuple(rng, 6, 2, degenerate=True)
    dec = joint_diagonalize(members)
    projs = dec.projections()
    assert fro(sum(p for _, p in projs) - np.eye(6)) <= 1e-10
    assert len(projs) < 6
    for lam, p in projs:
        for i, m in enumerate(members):
            assert fro(m @ p - lam[i] * p) <= 1e-9


def test_compatible_cases(rng):
    pair = compatible_family_eq8(0, (2, 3), count=2)
    assert compatible(pair[0].members, pair[1].members)
    assert not compatible([SX, np.zeros((2, 2))], [np.zeros((2, 2)), SZ])
    x, _, _ = commuting_tuple(rng, 4, 2)
    shifted = [m + c * np.eye(4) for m, c in zip(x, (0.3, -2.0))]
    assert compatible(x, shifted)


def test_compatible_equals_segment_abelian(rng):
    # compatibility is exactly abelianness of every point on the segment
    x, _, _ = commuting_tuple(rng, 4, 2)
    y, _, _ = commuting_tuple(rng, 4, 2)
    assert not compatible(x, y)
    mid = [0.5 * (a + b) for a, b in zip(x, y)]
    assert not is_abelian(mid)[0]


def test_psd_leq_cases(rng):
    x = random_herm(rng, 4)
    assert psd_leq(x, x)
    assert psd_leq(np.zeros((2, 2)), np.diag([1.0, 2]))
    assert not psd_leq(np.diag([0.0, 2]), np.diag([1.0, 1]))


@given(st.integers(0, 10_000), st.integers(1, 6))
def test_psd_leq_is_unitarily_invariant(seed, dim):
    rng = np.random.default_rng(seed)
    x, y = random_herm(rng, dim), random_herm(rng, dim)
    u = random_unitary(rng, dim)
    assert psd_leq(x, y) == psd_leq(u @ x @ u.conj().T, u @ y @ u.conj().T)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    assert psd_leq(x, x + g @ g.conj().T)


def test_abelian_tuple_build_validates(rng):
    members, _, _ = commuting_tuple(rng, 4, 2)
    t = AbelianTuple.build(members)
    assert t.n == 2 and t.dim == 4 and len(t) == 2
    with pytest.raises(NonAbelianError):
        AbelianTuple.build([SX, SZ])
    with pytest.raises(ValueError):
        AbelianTuple.build(members, cube=[(0.0, 0.1), (0.0, 0.1)])
