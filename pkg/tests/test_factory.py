import numpy as np
import pytest
from hypothesis import given, strategies as st

from jensentrace.factory import (
    check_field_condition_eq11,
    compatible_family_eq7,
    compatible_pair_eq7,
    compatible_pair_eq8,
    embed,
    haar_unitary,
    leg_part,
    make_rng,
    on_leg,
    planted_table,
    random_abelian_tuple,
    random_field,
    random_hermitian,
    random_leg_fields,
    random_unital_column,
    tensor_field,
)
from jensentrace.spectral import commutator, compatible, fro, is_abelian


def test_rng_is_reproducible_and_streams_differ():
    a = make_rng(7, 1).random(4)
    assert np.array_equal(a, make_rng(7, 1).random(4))
    assert not np.array_equal(a, make_rng(7, 2).random(4))
    assert not np.array_equal(a, make_rng(8, 1).random(4))


def test_haar_unitary_is_unitary():
    u = haar_unitary(make_rng(0), 6)
    assert fro(u.conj().T @ u - np.eye(6)) <= 1e-12


def test_haar_phases_are_uniform():
    # first-entry phase of a Haar unitary is uniform: its mean vanishes
    vals = np.array([haar_unitary(make_rng(s), 3)[0, 0] for s in range(2000)])
    assert abs(np.mean(vals / np.abs(vals))) < 0.06


def test_random_hermitian_intervals():
    assert np.allclose(random_hermitian(0, 4, (0, 0)), 0)
    assert np.allclose(random_hermitian(0, 4, (1, 1)), np.eye(4))
    w = np.linalg.eigvalsh(random_hermitian(3, 5, (0, 1)))
    assert w[0] >= -1e-12 and w[-1] <= 1 + 1e-12
    assert np.array_equal(random_hermitian(3, 5), random_hermitian(3, 5))


def test_abelian_tuple_plants_table():
    t = random_abelian_tuple(2, 5, 3, [(0, 1), (-2, 0), (5, 6)])
    assert is_abelian(t.members)[0]
    table = planted_table(2, 5, 3, [(0, 1), (-2, 0), (5, 6)])
    for i in range(3):
        assert np.allclose(np.sort(np.linalg.eigvalsh(t[i])), np.sort(table[:, i]))
    single = random_abelian_tuple(1, 3, 1)
    assert single.n == 1


@given(st.integers(0, 10_000), st.integers(1, 5), st.integers(1, 6))
def test_unital_column(seed, m, dim):
    col = random_unital_column(seed, m, dim)
    assert col.residual() <= 1e-12
    if m == 1:
        a = col.blocks[0]
        assert fro(a @ a.conj().T - np.eye(dim)) <= 1e-12


@given(st.integers(0, 10_000), st.integers(1, 4), st.integers(1, 5), st.integers(1, 3))
def test_random_field_is_unital(seed, nodes, dim, n):
    fld = random_field(seed, nodes, dim, n)
    assert fld.unital_residual() <= 1e-10
    assert np.all(fld.weights >= 0) and abs(fld.weights.sum() - 1) <= 1e-12
    assert all(is_abelian(t)[0] for t in fld.tuples)


def test_single_node_field_is_a_column():
    fld = random_field(0, 1, 3, 1)
    assert fld.weights[0] == pytest.approx(1.0)
    a = fld.columns[0]
    assert fro(a.conj().T @ a - np.eye(3)) <= 1e-12


def test_embed_and_leg_part_roundtrip():
    rng = make_rng(1)
    op = rng.standard_normal((3, 3))
    x = embed(op, 1, (2, 3, 2))
    assert on_leg(x, 1, (2, 3, 2))
    assert not on_leg(x, 0, (2, 3, 2))
    assert np.allclose(leg_part(x, 1, (2, 3, 2)), op)


def test_eq8_pair_is_compatible():
    x, y = compatible_pair_eq8(0, (2, 2))
    assert x.dim == 4
    assert compatible(x.members, y.members)
    for i in range(2):
        assert on_leg(x[i], i, (2, 2)) and on_leg(y[i], i, (2, 2))


@given(st.integers(0, 10_000), st.integers(2, 6), st.integers(1, 3), st.booleans())
def test_eq7_pairs_are_compatible(seed, dim, n, scalar):
    x, y = compatible_pair_eq7(seed, dim, n, scalar_offsets=scalar)
    worst = 0.0
    for i in range(n):
        for j in range(n):
            r = commutator(x[i], y[j]) - commutator(x[j], y[i])
            worst = max(worst, fro(r) / (1 + fro(x[i]) * fro(y[j]) + fro(x[j]) * fro(y[i])))
    assert worst <= 1e-10


def test_eq7_scalar_offsets_with_other_tuple():
    x, y = compatible_pair_eq7(4, 4, 2, scalar_offsets=True)
    assert compatible(x.members, y.members)


def test_eq7_single_variable_is_arbitrary_hermitian():
    fam = compatible_family_eq7(0, 4, 1, eps=[1.0], count=2, scalar_offsets=True)
    assert not np.allclose(commutator(fam[0][0], fam[1][0]), 0)


def test_eq11_condition_cases():
    # scalar columns with one shared commuting tuple family satisfy it
    fld = tensor_field(0, (2, 2), (2, 1), scalar_columns=True)
    assert check_field_condition_eq11(fld)[0]
    single = random_field(0, 1, 4, 2)
    assert check_field_condition_eq11(single)[0]
    generic = random_field(0, 3, 4, 2)
    ok, worst = check_field_condition_eq11(generic)
    assert not ok and worst > 1e-3


@given(st.integers(0, 10_000))
def test_tensor_field_average_lives_on_legs(seed):
    fld = tensor_field(seed, (2, 3), (2, 2))
    assert fld.unital_residual() <= 1e-10
    ys = fld.averaged_tuple()
    assert is_abelian(ys)[0]
    assert on_leg(ys[0], 0, (2, 3)) and on_leg(ys[1], 1, (2, 3))


@given(st.integers(0, 10_000), st.integers(2, 3))
def test_leg_fields_are_unital(seed, n):
    lf = random_leg_fields(seed, (2,) * n, 2)
    assert lf.unital_residual() <= 1e-10
    for i in range(n):
        b = lf.leg_mass(i)
        # each leg mass is a positive multiple of the identity
        assert fro(b - np.trace(b).real / lf.dim * np.eye(lf.dim)) <= 1e-10


def test_generators_are_deterministic():
    a, b = tensor_field(5, (2, 2), (2, 2)), tensor_field(5, (2, 2), (2, 2))
    assert all(np.array_equal(p, q) for p, q in zip(a.columns, b.columns))
    assert np.array_equal(a.weights, b.weights)
