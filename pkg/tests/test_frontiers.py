import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, strategies as st

from helpers import commuting_tuple, random_herm, random_unitary
from jensentrace.calculus import get_function
from jensentrace.errors import NonAbelianError
from jensentrace.factory import make_rng
from jensentrace.frontiers import (
    compatible_ordered_pair,
    exp_directional_derivative,
    foreign_state,
    monotone_instance,
    monotone_trace_check,
    ordered_abelian_pair,
    path_derivative,
    path_monotonicity_check,
    path_values,
    positive_ordered_quadruple,
    recheck_rst_instance,
    rst_counterexample_search,
    rst_sides,
    two_factor_monotone,
)
from jensentrace.functionals import TraceFunctional, evaluate, in_centralizer
from jensentrace.serialize import matrix_to_json
from jensentrace.spectral import compatible, fro, psd_leq
from jensentrace.verifiers import PASS, PRECONDITION

TRACE = TraceFunctional.trace()


# --------------------------------------------------------------------------
# monotone trace functions


def test_monotone_equal_tuples():
    f = get_function("exp_sum", 2)
    xs, _, phi, _ = monotone_instance(0, f, 4)
    r = monotone_trace_check(f, xs, xs, phi)
    assert r.verdict == PASS and r.gap == 0.0


def test_monotone_diagonals():
    f = get_function("exp_sum", 2)
    x = [np.diag([0.1, 0.2, 0.3]), np.diag([0.0, 0.5, 0.2])]
    y = [np.diag([0.4, 0.2, 0.9]), np.diag([0.1, 0.5, 0.6])]
    r = monotone_trace_check(f, x, y, TRACE)
    expected = np.exp(np.diag(y[0]) + np.diag(y[1])).sum() - np.exp(np.diag(x[0]) + np.diag(x[1])).sum()
    assert r.verdict == PASS and r.gap == pytest.approx(expected, rel=1e-12)


@given(st.integers(0, 10_000), st.integers(1, 6))
def test_convex_branch_passes(seed, dim):
    f = get_function("exp_sum", 2)
    xs, ys, phi, meta = monotone_instance(seed, f, dim, "convex")
    assert all(psd_leq(a, b) for a, b in zip(xs, ys))
    assert all(in_centralizer(phi, x) for x in xs)
    r = monotone_trace_check(f, xs, ys, phi, seed=seed)
    assert r.verdict == PASS and r.guaranteed and r.metadata["branch"] == "convex"


@given(st.integers(0, 10_000), st.integers(1, 6))
def test_concave_branch_passes(seed, dim):
    f = get_function("sqrt_sum", 2)
    xs, ys, phi, _ = monotone_instance(seed, f, dim, "concave")
    r = monotone_trace_check(f, xs, ys, phi)
    assert r.verdict == PASS and r.metadata["branch"] == "concave"


def test_broken_instance_names_both_branches():
    f = get_function("exp_sum", 2)
    xs, ys, _ = ordered_abelian_pair(3, 4, f.cube)
    r = monotone_trace_check(f, xs, ys, foreign_state(3, 4))
    assert r.verdict == PRECONDITION
    assert "convex branch" in r.reason and "concave branch" in r.reason


def test_monotone_rejects_order_and_decreasing():
    f = get_function("exp_sum", 2)
    xs, ys, phi, _ = monotone_instance(1, f, 3)
    assert monotone_trace_check(f, ys, xs, phi).verdict == PRECONDITION
    g = get_function("abs", 1)
    assert monotone_trace_check(g, [np.zeros((2, 2))], [np.eye(2) * 0.1], TRACE).verdict == PRECONDITION


# --------------------------------------------------------------------------
# path derivative


def _pair(seed, f, mode="trace", legs=(2, 2)):
    return compatible_ordered_pair(seed, legs, f.cube, mode)


@given(st.integers(0, 10_000), st.sampled_from(["trace", "state"]))
def test_path_derivative_matches_central_difference(seed, mode):
    f = get_function("exp_sum", 2)
    xs, ys, phi, _ = _pair(seed, f, mode)
    hs = [b - a for a, b in zip(xs, ys)]
    step = 1e-4
    for t in (0.25, 0.5, 0.75):
        g = path_values(f, xs, ys, phi, [t - step, t + step])
        fd = (g[1] - g[0]) / (2 * step)
        d = path_derivative(f, xs, hs, t, phi)
        assert abs(d - fd) <= 1e-5 * (1 + abs(d))


def test_path_derivative_linear_and_zero():
    f = get_function("linear_sum", 2, cube=[(-5, 5)] * 2)
    xs, ys, phi, _ = _pair(0, f, "state")
    hs = [b - a for a, b in zip(xs, ys)]
    slope = sum(evaluate(phi, h) for h in hs)
    for t in (0.0, 0.3, 1.0):
        assert path_derivative(f, xs, hs, t, phi) == pytest.approx(slope, rel=1e-12)
    g = get_function("exp_sum", 2, cube=f.cube)
    assert path_derivative(g, xs, [np.zeros_like(x) for x in xs], 0.5, phi) == 0.0


def test_path_derivative_rejects_incompatible():
    f = get_function("exp_sum", 2)
    x = [np.diag([0.1, 0.2]), np.diag([0.3, 0.1])]
    h = [np.array([[0, 0.1], [0.1, 0]]), np.zeros((2, 2))]
    with pytest.raises(NonAbelianError):
        path_derivative(f, x, h, 0.5, TRACE)


# --------------------------------------------------------------------------
# path monotonicity


@given(st.integers(0, 10_000), st.sampled_from(["trace", "state"]))
def test_product_on_tensor_pair_passes(seed, mode):
    f = get_function("product", 2, cube=[(0, 1)] * 2)
    xs, ys, phi, _ = _pair(seed, f, mode)
    assert compatible(xs, ys)
    r = path_monotonicity_check(f, xs, ys, phi)
    assert r.verdict == PASS and r.guaranteed
    assert r.metadata["min_step"] >= -1e-12 and r.metadata["grid_size"] == 11


def test_path_constant_for_equal_tuples():
    f = get_function("exp_sum", 2)
    xs, _, phi, _ = _pair(1, f)
    r = path_monotonicity_check(f, xs, xs, phi)
    assert r.verdict == PASS and r.gap == 0.0
    assert abs(r.metadata["min_step"]) <= 1e-12


def test_path_affine_has_constant_slope():
    f = get_function("increasing_affine", 2)
    xs, ys, phi, _ = _pair(2, f, "state")
    grid = np.linspace(0, 1, 6)
    g = path_values(f, xs, ys, phi, grid)
    steps = np.diff(g)
    assert np.allclose(steps, steps[0], rtol=1e-10) and steps[0] >= 0
    assert path_monotonicity_check(f, xs, ys, phi, grid).verdict == PASS


def test_path_requires_compatible_and_centralizing():
    f = get_function("exp_sum", 2)
    xs, ys, _ = ordered_abelian_pair(0, 3, f.cube)
    r = path_monotonicity_check(f, xs, ys, TRACE)
    assert r.verdict == PRECONDITION and "compatible" in r.reason
    xs, ys, _, _ = _pair(0, f)
    r = path_monotonicity_check(f, xs, ys, foreign_state(0, 4))
    assert r.verdict == PRECONDITION and "centralizer" in r.reason


# --------------------------------------------------------------------------
# directional derivative of exp


def _van_loan(a, b):
    # the upper-right block of exp([[a, b], [0, a]]) is the Frechet derivative
    d = a.shape[0]
    big = np.zeros((2 * d, 2 * d), dtype=complex)
    big[:d, :d] = big[d:, d:] = a
    big[:d, d:] = b
    return sla.expm(big)[:d, d:]


def test_dyson_commuting_and_zero(rng):
    (a, b), _, _ = commuting_tuple(rng, 4, 2)
    assert fro(exp_directional_derivative(a, b) - sla.expm(a) @ b) <= 1e-12 * fro(b) * 10
    b = random_herm(rng, 4)
    assert fro(exp_directional_derivative(np.zeros((4, 4)), b) - b) <= 1e-14 * fro(b) * 10


@given(st.integers(0, 10_000), st.integers(1, 6))
def test_dyson_matches_finite_difference_and_block_exp(seed, dim):
    rng = np.random.default_rng(seed)
    a, b = random_herm(rng, dim), random_herm(rng, dim)
    d = exp_directional_derivative(a, b)
    eps = 1e-6
    fd = (sla.expm(a + eps * b) - sla.expm(a)) / eps
    assert fro(d - fd) <= 1e-5 * fro(d)
    assert fro(d - _van_loan(a, b)) <= 1e-10 * (1 + fro(d))
    # cyclicity collapses the integral under the trace
    tr = np.trace(sla.expm(a) @ b)
    assert abs(np.trace(d) - tr) <= 1e-9 * (1 + abs(tr))


def test_dyson_degenerate_spectrum(rng):
    u = random_unitary(rng, 5)
    a = (u * np.array([0.3, 0.3, 0.3 + 1e-10, -1.0, 2.0])) @ u.conj().T
    b = random_herm(rng, 5)
    d = exp_directional_derivative(a, b)
    assert fro(d - _van_loan(a, b)) <= 1e-9 * fro(d)


def test_dyson_shape_mismatch():
    with pytest.raises(ValueError):
        exp_directional_derivative(np.eye(2), np.eye(3))


# --------------------------------------------------------------------------
# two factors


def test_two_factor_trivial_cases():
    x1, y1, x2, y2 = positive_ordered_quadruple(0, 4)
    r = two_factor_monotone(x1, y1, x1, y1, TRACE)
    assert r.gap == 0.0 and r.verdict == PASS
    r = two_factor_monotone(np.zeros((4, 4)), y1, x2, y2, TRACE)
    assert r.lhs == 0.0 and r.rhs >= 0


@given(st.integers(0, 10_000), st.integers(1, 6))
def test_two_factor_random_passes(seed, dim):
    x1, y1, x2, y2 = positive_ordered_quadruple(seed, dim)
    r = two_factor_monotone(x1, y1, x2, y2, TRACE)
    assert r.verdict == PASS and r.guaranteed


def test_two_factor_preconditions():
    x1, y1, x2, y2 = positive_ordered_quadruple(1, 3)
    assert two_factor_monotone(x2, y1, x1, y2, TRACE).verdict == PRECONDITION
    assert two_factor_monotone(x1, y1, x2, y2, foreign_state(1, 3)).verdict == PRECONDITION
    assert two_factor_monotone(-x1 - np.eye(3), y1, x2, y2, TRACE).verdict == PRECONDITION
    # a scaled trace is still a trace
    assert two_factor_monotone(x1, y1, x2, y2, TraceFunctional(2 * np.eye(3))).verdict == PASS


# --------------------------------------------------------------------------
# three factors


def test_rst_sides_equal_tuples():
    rng = make_rng(0)
    xs, _, _ = commuting_tuple(rng, 4, 3)
    xs = [x + 3 * np.eye(4) for x in xs]
    lhs, rhs = rst_sides(xs, xs)
    assert lhs == rhs
    assert lhs == pytest.approx(np.trace(xs[0] @ xs[1] @ xs[2]).real, rel=1e-10)


def test_rst_control_arm_has_no_candidates():
    out = rst_counterexample_search(0, 300, arm="compatible")
    assert out["candidate"] is None and out["flagged"] == 0
    assert out["min_gap"] >= -1e-9


def test_rst_search_is_deterministic():
    a = rst_counterexample_search(7, 40)
    b = rst_counterexample_search(7, 40)
    assert a["min_gap"] == b["min_gap"] and a["worst"] == b["worst"]
    assert a["trials"] == 40 and a["dims"] == [2, 6]
    with pytest.raises(ValueError):
        rst_counterexample_search(0, 1, arm="nope")


def _doc(xs, ys):
    return {"x": [matrix_to_json(m) for m in xs], "y": [matrix_to_json(m) for m in ys]}


def test_recheck_rejects_order_violation():
    eye = np.eye(3)
    check = recheck_rst_instance(_doc([1.01 * eye] * 3, [eye] * 3))
    assert check["commutator"] == 0.0
    assert check["order_margin"] == pytest.approx(-0.01, abs=1e-12)
    assert check["gap"] == pytest.approx(3 - 3 * 1.01**3, rel=1e-12)
    assert not check["confirmed"]


def test_recheck_agrees_with_float_sides():
    out = rst_counterexample_search(3, 20)
    check = recheck_rst_instance(out["worst"])
    assert check["gap"] == pytest.approx(out["worst"]["gap"], abs=1e-9 * (1 + abs(check["rhs"])))
    assert check["order_margin"] >= -1e-12 and check["min_eigenvalue"] >= -1e-12
    assert check["confirmed"] == (check["gap"] < -1e-12 * (1 + abs(check["lhs"]) + abs(check["rhs"])))
