"""Trace monotonicity: convex/concave branches, compatible paths and open cases.

Contents
--------
* :func:`monotone_trace_check` for increasing ``f`` that is convex (``x`` in
  the centralizer) or concave (``y`` in the centralizer).
* :func:`path_derivative` and :func:`path_monotonicity_check` along the
  segment between compatible tuples, with :func:`exp_directional_derivative`
  as the closed-form Frechet derivative of the exponential.
* :func:`sin_decomposition_lp`, a linear-programming lower bound on how well
  an increasing target splits into increasing convex plus increasing
  concave parts.
* :func:`two_factor_monotone` and :func:`rst_counterexample_search` for
  products of two and three positive factors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import mpmath
import numpy as np

from . import lp
from .calculus import (
    ScalarFunction,
    apply_multivariate,
    get_function,
    partial_function,
    probe_concave,
    probe_convex,
    probe_increasing,
)
from .errors import InfeasibleLP, NonAbelianError, SpectrumOutsideDomain
from .factory import (
    _gue,
    _hermitian_from,
    embed,
    haar_unitary,
    make_rng,
    manifest,
)
from .functionals import TraceFunctional, centralizing_state, evaluate
from .serialize import matrix_from_json, matrix_to_json
from .spectral import compatible, fro, hermitian, psd_leq
from .verifiers import (
    DEFAULT_TOL,
    FAIL,
    PASS,
    _first,
    abelian_problem,
    centralizer_problem,
    make_report,
    precondition_failed,
    spectrum_problem,
)

DEGENERATE_GAP = 1e-8


def _members(t) -> list[np.ndarray]:
    return list(t.members if hasattr(t, "members") else t)


def _increasing_problem(f: ScalarFunction) -> Optional[str]:
    if not f.claimed_monotone_increasing:
        return f"{f.name} is not declared increasing"
    if not probe_increasing(f):
        return f"{f.name} fails the monotonicity probe"
    return None


def _order_problem(xs, ys) -> Optional[str]:
    for i, (x, y) in enumerate(zip(xs, ys)):
        if not psd_leq(x, y):
            return f"x_{i} <= y_{i} fails"
    return None


def _tuple_problems(f: ScalarFunction, xs, ys) -> Optional[str]:
    return _first(
        None if len(xs) == len(ys) == f.n else f"tuples of sizes {len(xs)}, {len(ys)} for arity {f.n}",
        abelian_problem(xs, "x"),
        abelian_problem(ys, "y"),
        next((p for tup in (xs, ys) for i, m in enumerate(tup) if (p := spectrum_problem(f, i, m))), None),
        _order_problem(xs, ys),
    )


# --------------------------------------------------------------------------
# convex / concave branches


def monotone_trace_check(f: ScalarFunction, x, y, phi: TraceFunctional, tol: float = DEFAULT_TOL, **meta):
    """``phi(f(x)) <= phi(f(y))`` for abelian ``x <= y`` and increasing ``f``.

    Guaranteed when ``f`` is convex and every ``x_i`` centralizes ``phi``
    (branch A) or ``f`` is concave and every ``y_i`` does (branch B). The
    two tuples need not commute with each other.
    """
    ineq = "thm16"
    xs, ys = _members(x), _members(y)
    problem = _first(_increasing_problem(f), _tuple_problems(f, xs, ys))
    if problem:
        return precondition_failed(ineq, problem, tol, **meta)
    convex = f.claimed_convex and probe_convex(f)
    concave = f.claimed_concave and probe_concave(f)
    x_central = centralizer_problem(phi, xs, "x")
    y_central = centralizer_problem(phi, ys, "y")
    if convex and not x_central:
        branch = "convex"
    elif concave and not y_central:
        branch = "concave"
    else:
        reasons = [
            f"convex branch: {'f is not convex' if not convex else x_central}",
            f"concave branch: {'f is not concave' if not concave else y_central}",
        ]
        return precondition_failed(ineq, "; ".join(reasons), tol, **meta)
    try:
        lhs = evaluate(phi, apply_multivariate(f, xs))
        rhs = evaluate(phi, apply_multivariate(f, ys))
    except (SpectrumOutsideDomain, NonAbelianError) as exc:
        return precondition_failed(ineq, str(exc), tol, **meta)
    return make_report(ineq, lhs, rhs, tol, branch=branch, **meta)


# --------------------------------------------------------------------------
# compatible paths


def path_derivative(f: ScalarFunction, x, h, t: float, phi: TraceFunctional) -> float:
    """``sum_k phi(f'_k(z) h_k)`` with ``z = x + t h``.

    Raises
    ------
    NonAbelianError
        If ``x`` and ``x + h`` are not compatible.
    """
    xs, hs = _members(x), _members(h)
    if len(xs) != f.n or len(hs) != f.n:
        raise ValueError(f"tuples of sizes {len(xs)}, {len(hs)} for arity {f.n}")
    ends = [hermitian(a + b) for a, b in zip(xs, hs)]
    if not compatible(xs, ends):
        raise NonAbelianError("x and x + h are not compatible")
    z = [hermitian(a + t * b) for a, b in zip(xs, hs)]
    return float(sum(evaluate(phi, apply_multivariate(partial_function(f, k), z) @ hs[k]) for k in range(f.n)))


def path_values(f: ScalarFunction, x, y, phi: TraceFunctional, grid) -> np.ndarray:
    """``g(t) = phi(f((1 - t) x + t y))`` on ``grid``."""
    xs, ys = _members(x), _members(y)
    return np.array(
        [evaluate(phi, apply_multivariate(f, [hermitian((1 - t) * a + t * b) for a, b in zip(xs, ys)])) for t in grid]
    )


def path_monotonicity_check(f: ScalarFunction, x, y, phi: TraceFunctional, grid=None, tol: float = DEFAULT_TOL, **meta):
    """Monotonicity of ``g(t) = phi(f((1 - t) x + t y))`` for compatible ``x <= y``.

    The verdict passes when ``g(1) >= g(0)``, consecutive grid values never
    decrease and the path derivative stays above ``-1e-8`` times the scale
    of ``g``. ``metadata`` carries the smallest increment and derivative.
    """
    ineq = "prop18"
    xs, ys = _members(x), _members(y)
    grid = np.linspace(0.0, 1.0, 11) if grid is None else np.asarray(grid, dtype=float)
    problem = _first(
        _increasing_problem(f),
        _tuple_problems(f, xs, ys),
        None if compatible(xs, ys) else "tuples are not compatible",
        centralizer_problem(phi, xs, "x"),
        centralizer_problem(phi, ys, "y"),
    )
    if problem:
        return precondition_failed(ineq, problem, tol, **meta)
    hs = [hermitian(b - a) for a, b in zip(xs, ys)]
    try:
        g = path_values(f, xs, ys, phi, grid)
        dg = np.array([path_derivative(f, xs, hs, t, phi) for t in grid])
    except (SpectrumOutsideDomain, NonAbelianError) as exc:
        return precondition_failed(ineq, str(exc), tol, **meta)
    ref = 1.0 + np.abs(g).max()
    steps = np.diff(g)
    rep = make_report(ineq, g[0], g[-1], tol, **meta)
    monotone = bool(np.all(steps >= -tol * ref))
    slope_ok = bool(np.all(dg >= -1e-8 * ref))
    if rep.verdict == PASS and not (monotone and slope_ok):
        rep.verdict = FAIL
        rep.reason = "path values decrease" if not monotone else "negative path derivative"
    rep.metadata.update(
        min_step=float(steps.min(initial=0.0)), min_derivative=float(dg.min()), grid_size=int(grid.size)
    )
    return rep


def exp_directional_derivative(a, b) -> np.ndarray:
    """``integral_0^1 exp(r a) b exp((1 - r) a) dr``, the derivative of ``exp`` at ``a`` along ``b``.

    In the eigenbasis of ``a`` entry ``(i, j)`` of ``b`` is multiplied by the
    divided difference of ``exp`` at ``lambda_i, lambda_j``; pairs closer than
    ``1e-8 (1 + |lambda_i|)`` use ``exp(lambda_i)``.
    """
    a = hermitian(a)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"shapes {a.shape} and {b.shape} differ")
    w, u = np.linalg.eigh(a)
    li, lj = w[:, None], w[None, :]
    diff = li - lj
    close = np.abs(diff) < DEGENERATE_GAP * (1.0 + np.abs(li))
    safe = np.where(close, 1.0, diff)
    # exp(lj) expm1(li - lj) / (li - lj) avoids cancellation for nearby pairs
    dd = np.where(close, np.exp(li), np.exp(lj) * np.expm1(diff) / safe)
    bb = u.conj().T @ b @ u
    return u @ (dd * bb) @ u.conj().T


# --------------------------------------------------------------------------
# convex-plus-concave increasing approximation


@dataclass(frozen=True)
class DecompositionLP:
    """Optimum of the grid problem with an optimal primal certificate.

    ``f_plus`` is increasing and convex on the grid, ``f_minus`` increasing
    and concave, and ``max |target - f_plus - f_minus|`` equals ``optimum``.
    ``nu`` is the dual measure: ``sum |nu| <= 1``, ``sum nu = 0`` and
    ``sum nu_i target(t_i)`` bounds the optimum from below for every feasible
    pair, so ``dual_bound`` certifies the value independently of the primal.
    """

    N: int
    optimum: float
    grid: np.ndarray
    target: np.ndarray
    f_plus: np.ndarray
    f_minus: np.ndarray
    nu: np.ndarray
    dual_bound: float
    convexity: bool = True
    iterations: int = 0

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "optimum": self.optimum,
            "dual_bound": self.dual_bound,
            "convexity": self.convexity,
            "certificate": {
                "grid": [float(v) for v in self.grid],
                "f_plus": [float(v) for v in self.f_plus],
                "f_minus": [float(v) for v in self.f_minus],
                "nu": [float(v) for v in self.nu],
            },
        }


def _convex_basis(N: int) -> np.ndarray:
    # p_i = i d_0 + sum_j g_j max(i - 1 - j, 0) with d_0, g_j >= 0
    i = np.arange(N)[:, None]
    j = np.arange(N - 2)[None, :]
    return np.hstack([np.arange(N)[:, None], np.maximum(i - 1 - j, 0)]).astype(float)


def _concave_basis(N: int) -> np.ndarray:
    # q_i = i e_last + sum_j h_j min(i, j + 1) with e_last, h_j >= 0
    i = np.arange(N)[:, None]
    j = np.arange(N - 2)[None, :]
    return np.hstack([np.arange(N)[:, None], np.minimum(i, j + 1)]).astype(float)


def _increasing_basis(N: int) -> np.ndarray:
    # q_i = sum_{k < i} e_k with e_k >= 0
    return np.tril(np.ones((N, N - 1)), -1).astype(float)


def decomposition_lp_data(N: int, values: np.ndarray, convexity: bool = True):
    """Matrices of the increment-parametrized LP.

    Variables are ``[u, v, c, eps]``: nonnegative increments ``u`` of the
    convex part (second differences when ``convexity``), ``v`` of the
    concave part, a free constant ``c`` and the error ``eps``. Returns
    ``(cost, A_ub, b_ub, free, P, Q)`` where ``P u`` and ``Q v`` are the grid
    values of the two parts (both zero at the left end).
    """
    if convexity:
        P, Q = _convex_basis(N), _concave_basis(N)
    else:
        P, Q = _increasing_basis(N), _increasing_basis(N)
    # unit-norm columns keep the tableau well scaled
    P = P / np.maximum(np.abs(P).max(axis=0), 1.0)
    Q = Q / np.maximum(np.abs(Q).max(axis=0), 1.0)
    kp, kq = P.shape[1], Q.shape[1]
    one = np.ones((N, 1))
    fit = np.hstack([P, Q, one])
    A_ub = np.vstack([np.hstack([fit, -one]), np.hstack([-fit, -one])])
    b_ub = np.concatenate([values, -values])
    cost = np.zeros(kp + kq + 2)
    cost[-1] = 1.0
    free = np.zeros(cost.size, dtype=bool)
    free[kp + kq] = True
    return cost, A_ub, b_ub, free, P, Q


def sin_decomposition_lp(
    N: int = 101,
    target: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    interval=(-np.pi / 2, np.pi / 2),
    convexity: bool = True,
) -> DecompositionLP:
    """Best uniform fit of ``target`` by increasing-convex plus increasing-concave grid functions.

    Solved as a linear program on ``N`` equispaced points of ``interval``
    (``sin`` by default). Restricting any continuous pair to the grid gives a
    feasible grid pair, so the optimum bounds the continuous infimum from
    below. With ``convexity=False`` both parts are merely increasing.

    Raises
    ------
    InfeasibleLP
        Never expected: ``f_plus = f_minus = 0`` is feasible.
    """
    if N < 3:
        raise ValueError("need at least 3 grid points")
    target = np.sin if target is None else target
    t = np.linspace(interval[0], interval[1], N)
    s = np.asarray(target(t), dtype=float)
    cost, A_ub, b_ub, free, P, Q = decomposition_lp_data(N, s, convexity)
    try:
        res = lp.linprog(cost, A_ub, b_ub, free=free)
    except InfeasibleLP as exc:
        raise InfeasibleLP(f"decomposition LP reported infeasible (solver bug): {exc}") from exc
    kp, kq = P.shape[1], Q.shape[1]
    u, v, c = res.x[:kp], res.x[kp:kp + kq], res.x[kp + kq]
    f_plus = P @ u + c
    f_minus = Q @ v
    optimum = float(np.abs(s - f_plus - f_minus).max())
    y = np.maximum(res.ineq_duals, 0.0)
    nu = y[N:] - y[:N]
    return DecompositionLP(N, optimum, t, s, f_plus, f_minus, nu, dual_lower_bound(nu, s, convexity), convexity,
                           res.iterations)


def dual_lower_bound(nu: np.ndarray, values: np.ndarray, convexity: bool = True, tol: float = 1e-9) -> float:
    """Lower bound on the grid optimum carried by a signed measure ``nu``.

    If ``sum |nu| <= 1``, ``sum nu = 0`` and ``nu`` integrates every
    admissible part to a nonpositive number, then ``sum nu_i s_i <= eps``
    for each feasible pair. ``nu`` is rescaled to total variation one;
    returns ``-inf`` when the other two conditions fail beyond ``tol``
    (relative to the largest basis entry).
    """
    nu = np.asarray(nu, dtype=float)
    N = nu.size
    tv = np.abs(nu).sum()
    if tv == 0.0:
        return 0.0
    nu = nu / tv
    P, Q = (_convex_basis(N), _concave_basis(N)) if convexity else (_increasing_basis(N), _increasing_basis(N))
    if abs(nu.sum()) > tol:
        return -np.inf
    worst = max((P.T @ nu).max(initial=-np.inf), (Q.T @ nu).max(initial=-np.inf))
    if worst > tol * N * N:
        return -np.inf
    return float(nu @ values)


# --------------------------------------------------------------------------
# products of positive factors


def _psd_problem(mats, label) -> Optional[str]:
    for i, m in enumerate(mats):
        if np.linalg.eigvalsh(hermitian(m))[0] < -1e-10 * (1.0 + fro(m)):
            return f"{label}_{i} is not positive semidefinite"
    return None


def two_factor_monotone(x1, y1, x2, y2, tau: TraceFunctional, tol: float = DEFAULT_TOL, **meta):
    """``tau(x1 y1) <= tau(x2 y2)`` for positive ``x1 <= x2`` and ``y1 <= y2``.

    ``tau`` must be a trace; no commutation is required.
    """
    ineq = "two_factor"
    mats = [hermitian(m) for m in (x1, y1, x2, y2)]
    problem = _first(
        None if tau.is_tracial() else "functional is not a trace",
        _psd_problem(mats, "factor"),
        None if psd_leq(mats[0], mats[2]) else "x1 <= x2 fails",
        None if psd_leq(mats[1], mats[3]) else "y1 <= y2 fails",
    )
    if problem:
        return precondition_failed(ineq, problem, tol, **meta)
    lhs = evaluate(tau, mats[0] @ mats[1])
    rhs = evaluate(tau, mats[2] @ mats[3])
    return make_report(ineq, lhs, rhs, tol, **meta)


# --------------------------------------------------------------------------
# instance generators


def _lower_parts(cube, frac: float):
    return [(a, a + frac * (b - a)) for a, b in cube]


def _abelian_in(rng, u, parts) -> list[np.ndarray]:
    dim = u.shape[0]
    return [hermitian((u * rng.uniform(lo, hi, dim)) @ u.conj().T) for lo, hi in parts]


def ordered_abelian_pair(seed: int, dim: int, cube, stream: int = 0, same_basis: bool = False):
    """Abelian ``x <= y`` with spectra inside ``cube``; ``y`` in its own random basis.

    ``x`` fills the lower 40% of each interval. ``y`` starts in the lower
    half and each ``y_i`` is raised by a multiple of the identity until it
    dominates ``x_i``, so it stays abelian and below 95% of the interval.
    """
    rng = make_rng(seed, stream, 40)
    u = haar_unitary(rng, dim)
    w = u if same_basis else haar_unitary(rng, dim)
    xs = _abelian_in(rng, u, _lower_parts(cube, 0.4))
    ys = _abelian_in(rng, w, _lower_parts(cube, 0.5))
    for i, (a, b) in enumerate(cube):
        lift = max(0.0, -np.linalg.eigvalsh(ys[i] - xs[i])[0]) + 0.05 * (b - a) * rng.random()
        ys[i] = hermitian(ys[i] + lift * np.eye(dim))
    meta = manifest("ordered_abelian_pair", seed, stream, dim=dim, cube=[list(c) for c in cube], same_basis=same_basis)
    return xs, ys, meta


def monotone_instance(seed: int, f: ScalarFunction, dim: int, branch: str = "convex", stream: int = 0):
    """``(x, y, phi)`` for :func:`monotone_trace_check`.

    ``phi`` has density a random positive function of ``x`` (convex branch)
    or of ``y`` (concave branch).
    """
    xs, ys, meta = ordered_abelian_pair(seed, dim, f.cube, stream)
    anchor = xs if branch == "convex" else ys
    phi = centralizing_state(seed, anchor, stream=stream)
    meta["parameters"].update(branch=branch, function=f.name)
    return xs, ys, phi, meta


def _positive_definite(rng, dim: int) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return hermitian(g @ g.conj().T / dim + 0.1 * np.eye(dim))


def foreign_state(seed: int, dim: int, stream: int = 0) -> TraceFunctional:
    """Random faithful state with no relation to any given tuple."""
    return TraceFunctional(_positive_definite(make_rng(seed, stream, 41), dim))


def compatible_ordered_pair(seed: int, legs: Sequence[int], cube, mode: str = "trace", stream: int = 0):
    """Compatible ``x <= y`` with member ``i`` on tensor leg ``i``, plus a functional.

    ``mode="trace"``: ``y_l = x_l + p_l`` with random positive ``p_l`` and the
    trace as functional. ``mode="state"``: ``y_l = x_l + alpha_l + beta_l (x_l
    - a_l)`` and density ``rho_1 x ... x rho_n`` with ``rho_l`` a positive
    function of ``x_l``, so every member lies in the centralizer.
    """
    legs = tuple(int(d) for d in legs)
    if len(legs) != len(cube):
        raise ValueError("one interval per leg")
    rng = make_rng(seed, stream, 42)
    xs, ys, rhos = [], [], []
    for d, (a, b) in zip(legs, cube):
        L = b - a
        x = _hermitian_from(rng, d, (a + 0.05 * L, a + 0.5 * L))
        if mode == "trace":
            w, u = np.linalg.eigh(_gue(rng, d))
            p = (u * (0.4 * L * rng.random(d))) @ u.conj().T
            y = x + p
        elif mode == "state":
            alpha, beta = 0.2 * L * rng.random(), 0.4 * rng.random()
            y = x + alpha * np.eye(d) + beta * (x - a * np.eye(d))
            lam, u = np.linalg.eigh(x)
            rhos.append((u * np.exp(rng.standard_normal() * (lam - a) / L)) @ u.conj().T)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        xs.append(hermitian(x))
        ys.append(hermitian(y))
    xe = [embed(x, i, legs) for i, x in enumerate(xs)]
    ye = [embed(y, i, legs) for i, y in enumerate(ys)]
    if mode == "trace":
        phi = TraceFunctional.trace()
    else:
        rho = rhos[0]
        for r in rhos[1:]:
            rho = np.kron(rho, r)
        phi = TraceFunctional(rho)
    meta = manifest("compatible_ordered_pair", seed, stream, legs=list(legs), cube=[list(c) for c in cube], mode=mode)
    return xe, ye, phi, meta


def positive_ordered_quadruple(seed: int, dim: int, stream: int = 0):
    """Positive ``x1 <= x2`` and ``y1 <= y2`` in unrelated random bases."""
    rng = make_rng(seed, stream, 43)
    out = []
    for _ in range(2):
        lo = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        lo = lo @ lo.conj().T * rng.random() / dim
        k = int(rng.integers(1, dim + 1))
        v = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
        out.append((hermitian(lo), hermitian(lo + v @ v.conj().T * rng.random() / dim)))
    (x1, x2), (y1, y2) = out
    return x1, y1, x2, y2


# --------------------------------------------------------------------------
# three-factor search

RST_TOL = 1e-9
RECHECK_TOL = 1e-12


def _rst_general(rng, dim: int):
    """Positive abelian triples ``x <= y`` whose bases are related by ``exp(i theta H)``."""
    u = haar_unitary(rng, dim)
    theta = 10.0 ** rng.uniform(-3, 0.5)
    h = _gue(rng, dim)
    lam, v = np.linalg.eigh(h)
    w = u @ ((v * np.exp(1j * theta * lam)) @ v.conj().T)
    # a few repeated eigenvalues make degenerate joint spectra more likely
    table_x = rng.random((dim, 3)) ** rng.uniform(0.5, 3.0)
    table_y = rng.random((dim, 3)) ** rng.uniform(0.5, 3.0)
    if rng.random() < 0.3:
        table_x[: max(1, dim // 2)] = table_x[0]
    xs = [hermitian((u * table_x[:, i]) @ u.conj().T) for i in range(3)]
    ys = [hermitian((w * table_y[:, i]) @ w.conj().T) for i in range(3)]
    for i in range(3):
        lift = max(0.0, -np.linalg.eigvalsh(ys[i] - xs[i])[0])
        ys[i] = hermitian(ys[i] + lift * np.eye(dim))
    return xs, ys


def _rst_compatible(rng, dim: int):
    """``x_i = e_i X + c_i``, ``y_i = e_i X' + c_i'`` with ``e >= 0``, ``X <= X'``, ``c <= c'``."""
    x = _gue(rng, dim)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    xp = x + g @ g.conj().T * rng.random() / dim
    e = rng.random(3)
    low = np.linalg.eigvalsh(x)[0]
    c = -e * low + rng.random(3)
    cp = c + rng.random(3)
    eye = np.eye(dim)
    xs = [hermitian(e[i] * x + c[i] * eye) for i in range(3)]
    ys = [hermitian(e[i] * xp + cp[i] * eye) for i in range(3)]
    return xs, ys


def rst_sides(xs, ys) -> tuple[float, float]:
    """``Tr f(x)`` and ``Tr f(y)`` for ``f(r, s, t) = r s t``, each through the joint calculus."""
    top = max(float(np.linalg.eigvalsh(m)[-1]) for m in list(xs) + list(ys))
    f = get_function("product3", cube=[(0.0, max(top, 1.0))] * 3)
    lhs = float(np.trace(apply_multivariate(f, xs)).real)
    rhs = float(np.trace(apply_multivariate(f, ys)).real)
    return lhs, rhs


def _mp(m: np.ndarray):
    return mpmath.matrix([[mpmath.mpc(complex(v)) for v in row] for row in np.asarray(m)])


def _mp_fro(m) -> mpmath.mpf:
    return mpmath.sqrt(sum(abs(m[i, j]) ** 2 for i in range(m.rows) for j in range(m.cols)))


def _mp_min_eig(m) -> mpmath.mpf:
    h = (m + m.transpose_conj()) / 2
    return min(mpmath.re(v) for v in mpmath.eighe(h, eigvals_only=True))


def recheck_rst_instance(doc: dict, tol: float = RECHECK_TOL, dps: int = 50) -> dict:
    """Independent high-precision re-check of a serialized three-factor instance.

    Works in ``dps`` decimal digits on the stored matrices: each triple must
    commute and be positive, ``x_i <= y_i`` must hold, and
    ``Tr(y1 y2 y3) - Tr(x1 x2 x3)`` (plain products, no joint calculus) must
    fall below ``-tol`` times the scale. Returns the measured quantities and
    a ``confirmed`` flag.
    """
    xs = [matrix_from_json(d) for d in doc["x"]]
    ys = [matrix_from_json(d) for d in doc["y"]]
    with mpmath.workdps(dps):
        X = [_mp(m) for m in xs]
        Y = [_mp(m) for m in ys]
        comm = mpmath.mpf(0)
        for tup in (X, Y):
            for i in range(3):
                for j in range(i + 1, 3):
                    c = tup[i] * tup[j] - tup[j] * tup[i]
                    comm = max(comm, _mp_fro(c) / (1 + _mp_fro(tup[i]) * _mp_fro(tup[j])))
        pos = min(_mp_min_eig(m) for m in X + Y)
        order = min(_mp_min_eig(Y[i] - X[i]) for i in range(3))
        lhs = mpmath.re(sum((X[0] * X[1] * X[2])[k, k] for k in range(X[0].rows)))
        rhs = mpmath.re(sum((Y[0] * Y[1] * Y[2])[k, k] for k in range(Y[0].rows)))
        gap = rhs - lhs
        ref = 1 + abs(lhs) + abs(rhs)
        confirmed = bool(comm <= tol and pos >= -tol and order >= -tol and gap < -tol * ref)
        return {
            "commutator": float(comm),
            "min_eigenvalue": float(pos),
            "order_margin": float(order),
            "lhs": float(lhs),
            "rhs": float(rhs),
            "gap": float(gap),
            "confirmed": confirmed,
        }


def _rst_doc(seed, trial, dim, arm, xs, ys, lhs, rhs) -> dict:
    return {
        "generator": "rst_trial",
        "seed": seed,
        "trial": trial,
        "dim": dim,
        "arm": arm,
        "x": [matrix_to_json(m) for m in xs],
        "y": [matrix_to_json(m) for m in ys],
        "lhs": lhs,
        "rhs": rhs,
        "gap": rhs - lhs,
    }


def rst_counterexample_search(seed: int, trials: int, dims=(2, 6), arm: str = "general", stream: int = 0) -> dict:
    """Random search for abelian positive triples ``x <= y`` with ``Tr(x1x2x3) > Tr(y1y2y3)``.

    ``arm="general"`` relates the two triples only through the order;
    ``arm="compatible"`` draws compatible pairs, where monotonicity is a
    theorem and no candidate may appear. Trial ``k`` uses its own random
    stream, so the result does not depend on evaluation order.

    Returns
    -------
    dict
        ``trials``, ``dims``, ``arm``, ``min_gap`` (relative to
        ``1 + |lhs| + |rhs|``), ``worst`` (serialized instance with the
        smallest gap), ``flagged`` (float-level violations) and
        ``candidate`` (the worst instance confirmed by
        :func:`recheck_rst_instance`, or ``None``).
    """
    if arm not in ("general", "compatible"):
        raise ValueError(f"unknown arm {arm!r}")
    lo, hi = int(dims[0]), int(dims[1])
    draw = _rst_general if arm == "general" else _rst_compatible
    best = None
    best_rel = np.inf
    flagged = 0
    candidate = None
    for k in range(trials):
        rng = make_rng(seed, stream, 50, k)
        dim = int(rng.integers(lo, hi + 1))
        xs, ys = draw(rng, dim)
        lhs, rhs = rst_sides(xs, ys)
        rel = (rhs - lhs) / (1.0 + abs(lhs) + abs(rhs))
        if rel < best_rel:
            best_rel = rel
            best = (k, dim, xs, ys, lhs, rhs)
        if rel < -RST_TOL:
            flagged += 1
            doc = _rst_doc(seed, k, dim, arm, xs, ys, lhs, rhs)
            check = recheck_rst_instance(doc)
            if check["confirmed"] and (candidate is None or doc["gap"] < candidate["gap"]):
                doc["recheck"] = check
                candidate = doc
    worst = _rst_doc(seed, *best[:2], arm, *best[2:]) if best is not None else None
    return {
        "trials": trials,
        "dims": [lo, hi],
        "arm": arm,
        "min_gap": float(best_rel) if best is not None else None,
        "worst": worst,
        "flagged": flagged,
        "candidate": candidate,
    }
