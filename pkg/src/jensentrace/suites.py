"""Verifier suites: one seeded instance builder plus verifier per suite id.

A suite turns a cell ``(seed, dim, function)`` into an
:class:`~jensentrace.verifiers.InequalityReport` and an instance manifest
from which the cell can be regenerated. For tensor suites ``dim`` is the
dimension of each leg.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .calculus import ScalarFunction, arity_of, get_function
from .factory import (
    compatible_family_eq7,
    compatible_family_eq8,
    make_rng,
    random_field,
    random_hermitian,
    random_leg_fields,
    random_leg_tuple,
    random_unital_column,
    tensor_field,
)
from .frontiers import (
    compatible_ordered_pair,
    monotone_instance,
    monotone_trace_check,
    path_monotonicity_check,
    positive_ordered_quadruple,
    rst_counterexample_search,
    sin_decomposition_lp,
    two_factor_monotone,
)
from .functionals import TraceFunctional, centralizing_state
from .spectral import hermitian
from .verifiers import (
    DEFAULT_TOL,
    FAIL,
    PASS,
    PRECONDITION,
    STATEMENTS,
    InequalityReport,
    jensen_block_zero,
    jensen_constant_tuple,
    jensen_field_multivar,
    jensen_mixture,
    jensen_one_var_field,
    jensen_subalgebra_tensor,
    jensen_trace_matrix,
    make_report,
    trace_convexity_segment,
)

CANDIDATE = "candidate"
LP_BOUND = (2 * np.pi) ** -2


@dataclass(frozen=True)
class Cell:
    index: int
    suite: str
    seed: int
    dim: int
    function: Optional[str]
    tol: float
    options: tuple = ()

    @property
    def opts(self) -> dict:
        return dict(self.options)


@dataclass(frozen=True)
class Suite:
    id: str
    default_function: Optional[str]
    preconditions: str
    cells: str  # "grid": seed x dim x function, "seed": one per seed, "single": one cell
    run: Callable[[Cell], tuple[InequalityReport, dict]]


def _arity(name: str, seed: int, choices=(2, 3)) -> int:
    fixed = arity_of(name)
    return fixed if fixed is not None else choices[seed % len(choices)]


def _function(cell: Cell, n: int) -> ScalarFunction:
    return get_function(cell.function, n, seed=cell.seed)


def _meta(cell: Cell, **extra) -> dict:
    return {"seed": cell.seed, "dim": cell.dim, "function": cell.function, **extra}


def fit_tuples(tuples, cube, margin: float = 0.05):
    """Affinely map variable ``i`` of every tuple into the interior of ``cube[i]``.

    One map ``x -> alpha_i x + beta_i`` per variable, shared by all tuples,
    preserves commutation, compatibility and the cross-node conditions.
    """
    out = [list(t) for t in tuples]
    for i, (a, b) in enumerate(cube):
        w = np.concatenate([np.linalg.eigvalsh(t[i]) for t in tuples])
        lo, hi = w.min(), w.max()
        span = hi - lo
        inner = (b - a) * (1 - 2 * margin)
        alpha = inner / span if span > 0 else 1.0
        beta = a + margin * (b - a) - alpha * lo
        for t in out:
            t[i] = hermitian(alpha * t[i] + beta * np.eye(t[i].shape[0]))
    return [tuple(t) for t in out]


# --------------------------------------------------------------------------
# runners


def _thm2(cell: Cell):
    f = _function(cell, 1)
    m = 1 + cell.seed % 4
    xs = [random_hermitian(cell.seed, cell.dim, f.cube[0], stream=k) for k in range(m)]
    col = random_unital_column(cell.seed, m, cell.dim)
    meta = _meta(cell, m=m)
    return jensen_trace_matrix(f, xs, col, cell.tol, **meta), {"generators": [col.manifest], **meta}


def _leg_nodes(rng, n: int) -> list[int]:
    # node counts per leg with at most 4 product nodes in total
    nodes = [1] * n
    budget = int(rng.integers(1, 5))
    for i in rng.permutation(n):
        if 2 * int(np.prod(nodes)) <= budget:
            nodes[i] = 2
    return nodes


def _tensor_case(cell: Cell, choices):
    n = _arity(cell.function, cell.seed, choices)
    f = _function(cell, n)
    rng = make_rng(cell.seed, 60)
    # total dimension stays at most 36
    cap = max(d for d in range(1, 37) if d**n <= 36)
    legs = [min(cell.dim, cap)] * n
    fld = tensor_field(cell.seed, legs, _leg_nodes(rng, n), f.cube, scalar_columns=bool(cell.seed % 5 == 4))
    phi = centralizing_state(cell.seed, fld.averaged_tuple())
    return f, fld, phi


def _thm7(cell: Cell):
    f, fld, phi = _tensor_case(cell, (2, 3))
    meta = _meta(cell, nodes=fld.nodes, n=f.n)
    return jensen_field_multivar(f, fld, phi, cell.tol, **meta), {"generators": [fld.manifest], **meta}


def _cor9(cell: Cell):
    f = _function(cell, 1)
    nodes = 1 + cell.seed % 4
    fld = random_field(cell.seed, nodes, cell.dim, 1, f.cube)
    phi = centralizing_state(cell.seed, fld.averaged_tuple())
    meta = _meta(cell, nodes=nodes)
    return jensen_one_var_field(f, fld, phi, cell.tol, **meta), {"generators": [fld.manifest], **meta}


def _compatible_tuples(cell: Cell, n: int, count: int, cube):
    if cell.seed % 2 == 0:
        fam = compatible_family_eq7(cell.seed, cell.dim, n, count=count, scalar_offsets=bool(cell.seed % 4 == 2))
        gen = {"generator": "compatible_family_eq7", "seed": cell.seed, "dim": cell.dim, "n": n, "count": count}
    else:
        legs = [max(2, min(cell.dim, 4))] * n if n > 1 else [cell.dim]
        fam = compatible_family_eq8(cell.seed, legs, None, count)
        gen = {"generator": "compatible_family_eq8", "seed": cell.seed, "legs": legs, "count": count}
    return fit_tuples([t.members for t in fam], cube), gen


def _cor10(cell: Cell):
    n = _arity(cell.function, cell.seed, (2,))
    f = _function(cell, n)
    count = 2 + cell.seed % 3
    tuples, gen = _compatible_tuples(cell, n, count, f.cube)
    w = make_rng(cell.seed, 61).dirichlet(np.ones(count))
    ys = [hermitian(sum(wt * t[i] for wt, t in zip(w, tuples))) for i in range(n)]
    phi = centralizing_state(cell.seed, ys)
    meta = _meta(cell, count=count, n=n)
    return jensen_mixture(f, tuples, w, phi, cell.tol, **meta), {"generators": [gen], **meta}


def _worst(reports: list[InequalityReport]) -> InequalityReport:
    for r in reports:
        if r.verdict == PRECONDITION:
            return r
    fails = [r for r in reports if r.verdict == FAIL]
    pool = fails or reports
    return min(pool, key=lambda r: r.gap / (1.0 + abs(r.lhs) + abs(r.rhs)))


def _cor11(cell: Cell):
    n = _arity(cell.function, cell.seed, (2,))
    f = _function(cell, n)
    (x, y), gen = _compatible_tuples(cell, n, 2, f.cube)
    meta = _meta(cell, n=n)
    reps = trace_convexity_segment(f, x, y, TraceFunctional.trace(), None, cell.tol, **meta)
    return _worst(reps), {"generators": [gen], **meta}


def _cor12(cell: Cell):
    f, fld, phi = _tensor_case(cell, (2, 3))
    meta = _meta(cell, nodes=fld.nodes, n=f.n)
    return jensen_subalgebra_tensor(f, fld, phi, cell.tol, **meta), {"generators": [fld.manifest], **meta}


def _leg_phi(cell: Cell, ys):
    return TraceFunctional.trace() if cell.seed % 2 else centralizing_state(cell.seed, ys)


def _cor13(cell: Cell):
    n = _arity(cell.function, cell.seed, (2, 3))
    f = _function(cell, n)
    legs = [min(cell.dim, 4)] * n
    lf = random_leg_fields(cell.seed, legs, 1 + cell.seed % 3, f.cube)
    ys = [
        hermitian(sum(w * (a.conj().T @ x @ a) for w, a, x in zip(lf.weights[i], lf.columns[i], lf.values[i])))
        for i in range(n)
    ]
    meta = _meta(cell, n=n)
    return jensen_block_zero(f, lf, _leg_phi(cell, ys), cell.tol, **meta), {"generators": [lf.manifest], **meta}


def _cor14(cell: Cell):
    n = _arity(cell.function, cell.seed, (2, 3))
    f = _function(cell, n)
    legs = [min(cell.dim, 4)] * n
    lf = random_leg_fields(cell.seed, legs, 1 + cell.seed % 3, f.cube, with_values=False)
    xs = random_leg_tuple(cell.seed, legs, f.cube).members
    eye = np.eye(lf.dim)
    ys = [
        hermitian(sum(w * (a.conj().T @ xs[i] @ a) for w, a in zip(lf.weights[i], lf.columns[i]))
                  + (eye - lf.leg_mass(i)) @ xs[i])
        for i in range(n)
    ]
    meta = _meta(cell, n=n)
    gen = {"generator": "random_leg_tuple", "seed": cell.seed, "legs": legs}
    return jensen_constant_tuple(f, xs, lf, _leg_phi(cell, ys), cell.tol, **meta), {
        "generators": [lf.manifest, gen], **meta}


def _thm16(cell: Cell):
    n = _arity(cell.function, cell.seed, (2,))
    f = _function(cell, n)
    if f.claimed_convex and f.claimed_concave:
        branch = "convex" if cell.seed % 2 == 0 else "concave"
    else:
        branch = "convex" if f.claimed_convex else "concave"
    x, y, phi, gen = monotone_instance(cell.seed, f, cell.dim, branch)
    meta = _meta(cell, n=n)
    return monotone_trace_check(f, x, y, phi, cell.tol, **meta), {"generators": [gen], **meta}


def _prop18(cell: Cell):
    n = _arity(cell.function, cell.seed, (2,))
    f = _function(cell, n)
    legs = [min(cell.dim, 4)] * n
    mode = "trace" if cell.seed % 2 == 0 else "state"
    x, y, phi, gen = compatible_ordered_pair(cell.seed, legs, f.cube, mode)
    meta = _meta(cell, n=n)
    return path_monotonicity_check(f, x, y, phi, None, cell.tol, **meta), {"generators": [gen], **meta}


def _two_factor(cell: Cell):
    x1, y1, x2, y2 = positive_ordered_quadruple(cell.seed, cell.dim)
    meta = {"seed": cell.seed, "dim": cell.dim}
    gen = {"generator": "positive_ordered_quadruple", "seed": cell.seed, "dim": cell.dim}
    return two_factor_monotone(x1, y1, x2, y2, TraceFunctional.trace(), cell.tol, **meta), {
        "generators": [gen], **meta}


def _rst(cell: Cell):
    opts = cell.opts
    trials = int(opts.get("trials", 1000))
    dims = tuple(opts.get("dims", (2, 6)))
    arm = opts.get("arm", "general")
    res = rst_counterexample_search(cell.seed, trials, dims, arm)
    worst = res["worst"]
    cand = res["candidate"]
    meta = {"seed": cell.seed, "arm": arm, "trials": trials, "dims": list(dims),
            "min_gap": res["min_gap"], "flagged": res["flagged"]}
    src = cand or worst
    rep = InequalityReport(
        "rst_search", src["lhs"], src["rhs"], src["gap"], cell.tol,
        CANDIDATE if cand else PASS,
        # compatible pairs are covered by the path theorem
        guaranteed=(arm == "compatible"), metadata=meta,
    )
    if cand and arm == "compatible":
        rep.verdict = FAIL
    return rep, {"search": res, **meta}


def _sin_lp(cell: Cell):
    N = int(cell.opts.get("N", 101))
    res = sin_decomposition_lp(N)
    meta = {"seed": None, "N": N, "optimum": res.optimum, "dual_bound": res.dual_bound}
    return make_report("sin_lp", LP_BOUND, res.optimum, cell.tol, **meta), {"lp": res.to_json(), **meta}


SUITES: dict[str, Suite] = {
    s.id: s
    for s in [
        Suite("thm2", "square",
              "f convex of one variable; x_k Hermitian with spectra in the interval; sum a_k* a_k = 1.",
              "grid", _thm2),
        Suite("thm7", "exp_sum",
              "f convex on the cube; node tuples abelian; sum w a* a = 1; averaged tuple y abelian and in the "
              "centralizer of phi (centralizer precondition, checked directly).",
              "grid", _thm7),
        Suite("cor9", "square",
              "f convex of one variable; unital column field; y in the centralizer of phi.",
              "grid", _cor9),
        Suite("cor10", "exp_sum",
              "f convex; tuples pairwise compatible ([x_it, x_js] = [x_jt, x_is]); probability weights; "
              "mixture in the centralizer of phi.",
              "grid", _cor10),
        Suite("cor11", "exp_sum",
              "f convex; x and y abelian and compatible ([x_i, y_j] = [x_j, y_i]); tau a trace. "
              "One row per cell: the worst point of an 11-point segment grid.",
              "grid", _cor11),
        Suite("cor12", "exp_sum",
              "f convex; x_it supported on tensor leg i; unital field; y in the centralizer of phi.",
              "grid", _cor12),
        Suite("cor13", "exp_sum",
              "f convex with 0 in every interval; columns and values supported on their legs; "
              "sum of leg masses is 1; y in the centralizer of phi.",
              "grid", _cor13),
        Suite("cor14", "exp_sum",
              "f convex; x_i and the columns supported on leg i; sum_i b_i = 1; y in the centralizer of phi.",
              "grid", _cor14),
        Suite("thm16", "exp_sum",
              "f increasing in each variable; abelian x <= y; convex f with every x_i in the centralizer, "
              "or concave f with every y_i in the centralizer.",
              "grid", _thm16),
        Suite("prop18", "product",
              "f increasing in each variable; x and y compatible with x <= y inside the cube; "
              "every x_i and y_i in the centralizer of phi.",
              "grid", _prop18),
        Suite("two_factor", None,
              "positive x1 <= x2 and y1 <= y2; tau a trace; no commutation required.",
              "grid", _two_factor),
        Suite("rst_search", None,
              "OPEN QUESTION: whether r s t is an increasing trace function on positive abelian triples is "
              "undecided. Searches x <= y; verdict 'candidate' marks a counterexample confirmed at 1e-12 in "
              "high precision. The compatible arm is a control where monotonicity is a theorem. "
              "Options: trials, arm (general|compatible); dims gives the dimension range.",
              "seed", _rst),
        Suite("sin_lp", None,
              "grid LP lower bound on the uniform distance from sin on [-pi/2, pi/2] to sums of an increasing "
              "convex and an increasing concave function; lhs is (2 pi)^-2, rhs the LP optimum. Option: N.",
              "single", _sin_lp),
    ]
}

REPORT_COLUMNS = ["inequality-id", "paper-ref", "seed", "lhs", "rhs", "gap", "tol", "verdict"]


def describe(suite_id: str) -> str:
    """Statement, preconditions and report schema of a suite."""
    if suite_id not in SUITES:
        raise KeyError(f"unknown suite {suite_id!r}; known: {', '.join(SUITES)}")
    s = SUITES[suite_id]
    lines = [
        f"suite: {s.id}",
        f"statement: {STATEMENTS[s.id]}",
        f"preconditions: {s.preconditions}",
        f"default function: {s.default_function or '(none)'}",
        f"cells: {dict(grid='seed x dim x function', seed='one per seed', single='one cell')[s.cells]}",
        "report columns: " + ", ".join(REPORT_COLUMNS + ["cell", "dim", "function", "reason"]),
        "verdicts: pass | fail | precondition-failed" + (" | candidate" if s.id == "rst_search" else ""),
    ]
    return "\n".join(lines)


def run_cell(cell: Cell) -> tuple[InequalityReport, dict]:
    return SUITES[cell.suite].run(cell)


__all__ = ["Cell", "Suite", "SUITES", "describe", "run_cell", "fit_tuples", "CANDIDATE", "DEFAULT_TOL"]
