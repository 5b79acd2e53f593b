"""Both sides of the Jensen-type trace inequalities, with precondition checks.

Every verifier returns an :class:`InequalityReport`. A report whose
preconditions hold is marked ``guaranteed``: the inequality is a theorem
there, so a failing verdict is an anomaly (an implementation bug), not a
mathematical event.

The left side always goes through the joint calculus of the averaged tuple
``y``; the right side through the per-node calculus of the ``x_t``. The two
paths share no intermediate results.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .calculus import ScalarFunction, apply_multivariate, probe_convex
from .errors import NonAbelianError, SpectrumOutsideDomain
from .factory import DiscreteField, LegFields, on_leg
from .functionals import TraceFunctional, evaluate, in_centralizer
from .spectral import SPECTRUM_SLACK, commutator, compatible, fro, hermitian, is_abelian

DEFAULT_TOL = 1e-9

PASS, FAIL, PRECONDITION = "pass", "fail", "precondition-failed"

#: statement checked by each suite id, recorded in every report
STATEMENTS = {
    "thm2": "matrix Jensen trace inequality for unital columns",
    "thm7": "multivariate Jensen inequality for unital column fields and centralizing functionals",
    "cor9": "one-variable Jensen inequality for unital column fields",
    "cor10": "multivariate Jensen inequality for probability mixtures of compatible tuples",
    "cor11": "trace convexity along segments of compatible tuples",
    "cor12": "multivariate Jensen inequality on mutually commuting tensor legs",
    "cor13": "leg-supported columns with zero padding",
    "cor14": "leg-supported columns around a fixed tuple",
    "thm16": "trace monotonicity for increasing convex or concave functions",
    "prop18": "trace monotonicity along compatible paths",
    "two_factor": "two-factor product trace monotonicity",
    "rst_search": "three-factor product trace monotonicity (open)",
    "sin_lp": "sine is not uniformly close to convex-plus-concave increasing sums",
}


@dataclass
class InequalityReport:
    """Verdict on ``lhs <= rhs``.

    ``verdict`` is ``"pass"`` iff ``gap >= -tol (1 + |lhs| + |rhs|)``.
    Reports with failed preconditions carry ``lhs = rhs = gap = None``.
    """

    inequality_id: str
    lhs: Optional[float]
    rhs: Optional[float]
    gap: Optional[float]
    tol: float
    verdict: str
    guaranteed: bool = False
    reason: Optional[str] = None
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    @property
    def anomaly(self) -> bool:
        return self.verdict == FAIL and self.guaranteed

    def to_row(self) -> dict:
        return {
            "inequality-id": self.inequality_id,
            "paper-ref": STATEMENTS.get(self.inequality_id, ""),
            "seed": self.metadata.get("seed"),
            "lhs": self.lhs,
            "rhs": self.rhs,
            "gap": self.gap,
            "tol": self.tol,
            "verdict": self.verdict,
        }

    def to_dict(self) -> dict:
        return asdict(self)


def make_report(
    ineq: str, lhs: float, rhs: float, tol: float = DEFAULT_TOL, guaranteed: bool = True, **metadata
) -> InequalityReport:
    lhs, rhs = float(lhs), float(rhs)
    gap = rhs - lhs
    ok = gap >= -tol * (1.0 + abs(lhs) + abs(rhs))
    return InequalityReport(ineq, lhs, rhs, gap, tol, PASS if ok else FAIL, guaranteed, None, metadata)


def precondition_failed(ineq: str, reason: str, tol: float = DEFAULT_TOL, **metadata) -> InequalityReport:
    return InequalityReport(ineq, None, None, None, tol, PRECONDITION, False, reason, metadata)


# --------------------------------------------------------------------------
# precondition helpers; each returns a reason string or None


def convexity_problem(f: ScalarFunction) -> Optional[str]:
    if not f.claimed_convex:
        return f"{f.name} is not declared convex"
    if not probe_convex(f):
        return f"{f.name} fails the midpoint convexity probe"
    return None


def spectrum_problem(f: ScalarFunction, i: int, x: np.ndarray) -> Optional[str]:
    a, b = f.cube[i]
    w = np.linalg.eigvalsh(x)
    slack = SPECTRUM_SLACK * (1.0 + max(abs(a), abs(b)))
    if w[0] < a - slack or w[-1] > b + slack:
        return f"spectrum of variable {i} [{w[0]:.6g}, {w[-1]:.6g}] leaves [{a:.6g}, {b:.6g}]"
    return None


def abelian_problem(members: Sequence[np.ndarray], label: str) -> Optional[str]:
    ok, worst = is_abelian(members)
    if not ok:
        return f"{label} is not abelian (relative commutator {worst:.3e})"
    return None


def centralizer_problem(phi: TraceFunctional, members: Sequence[np.ndarray], label: str) -> Optional[str]:
    for i, y in enumerate(members):
        if not in_centralizer(phi, y):
            return f"{label}_{i} is not in the centralizer of the functional"
    return None


def _first(*problems) -> Optional[str]:
    for p in problems:
        if p:
            return p
    return None


def _node_problems(f: ScalarFunction, tuples) -> Optional[str]:
    for t, tup in enumerate(tuples):
        if len(tup) != f.n:
            return f"node {t} carries {len(tup)} variables, {f.name} takes {f.n}"
        p = abelian_problem(tup, f"node tuple {t}")
        if p:
            return p
        for i, x in enumerate(tup):
            p = spectrum_problem(f, i, x)
            if p:
                return f"node {t}: {p}"
    return None


# --------------------------------------------------------------------------
# shared evaluation


def _field_sides(f, weights, columns, tuples, phi):
    """``phi(f(sum w a* x a))`` and ``phi(sum w a* f(x) a)``."""
    ys = _averaged(weights, columns, tuples, f.n)
    lhs = evaluate(phi, apply_multivariate(f, ys))
    rhs_op = sum(w * (a.conj().T @ apply_multivariate(f, tup) @ a) for w, a, tup in zip(weights, columns, tuples))
    rhs = evaluate(phi, hermitian(rhs_op))
    return ys, lhs, rhs


def _averaged(weights, columns, tuples, n):
    return [
        hermitian(sum(w * (a.conj().T @ tup[i] @ a) for w, a, tup in zip(weights, columns, tuples)))
        for i in range(n)
    ]


def _guarded(ineq, tol, meta, compute):
    try:
        return compute()
    except (SpectrumOutsideDomain, NonAbelianError) as exc:
        return precondition_failed(ineq, str(exc), tol, **meta)


# --------------------------------------------------------------------------
# verifiers


def jensen_trace_matrix(f: ScalarFunction, xs: Sequence[np.ndarray], column, tol: float = DEFAULT_TOL, **meta):
    """``Tr f(sum a_k* x_k a_k) <= Tr sum a_k* f(x_k) a_k`` for convex ``f`` of one variable."""
    ineq = "thm2"
    blocks = column.blocks if hasattr(column, "blocks") else tuple(column)
    tuples = [(x,) for x in xs]
    problem = _first(
        None if f.n == 1 else f"{f.name} has arity {f.n}, expected 1",
        convexity_problem(f),
        None if len(blocks) == len(xs) else "column length differs from number of matrices",
        _column_problem(blocks, np.ones(len(blocks))),
        _node_problems(f, tuples) if f.n == 1 else None,
    )
    if problem:
        return precondition_failed(ineq, problem, tol, **meta)
    weights = np.ones(len(blocks))

    def compute():
        _, lhs, rhs = _field_sides(f, weights, blocks, tuples, TraceFunctional.trace())
        return make_report(ineq, lhs, rhs, tol, **meta)

    return _guarded(ineq, tol, meta, compute)


def _column_problem(columns, weights, tol: float = 1e-10) -> Optional[str]:
    dim = columns[0].shape[1]
    s = sum(w * a.conj().T @ a for w, a in zip(weights, columns))
    r = fro(s - np.eye(dim))
    return None if r <= tol else f"column field is not unital (residual {r:.3e})"


def _field_verifier(ineq, f, fld: DiscreteField, phi, tol, meta, extra=None):
    if fld.tuples is None:
        return precondition_failed(ineq, "field carries no tuples", tol, **meta)
    problem = _first(
        None if fld.n == f.n else f"field has {fld.n} variables, {f.name} takes {f.n}",
        convexity_problem(f),
        None if np.all(fld.weights >= 0) else "negative node weight",
        _column_problem(fld.columns, fld.weights),
        _node_problems(f, fld.tuples) if fld.n == f.n else None,
        extra() if extra else None,
    )
    if problem:
        return precondition_failed(ineq, problem, tol, **meta)
    ys = _averaged(fld.weights, fld.columns, fld.tuples, f.n)
    problem = _first(abelian_problem(ys, "averaged tuple y"), centralizer_problem(phi, ys, "y"))
    if problem:
        return precondition_failed(ineq, problem, tol, **meta)

    def compute():
        _, lhs, rhs = _field_sides(f, fld.weights, fld.columns, fld.tuples, phi)
        return make_report(ineq, lhs, rhs, tol, **meta)

    return _guarded(ineq, tol, meta, compute)


def jensen_field_multivar(f: ScalarFunction, fld: DiscreteField, phi: TraceFunctional, tol: float = DEFAULT_TOL, **meta):
    """``phi(f(sum w a* x a)) <= phi(sum w a* f(x) a)`` for a convex ``f`` of ``n`` variables.

    Preconditions: node tuples commute, the field is unital, the averaged
    tuple ``y`` commutes and lies in the centralizer of ``phi``.
    """
    return _field_verifier("thm7", f, fld, phi, tol, meta)


def jensen_one_var_field(f: ScalarFunction, fld: DiscreteField, phi: TraceFunctional, tol: float = DEFAULT_TOL, **meta):
    """One-variable field inequality; ``y`` only has to centralize ``phi``."""
    if f.n != 1:
        return precondition_failed("cor9", f"{f.name} has arity {f.n}, expected 1", tol, **meta)
    return _field_verifier("cor9", f, fld, phi, tol, meta)


def mixture_condition(tuples, tol: float = 1e-10) -> tuple[bool, float]:
    """``[x_it, x_js] = [x_jt, x_is]`` for all ``i, j, s, t``; returns ``(ok, worst)``."""
    worst = 0.0
    n = len(tuples[0])
    for t in range(len(tuples)):
        for s in range(len(tuples)):
            for i in range(n):
                for j in range(n):
                    r = commutator(tuples[t][i], tuples[s][j]) - commutator(tuples[t][j], tuples[s][i])
                    ref = 1.0 + fro(tuples[t][i]) * fro(tuples[s][j]) + fro(tuples[t][j]) * fro(tuples[s][i])
                    worst = max(worst, fro(r) / ref)
    return worst <= tol, worst


def jensen_mixture(f: ScalarFunction, tuples, weights, phi: TraceFunctional, tol: float = DEFAULT_TOL, **meta):
    """``phi(f(sum w_t x_t)) <= phi(sum w_t f(x_t))`` for pairwise compatible tuples."""
    ineq = "cor10"
    tuples = [tuple(t.members if hasattr(t, "members") else t) for t in tuples]
    weights = np.asarray(weights, dtype=float)
    ok, worst = mixture_condition(tuples) if tuples else (False, np.inf)
    problem = _first(
        convexity_problem(f),
        None if np.all(weights >= 0) and abs(weights.sum() - 1.0) <= 1e-12 else "weights are not a probability vector",
        _node_problems(f, tuples),
        None if ok else f"cross-node commutator condition fails (worst {worst:.3e})",
    )
    if problem:
        return precondition_failed(ineq, problem, tol, **meta)
    dim = tuples[0][0].shape[0]
    cols = [np.eye(dim)] * len(tuples)
    ys = _averaged(weights, cols, tuples, f.n)
    problem = _first(abelian_problem(ys, "mixture"), centralizer_problem(phi, ys, "y"))
    if problem:
        return precondition_failed(ineq, problem, tol, **meta)

    def compute():
        _, lhs, rhs = _field_sides(f, weights, cols, tuples, phi)
        return make_report(ineq, lhs, rhs, tol, **meta)

    return _guarded(ineq, tol, meta, compute)


def trace_convexity_segment(f: ScalarFunction, x, y, tau: TraceFunctional, grid=None, tol: float = DEFAULT_TOL, **meta):
    """Convexity of ``tau(f(.))`` along the segment between compatible tuples.

    Returns one report per ``lam`` in ``grid`` (default 11 points) on
    ``tau(f(lam x + (1-lam) y)) <= lam tau(f(x)) + (1-lam) tau(f(y))``.
    """
    ineq = "cor11"
    xs = list(x.members if hasattr(x, "members") else x)
    ys = list(y.members if hasattr(y, "members") else y)
    grid = np.linspace(0.0, 1.0, 11) if grid is None else np.asarray(grid, dtype=float)
    problem = _first(
        None if tau.is_tracial() else "functional is not a trace",
        convexity_problem(f),
        None if len(xs) == len(ys) == f.n else "tuple arity mismatch",
        abelian_problem(xs, "x") or abelian_problem(ys, "y"),
        None if compatible(xs, ys) else "tuples are not compatible",
        _node_problems(f, [xs, ys]),
    )
    if problem:
        return [precondition_failed(ineq, problem, tol, lam=float(lam), **meta) for lam in grid]

    def compute():
        fx = evaluate(tau, apply_multivariate(f, xs))
        fy = evaluate(tau, apply_multivariate(f, ys))
        out = []
        for lam in grid:
            z = [hermitian(lam * a + (1 - lam) * b) for a, b in zip(xs, ys)]
            lhs = evaluate(tau, apply_multivariate(f, z))
            out.append(make_report(ineq, lhs, lam * fx + (1 - lam) * fy, tol, lam=float(lam), **meta))
        return out

    try:
        return compute()
    except (SpectrumOutsideDomain, NonAbelianError) as exc:
        return [precondition_failed(ineq, str(exc), tol, lam=float(lam), **meta) for lam in grid]


def jensen_subalgebra_tensor(f: ScalarFunction, fld: DiscreteField, phi: TraceFunctional, tol: float = DEFAULT_TOL, **meta):
    """Field inequality with ``x_it`` supported on tensor leg ``i``."""
    ineq = "cor12"

    def legs_problem():
        if fld.legs is None:
            return "field has no tensor-leg structure"
        if len(fld.legs) != fld.n:
            return "number of legs differs from number of variables"
        for t, tup in enumerate(fld.tuples):
            for i, x in enumerate(tup):
                if not on_leg(x, i, fld.legs):
                    return f"x_{i} at node {t} is not supported on leg {i}"
        return None

    return _field_verifier(ineq, f, fld, phi, tol, meta, extra=legs_problem)


def _leg_support_problem(lf: LegFields, mats, label) -> Optional[str]:
    for i in range(lf.n):
        for t, a in enumerate(mats[i]):
            if not on_leg(a, i, lf.legs):
                return f"{label}_{i} at node {t} is not supported on leg {i}"
    return None


def jensen_block_zero(f: ScalarFunction, lf: LegFields, phi: TraceFunctional, tol: float = DEFAULT_TOL, **meta):
    """Leg-supported columns, each node carrying one nonzero variable.

    ``phi(f(y_1, ..., y_n)) <= phi(sum_i sum_t w a_it* f(0, .., x_it, .., 0) a_it)``
    with ``y_i = sum_t w a_it* x_it a_it``; needs ``0`` in every interval.
    """
    ineq = "cor13"
    if lf.values is None:
        return precondition_failed(ineq, "leg fields carry no values", tol, **meta)
    problem = _first(
        None if lf.n == f.n else f"{lf.n} legs for a function of {f.n} variables",
        next((f"0 is not in interval {i}" for i, (a, b) in enumerate(f.cube) if not a <= 0 <= b), None),
        convexity_problem(f),
        _leg_support_problem(lf, lf.columns, "a"),
        _leg_support_problem(lf, lf.values, "x"),
        None if lf.unital_residual() <= 1e-10 else f"leg columns are not unital ({lf.unital_residual():.3e})",
        next((p for i in range(lf.n) for x in lf.values[i] if (p := spectrum_problem(f, i, x))), None),
    )
    if problem:
        return precondition_failed(ineq, problem, tol, **meta)
    dim = lf.dim
    ys = [
        hermitian(sum(w * (a.conj().T @ x @ a) for w, a, x in zip(lf.weights[i], lf.columns[i], lf.values[i])))
        for i in range(lf.n)
    ]
    problem = _first(
        next((f"y_{i} is not supported on leg {i}" for i, y in enumerate(ys) if not on_leg(y, i, lf.legs)), None),
        abelian_problem(ys, "y"),
        centralizer_problem(phi, ys, "y"),
    )
    if problem:
        return precondition_failed(ineq, problem, tol, **meta)

    def compute():
        lhs = evaluate(phi, apply_multivariate(f, ys))
        zero = np.zeros((dim, dim), dtype=complex)
        acc = np.zeros((dim, dim), dtype=complex)
        for i in range(lf.n):
            for w, a, x in zip(lf.weights[i], lf.columns[i], lf.values[i]):
                padded = [zero] * lf.n
                padded[i] = x
                acc += w * (a.conj().T @ apply_multivariate(f, padded) @ a)
        rhs = evaluate(phi, hermitian(acc))
        return make_report(ineq, lhs, rhs, tol, **meta)

    return _guarded(ineq, tol, meta, compute)


def jensen_constant_tuple(f: ScalarFunction, xs, lf: LegFields, phi: TraceFunctional, tol: float = DEFAULT_TOL, **meta):
    """Leg-supported columns acting on one fixed leg-wise tuple ``x``.

    With ``b_i = sum_t w a_it* a_it`` and ``sum_i b_i = 1``:
    ``phi(f(y)) <= phi(sum_i sum_t w a_it* f(x) a_it)`` where
    ``y_i = sum_t w a_it* x_i a_it + (1 - b_i) x_i``.
    """
    ineq = "cor14"
    xs = list(xs.members if hasattr(xs, "members") else xs)
    problem = _first(
        None if lf.n == f.n == len(xs) else "arity mismatch between legs, tuple and function",
        convexity_problem(f),
        _leg_support_problem(lf, lf.columns, "a"),
        next((f"x_{i} is not supported on leg {i}" for i, x in enumerate(xs) if not on_leg(x, i, lf.legs)), None),
        None if lf.unital_residual() <= 1e-10 else f"leg masses do not sum to 1 ({lf.unital_residual():.3e})",
        _node_problems(f, [xs]),
    )
    if problem:
        return precondition_failed(ineq, problem, tol, **meta)
    dim = lf.dim
    eye = np.eye(dim)
    ys = []
    for i in range(lf.n):
        b = lf.leg_mass(i)
        y = sum(w * (a.conj().T @ xs[i] @ a) for w, a in zip(lf.weights[i], lf.columns[i])) + (eye - b) @ xs[i]
        ys.append(hermitian(y))
    # the shortcut formula must agree with the full average over all legs
    for i in range(lf.n):
        full = sum(
            w * (a.conj().T @ xs[i] @ a) for j in range(lf.n) for w, a in zip(lf.weights[j], lf.columns[j])
        )
        if fro(full - ys[i]) > 1e-10 * (1.0 + fro(full)):
            return precondition_failed(ineq, f"y_{i} shortcut disagrees with the full average", tol, **meta)
    problem = _first(abelian_problem(ys, "y"), centralizer_problem(phi, ys, "y"))
    if problem:
        return precondition_failed(ineq, problem, tol, **meta)

    def compute():
        lhs = evaluate(phi, apply_multivariate(f, ys))
        fx = apply_multivariate(f, xs)
        acc = sum(w * (a.conj().T @ fx @ a) for i in range(lf.n) for w, a in zip(lf.weights[i], lf.columns[i]))
        rhs = evaluate(phi, hermitian(acc))
        return make_report(ineq, lhs, rhs, tol, **meta)

    return _guarded(ineq, tol, meta, compute)
