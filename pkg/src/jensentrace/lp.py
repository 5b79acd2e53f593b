"""Dense two-phase tableau simplex for small linear programs.

Solves ``min c.x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq`` with
each variable either nonnegative or free. Sized for a few hundred rows;
no sparsity, no presolve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InfeasibleLP, UnboundedLP

PIVOT_TOL = 1e-11


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    fun: float
    iterations: int
    #: multipliers ``y >= 0`` of the inequality rows; ``c + A_ub^T y`` is
    #: nonnegative on sign-restricted and zero on free variables at optimum
    ineq_duals: np.ndarray


def _pivot(t: np.ndarray, r: int, c: int) -> None:
    t[r] /= t[r, c]
    col = t[:, c].copy()
    col[r] = 0.0
    t -= np.outer(col, t[r])


def _run(t: np.ndarray, basis: list[int], ncols: int, max_iter: int) -> int:
    """Minimize the objective in the last row of ``t`` over columns ``< ncols``."""
    m = len(basis)
    it = 0
    degenerate = 0
    while True:
        reduced = t[m, :ncols]
        if degenerate > 50:
            # Bland's rule once degenerate pivots pile up
            cand = np.nonzero(reduced < -1e-10)[0]
            if cand.size == 0:
                return it
            c = int(cand[0])
        else:
            c = int(np.argmin(reduced))
            if reduced[c] >= -1e-10:
                return it
        col = t[:m, c]
        pos = col > PIVOT_TOL
        if not np.any(pos):
            raise UnboundedLP(f"column {c} is unbounded")
        ratios = np.full(m, np.inf)
        ratios[pos] = t[:m, -1][pos] / col[pos]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + 1e-12 * (1.0 + abs(best)))[0]
        r = int(min(ties, key=lambda i: basis[i]))
        degenerate = degenerate + 1 if best <= 1e-12 else 0
        _pivot(t, r, c)
        basis[r] = c
        it += 1
        if it > max_iter:
            raise RuntimeError("simplex iteration limit reached")


def linprog(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    free: Optional[np.ndarray] = None,
    max_iter: int = 50_000,
) -> LPResult:
    """Minimize ``c.x`` under linear constraints.

    Parameters
    ----------
    free : bool array, optional
        Marks variables without sign restriction; all others are ``>= 0``.

    Raises
    ------
    InfeasibleLP, UnboundedLP
    """
    c = np.asarray(c, dtype=float)
    nv = c.size
    free = np.zeros(nv, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    A_ub = np.zeros((0, nv)) if A_ub is None else np.asarray(A_ub, dtype=float)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    A_eq = np.zeros((0, nv)) if A_eq is None else np.asarray(A_eq, dtype=float)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)

    # split free variables x = x+ - x-
    neg_cols = np.nonzero(free)[0]
    cc = np.concatenate([c, -c[neg_cols]])
    Aub = np.hstack([A_ub, -A_ub[:, neg_cols]])
    Aeq = np.hstack([A_eq, -A_eq[:, neg_cols]])
    nx = cc.size
    mu, me = Aub.shape[0], Aeq.shape[0]
    m = mu + me

    # rows: [x | slacks | artificials | rhs]
    A = np.zeros((m, nx + mu))
    A[:mu, :nx] = Aub
    A[:mu, nx:] = np.eye(mu)
    A[mu:, :nx] = Aeq
    b = np.concatenate([b_ub, b_eq])
    flip = b < 0
    A[flip] *= -1
    b = np.where(flip, -b, b)

    basis = [-1] * m
    need_art = []
    for i in range(m):
        if i < mu and not flip[i]:
            basis[i] = nx + i
        else:
            need_art.append(i)
    na = len(need_art)
    width = nx + mu + na
    t = np.zeros((m + 1, width + 1))
    t[:m, : nx + mu] = A
    t[:m, -1] = b
    for k, i in enumerate(need_art):
        t[i, nx + mu + k] = 1.0
        basis[i] = nx + mu + k
    iterations = 0

    if na:
        # phase one: minimize the sum of artificials
        t[m, nx + mu: width] = 1.0
        for i in need_art:
            t[m] -= t[i]
        iterations += _run(t, basis, width, max_iter)
        if -t[m, -1] > 1e-8 * (1.0 + np.abs(b).max(initial=0.0)):
            raise InfeasibleLP(f"phase one optimum {-t[m, -1]:.3e} > 0")
        # drive leftover artificials out of the basis
        for r in range(m):
            if basis[r] >= nx + mu:
                row = t[r, : nx + mu]
                cand = np.nonzero(np.abs(row) > 1e-9)[0]
                if cand.size:
                    _pivot(t, r, int(cand[0]))
                    basis[r] = int(cand[0])
        t[:, nx + mu: width] = 0.0

    t[m, :] = 0.0
    t[m, :nx] = cc
    for r, j in enumerate(basis):
        if j < nx + mu and t[m, j] != 0.0:
            t[m] -= t[m, j] * t[r]
    iterations += _run(t, basis, nx + mu, max_iter)

    sol = np.zeros(nx + mu + na)
    for r, j in enumerate(basis):
        sol[j] = t[r, -1]
    x = sol[:nv].copy()
    x[neg_cols] -= sol[nv:nx]
    duals = t[m, nx: nx + mu].copy()
    return LPResult(x, float(c @ x), iterations, duals)
