"""Scalar functions on a cube and their lift to commuting Hermitian tuples."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatch, NonAbelianError, SpectrumOutsideDomain
from .spectral import (
    SPECTRUM_SLACK,
    AbelianTuple,
    hermitian,
    is_abelian,
    joint_diagonalize,
)

Cube = tuple[tuple[float, float], ...]
BatchFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ScalarFunction:
    """Real function of ``n`` variables on the cube ``I_1 x ... x I_n``.

    ``func`` and each entry of ``partials`` take an ``(m, n)`` array of points
    and return ``m`` values. Missing partials fall back to finite differences
    (see :func:`partial_eval`). The ``claimed_*`` flags are caller assertions;
    :func:`probe_convex` and friends spot-check them.
    """

    name: str
    n: int
    cube: Cube
    func: BatchFn
    partials: Optional[tuple[BatchFn, ...]] = None
    claimed_convex: bool = False
    claimed_concave: bool = False
    claimed_monotone_increasing: bool = False

    def __call__(self, points) -> np.ndarray | float:
        p = np.asarray(points, dtype=float)
        if p.ndim <= 1:
            return float(self.func(p.reshape(1, self.n))[0])
        return np.asarray(self.func(p), dtype=float)

    def with_cube(self, cube) -> "ScalarFunction":
        cube = tuple((float(a), float(b)) for a, b in cube)
        if len(cube) != self.n:
            raise DimensionMismatch(f"{self.name}: cube arity {len(cube)} != {self.n}")
        return replace(self, cube=cube)

    def contains(self, point, slack: float = 0.0) -> bool:
        return all(a - slack <= v <= b + slack for v, (a, b) in zip(point, self.cube))


def clip_to_cube(points: np.ndarray, cube: Cube) -> np.ndarray:
    """Clip ``(m, n)`` points into the cube, tolerating ``SPECTRUM_SLACK`` drift.

    Raises
    ------
    SpectrumOutsideDomain
        If any coordinate lies further outside its interval than the slack.
    """
    pts = np.array(points, dtype=float, copy=True)
    for i, (a, b) in enumerate(cube):
        slack = SPECTRUM_SLACK * (1.0 + max(abs(a), abs(b)))
        col = pts[:, i]
        if col.size and (col.min() < a - slack or col.max() > b + slack):
            raise SpectrumOutsideDomain(
                f"coordinate {i}: spectrum [{col.min():.12g}, {col.max():.12g}] outside [{a}, {b}]"
            )
        np.clip(col, a, b, out=col)
    return pts


def apply_univariate(f: ScalarFunction, x: np.ndarray) -> np.ndarray:
    """``f(x)`` for Hermitian ``x`` through its eigendecomposition."""
    if f.n != 1:
        raise DimensionMismatch(f"{f.name} has arity {f.n}, expected 1")
    w, u = np.linalg.eigh(x)
    vals = f.func(clip_to_cube(w[:, None], f.cube))
    out = (u * vals) @ u.conj().T
    return hermitian(out)


def apply_multivariate(f: ScalarFunction, t) -> np.ndarray:
    """``f(x_1, ..., x_n)`` for a commuting tuple via the joint eigenbasis.

    ``t`` is an :class:`AbelianTuple` or a sequence of commuting Hermitian
    matrices. Arity one is routed through :func:`apply_univariate`.
    """
    members = list(t.members if isinstance(t, AbelianTuple) else t)
    if len(members) != f.n:
        raise DimensionMismatch(f"{f.name} has arity {f.n}, tuple has {len(members)} members")
    if f.n == 1:
        return apply_univariate(f, members[0])
    ok, worst = is_abelian(members)
    if not ok:
        raise NonAbelianError(f"tuple does not commute (relative commutator {worst:.3e})")
    dec = joint_diagonalize(members)
    vals = f.func(clip_to_cube(dec.table, f.cube))
    return hermitian(dec.apply(vals))


def _fd_step(v: np.ndarray) -> np.ndarray:
    return 1e-5 * (1.0 + np.abs(v))


def _fd_partial(f: ScalarFunction, k: int, pts: np.ndarray) -> np.ndarray:
    a, b = f.cube[k]
    h = _fd_step(pts[:, k])
    up = pts.copy()
    dn = pts.copy()
    # one-sided where the step would leave the cube
    up[:, k] = np.where(pts[:, k] + h > b, pts[:, k], pts[:, k] + h)
    dn[:, k] = np.where(pts[:, k] - h < a, pts[:, k], pts[:, k] - h)
    return (f.func(up) - f.func(dn)) / (up[:, k] - dn[:, k])


def partial_eval(f: ScalarFunction, k: int, point) -> float:
    """``d f / d lambda_k`` at ``point`` (``k`` is zero-based).

    Uses the closed form when ``f.partials`` is set, otherwise a central
    difference with step ``1e-5 (1 + |lambda_k|)``, one-sided near the cube
    boundary.
    """
    pts = np.asarray(point, dtype=float).reshape(1, f.n)
    return float(_partial_batch(f, k, pts)[0])


def _partial_batch(f: ScalarFunction, k: int, pts: np.ndarray) -> np.ndarray:
    if not 0 <= k < f.n:
        raise IndexError(f"variable index {k} out of range for arity {f.n}")
    if f.partials is not None:
        return np.asarray(f.partials[k](pts), dtype=float)
    return _fd_partial(f, k, pts)


def partial_function(f: ScalarFunction, k: int) -> ScalarFunction:
    """The ``k``-th partial derivative as a :class:`ScalarFunction`."""
    return ScalarFunction(
        name=f"d{k}_{f.name}",
        n=f.n,
        cube=f.cube,
        func=lambda p, f=f, k=k: _partial_batch(f, k, p),
    )


# --------------------------------------------------------------------------
# metadata probes


def _random_points(f: ScalarFunction, rng: np.random.Generator, m: int) -> np.ndarray:
    lo = np.array([a for a, _ in f.cube])
    hi = np.array([b for _, b in f.cube])
    return lo + (hi - lo) * rng.random((m, f.n))


def probe_convex(f: ScalarFunction, samples: int = 256, seed: int = 0, tol: float = 1e-12) -> bool:
    """Midpoint convexity on random pairs of cube points."""
    rng = np.random.default_rng(seed)
    p, q = _random_points(f, rng, samples), _random_points(f, rng, samples)
    mid = f.func(0.5 * (p + q))
    return bool(np.all(mid <= 0.5 * (f.func(p) + f.func(q)) + tol * (1 + np.abs(mid))))


def probe_concave(f: ScalarFunction, samples: int = 256, seed: int = 0, tol: float = 1e-12) -> bool:
    neg = replace(f, func=lambda p: -f.func(p))
    return probe_convex(neg, samples, seed, tol)


def probe_increasing(f: ScalarFunction, samples: int = 256, seed: int = 0, tol: float = 1e-12) -> bool:
    """Coordinatewise monotonicity on random comparable pairs."""
    rng = np.random.default_rng(seed)
    p, q = _random_points(f, rng, samples), _random_points(f, rng, samples)
    lo, hi = np.minimum(p, q), np.maximum(p, q)
    a, b = f.func(lo), f.func(hi)
    return bool(np.all(a <= b + tol * (1 + np.abs(b))))


# --------------------------------------------------------------------------
# catalog

_UNIT = (-1.0, 1.0)


def _sum_fn(name, n, cube, g, dg, **flags):
    return ScalarFunction(
        name=name,
        n=n,
        cube=cube,
        func=lambda p: np.sum(g(p), axis=1),
        partials=tuple((lambda p, k=k: dg(p[:, k])) for k in range(n)),
        **flags,
    )


def _exp_sum(n, cube):
    return ScalarFunction(
        "exp_sum", n, cube,
        func=lambda p: np.exp(p.sum(axis=1)),
        partials=tuple((lambda p: np.exp(p.sum(axis=1))) for _ in range(n)),
        claimed_convex=True, claimed_monotone_increasing=True,
    )


def _neg_exp(n, cube):
    return ScalarFunction(
        "neg_exp", n, cube,
        func=lambda p: -np.exp(-p.sum(axis=1)),
        partials=tuple((lambda p: np.exp(-p.sum(axis=1))) for _ in range(n)),
        claimed_concave=True, claimed_monotone_increasing=True,
    )


def _gaussian(n, cube):
    return ScalarFunction(
        "gaussian", n, cube,
        func=lambda p: np.exp(-np.sum(p * p, axis=1)),
        partials=tuple((lambda p, k=k: -2 * p[:, k] * np.exp(-np.sum(p * p, axis=1))) for k in range(n)),
    )


def _product(n, cube, name="product"):
    def partial(p, k):
        return np.prod(np.delete(p, k, axis=1), axis=1)

    return ScalarFunction(
        name, n, cube,
        func=lambda p: np.prod(p, axis=1),
        partials=tuple((lambda p, k=k: partial(p, k)) for k in range(n)),
        # increasing only when the cube sits in the closed positive orthant
        claimed_monotone_increasing=all(a >= 0 for a, _ in cube),
        claimed_convex=(n == 1),
        claimed_concave=(n == 1),
    )


def _sin(n, cube):
    return ScalarFunction(
        "sin", 1, cube,
        func=lambda p: np.sin(p[:, 0]),
        partials=(lambda p: np.cos(p[:, 0]),),
        claimed_monotone_increasing=True,
    )


def _affine(n, cube, seed=0):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(n)
    d = float(rng.standard_normal())
    return ScalarFunction(
        "affine", n, cube,
        func=lambda p: p @ c + d,
        partials=tuple((lambda p, k=k: np.full(len(p), c[k])) for k in range(n)),
        claimed_convex=True, claimed_concave=True,
    )


def _increasing_affine(n, cube, seed=0):
    rng = np.random.default_rng(seed)
    c = rng.random(n) + 0.1
    d = float(rng.standard_normal())
    return ScalarFunction(
        "increasing_affine", n, cube,
        func=lambda p: p @ c + d,
        partials=tuple((lambda p, k=k: np.full(len(p), c[k])) for k in range(n)),
        claimed_convex=True, claimed_concave=True, claimed_monotone_increasing=True,
    )


def _one(n, cube):
    return ScalarFunction(
        "one", n, cube,
        func=lambda p: np.ones(len(p)),
        partials=tuple((lambda p: np.zeros(len(p))) for _ in range(n)),
        claimed_convex=True, claimed_concave=True, claimed_monotone_increasing=True,
    )


_FIXED_ARITY = {"sin": 1, "product2": 2, "product3": 3}

_BUILDERS: dict[str, tuple[Callable, tuple[float, float], str]] = {
    "exp_sum": (_exp_sum, _UNIT, "exp(sum of variables); convex, increasing"),
    "square": (
        lambda n, c: _sum_fn("square", n, c, np.square, lambda v: 2 * v, claimed_convex=True),
        _UNIT,
        "sum of squares; convex",
    ),
    "relu_sum": (
        lambda n, c: _sum_fn(
            "relu_sum", n, c, lambda v: np.maximum(v, 0.0), lambda v: (v > 0).astype(float),
            claimed_convex=True, claimed_monotone_increasing=True,
        ),
        _UNIT,
        "sum of max(x, 0); convex, increasing",
    ),
    "abs": (
        lambda n, c: _sum_fn("abs", n, c, np.abs, np.sign, claimed_convex=True),
        _UNIT,
        "sum of absolute values; convex",
    ),
    "quartic": (
        lambda n, c: _sum_fn("quartic", n, c, lambda v: v**4, lambda v: 4 * v**3, claimed_convex=True),
        _UNIT,
        "sum of fourth powers; convex",
    ),
    "linear_sum": (
        lambda n, c: _sum_fn(
            "linear_sum", n, c, lambda v: v, np.ones_like,
            claimed_convex=True, claimed_concave=True, claimed_monotone_increasing=True,
        ),
        _UNIT,
        "sum of variables; affine, increasing",
    ),
    "sqrt_sum": (
        lambda n, c: _sum_fn(
            "sqrt_sum", n, c, np.sqrt, lambda v: 0.5 / np.sqrt(np.maximum(v, 1e-300)),
            claimed_concave=True, claimed_monotone_increasing=True,
        ),
        (0.0, 1.0),
        "sum of square roots on [0, 1]; concave, increasing",
    ),
    "neg_exp": (_neg_exp, _UNIT, "-exp(-sum of variables); concave, increasing"),
    "gaussian": (_gaussian, _UNIT, "exp(-sum of squares); positive"),
    "product": (_product, (0.0, 1.0), "product of all variables on [0, 1]^n; increasing"),
    "product2": (lambda n, c: _product(2, c, "product2"), (0.0, 1.0), "x1*x2 on [0, 1]^2"),
    "product3": (lambda n, c: _product(3, c, "product3"), (0.0, 1.0), "x1*x2*x3 on [0, 1]^3"),
    "sin": (_sin, (-math.pi / 2, math.pi / 2), "sin on [-pi/2, pi/2]; increasing, neither convex nor concave"),
    "affine": (_affine, _UNIT, "random affine function (seeded); convex and concave"),
    "increasing_affine": (_increasing_affine, _UNIT, "random affine function with positive slopes"),
    "one": (_one, _UNIT, "constant 1"),
}
_ALIASES = {"exp": "exp_sum", "relu-sum": "relu_sum", "relu": "relu_sum"}
_SEEDED = {"affine", "increasing_affine"}


def catalog_names() -> list[str]:
    return sorted(_BUILDERS)


def describe_function(name: str) -> str:
    return _BUILDERS[_resolve(name)][2]


def _resolve(name: str) -> str:
    key = _ALIASES.get(name, name)
    if key not in _BUILDERS:
        raise KeyError(f"unknown catalog function {name!r}; known: {', '.join(catalog_names())}")
    return key


def arity_of(name: str) -> Optional[int]:
    """Fixed arity of a catalog entry, or ``None`` if any ``n`` works."""
    return _FIXED_ARITY.get(_resolve(name))


def get_function(name: str, n: Optional[int] = None, cube=None, seed: int = 0) -> ScalarFunction:
    """Build the catalog function ``name`` of arity ``n`` on ``cube``.

    ``cube`` defaults to the entry's standard interval in every coordinate;
    ``seed`` only matters for the random affine entries.
    """
    key = _resolve(name)
    builder, interval, _ = _BUILDERS[key]
    fixed = _FIXED_ARITY.get(key)
    if n is None:
        n = fixed or 1
    if fixed is not None and n != fixed:
        raise DimensionMismatch(f"{key} has fixed arity {fixed}, requested {n}")
    if cube is None:
        cube = (interval,) * n
    cube = tuple((float(a), float(b)) for a, b in cube)
    if len(cube) != n:
        raise DimensionMismatch(f"cube arity {len(cube)} != {n}")
    if key in _SEEDED:
        return builder(n, cube, seed)
    return builder(n, cube)


def catalog(n: int = 1) -> dict[str, ScalarFunction]:
    """Every catalog entry usable at arity ``n``, keyed by name."""
    out = {}
    for name in catalog_names():
        fixed = _FIXED_ARITY.get(name)
        if fixed is None or fixed == n:
            out[name] = get_function(name, n)
    return out
