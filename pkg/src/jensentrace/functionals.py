"""Positive functionals ``x -> trace(rho x)`` and conditional expectations.

The measure-theoretic objects used in the Jensen arguments become finite
sums here: a commuting tuple ``y`` has finitely many joint eigenvalues
(atoms), its spectral projections ``P_j`` are the atoms' indicator
functions, and a functional whose density commutes with ``y`` induces the
weights ``phi(P_j)`` on them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .calculus import ScalarFunction, apply_multivariate
from .errors import CentralizerViolation, DimensionMismatch, NonAbelianError
from .factory import DiscreteField, UnitalColumn, make_rng
from .spectral import (
    CLUSTER_TOL,
    AbelianTuple,
    commutator,
    fro,
    hermitian,
    is_abelian,
    joint_diagonalize,
    scale,
)

NULL_ATOM = 1e-12


@dataclass(frozen=True)
class TraceFunctional:
    """``phi(x) = trace(rho x)`` for a positive semidefinite density ``rho``.

    ``density=None`` is the plain trace and is evaluated without forming
    ``rho`` at all.
    """

    density: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.density is not None:
            rho = hermitian(self.density)
            if np.linalg.eigvalsh(rho)[0] < -1e-12 * (1.0 + fro(rho)):
                raise ValueError("density is not positive semidefinite")
            object.__setattr__(self, "density", rho)

    @classmethod
    def trace(cls) -> "TraceFunctional":
        return cls(None)

    @property
    def is_trace(self) -> bool:
        return self.density is None

    def is_tracial(self, tol: float = 1e-12) -> bool:
        """Whether ``rho`` is a multiple of the identity (a trace on the full matrix algebra)."""
        if self.density is None:
            return True
        rho = self.density
        k = rho.shape[0]
        return fro(rho - np.trace(rho).real / k * np.eye(k)) <= tol * (1.0 + fro(rho))

    def mass(self, dim: int) -> float:
        """``phi(1)``."""
        return float(dim) if self.density is None else float(np.trace(self.density).real)

    def scaled(self, c: float) -> "TraceFunctional":
        if c <= 0:
            raise ValueError("scale factor must be positive")
        if self.density is None:
            raise ValueError("scale the trace by passing an explicit density")
        return TraceFunctional(c * self.density)

    def __call__(self, x: np.ndarray) -> float:
        return evaluate(self, x)


def _raw(phi: TraceFunctional, x: np.ndarray) -> complex:
    if phi.density is None:
        return complex(np.trace(x))
    if phi.density.shape != x.shape:
        raise DimensionMismatch(f"density {phi.density.shape} vs operand {x.shape}")
    return complex(np.einsum("jk,kj->", phi.density, x))


def evaluate(phi: TraceFunctional, x: np.ndarray) -> float:
    """``trace(rho x)`` with its imaginary part checked and dropped."""
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got {x.shape}")
    v = _raw(phi, x)
    ref = 1.0 + fro(x) * (fro(phi.density) if phi.density is not None else np.sqrt(x.shape[0]))
    if abs(v.imag) > 1e-10 * ref:
        raise ValueError(f"functional value has imaginary part {v.imag:.3e}")
    return v.real


def in_centralizer(phi: TraceFunctional, y: np.ndarray, tol: float = 1e-10) -> bool:
    """``phi(xy) = phi(yx)`` for every ``x``, i.e. ``[rho, y] = 0``."""
    if phi.density is None:
        return True
    if phi.density.shape != y.shape:
        raise DimensionMismatch(f"density {phi.density.shape} vs operand {y.shape}")
    return fro(commutator(phi.density, y)) <= tol * scale(phi.density, y)


def _random_bump(seed: int, cube, stream: int) -> ScalarFunction:
    rng = make_rng(seed, stream, 20)
    n = len(cube)
    lo = np.array([a for a, _ in cube])
    hi = np.array([b for _, b in cube])
    centers = lo + (hi - lo) * rng.random((3, n))
    heights = 0.5 + rng.random(3)
    width = 0.5 * float(np.max(hi - lo, initial=0.0)) + 0.1
    floor = 0.1 + 0.4 * rng.random()

    def g(p):
        d2 = ((p[:, None, :] - centers[None]) ** 2).sum(axis=2)
        return floor + (heights * np.exp(-d2 / (2 * width**2))).sum(axis=1)

    return ScalarFunction("random_bump", n, tuple(cube), g)


def centralizing_state(seed: int, ys, g: Optional[ScalarFunction] = None, stream: int = 0) -> TraceFunctional:
    """Functional with density ``g(y)`` so every ``y_i`` is in its centralizer.

    ``g`` defaults to a random positive bump function (floor plus Gaussian
    bumps) drawn from ``(seed, stream)``; it is evaluated on the joint
    spectrum of ``ys``.
    """
    members = list(ys.members if isinstance(ys, AbelianTuple) else ys)
    ok, worst = is_abelian(members)
    if not ok:
        raise NonAbelianError(f"tuple does not commute ({worst:.3e})")
    spectra = [np.linalg.eigvalsh(m) for m in members]
    cube = tuple((float(s[0]), float(s[-1])) for s in spectra)
    if g is None:
        g = _random_bump(seed, cube, stream)
    else:
        g = g.with_cube(tuple((min(a, c), max(b, d)) for (a, b), (c, d) in zip(g.cube, cube)))
    return TraceFunctional(apply_multivariate(g, members))


# --------------------------------------------------------------------------
# atomic measures


@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely supported measure: ``masses[k]`` at ``points[k]`` (rows)."""

    points: np.ndarray
    masses: np.ndarray

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    def integrate(self, g: Callable[[np.ndarray], np.ndarray]) -> float:
        """``sum_k g(points[k]) masses[k]`` for batch ``g``."""
        return float(np.dot(g(self.points), self.masses))

    def mean(self) -> np.ndarray:
        return self.masses @ self.points

    def to_json(self) -> dict:
        return {
            "atoms": [
                {"point": [float(v) for v in p], "mass": float(m)}
                for p, m in zip(self.points, self.masses)
            ]
        }

    @classmethod
    def from_json(cls, doc: dict) -> "AtomicMeasure":
        atoms = doc["atoms"]
        pts = np.array([a["point"] for a in atoms], dtype=float).reshape(len(atoms), -1)
        return cls(pts, np.array([a["mass"] for a in atoms], dtype=float))


def _merge_atoms(points: np.ndarray, masses: np.ndarray, tol: float = 1e-12) -> AtomicMeasure:
    order = np.lexsort(points.T[::-1])
    pts, ms = points[order], masses[order]
    keep_p, keep_m = [], []
    for p, m in zip(pts, ms):
        if keep_p and np.all(np.abs(p - keep_p[-1]) <= tol * (1.0 + np.abs(p))):
            keep_m[-1] += m
        else:
            keep_p.append(p)
            keep_m.append(m)
    return AtomicMeasure(np.array(keep_p), np.array(keep_m))


def spectral_mixture_measure(xs: Sequence[np.ndarray], column: UnitalColumn, xi) -> AtomicMeasure:
    """Probability measure ``S -> sum_k (E_k(S) a_k xi | a_k xi)`` on the line.

    ``E_k`` is the spectral measure of ``xs[k]``. Its barycenter equals
    ``(y xi | xi)`` with ``y = sum_k a_k* x_k a_k``.
    """
    xi = np.asarray(xi, dtype=complex).ravel()
    if abs(np.linalg.norm(xi) - 1.0) > 1e-12:
        raise ValueError(f"xi must be a unit vector (norm {np.linalg.norm(xi):.15g})")
    if len(xs) != column.m:
        raise DimensionMismatch(f"{len(xs)} matrices for a column of length {column.m}")
    pts, ms = [], []
    for x, a in zip(xs, column.blocks):
        w, u = np.linalg.eigh(x)
        v = u.conj().T @ (a @ xi)
        pts.append(w)
        ms.append(np.abs(v) ** 2)
    return _merge_atoms(np.concatenate(pts)[:, None], np.concatenate(ms))


class Conditioner:
    """Conditional expectation onto the algebra generated by a commuting tuple.

    Atoms are the distinct joint eigenvalues of ``ys`` (clustered at
    ``CLUSTER_TOL``), ``weights[j] = phi(P_j)``, and
    ``expect(x)[j] = phi(P_j x) / phi(P_j)``. Atoms with
    ``phi(P_j) <= 1e-12`` are dropped.

    Raises
    ------
    CentralizerViolation
        If some ``y_i`` does not commute with the density.
    """

    def __init__(self, phi: TraceFunctional, ys, tol: float = 1e-10):
        members = list(ys.members if isinstance(ys, AbelianTuple) else ys)
        ok, worst = is_abelian(members)
        if not ok:
            raise NonAbelianError(f"tuple does not commute ({worst:.3e})")
        for i, y in enumerate(members):
            if not in_centralizer(phi, y, tol):
                raise CentralizerViolation(f"y_{i} is not in the centralizer of the functional")
        self.phi = phi
        self.members = members
        dec = joint_diagonalize(members)
        points, projs, weights = [], [], []
        for lam, p in dec.projections(CLUSTER_TOL):
            wj = _raw(phi, p).real
            if wj > NULL_ATOM:
                points.append(lam)
                projs.append(p)
                weights.append(wj)
        if not points:
            raise ValueError("every atom is null for this functional")
        self.points = np.array(points)
        self.projections = projs
        self.weights = np.array(weights)

    def expect(self, x: np.ndarray) -> np.ndarray:
        """Values of the conditional expectation of ``x`` on the atoms."""
        return np.array([_raw(self.phi, p @ x).real for p in self.projections]) / self.weights

    def integrate(self, z_values: np.ndarray, x: np.ndarray) -> float:
        """``sum_j z(j) Phi(x)(j) phi(P_j)``."""
        return float(np.sum(z_values * self.expect(x) * self.weights))

    def measure(self) -> AtomicMeasure:
        """``phi`` restricted to the generated algebra, as a measure on the atoms."""
        return AtomicMeasure(self.points.copy(), self.weights.copy())


@dataclass(frozen=True)
class AtomValues:
    points: np.ndarray
    values: np.ndarray
    weights: np.ndarray


def conditional_expectation(phi: TraceFunctional, ys, x: np.ndarray) -> AtomValues:
    """Conditional expectation of ``x`` onto the algebra of ``ys`` under ``phi``.

    Returns the joint eigenvalues (atoms), the values there and the atom
    weights ``phi(P_j)``.
    """
    c = Conditioner(phi, ys)
    return AtomValues(c.points, c.expect(x), c.weights)


def induced_measures(phi: TraceFunctional, ys, fld: DiscreteField, cond: Optional[Conditioner] = None):
    """Per-atom probability measures on the cube built from a field.

    For atom ``j`` of ``ys`` the measure puts mass
    ``w_t Phi(a_t* Q a_t)(j)`` on the joint eigenvalue of each spectral
    projection ``Q`` of the node tuple ``x_t``, so that integrating ``g``
    gives ``Phi(sum_t w_t a_t* g(x_t) a_t)(j)``.

    Returns
    -------
    cond : Conditioner
        The conditional expectation onto ``ys`` (its ``points`` index the atoms).
    measures : list of AtomicMeasure
        One measure per atom.
    """
    if fld.tuples is None:
        raise ValueError("field carries no tuples")
    if ys is None:
        ys = fld.averaged_tuple()
    cond = cond or Conditioner(phi, ys)
    pts, rows = [], []
    for w, a, tup in zip(fld.weights, fld.columns, fld.tuples):
        dec = joint_diagonalize(list(tup))
        for lam, q in dec.projections(CLUSTER_TOL):
            pts.append(lam)
            rows.append(w * cond.expect(a.conj().T @ q @ a))
    pts = np.array(pts)
    masses = np.array(rows)  # (node atoms, y atoms)
    return cond, [AtomicMeasure(pts, masses[:, j]) for j in range(masses.shape[1])]
