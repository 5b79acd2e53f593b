"""Hermitian matrices, commutators, operator order and joint diagonalization.

Matrices are plain complex ``numpy`` arrays. :func:`hermitian` is the
constructor used everywhere a Hermitian matrix enters the package: it
symmetrizes, rejects non-finite input and returns a read-only array so the
value cannot be mutated after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    JointDiagonalizationError,
    NonAbelianError,
    NotHermitian,
)

#: relative tolerance used by :func:`is_abelian` unless told otherwise
ABELIAN_TOL = 1e-10
#: relative residual accepted for ``x_i = U diag(Lambda_i) U*``
RECONSTRUCTION_TOL = 1e-9
#: relative eigenvalue gap below which eigenvalues form one cluster
CLUSTER_TOL = 1e-8
#: spectra may overshoot an interval endpoint by this much before erroring
SPECTRUM_SLACK = 1e-9

HermitianMatrix = np.ndarray


def fro(x: np.ndarray) -> float:
    return float(np.linalg.norm(x))


def scale(*mats: np.ndarray) -> float:
    """``1 + prod ||m||_F``, the reference size for relative tolerances."""
    p = 1.0
    for m in mats:
        p *= fro(m)
    return 1.0 + p


def hermitian(x) -> HermitianMatrix:
    """Return ``(x + x*)/2`` as a read-only complex array.

    Raises
    ------
    NotHermitian
        If ``x`` is not square or has non-finite entries.
    """
    a = np.asarray(x, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotHermitian(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NotHermitian("matrix has non-finite entries")
    h = 0.5 * (a + a.conj().T)
    h.setflags(write=False)
    return h


def _check_same_dim(*mats: np.ndarray) -> int:
    dims = {m.shape for m in mats}
    if len(dims) > 1:
        raise DimensionMismatch(f"shape mismatch: {sorted(dims)}")
    return mats[0].shape[0]


def commutator(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``xy - yx``."""
    _check_same_dim(x, y)
    return x @ y - y @ x


def is_abelian(members: Sequence[np.ndarray], tol: float = ABELIAN_TOL) -> tuple[bool, float]:
    """Check pairwise commutation.

    Returns ``(ok, worst)`` where ``worst`` is the largest relative commutator
    norm ``||[x_i, x_j]||_F / (1 + ||x_i||_F ||x_j||_F)``. An empty or
    single-member list is vacuously abelian.
    """
    if len(members) > 1:
        _check_same_dim(*members)
    worst = 0.0
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            r = fro(commutator(members[i], members[j])) / scale(members[i], members[j])
            worst = max(worst, r)
    return worst <= tol, worst


def psd_leq(x: np.ndarray, y: np.ndarray, tol: float = 1e-10) -> bool:
    """Operator order ``x <= y``: smallest eigenvalue of ``y - x`` is at least ``-tol``."""
    _check_same_dim(x, y)
    d = y - x
    d = 0.5 * (d + d.conj().T)
    return bool(np.linalg.eigvalsh(d)[0] >= -tol)


def compatible(xs: Sequence[np.ndarray], ys: Sequence[np.ndarray], tol: float = ABELIAN_TOL) -> bool:
    """Whether the segment between two abelian tuples stays abelian.

    Tests ``[x_i, y_j] = [x_j, y_i]`` for all ``i, j``, each residual measured
    against ``1 + ||x_i|| ||y_j|| + ||x_j|| ||y_i||``.
    """
    if len(xs) != len(ys):
        raise DimensionMismatch(f"tuple lengths differ: {len(xs)} vs {len(ys)}")
    if not xs:
        return True
    _check_same_dim(*xs, *ys)
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            r = commutator(xs[i], ys[j]) - commutator(xs[j], ys[i])
            s = 1.0 + fro(xs[i]) * fro(ys[j]) + fro(xs[j]) * fro(ys[i])
            if fro(r) > tol * s:
                return False
    return True


@dataclass(frozen=True)
class AbelianTuple:
    """``n`` commuting Hermitian matrices together with a cube of intervals.

    Construct through :meth:`build`, which validates commutation and the
    spectrum-in-cube condition. ``cube`` defaults to the tight spectral hull.
    """

    members: tuple[np.ndarray, ...]
    cube: tuple[tuple[float, float], ...]

    @classmethod
    def build(cls, members, cube=None, tol: float = ABELIAN_TOL) -> "AbelianTuple":
        ms = tuple(hermitian(m) for m in members)
        if not ms:
            raise ValueError("an abelian tuple needs at least one member")
        _check_same_dim(*ms)
        ok, worst = is_abelian(ms, tol)
        if not ok:
            raise NonAbelianError(f"members do not commute (worst relative commutator {worst:.3e})")
        spectra = [np.linalg.eigvalsh(m) for m in ms]
        if cube is None:
            cube = tuple((float(s[0]), float(s[-1])) for s in spectra)
        else:
            cube = tuple((float(a), float(b)) for a, b in cube)
            if len(cube) != len(ms):
                raise DimensionMismatch("cube arity differs from tuple length")
            for (a, b), s in zip(cube, spectra):
                slack = SPECTRUM_SLACK * (1.0 + max(abs(a), abs(b)))
                if s[0] < a - slack or s[-1] > b + slack:
                    raise ValueError(f"spectrum [{s[0]:.6g}, {s[-1]:.6g}] outside interval [{a}, {b}]")
        return cls(ms, cube)

    @property
    def n(self) -> int:
        return len(self.members)

    @property
    def dim(self) -> int:
        return self.members[0].shape[0]

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def __getitem__(self, i):
        return self.members[i]


@dataclass(frozen=True)
class JointSpectralDecomposition:
    """Shared eigenbasis ``basis`` (columns) and eigenvalue ``table``.

    Row ``j`` of ``table`` is the joint eigenvalue of basis vector ``j``;
    repeated joint eigenvalues appear as repeated rows.
    """

    basis: np.ndarray
    table: np.ndarray
    method: str = field(default="generic", compare=False)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def reconstruct(self, i: int) -> np.ndarray:
        u = self.basis
        return (u * self.table[:, i]) @ u.conj().T

    def apply(self, values: np.ndarray) -> np.ndarray:
        """``U diag(values) U*`` for one value per basis vector."""
        u = self.basis
        out = (u * np.asarray(values)) @ u.conj().T
        return 0.5 * (out + out.conj().T)

    def residual(self, members: Sequence[np.ndarray]) -> float:
        """Worst relative reconstruction residual over ``members``."""
        return max(
            (fro(m - self.reconstruct(i)) / (1.0 + fro(m)) for i, m in enumerate(members)),
            default=0.0,
        )

    def clusters(self, tol: float = CLUSTER_TOL) -> list[np.ndarray]:
        """Group basis indices whose table rows agree within ``tol*(1+|lambda|)``."""
        rows = self.table
        unused = list(range(rows.shape[0]))
        groups = []
        while unused:
            j = unused[0]
            close = np.all(np.abs(rows[unused] - rows[j]) <= tol * (1.0 + np.abs(rows[j])), axis=1)
            idx = np.asarray(unused)[close]
            groups.append(idx)
            taken = set(idx.tolist())
            unused = [k for k in unused if k not in taken]
        return groups

    def projections(self, tol: float = CLUSTER_TOL) -> list[tuple[np.ndarray, np.ndarray]]:
        """``(joint eigenvalue, spectral projection)`` for each cluster."""
        out = []
        for idx in self.clusters(tol):
            v = self.basis[:, idx]
            out.append((self.table[idx].mean(axis=0), v @ v.conj().T))
        return out


def _clusters_1d(w: np.ndarray, tol: float) -> list[np.ndarray]:
    """Split sorted eigenvalues wherever consecutive gaps reach ``tol``."""
    breaks = np.nonzero(np.diff(w) >= tol)[0] + 1
    return np.split(np.arange(len(w)), breaks)


def _is_scalar_block(m: np.ndarray, tol: float) -> bool:
    k = m.shape[0]
    if k == 1:
        return True
    return fro(m - np.trace(m) / k * np.eye(k)) <= tol * (1.0 + fro(m))


def _split(members: list[np.ndarray], rng: np.random.Generator, depth: int = 0) -> np.ndarray:
    """Unitary that diagonalizes the commuting ``members`` (given in some basis)."""
    k = members[0].shape[0]
    coeffs = rng.standard_normal(len(members))
    combo = sum(c * m / (1.0 + fro(m)) for c, m in zip(coeffs, members))
    combo = 0.5 * (combo + combo.conj().T)
    w, q = np.linalg.eigh(combo)
    if depth >= k:
        return q
    tol = CLUSTER_TOL * (1.0 + np.max(np.abs(w), initial=0.0))
    out = q.copy()
    for idx in _clusters_1d(w, tol):
        if len(idx) == 1:
            continue
        sub = q[:, idx]
        restricted = [sub.conj().T @ m @ sub for m in members]
        if all(_is_scalar_block(r, RECONSTRUCTION_TOL * 0.1) for r in restricted):
            continue
        out[:, idx] = sub @ _split(restricted, rng, depth + 1)
    return out


def jacobi_joint_diagonalize(members: Sequence[np.ndarray], sweeps: int = 100, threshold: float = 1e-14):
    """Cyclic Jacobi joint diagonalization of Hermitian matrices.

    Complex Givens rotations chosen to minimize the joint off-diagonal mass
    (Cardoso-Souloumiac). Exact for commuting inputs, approximate otherwise.

    Returns
    -------
    basis : ndarray
        Unitary whose columns are the (approximate) common eigenvectors.
    """
    a = np.array([np.asarray(m, dtype=complex) for m in members])
    d = a.shape[1]
    v = np.eye(d, dtype=complex)
    b = np.array([[1, 0, 0], [0, 1, 1], [0, -1j, 1j]])
    for _ in range(sweeps):
        rotated = False
        for p in range(d - 1):
            for q in range(p + 1, d):
                g = np.array([a[:, p, p] - a[:, q, q], a[:, p, q], a[:, q, p]])
                gg = np.real(b @ (g @ g.conj().T) @ b.conj().T)
                evals, evecs = np.linalg.eigh(gg)
                ang = evecs[:, -1]
                if ang[0] < 0:
                    ang = -ang
                c = np.sqrt(0.5 + ang[0] / 2)
                s = 0.5 * (ang[1] - 1j * ang[2]) / c
                if abs(s) <= threshold:
                    continue
                rotated = True
                rot = np.array([[c, -np.conj(s)], [s, c]])
                pq = [p, q]
                v[:, pq] = v[:, pq] @ rot
                a[:, pq, :] = np.einsum("ji,kjl->kil", rot.conj(), a[:, pq, :])
                a[:, :, pq] = a[:, :, pq] @ rot
        if not rotated:
            break
    return v


def _table(basis: np.ndarray, members: Sequence[np.ndarray]) -> np.ndarray:
    cols = [np.real(np.einsum("ij,ik,kj->j", basis.conj(), m, basis)) for m in members]
    return np.column_stack(cols) if cols else np.zeros((basis.shape[0], 0))


def joint_diagonalize(members, retries: int = 5) -> JointSpectralDecomposition:
    """Common eigenbasis and joint eigenvalue table of a commuting tuple.

    A random generic combination of the members is diagonalized first;
    eigenvalue clusters are re-split recursively on the restricted members.
    Failing the reconstruction check, fresh coefficients are tried ``retries``
    times before falling back to :func:`jacobi_joint_diagonalize`.

    The random coefficients come from fixed seeds so the result is a pure
    function of the input.

    Raises
    ------
    JointDiagonalizationError
        If no route reaches the reconstruction tolerance (typically a tuple
        that only nearly commutes).
    """
    ms = list(members.members if isinstance(members, AbelianTuple) else members)
    if not ms:
        raise ValueError("empty tuple")
    _check_same_dim(*ms)
    if len(ms) == 1:
        w, u = np.linalg.eigh(ms[0])
        return JointSpectralDecomposition(u, w[:, None], "eigh")
    best = None
    for attempt in range(retries + 1):
        rng = np.random.default_rng(attempt)
        u = _split(ms, rng)
        dec = JointSpectralDecomposition(u, _table(u, ms))
        r = dec.residual(ms)
        if r <= RECONSTRUCTION_TOL:
            return dec
        if best is None or r < best[0]:
            best = (r, dec)
    u = jacobi_joint_diagonalize(ms)
    dec = JointSpectralDecomposition(u, _table(u, ms), "jacobi")
    r = dec.residual(ms)
    if r <= RECONSTRUCTION_TOL:
        return dec
    raise JointDiagonalizationError(
        f"reconstruction residual {min(r, best[0]):.3e} exceeds {RECONSTRUCTION_TOL:.0e}"
    )
