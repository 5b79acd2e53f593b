"""Seeded generation of unital columns, operator fields and commuting tuples.

Every generator takes ``(seed, stream)``; draws come from a Philox
counter-based bit generator keyed by ``SeedSequence(seed, spawn_key=(stream,
...))``, so identical arguments give bit-identical instances and distinct
streams are independent. Sub-draws inside one generator use further spawn
keys rather than sharing a single sequential state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Optional, Sequence

import numpy as np

from .spectral import AbelianTuple, commutator, fro, hermitian, scale

UNITAL_TOL = 1e-10


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Philox generator for ``seed`` and spawn key ``key``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(key))))


def manifest(generator: str, seed: int, stream: int, **parameters) -> dict:
    return {"generator": generator, "seed": seed, "stream": stream, "parameters": parameters}


# --------------------------------------------------------------------------
# basic draws


def haar_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-distributed unitary: QR of a complex Ginibre matrix with phase fix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def _gue(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (z + z.conj().T) / 2


def _rescale_spectrum(w: np.ndarray, interval, rng) -> np.ndarray:
    a, b = interval
    if b < a:
        raise ValueError(f"empty interval [{a}, {b}]")
    span = w[-1] - w[0]
    if span <= 0:
        return np.full_like(w, a + (b - a) * rng.random())
    return a + (w - w[0]) * ((b - a) / span)


def random_hermitian(seed: int, dim: int, interval=(-1.0, 1.0), stream: int = 0) -> np.ndarray:
    """GUE draw whose spectrum is mapped affinely onto ``interval``.

    The extreme eigenvalues land on the interval endpoints (for ``dim > 1``).
    """
    rng = make_rng(seed, stream, 0)
    w, u = np.linalg.eigh(_gue(rng, dim))
    w = _rescale_spectrum(w, interval, rng)
    if interval[0] == interval[1]:
        return hermitian(interval[0] * np.eye(dim))
    return hermitian((u * w) @ u.conj().T)


def _hermitian_from(rng, dim, interval) -> np.ndarray:
    w, u = np.linalg.eigh(_gue(rng, dim))
    w = _rescale_spectrum(w, interval, rng)
    return hermitian((u * w) @ u.conj().T)


def _uniform_in(rng, interval, size) -> np.ndarray:
    a, b = interval
    return a + (b - a) * rng.random(size)


def random_abelian_tuple(seed: int, dim: int, n: int, cube=None, stream: int = 0) -> AbelianTuple:
    """``x_i = U diag(Lambda_i) U*`` with one Haar unitary ``U``.

    Each column of the planted table is uniform in its interval.
    """
    cube = _default_cube(cube, n)
    rng = make_rng(seed, stream, 1)
    u = haar_unitary(rng, dim)
    table = np.column_stack([_uniform_in(rng, iv, dim) for iv in cube])
    members = [(u * table[:, i]) @ u.conj().T for i in range(n)]
    return AbelianTuple.build(members, cube)


def planted_table(seed: int, dim: int, n: int, cube=None, stream: int = 0) -> np.ndarray:
    """The eigenvalue table that :func:`random_abelian_tuple` plants for these arguments."""
    cube = _default_cube(cube, n)
    rng = make_rng(seed, stream, 1)
    haar_unitary(rng, dim)
    return np.column_stack([_uniform_in(rng, iv, dim) for iv in cube])


def _default_cube(cube, n):
    if cube is None:
        return ((-1.0, 1.0),) * n
    cube = tuple((float(a), float(b)) for a, b in cube)
    if len(cube) == 1 and n > 1:
        cube = cube * n
    if len(cube) != n:
        raise ValueError(f"cube has {len(cube)} intervals, need {n}")
    return cube


# --------------------------------------------------------------------------
# unital columns and fields


@dataclass(frozen=True)
class UnitalColumn:
    """Square blocks ``a_1, ..., a_m`` with ``sum a_k* a_k = 1``."""

    blocks: tuple[np.ndarray, ...]
    manifest: Optional[dict] = field(default=None, compare=False)

    @classmethod
    def build(cls, blocks, tol: float = UNITAL_TOL, manifest=None) -> "UnitalColumn":
        bs = tuple(np.asarray(b, dtype=complex) for b in blocks)
        col = cls(bs, manifest)
        r = col.residual()
        if r > tol:
            raise ValueError(f"column is not unital: ||sum a*a - 1||_F = {r:.3e}")
        return col

    @property
    def m(self) -> int:
        return len(self.blocks)

    @property
    def dim(self) -> int:
        return self.blocks[0].shape[1]

    def residual(self) -> float:
        s = sum(b.conj().T @ b for b in self.blocks)
        return fro(s - np.eye(self.blocks[0].shape[1]))

    def transform(self, xs: Sequence[np.ndarray]) -> np.ndarray:
        """``sum_k a_k* x_k a_k``."""
        return hermitian(sum(a.conj().T @ x @ a for a, x in zip(self.blocks, xs)))


def _isometry(rng, rows: int, cols: int) -> np.ndarray:
    z = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_unital_column(seed: int, m: int, dim: int, stream: int = 0) -> UnitalColumn:
    """Slice an ``(m dim) x dim`` isometry into ``m`` square blocks."""
    if m < 1:
        raise ValueError("m must be at least 1")
    rng = make_rng(seed, stream, 2)
    v = _isometry(rng, m * dim, dim)
    blocks = [v[k * dim:(k + 1) * dim] for k in range(m)]
    return UnitalColumn.build(blocks, manifest=manifest("random_unital_column", seed, stream, m=m, dim=dim))


@dataclass(frozen=True)
class DiscreteField:
    """Weighted nodes ``(w_t, a_t, x_t)`` with ``sum_t w_t a_t* a_t = 1``.

    ``tuples[t]`` is the commuting tuple at node ``t`` (or ``None`` for a bare
    column field). ``legs`` records tensor-leg dimensions when the field was
    built on a tensor product.
    """

    weights: np.ndarray
    columns: tuple[np.ndarray, ...]
    tuples: Optional[tuple[tuple[np.ndarray, ...], ...]] = None
    cube: Optional[tuple[tuple[float, float], ...]] = None
    legs: Optional[tuple[int, ...]] = None
    manifest: Optional[dict] = field(default=None, compare=False)

    @property
    def nodes(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.columns[0].shape[1]

    @property
    def n(self) -> int:
        return len(self.tuples[0]) if self.tuples else 0

    def unital_residual(self) -> float:
        s = sum(w * a.conj().T @ a for w, a in zip(self.weights, self.columns))
        return fro(s - np.eye(self.dim))

    def integrate(self, values: Sequence[np.ndarray]) -> np.ndarray:
        """``sum_t w_t a_t* v_t a_t``."""
        out = sum(w * (a.conj().T @ v @ a) for w, a, v in zip(self.weights, self.columns, values))
        return hermitian(out)

    def averaged_tuple(self) -> list[np.ndarray]:
        """``y_i = sum_t w_t a_t* x_it a_t`` for each variable ``i``."""
        return [self.integrate([t[i] for t in self.tuples]) for i in range(self.n)]


def _check_field(fld: DiscreteField) -> DiscreteField:
    r = fld.unital_residual()
    if r > UNITAL_TOL:
        raise ValueError(f"field is not unital: residual {r:.3e}")
    if np.any(fld.weights < 0):
        raise ValueError("negative node weight")
    return fld


def random_field(seed: int, nodes: int, dim: int, n: int, cube=None, stream: int = 0) -> DiscreteField:
    """Generic unital column field carrying random commuting tuples.

    Weights are symmetric Dirichlet; the blocks ``b_t`` of a random unital
    column are rescaled to ``a_t = b_t / sqrt(w_t)``.
    """
    if nodes < 1:
        raise ValueError("need at least one node")
    cube = _default_cube(cube, n)
    rng = make_rng(seed, stream, 3)
    w = rng.dirichlet(np.ones(nodes))
    v = _isometry(rng, nodes * dim, dim)
    cols = tuple(v[t * dim:(t + 1) * dim] / np.sqrt(w[t]) for t in range(nodes))
    tuples = tuple(
        random_abelian_tuple(seed, dim, n, cube, stream=_sub(stream, 10 + t)).members for t in range(nodes)
    )
    return _check_field(DiscreteField(
        w, cols, tuples, cube, None,
        manifest("random_field", seed, stream, nodes=nodes, dim=dim, n=n, cube=cube),
    ))


def _sub(stream: int, k: int) -> int:
    # deterministic child stream index; streams below 2**20 never collide
    return (stream + 1) * (1 << 20) + k


# --------------------------------------------------------------------------
# tensor legs


def embed(op: np.ndarray, leg: int, legs: Sequence[int]) -> np.ndarray:
    """``1 x ... x op x ... x 1`` with ``op`` on tensor factor ``leg``."""
    factors = [np.eye(d) for d in legs]
    factors[leg] = np.asarray(op)
    return reduce(np.kron, factors)


def leg_part(x: np.ndarray, leg: int, legs: Sequence[int]) -> np.ndarray:
    """Normalized partial trace of ``x`` onto factor ``leg``."""
    legs = list(legs)
    t = np.asarray(x).reshape(legs + legs)
    k = len(legs)
    others = [i for i in range(k) if i != leg]
    # contract every other factor's row index with its column index
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:k])
    cols = list(letters[k:2 * k])
    for i in others:
        cols[i] = rows[i]
    spec = "".join(rows) + "".join(cols) + "->" + rows[leg] + cols[leg]
    red = np.einsum(spec, t)
    return red / np.prod([legs[i] for i in others])


def on_leg(x: np.ndarray, leg: int, legs: Sequence[int], tol: float = 1e-10) -> bool:
    """Whether ``x`` acts only on factor ``leg``."""
    r = fro(x - embed(leg_part(x, leg, legs), leg, legs))
    return r <= tol * (1.0 + fro(x))


def compatible_family_eq8(seed: int, legs: Sequence[int], cube=None, count: int = 2, stream: int = 0):
    """``count`` tuples on a tensor product, member ``i`` supported on leg ``i``.

    Members on different legs commute, so every pair is compatible.
    """
    legs = tuple(int(d) for d in legs)
    n = len(legs)
    cube = _default_cube(cube, n)
    rng = make_rng(seed, stream, 4)
    out = []
    for _ in range(count):
        members = [embed(_hermitian_from(rng, d, cube[i]), i, legs) for i, d in enumerate(legs)]
        out.append(AbelianTuple.build(members, cube))
    return out


def compatible_pair_eq8(seed: int, legs: Sequence[int], cube=None, stream: int = 0):
    """Two compatible tuples built leg-by-leg on a tensor product."""
    x, y = compatible_family_eq8(seed, legs, cube, 2, stream)
    return x, y


def compatible_family_eq7(
    seed: int, dim: int, n: int, eps=None, count: int = 2, stream: int = 0, scalar_offsets: bool = False,
    blocks: int = 2,
):
    """Tuples ``(eps_1 x + c_1, ..., eps_n x + c_n)`` from one compatible family.

    A generator ``G`` with ``blocks`` degenerate eigenspaces fixes the
    commutative algebra ``C`` (polynomials in ``G``); each tuple draws its own
    Hermitian ``x`` block-diagonal in ``G``'s eigenbasis (so ``x`` commutes
    with ``C``) and its own offsets ``c_i`` in ``C``. With ``scalar_offsets``
    the offsets are multiples of the identity and ``x`` is unrestricted.
    """
    rng = make_rng(seed, stream, 5)
    eps = np.asarray(eps if eps is not None else rng.standard_normal(n), dtype=float)
    if eps.shape != (n,) or not np.any(eps):
        raise ValueError("eps must be a nonzero vector of length n")
    v = haar_unitary(rng, dim)
    sizes = [len(s) for s in np.array_split(np.arange(dim), min(blocks, dim))]
    out = []
    for _ in range(count):
        if scalar_offsets:
            x = _gue(rng, dim)
            offsets = [c * np.eye(dim) for c in rng.standard_normal(n)]
        else:
            xb = np.zeros((dim, dim), dtype=complex)
            start = 0
            for s in sizes:
                xb[start:start + s, start:start + s] = _gue(rng, s)
                start += s
            x = v @ xb @ v.conj().T
            offsets = []
            for _ in range(n):
                vals = np.repeat(rng.standard_normal(len(sizes)), sizes)
                offsets.append((v * vals) @ v.conj().T)
        members = [eps[i] * x + offsets[i] for i in range(n)]
        out.append(AbelianTuple.build(members))
    return out


def compatible_pair_eq7(seed: int, dim: int, n: int, eps=None, stream: int = 0, scalar_offsets: bool = False):
    x, y = compatible_family_eq7(seed, dim, n, eps, 2, stream, scalar_offsets)
    return x, y


def check_field_condition_eq11(fld: DiscreteField, tol: float = 1e-10) -> tuple[bool, float]:
    """Sufficient condition for the averaged tuple to commute.

    Checks ``[a_t* x_it a_t, a_s* x_js a_s] = [a_t* x_jt a_t, a_s* x_is a_s]``
    for all ``i, j, s, t``. Returns ``(ok, worst relative residual)``.
    """
    n = fld.n
    conj = [[a.conj().T @ x @ a for x in tup] for a, tup in zip(fld.columns, fld.tuples)]
    worst = 0.0
    for t in range(fld.nodes):
        for s in range(fld.nodes):
            for i in range(n):
                for j in range(i + 1, n):
                    lhs = commutator(conj[t][i], conj[s][j])
                    rhs = commutator(conj[t][j], conj[s][i])
                    r = fro(lhs - rhs) / (scale(conj[t][i], conj[s][j]) + scale(conj[t][j], conj[s][i]) - 1.0)
                    worst = max(worst, r)
    return worst <= tol, worst


def tensor_field(
    seed: int, legs: Sequence[int], leg_nodes: Sequence[int], cube=None, stream: int = 0,
    scalar_columns: bool = False,
) -> DiscreteField:
    """Field on a tensor product whose averaged tuple is supported leg-wise.

    Leg ``l`` gets its own unital column field ``(w_l, c_l)`` with
    ``leg_nodes[l]`` nodes and values ``x_l``. Nodes of the result are
    multi-indices ``t = (t_1, ..., t_n)`` with ``a_t = c_{1 t_1} x ... x
    c_{n t_n}``, ``w_t = prod_l w_{l t_l}`` and ``x_it`` the embedded
    ``x_{i t_i}``. Averaging over the other legs yields ``1`` there, so
    ``y_i`` lies on leg ``i`` and the averaged tuple commutes. With
    ``scalar_columns`` every ``c`` is the identity (pure mixture).
    """
    legs = tuple(int(d) for d in legs)
    n = len(legs)
    cube = _default_cube(cube, n)
    rng = make_rng(seed, stream, 6)
    leg_w, leg_c, leg_x = [], [], []
    for d, k, iv in zip(legs, leg_nodes, cube):
        w = rng.dirichlet(np.ones(k))
        if scalar_columns:
            cols = [np.eye(d, dtype=complex) for _ in range(k)]
        else:
            v = _isometry(rng, k * d, d)
            cols = [v[t * d:(t + 1) * d] / np.sqrt(w[t]) for t in range(k)]
        leg_w.append(w)
        leg_c.append(cols)
        leg_x.append([_hermitian_from(rng, d, iv) for _ in range(k)])
    weights, columns, tuples = [], [], []
    for idx in np.ndindex(*leg_nodes):
        weights.append(float(np.prod([leg_w[l][t] for l, t in enumerate(idx)])))
        columns.append(reduce(np.kron, [leg_c[l][t] for l, t in enumerate(idx)]))
        tuples.append(tuple(embed(leg_x[i][idx[i]], i, legs) for i in range(n)))
    fld = DiscreteField(
        np.array(weights), tuple(columns), tuple(tuples), cube, legs,
        manifest("tensor_field", seed, stream, legs=list(legs), leg_nodes=list(leg_nodes), cube=cube,
                 scalar_columns=scalar_columns),
    )
    return _check_field(fld)


@dataclass(frozen=True)
class LegFields:
    """Per-leg column fields on a tensor product.

    ``columns[i][t]`` and ``values[i][t]`` act on leg ``i`` only (already
    embedded in the full space) and ``weights[i][t]`` is the node weight.
    Together they satisfy ``sum_i sum_t w_it a_it* a_it = 1``.
    """

    legs: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    columns: tuple[tuple[np.ndarray, ...], ...]
    values: Optional[tuple[tuple[np.ndarray, ...], ...]] = None
    cube: Optional[tuple[tuple[float, float], ...]] = None
    manifest: Optional[dict] = field(default=None, compare=False)

    @property
    def n(self) -> int:
        return len(self.legs)

    @property
    def dim(self) -> int:
        return int(np.prod(self.legs))

    def leg_mass(self, i: int) -> np.ndarray:
        """``b_i = sum_t w_it a_it* a_it``."""
        return sum(w * a.conj().T @ a for w, a in zip(self.weights[i], self.columns[i]))

    def unital_residual(self) -> float:
        return fro(sum(self.leg_mass(i) for i in range(self.n)) - np.eye(self.dim))


def random_leg_fields(
    seed: int, legs: Sequence[int], nodes: int, cube=None, stream: int = 0, with_values: bool = True,
) -> LegFields:
    """Leg-supported column fields whose total mass is the identity.

    Leg masses must be scalars ``beta_i`` summing to one (a sum of operators
    on different legs equals ``1`` only then); ``beta`` is Dirichlet and each
    leg's column is a rescaled random unital column.
    """
    legs = tuple(int(d) for d in legs)
    n = len(legs)
    cube = _default_cube(cube, n)
    rng = make_rng(seed, stream, 7)
    beta = rng.dirichlet(np.ones(n))
    weights, columns, values = [], [], []
    for i, d in enumerate(legs):
        w = rng.dirichlet(np.ones(nodes))
        v = _isometry(rng, nodes * d, d)
        cols = tuple(embed(v[t * d:(t + 1) * d] * np.sqrt(beta[i] / w[t]), i, legs) for t in range(nodes))
        weights.append(w)
        columns.append(cols)
        if with_values:
            values.append(tuple(embed(_hermitian_from(rng, d, cube[i]), i, legs) for _ in range(nodes)))
    lf = LegFields(
        legs, tuple(weights), tuple(columns), tuple(values) if with_values else None, cube,
        manifest("random_leg_fields", seed, stream, legs=list(legs), nodes=nodes, cube=cube),
    )
    r = lf.unital_residual()
    if r > UNITAL_TOL:
        raise ValueError(f"leg fields not unital: {r:.3e}")
    return lf


def random_leg_tuple(seed: int, legs: Sequence[int], cube=None, stream: int = 0) -> AbelianTuple:
    """Fixed tuple with member ``i`` supported on leg ``i``."""
    return compatible_family_eq8(seed, legs, cube, 1, stream)[0]
