import numpy as np


def random_herm(rng, dim, scale=1.0):
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * (z + z.conj().T) / 2


def random_unitary(rng, dim):
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def commuting_tuple(rng, dim, n, degenerate=False):
    """Members ``U diag(table[:, i]) U*``; optionally with repeated joint eigenvalues."""
    u = random_unitary(rng, dim)
    table = rng.uniform(-1, 1, (dim, n))
    if degenerate and dim > 1:
        table[1:: 2] = table[0]
    return [(u * table[:, i]) @ u.conj().T for i in range(n)], u, table
