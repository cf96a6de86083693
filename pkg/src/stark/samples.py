"""Random generators for stark shape operators and test controls."""

import numpy as np

from .austere import ShapeOperatorRep, hypersurface_residuals, split_to_standard
from .canonform import irreducible_matrix, realify, reducible_matrix


def random_symmetric(n, rng):
    X = rng.normal(size=(n, n))
    return 0.5 * (X + X.T)


def random_irreducible(n, rng):
    """Irreducible-layout matrix with random S and nonzero d."""
    d = rng.normal(size=n)
    while np.linalg.norm(d) < 0.1:
        d = rng.normal(size=n)
    return irreducible_matrix(random_symmetric(n, rng), d)


def random_reducible(k, l, rng):
    """Reducible-layout matrix in the split basis J_{k,l}."""
    P = random_symmetric(k, rng)
    Q = random_symmetric(k, rng)
    if l == 0:
        return reducible_matrix(P, Q, None, None)
    d = rng.normal(size=l)
    while np.linalg.norm(d) < 0.1:
        d = rng.normal(size=l)
    return reducible_matrix(P, Q, random_symmetric(l, rng), d)


def random_unitary(n, rng):
    Z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(Z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_phi_commuting(n, rng):
    """Random element of U_n inside O(2n+1): commutes with J_n, fixes W."""
    G = np.eye(2 * n + 1)
    G[:-1, :-1] = realify(random_unitary(n, rng))
    return G


def random_stark(n, rng, k=None):
    """Scrambled stark matrix in a standard basis.

    Returns ``(A, kind, (k, l))``. ``k`` = 0 gives the irreducible layout,
    otherwise the split layout with blocks (k, n-k) is permuted to a
    standard basis before a random U_n conjugation.
    """
    if k is None:
        k = int(rng.integers(0, n + 1))
    if k == 0:
        A0 = random_irreducible(n, rng)
        kind = "irreducible"
    else:
        P = split_to_standard(k, n - k)
        A0 = P @ random_reducible(k, n - k, rng) @ P.T
        kind = "reducible"
    G = random_phi_commuting(n, rng)
    return G @ A0 @ G.T, kind, (k, n - k)


def random_tracefree(side, rng):
    A = random_symmetric(side, rng)
    return A - np.trace(A) / side * np.eye(side)


def random_nonaustere(side, rng, margin=1e-3):
    """Trace-free symmetric matrix whose austerity residual is at least ``margin``."""
    while True:
        A = random_tracefree(side, rng)
        if hypersurface_residuals(ShapeOperatorRep(A)).max() >= margin:
            return A
