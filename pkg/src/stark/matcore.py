"""Small dense matrix kernels.

Characteristic polynomials by trace recursion, elementary symmetric functions
of eigenvalues, a trigonometric solver for depressed cubics with three real
roots, and the exponential of a 3x3 skew-Hermitian matrix.
"""

import math

import numpy as np
import scipy.linalg

from .errors import DiscriminantNegative, NotSkewHermitian

DEFAULT_TOL = 1e-9

# Relative root separation below which the spectral exponential hands over
# to scaling-and-squaring.
CLUSTER_TOL = 1e-6


def sym(M):
    """Return the symmetric part of ``M`` as a float array."""
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def charpoly_coeffs(M):
    """Coefficients of det(lambda*I - M), highest power first.

    Faddeev-LeVerrier recursion run on M / ||M|| and rescaled afterwards,
    which keeps the intermediate traces O(1).
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("charpoly_coeffs needs a square matrix")
    n = M.shape[0]
    scale = np.linalg.norm(M, 2) if n else 0.0
    if scale == 0.0:
        return np.concatenate(([1.0], np.zeros(n)))
    Ms = M / scale
    coeffs = np.empty(n + 1)
    coeffs[0] = 1.0
    N = np.zeros_like(Ms)
    eye = np.eye(n)
    for k in range(1, n + 1):
        N = Ms @ N + coeffs[k - 1] * eye
        coeffs[k] = -np.trace(Ms @ N) / k
    coeffs *= scale ** np.arange(n + 1)
    return coeffs


def elem_sym(M, k):
    """k-th elementary symmetric function of the eigenvalues of ``M``.

    Out-of-range degrees follow the usual conventions: e_0 = 1 and e_k = 0
    for k < 0 or k > n.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if k == 0:
        return 1.0
    if k < 0 or k > n:
        return 0.0
    return float((-1) ** k * charpoly_coeffs(M)[k])


def elem_sym_all(M):
    """Array ``e`` with e[k] = e_k(M) for k = 0..n."""
    c = charpoly_coeffs(M)
    return c * (-1.0) ** np.arange(len(c))


def real_cubic_roots(p, q, tol=DEFAULT_TOL):
    """Roots of nu^3 + p*nu + q, assumed all real, sorted ascending.

    Uses the trigonometric (Viete) form followed by one Newton polish per
    root. Raises DiscriminantNegative when the discriminant -4p^3 - 27q^2 is
    negative beyond ``tol`` relative to its terms.
    """
    p = float(p)
    q = float(q)
    disc = -4.0 * p**3 - 27.0 * q**2
    size = max(abs(4.0 * p**3), 27.0 * q**2, 1e-300)
    if disc < -tol * size and not (abs(p) < tol and abs(q) < tol):
        raise DiscriminantNegative(
            f"cubic nu^3 + {p}*nu + {q} has complex roots (discriminant {disc:.3e})"
        )
    m = 2.0 * math.sqrt(-p / 3.0) if p < 0.0 else 0.0
    if p * m == 0.0:
        # Three real roots with p >= 0 only when p = q = 0; p * m also
        # underflows for denormal p. Either way the roots coincide.
        r = -math.copysign(abs(q) ** (1.0 / 3.0), q)
        return np.array([r, r, r])
    arg = 3.0 * q / (p * m)
    arg = min(1.0, max(-1.0, arg))
    phi = math.acos(arg) / 3.0
    roots = np.array([m * math.cos(phi - 2.0 * math.pi * j / 3.0) for j in range(3)])
    for j in range(3):
        r = roots[j]
        f = r**3 + p * r + q
        df = 3.0 * r**2 + p
        if abs(df) > 1e-8 * max(1.0, abs(p)):
            step = f / df
            if abs(step) < 1e-6 * max(1.0, m):
                roots[j] = r - step
    roots.sort()
    return roots


def is_unitary(U, tol=DEFAULT_TOL):
    U = np.asarray(U)
    return bool(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0])) < tol)


def is_skew_hermitian(K, tol=DEFAULT_TOL):
    K = np.asarray(K)
    return bool(np.linalg.norm(K + K.conj().T) < tol)


def unitarity_defect(U):
    U = np.asarray(U)
    return float(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0])))


def polar_unitary(U):
    """Nearest unitary matrix to ``U`` in Frobenius norm."""
    W, _, Vh = np.linalg.svd(U)
    return W @ Vh


def _null_vector(M):
    """Unit vector spanning the (numerical) kernel of a rank-2 Hermitian 3x3."""
    best = None
    best_norm = -1.0
    for a, b in ((0, 1), (0, 2), (1, 2)):
        v = np.cross(M[a], M[b])
        nv = np.linalg.norm(v)
        if nv > best_norm:
            best, best_norm = v, nv
    return best / best_norm


def hermitian3_eig(H):
    """Eigenvalues (cubic roots) and orthonormal eigenvectors of a traceless
    Hermitian 3x3 matrix. Returns ``(nu, V, gap)`` with ``gap`` the relative
    minimum root separation.
    """
    p = -0.5 * float(np.real(np.trace(H @ H)))
    q = -float(np.real(np.linalg.det(H)))
    nu = real_cubic_roots(p, q, tol=1e-6)
    scale = max(1.0, float(np.max(np.abs(nu))))
    gaps = np.array([nu[1] - nu[0], nu[2] - nu[1]])
    gap = float(gaps.min()) / scale
    if gap < CLUSTER_TOL:
        return nu, None, gap
    # Most isolated root first: its eigenvector is the best conditioned.
    isolated = 0 if gaps[0] >= gaps[1] else 2
    others = [j for j in range(3) if j != isolated]
    eye = np.eye(3)
    v0 = _null_vector(H - nu[isolated] * eye)
    v1 = _null_vector(H - nu[others[0]] * eye)
    v1 = v1 - np.vdot(v0, v1) * v0
    v1 /= np.linalg.norm(v1)
    v2 = np.conj(np.cross(v0, v1))
    v2 /= np.linalg.norm(v2)
    V = np.empty((3, 3), dtype=complex)
    V[:, isolated] = v0
    V[:, others[0]] = v1
    V[:, others[1]] = v2
    return nu, V, gap


def skew_hermitian_exp(K, s=1.0, tol=DEFAULT_TOL):
    """exp(s*K) for a 3x3 skew-Hermitian ``K``.

    The traceless part is diagonalised through the roots of its
    characteristic cubic; the trace contributes a scalar phase. Clustered
    spectra fall back to scipy's scaling-and-squaring followed by a polar
    projection onto U(3).
    """
    K = np.asarray(K, dtype=complex)
    if K.shape != (3, 3):
        raise ValueError("skew_hermitian_exp expects a 3x3 matrix")
    if np.linalg.norm(K + K.conj().T) >= tol * max(1.0, np.linalg.norm(K)):
        raise NotSkewHermitian("matrix is not skew-Hermitian within tolerance")
    s = float(s)
    tr = np.trace(K)
    K0 = K - (tr / 3.0) * np.eye(3)
    H = -1j * K0
    H = 0.5 * (H + H.conj().T)
    phase = np.exp(s * tr / 3.0)
    if s == 0.0 or not np.any(H):
        return phase * np.eye(3, dtype=complex)
    nu, V, _ = hermitian3_eig(H)
    if V is None:
        U = scipy.linalg.expm(s * 1j * H)
        return phase * polar_unitary(U)
    return phase * (V * np.exp(1j * s * nu)) @ V.conj().T
