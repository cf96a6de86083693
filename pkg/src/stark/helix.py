"""Helices orthogonal to the rulings: K matrix, spectrum, closure, sweep.

Along a helix the lifted frame F = (X, E1, E3) solves dF/ds = F K with

    K = [[0, -1, 0], [1, i kappa, -mu], [0, mu, i beta]].

The helix closes at length L when every eigenvalue i nu_j of the traceless
part K0 is an integer multiple of 2 pi i / L.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import matcore
from .starkflow import FrameScalars, cubic_coeffs
from .surface import gauge_fix

log = logging.getLogger(__name__)

DEFAULT_MAX_DEN = 64
DEFAULT_RATIO_TOL = 1e-8


def k_matrix(fs):
    b, m, k = fs.beta, fs.mu, fs.kappa
    return np.array(
        [[0, -1, 0], [1, 1j * k, -m], [0, m, 1j * b]],
        dtype=complex,
    )


def spectrum(fs):
    """Sorted real nu with eigenvalues of K0 equal to i*nu: nu^3 - A nu - B = 0."""
    hc = cubic_coeffs(fs)
    return matcore.real_cubic_roots(-hc.a_lin, -hc.b_const, tol=1e-6)


def spectrum_direct(fs):
    K = k_matrix(fs)
    K0 = K - np.trace(K) / 3.0 * np.eye(3)
    return np.sort(np.linalg.eigvalsh(-1j * K0))


@dataclass
class Closure:
    closed: bool
    L: float = None
    n1: int = None
    n2: int = None
    ratio_tol: float = DEFAULT_RATIO_TOL
    max_den: int = DEFAULT_MAX_DEN


def convergents(x):
    """Continued-fraction convergents of the exact rational ``x``."""
    x = Fraction(x)
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    while True:
        a = math.floor(x)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        yield Fraction(h1, k1)
        frac = x - a
        if frac == 0:
            return
        x = 1 / frac


def closure(nu, max_den=DEFAULT_MAX_DEN, tol=DEFAULT_RATIO_TOL):
    """Decide whether the phases e^{i nu_j s} share a common period.

    A zero eigenvalue always closes (the other two are negatives of each
    other). Otherwise the ratio r of the two largest-magnitude frequencies is
    matched against convergents p/q with q <= max_den, accepting when
    |q r - p| < tol. That quantity bounds the phase mismatch accumulated over
    one period, which is what the frame closure test measures.
    """
    nu = np.asarray(nu, dtype=float)
    scale = float(np.max(np.abs(nu)))
    if scale == 0.0:
        return Closure(False, ratio_tol=tol, max_den=max_den)
    order = np.argsort(-np.abs(nu))
    b, a, z = order
    if abs(nu[z]) < tol * scale:
        # remaining pair has ratio -1
        return Closure(True, 2 * math.pi / abs(nu[b]), -1, 1, tol, max_den)
    r = nu[a] / nu[b]
    for c in convergents(r):
        if c.denominator > max_den:
            break
        p, q = c.numerator, c.denominator
        if abs(q * r - p) < tol:
            m = [p, q, -p - q]
            g = math.gcd(*m)
            omega = abs(nu[b]) / q * g
            return Closure(True, 2 * math.pi / omega, p, q, tol, max_den)
    return Closure(False, ratio_tol=tol, max_den=max_den)


@dataclass
class HelixSpec:
    fs: FrameScalars
    K: np.ndarray
    nu: np.ndarray
    closure: Closure = field(default=None)

    def to_json(self):
        c = self.closure
        return {
            "beta": self.fs.beta,
            "mu": self.fs.mu,
            "kappa": self.fs.kappa,
            "nu": [float(x) for x in self.nu],
            "closed": c.closed,
            "L": c.L,
            "n1": c.n1,
            "n2": c.n2,
            "ratio_tol": c.ratio_tol,
            "max_den": c.max_den,
        }


def helix_spec(fs, max_den=DEFAULT_MAX_DEN, tol=DEFAULT_RATIO_TOL):
    nu = spectrum(fs)
    return HelixSpec(fs, k_matrix(fs), nu, closure(nu, max_den, tol))


def frenet_integrate(F0, fs, s_samples):
    """Frames F0 exp(s K) at each s, shape (len(s), 3, 3)."""
    F0 = np.asarray(F0, dtype=complex)
    K = k_matrix(fs)
    return np.array([F0 @ matcore.skew_hermitian_exp(K, s) for s in s_samples])


def phase_distance(F1, F0):
    """min over theta of ||F1 - e^{i theta} F0|| (Frobenius)."""
    c = np.vdot(F0, F1)
    if c == 0:
        theta = 0.0
    else:
        theta = np.angle(c)
    return float(np.linalg.norm(F1 - np.exp(1j * theta) * F0))


def real_frenet_rhs(fs):
    """Coefficient matrix of the real Frenet system for (e1, e2, e3, e4).

    d e_a / ds = sum_b R[a, b] e_b.
    """
    b, m, k = fs.beta, fs.mu, fs.kappa
    return np.array(
        [
            [0, k, m, 0],
            [-k, 0, 0, m],
            [-m, 0, 0, b],
            [0, -m, -b, 0],
        ],
        dtype=float,
    )


def sweep(grid, s_samples):
    """Point cloud of the helices through every node of a SurfaceGrid.

    Yields rows (x, y, s, z) in node-major order with z the gauge-fixed first
    column of F(x, y) exp(s K(x, y)).
    """
    s_samples = list(s_samples)
    for i, xv in enumerate(grid.x):
        for j, yv in enumerate(grid.y):
            frames = frenet_integrate(grid.frames[i, j], grid.scalars(i, j), s_samples)
            for s, F in zip(s_samples, frames):
                yield xv, yv, s, gauge_fix(F[:, 0])


def point_rows(grid, s_samples):
    for xv, yv, s, z in sweep(grid, s_samples):
        yield (xv, yv, s, z[0].real, z[0].imag, z[1].real, z[1].imag, z[2].real, z[2].imag)


def lifted_point(F, fs, s):
    """Unit vector in C^3 over the hypersurface point at helix parameter s."""
    return (F @ matcore.skew_hermitian_exp(k_matrix(fs), s))[:, 0]


def shape_operator_fd(grid, i, j, s=0.0, h_s=1e-3):
    """Finite-difference shape operator at node (i, j), helix parameter s.

    Works on the Hopf lift Z(x, y, s) = F(x, y) exp(s K) e_0 in S^5. The
    second fundamental form along the unit normal N is Re<d^2 Z, N>; it is
    rewritten in the orthonormal frame (E1, i E1, E3) read off from F.
    N is the real orthogonal complement of the lift's tangent space inside
    T S^5, oriented towards i E3. Returns (A, alignment) with A 3x3 and
    alignment = |Re<N, i E3>| (1 when the estimated normal is i E3).
    """
    h = {"x": grid.x[1] - grid.x[0], "y": grid.y[1] - grid.y[0], "s": h_s}
    unit = {"x": np.array([1, 0, 0]), "y": np.array([0, 1, 0]), "s": np.array([0, 0, 1])}
    keys = ["x", "y", "s"]

    def Z(e):
        di, dj, ds = (int(c) for c in e)
        return lifted_point(grid.frames[i + di, j + dj], grid.scalars(i + di, j + dj), s + ds * h_s)

    z0 = Z((0, 0, 0))
    first = {a: (Z(unit[a]) - Z(-unit[a])) / (2 * h[a]) for a in keys}
    second = {}
    for a in keys:
        for b in keys:
            ea, eb = unit[a], unit[b]
            if a == b:
                d2 = (Z(ea) - 2 * z0 + Z(-ea)) / h[a] ** 2
            else:
                d2 = (Z(ea + eb) - Z(ea - eb) - Z(eb - ea) + Z(-ea - eb)) / (4 * h[a] * h[b])
            second[a, b] = d2

    def real6(v):
        return np.concatenate([v.real, v.imag])

    # tangent space of the lift: coordinate vectors plus the fibre i Z
    tang = [first["x"], first["y"], first["s"], 1j * z0]
    _, _, Vt = np.linalg.svd(np.array([real6(v) for v in tang + [z0]]))
    N = Vt[-1][:3] + 1j * Vt[-1][3:]

    F = grid.frames[i, j] @ matcore.skew_hermitian_exp(k_matrix(grid.scalars(i, j)), s)
    E1, E3 = F[:, 1], F[:, 2]
    align = float(np.real(np.vdot(1j * E3, N)))
    if align < 0:
        N = -N

    II = np.zeros((4, 4))
    for p, a in enumerate(keys):
        for q, b in enumerate(keys):
            II[p, q] = np.real(np.vdot(N, second[a, b]))
        # mixed derivative with the fibre angle: d/dtheta e^{i theta} Z
        II[p, 3] = II[3, p] = np.real(np.vdot(N, 1j * first[a]))
    II[3, 3] = np.real(np.vdot(N, -z0))

    basis = np.array([real6(v) for v in tang]).T
    C = np.array([np.linalg.lstsq(basis, real6(v), rcond=None)[0] for v in (E1, 1j * E1, E3)])
    return C @ II @ C.T, abs(align)
