"""Unitary frames over the totally geodesic leaf Sigma.

On Sigma the coordinates (x, y) come from the closed 1-forms

    dx = beta^(-1/3) w2,   dy = mu^(4/3) beta^(-1/3) w2 + beta^(2/3) mu^(1/3) w3,

and the frame F = (X, E1, E3) obeys dF = F Omega with Omega linear in the
coframe (w1, w2, w3). The gauge sigma = 0 is used throughout.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import matcore
from .errors import MuZero, NonUnitaryDrift
from .starkflow import FrameScalars, integrate_flow

log = logging.getLogger(__name__)

REORTHO_TOL = 1e-9
DRIFT_LIMIT = 1e-6


def coframe_from_xy(fs):
    """2x2 matrix M with (w2, w3)^T = M (dx, dy)^T."""
    b, m = fs.beta, fs.mu
    if m <= 0 or b <= 0:
        raise MuZero(f"coordinates need beta > 0 and mu > 0, got beta={b}, mu={m}")
    b13 = np.cbrt(b)
    m13 = np.cbrt(m)
    return np.array([[b13, 0.0], [-m / b13**2, 1.0 / (b13**2 * m13)]])


def xy_from_coframe(fs):
    """Inverse of coframe_from_xy: (dx, dy) in terms of (w2, w3)."""
    b13 = np.cbrt(fs.beta)
    m13 = np.cbrt(fs.mu)
    return np.array([[1.0 / b13, 0.0], [m13**4 / b13, b13**2 * m13]])


def mc_matrix(fs, w):
    """Omega(w) over (X, E1, E3) for coframe coefficients w = (w1, w2, w3)."""
    w1, w2, w3 = w
    b, m, k = fs.beta, fs.mu, fs.kappa
    O = np.zeros((3, 3), dtype=complex)
    O[1, 0] = w1 + 1j * w2
    O[2, 0] = w3
    O[1, 1] = 1j * k * w1
    O[2, 1] = m * w1 + 1j * (m * w2 + b * w3)
    O[2, 2] = 1j * b * w1
    O[0, 1] = -np.conj(O[1, 0])
    O[0, 2] = -np.conj(O[2, 0])
    O[1, 2] = -np.conj(O[2, 1])
    return O


def _mc_batch(beta, mu, w2, w3):
    """Omega(0, w2, w3) for arrays of scalars; shape (..., 3, 3)."""
    O = np.zeros(np.shape(beta) + (3, 3), dtype=complex)
    O[..., 1, 0] = 1j * w2
    O[..., 2, 0] = w3
    O[..., 2, 1] = 1j * (mu * w2 + beta * w3)
    O[..., 0, 1] = 1j * w2
    O[..., 0, 2] = -w3
    O[..., 1, 2] = 1j * (mu * w2 + beta * w3)
    return O


def pde_rhs(fs, direction):
    """(d beta, d mu, d kappa) evaluated on the unit w2 or w3 direction."""
    b, m, k = fs.beta, fs.mu, fs.kappa
    if direction == "omega2":
        return (b * k + 2 * m * m + 2, m * (2 * k - b), k * k - 2 * m * m + 4)
    if direction == "omega3":
        return (3 * b * m, m * m + b * k - b * b + 1, m * (k - 2 * b))
    raise ValueError(f"direction must be omega2 or omega3, got {direction!r}")


def pde_rhs_xy(fs):
    """Partial derivatives of (beta, mu, kappa) in x and y, shape (2, 3)."""
    M = coframe_from_xy(fs)
    g = np.array([pde_rhs(fs, "omega2"), pde_rhs(fs, "omega3")])
    return M.T @ g


def _omega_dir(beta, mu, direction, h):
    """h * Omega along the coordinate direction, batched."""
    b13 = np.cbrt(beta)
    if direction == "x":
        w2 = b13
        w3 = -mu / b13**2
    else:
        w2 = np.zeros_like(beta)
        w3 = 1.0 / (b13**2 * np.cbrt(mu))
    return _mc_batch(beta, mu, h * w2, h * w3)


def _step(F, G):
    """F @ expm(G) with polar clean-up when unitarity drifts."""
    out = F @ scipy.linalg.expm(G)
    eye = np.eye(3)
    defect = np.linalg.norm(np.conj(np.swapaxes(out, -1, -2)) @ out - eye, axis=(-2, -1))
    worst = float(np.max(defect)) if defect.size else 0.0
    if worst > DRIFT_LIMIT:
        raise NonUnitaryDrift(f"unitarity defect {worst:.3e} exceeds {DRIFT_LIMIT}")
    if worst > REORTHO_TOL:
        W, _, Vh = np.linalg.svd(out)
        out = W @ Vh
    return out


@dataclass
class SurfaceGrid:
    x: np.ndarray
    y: np.ndarray
    beta: np.ndarray
    mu: np.ndarray
    kappa: np.ndarray
    frames: np.ndarray  # (nx, ny, 3, 3), row-then-column transport
    residual: np.ndarray  # (nx, ny)

    def scalars(self, i, j):
        return FrameScalars(float(self.beta[i, j]), float(self.mu[i, j]), float(self.kappa[i, j]))

    def max_residual(self):
        r = self.residual[1:-1, 1:-1]
        return float(r.max()) if r.size else 0.0

    def rows(self):
        for i, xv in enumerate(self.x):
            for j, yv in enumerate(self.y):
                F = self.frames[i, j].reshape(-1)
                yield (xv, yv, *[c for z in F for c in (z.real, z.imag)], self.residual[i, j])


def integrate_surface_frames(field, F0=None):
    """Transport frames over Sigma from a flow field sampled at half spacing.

    ``field`` is a FlowField whose lattice has an odd number of samples per
    axis; even-indexed samples are the surface nodes and odd-indexed samples
    supply exact edge midpoints for Omega. Frames go F <- F expm(h Omega_mid).
    The residual at a node is the Frobenius distance between row-then-column
    and column-then-row transport.
    """
    F0 = np.eye(3, dtype=complex) if F0 is None else np.asarray(F0, dtype=complex)
    if not matcore.is_unitary(F0, 1e-9):
        raise NonUnitaryDrift("F0 is not unitary")
    nxf, nyf = len(field.x), len(field.y)
    if nxf % 2 == 0 or nyf % 2 == 0:
        raise ValueError("field lattice needs an odd number of samples per axis")
    beta = field.beta
    mu = field.mu
    xs = field.x[::2]
    ys = field.y[::2]
    nx, ny = len(xs), len(ys)
    if np.any(mu <= 0):
        raise MuZero("mu vanishes on the lattice")

    # h * Omega on every edge, evaluated at the odd midpoint samples
    hx = np.diff(xs)
    hy = np.diff(ys)
    Gx = _omega_dir(beta[1::2, ::2], mu[1::2, ::2], "x", 1.0) * hx[:, None, None, None]
    Gy = _omega_dir(beta[::2, 1::2], mu[::2, 1::2], "y", 1.0) * hy[None, :, None, None]

    rc = np.empty((nx, ny, 3, 3), dtype=complex)
    rc[0, 0] = F0
    for i in range(nx - 1):
        rc[i + 1, 0] = _step(rc[i, 0], Gx[i, 0])
    for j in range(ny - 1):
        rc[:, j + 1] = _step(rc[:, j], Gy[:, j])

    cr = np.empty_like(rc)
    cr[0, 0] = F0
    for j in range(ny - 1):
        cr[0, j + 1] = _step(cr[0, j], Gy[0, j])
    for i in range(nx - 1):
        cr[i + 1, :] = _step(cr[i, :], Gx[i, :])

    residual = np.linalg.norm(rc - cr, axis=(-2, -1))
    return SurfaceGrid(
        xs, ys, beta[::2, ::2], mu[::2, ::2], field.kappa[::2, ::2], rc, residual
    )


def gauge_fix(z):
    """Multiply by the phase making the largest-modulus entry real positive.

    Ties go to the lowest index (np.argmax picks the first maximum).
    """
    z = np.asarray(z, dtype=complex)
    k = int(np.argmax(np.abs(z)))
    if z[k] == 0:
        return z
    out = z * (np.conj(z[k]) / abs(z[k]))
    out[k] = abs(z[k])
    return out


def real_plane_defect(grid):
    """Largest imaginary part of F0^dagger X(x, y) after gauge fixing.

    On a totally real leaf every X lies in the real span of the columns of a
    fixed frame, so the defect is zero up to round-off.
    """
    F0 = grid.frames[0, 0]
    worst = 0.0
    for i in range(len(grid.x)):
        for j in range(len(grid.y)):
            # columns of F0 diag(1, -i, 1) span the real plane
            c = F0.conj().T @ grid.frames[i, j][:, 0]
            c[1] *= 1j
            worst = max(worst, float(np.max(np.abs(gauge_fix(c).imag))))
    return worst


def build_grid(seed, v0, x_range, y_range, h, F0=None):
    """Flow plus frame transport on a surface lattice of spacing ``h``.

    Range ends are snapped to x_min + n h so the half-spacing flow lattice
    lines up with the surface nodes. Returns (field, grid).
    """

    def snap(r):
        span = r[1] - r[0]
        n = int(round(span / h)) if span > 0 else 0
        return (r[0], r[0] + n * h)

    field = integrate_flow(seed, v0, snap(x_range), snap(y_range), h / 2)
    return field, integrate_surface_frames(field, F0)
