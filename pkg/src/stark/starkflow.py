"""Reduced ODE system for stark hypersurfaces in CP^2.

Frame scalars (beta, mu, kappa) are the shape-operator entries and the
connection coefficient of the adapted frame. On the patch beta > 0, mu > 0
they are traded for

    t = kappa / beta,  u = (mu / beta)^(2/3),  v = beta^(2/3),

in which the structure equations become a rational total differential
system in coordinates (x, y). The combinations

    C = ((t - u^3) v^2 - 1/v) / 3,   D = v (t + 1) / 3

are constant in y and obey dC/dx = 4(C^2 + D), dD/dx = 2(CD + 1).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import BZero, OutsideCanonicalPatch, OutsideValidRegion, StepUnderflow, UDegenerate

log = logging.getLogger(__name__)

# y-steps are refused below this value of u (du/dy carries 1/u).
U_MIN = 1e-6
MAX_STEPS = 10_000_000


@dataclass(frozen=True)
class FrameScalars:
    beta: float
    mu: float
    kappa: float

    def __post_init__(self):
        if self.beta == 0:
            raise OutsideCanonicalPatch("beta must be nonzero")


@dataclass(frozen=True)
class ReducedState:
    t: float
    u: float
    v: float


@dataclass(frozen=True)
class FirstIntegrals:
    C: float
    D: float


@dataclass(frozen=True)
class HelixCubic:
    a_lin: float
    b_const: float


EQUILIBRIUM = FirstIntegrals(1.0, -1.0)


def to_reduced(fs):
    if fs.beta <= 0 or fs.mu < 0:
        raise OutsideCanonicalPatch(
            f"need beta > 0 and mu >= 0, got beta={fs.beta}, mu={fs.mu}"
        )
    return ReducedState(
        fs.kappa / fs.beta,
        (fs.mu / fs.beta) ** (2.0 / 3.0),
        fs.beta ** (2.0 / 3.0),
    )


def from_reduced(rs):
    if rs.v <= 0 or rs.u < 0:
        raise OutsideCanonicalPatch(f"need v > 0 and u >= 0, got u={rs.u}, v={rs.v}")
    beta = rs.v**1.5
    return FrameScalars(beta, (rs.u * rs.v) ** 1.5, rs.t * beta)


def first_integrals(rs):
    t, u, v = rs.t, rs.u, rs.v
    return FirstIntegrals(((t - u**3) * v**2 - 1.0 / v) / 3.0, v * (t + 1.0) / 3.0)


def u_cubed(C, D, v):
    t = 3.0 * D / v - 1.0
    return t, t - (3.0 * C * v + 1.0) / v**3


def recover_state(fi, v):
    """(t, u, v) with the given first integrals; inverse of first_integrals."""
    if v <= 0:
        raise OutsideValidRegion(f"v = {v} is not positive")
    t, u3 = u_cubed(fi.C, fi.D, v)
    # round-off at the u = 0 boundary is clamped, relative to the terms
    if u3 < 0 and -u3 <= 1e-12 * max(1.0, abs(t), abs(3.0 * fi.C * v + 1.0) / v**3):
        u3 = 0.0
    if u3 < 0:
        raise OutsideValidRegion(
            f"u^3 = {u3:.6g} < 0 for C={fi.C}, D={fi.D}, v={v}", coordinate=(fi.C, fi.D, v)
        )
    return ReducedState(t, float(np.cbrt(u3)), v)


def cd_rhs(fi):
    C, D = fi.C, fi.D
    return 4.0 * (C * C + D), 2.0 * (C * D + 1.0)


def tuv_rhs(rs, need_y=True):
    """x- and y-direction derivatives of (t, u, v).

    Returns a dict with keys ``x_dir`` and ``y_dir``. The y-direction needs
    u != 0; pass ``need_y=False`` to get only the x-direction.
    """
    t, u, v = rs.t, rs.u, rs.v
    x_dir = (
        2.0 * (2.0 - t) / v,
        -2.0 * u / v,
        (2.0 / 3.0) * (v**3 * (t - u**3) + 2.0),
    )
    out = {"x_dir": x_dir, "y_dir": None}
    if need_y:
        if u == 0:
            raise UDegenerate("du/dy is singular at u = 0")
        out["y_dir"] = (
            -2.0 * u * (t + 1.0),
            (2.0 / (3.0 * u)) * (t + v**-3 - 2.0 * u**3 - 1.0),
            2.0 * u * v,
        )
    return out


def v_rhs_x(C, v):
    """dv/dx once t - u^3 is eliminated through C."""
    return 2.0 * (C * v + 1.0)


def cubic_coeffs(fs):
    """Coefficients A, B of the characteristic cubic of the helix matrix."""
    b, m, k = fs.beta, fs.mu, fs.kappa
    a = m * m + (b * b - b * k + k * k) / 3.0 + 1.0
    bc = (2 * b**3 - 3 * b * b * k - 3 * b * k * k + 2 * k**3) / 27.0 + (
        m * m * (b + k) + k - 2 * b
    ) / 3.0
    return HelixCubic(a, bc)


def invariant_ratio(fs):
    hc = cubic_coeffs(fs)
    if hc.b_const == 0:
        raise BZero("A^3/B^2 undefined: B = 0", a_cubed=hc.a_lin**3, b=0.0)
    return hc.a_lin**3 / hc.b_const**2


def derived_cd_identities(rs):
    """A and B rewritten through C, D and v.

    A = 3 v (D^2 - C),  B = v^(3/2) (2 D^3 - 3 C D - 1).
    """
    fi = first_integrals(rs)
    C, D = fi.C, fi.D
    return {
        "A_from_cd": 3.0 * rs.v * (D * D - C),
        "B_from_cd": rs.v**1.5 * (2.0 * D**3 - 3.0 * C * D - 1.0),
    }


def ratio_from_cd(C, D):
    den = (2.0 * D**3 - 3.0 * C * D - 1.0) ** 2
    return 27.0 * (D * D - C) ** 3 / den if den != 0 else math.inf


# -- integration ---------------------------------------------------------


def _grid(lo, hi, step):
    if step <= 0:
        raise StepUnderflow(f"step must be positive, got {step}")
    span = hi - lo
    if span < 0:
        raise ValueError(f"empty range [{lo}, {hi}]")
    n = int(round(span / step))
    if span > 0 and n == 0:
        n = 1
    if n > MAX_STEPS or (span > 0 and span / max(n, 1) < 1e-12):
        raise StepUnderflow(f"step {step} too small for range [{lo}, {hi}]")
    return np.linspace(lo, hi, n + 1)


def rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4(f, y0, grid, check=None):
    """Classical RK4 on a fixed grid. ``check(y, i)`` may raise to stop."""
    ys = np.empty((len(grid),) + np.shape(y0))
    ys[0] = y0
    y = np.asarray(y0, dtype=float)
    # blow-ups surface as non-finite values, which ``check`` reports
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for i in range(len(grid) - 1):
            y = rk4_step(f, y, grid[i + 1] - grid[i])
            if check is not None:
                check(y, i + 1)
            ys[i + 1] = y
    return ys


def _tuv_vec(direction):
    def f(y):
        t, u, v = y
        if direction == "x":
            return np.array([2.0 * (2.0 - t) / v, -2.0 * u / v, (2.0 / 3.0) * (v**3 * (t - u**3) + 2.0)])
        return np.array(
            [-2.0 * u * (t + 1.0), (2.0 / (3.0 * u)) * (t + v**-3 - 2.0 * u**3 - 1.0), 2.0 * u * v]
        )

    return f


def integrate_tuv(rs, direction, span, step):
    """Integrate the full (t, u, v) system along one coordinate direction.

    ``span`` is (start, end) of the coordinate; returns (grid, states) with
    states of shape (N, 3).
    """
    lo, hi = span
    grid = _grid(min(lo, hi), max(lo, hi), step)
    if hi < lo:
        grid = grid[::-1]

    def check(y, i):
        if not np.all(np.isfinite(y)) or y[2] <= 0:
            raise OutsideValidRegion("(t, u, v) left the valid region", coordinate=grid[i])
        if direction == "y" and y[1] < U_MIN:
            raise UDegenerate(f"u fell below {U_MIN} at {direction}={grid[i]:.6g}")

    if direction == "y" and rs.u < U_MIN:
        raise UDegenerate(f"u = {rs.u} below {U_MIN}")
    states = rk4(_tuv_vec(direction), np.array([rs.t, rs.u, rs.v]), grid, check)
    return grid, states


def integrate_cd_x(seed, v0, x_range, step):
    """x-flow of (C, D, v): dC/dx = 4(C^2+D), dD/dx = 2(CD+1), dv/dx = 2(Cv+1)."""
    grid = _grid(x_range[0], x_range[1], step)

    def f(y):
        C, D, v = y
        return np.array([4.0 * (C * C + D), 2.0 * (C * D + 1.0), 2.0 * (C * v + 1.0)])

    def check(y, i):
        if not np.all(np.isfinite(y)):
            raise OutsideValidRegion("(C, D, v) diverged", coordinate=grid[i])

    return grid, rk4(f, np.array([seed.C, seed.D, v0]), grid, check)


@dataclass
class FlowField:
    """Samples of the reduced system on a rectangular (x, y) lattice.

    Arrays ``t``, ``u``, ``v`` have shape (len(x), len(y)); ``C`` and ``D``
    are per-x.
    """

    x: np.ndarray
    y: np.ndarray
    C: np.ndarray
    D: np.ndarray
    t: np.ndarray
    u: np.ndarray
    v: np.ndarray

    @property
    def beta(self):
        return self.v**1.5

    @property
    def mu(self):
        return (self.u * self.v) ** 1.5

    @property
    def kappa(self):
        return self.t * self.v**1.5

    def scalars(self, i, j):
        return FrameScalars(float(self.beta[i, j]), float(self.mu[i, j]), float(self.kappa[i, j]))

    def ratio(self):
        b, m, k = self.beta, self.mu, self.kappa
        a = m * m + (b * b - b * k + k * k) / 3.0 + 1.0
        bc = (2 * b**3 - 3 * b * b * k - 3 * b * k * k + 2 * k**3) / 27.0 + (m * m * (b + k) + k - 2 * b) / 3.0
        with np.errstate(divide="ignore"):
            return np.where(bc != 0, a**3 / np.where(bc != 0, bc, 1.0) ** 2, np.inf), bc

    def rows(self):
        """CSV rows x,y,t,u,v,beta,mu,kappa,C,D,ratio in x-major order."""
        ratio, _ = self.ratio()
        b, m, k = self.beta, self.mu, self.kappa
        for i, xv in enumerate(self.x):
            for j, yv in enumerate(self.y):
                yield (
                    xv, yv, self.t[i, j], self.u[i, j], self.v[i, j],
                    b[i, j], m[i, j], k[i, j], self.C[i], self.D[i], ratio[i, j],
                )


def integrate_flow(seed, v0, x_range, y_range, step):
    """Build (t, u, v) on an (x, y) lattice from first integrals.

    The seed (C, D, v0) sits at (x_range[0], y_range[0]). Step 1 integrates
    (C, D, v) in x; step 2 integrates v in y with C, D frozen and t, u
    recovered algebraically, so C and D are exactly constant in y.
    Raises OutsideValidRegion when u^3 turns negative; the error carries the
    last valid (x, y).
    """
    xs, cdv = integrate_cd_x(seed, v0, x_range, step)
    ys = _grid(y_range[0], y_range[1], step)
    C = cdv[:, 0]
    D = cdv[:, 1]
    v_line = cdv[:, 2]
    if np.any(v_line <= 0):
        i = int(np.argmax(v_line <= 0))
        raise OutsideValidRegion("v reached zero along x", coordinate=(xs[max(i - 1, 0)], ys[0]))
    _, u3 = u_cubed(C, D, v_line)
    if np.any(u3 < 0):
        i = int(np.argmax(u3 < 0))
        last = (xs[i - 1], ys[0]) if i > 0 else None
        raise OutsideValidRegion(
            f"u^3 < 0 at x={xs[i]:.6g} (C={C[i]:.6g}, D={D[i]:.6g}, v={v_line[i]:.6g})",
            coordinate=last,
        )

    def f(v):
        _, u3 = u_cubed(C, D, v)
        return 2.0 * np.cbrt(u3) * v

    V = np.empty((len(xs), len(ys)))
    V[:, 0] = v_line
    v = v_line.copy()
    for j in range(len(ys) - 1):
        _, u3 = u_cubed(C, D, v)
        if np.any(np.cbrt(u3) < U_MIN) or np.any(v <= 0):
            i = int(np.argmax((np.cbrt(u3) < U_MIN) | (v <= 0)))
            raise OutsideValidRegion(
                f"u fell below {U_MIN} at x={xs[i]:.6g}, y={ys[j]:.6g}",
                coordinate=(xs[i], ys[j - 1] if j else ys[0]),
            )
        v = rk4_step(f, v, ys[j + 1] - ys[j])
        V[:, j + 1] = v
    T, U3 = u_cubed(C[:, None], D[:, None], V)
    if np.any(U3 < 0) or not np.all(np.isfinite(V)):
        raise OutsideValidRegion("u^3 < 0 at the last y-row", coordinate=(xs[-1], ys[-2]))
    return FlowField(xs, ys, C, D, T, np.cbrt(U3), V)
