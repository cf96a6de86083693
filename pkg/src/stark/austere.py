"""Pointwise austere and stark conditions on shape operators.

A shape operator of a hypersurface M^{2n+1} in CP^{n+1} is stored as a
symmetric (2n+1)x(2n+1) matrix in an orthonormal basis whose last vector is
the structure vector W. The restriction of the complex structure to TM is
J_n (standard basis) or J_{k,l} (split basis).
"""

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import matcore
from .errors import DimensionMismatch, NotStark, ParseError

log = logging.getLogger(__name__)

DEFAULT_TOL = matcore.DEFAULT_TOL


def j_standard(n):
    """J_n: e_j -> e_{j+n} for j <= n, W in the kernel. Side 2n+1."""
    J = np.zeros((2 * n + 1, 2 * n + 1))
    J[n : 2 * n, 0:n] = np.eye(n)
    J[0:n, n : 2 * n] = -np.eye(n)
    return J


def j_split(k, l):
    """J_{k,l}: two standard blocks of sizes k and l followed by W."""
    n = k + l
    J = np.zeros((2 * n + 1, 2 * n + 1))
    J[k : 2 * k, 0:k] = np.eye(k)
    J[0:k, k : 2 * k] = -np.eye(k)
    o = 2 * k
    J[o + l : o + 2 * l, o : o + l] = np.eye(l)
    J[o : o + l, o + l : o + 2 * l] = -np.eye(l)
    return J


def split_to_standard(k, l):
    """Permutation P (rows = standard basis vectors in split coordinates)
    with P @ J_{k,l} @ P.T == J_{k+l}."""
    n = k + l
    order = (
        list(range(0, k))
        + list(range(2 * k, 2 * k + l))
        + list(range(k, 2 * k))
        + list(range(2 * k + l, 2 * n))
        + [2 * n]
    )
    return np.eye(2 * n + 1)[order]


@dataclass
class ShapeOperatorRep:
    """Symmetric shape-operator matrix plus the basis it is written in.

    ``split`` is None for a standard basis, otherwise the pair (k, l).
    """

    A: np.ndarray
    split: tuple = None

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch("shape operator must be square")
        if A.shape[0] % 2 != 1 or A.shape[0] < 3:
            raise DimensionMismatch(f"side must be 2n+1 with n >= 1, got {A.shape[0]}")
        self.A = matcore.sym(A)
        if self.split is not None:
            k, l = (int(x) for x in self.split)
            if k < 0 or l < 0 or k + l != self.n:
                raise DimensionMismatch(f"split ({k},{l}) incompatible with n={self.n}")
            self.split = (k, l)

    @property
    def n(self):
        return (self.A.shape[0] - 1) // 2

    @property
    def phi(self):
        if self.split is None:
            return j_standard(self.n)
        return j_split(*self.split)

    @property
    def a_tilde(self):
        return self.A[:-1, :-1]

    def to_standard(self):
        """Same operator in a standard basis, and the permutation used."""
        if self.split is None:
            return self, np.eye(self.A.shape[0])
        P = split_to_standard(*self.split)
        return ShapeOperatorRep(P @ self.A @ P.T), P


@dataclass
class GeneralAustereInput:
    A_nu: np.ndarray
    theta: float
    tilde_selector: list = field(default_factory=list)

    def __post_init__(self):
        self.A_nu = matcore.sym(self.A_nu)
        k = self.A_nu.shape[0]
        sel = sorted(set(int(i) for i in self.tilde_selector))
        if len(sel) >= k or any(i < 0 or i >= k for i in sel):
            raise DimensionMismatch("tilde_selector must be a proper subset of row indices")
        self.tilde_selector = sel


def _scale(M):
    return max(1.0, float(np.linalg.norm(M, 2)))


def general_austere_residuals(inp):
    """Scaled residuals |e_{2j+1}(A) - cos^2(theta) e_{2j-1}(A~)| / s^{2j+1}."""
    A = inp.A_nu
    At = A[np.ix_(inp.tilde_selector, inp.tilde_selector)]
    s = _scale(A)
    c2 = np.cos(inp.theta) ** 2
    k = A.shape[0]
    res = []
    for j in range(k // 2 + 1):
        lhs = matcore.elem_sym(A, 2 * j + 1)
        rhs = c2 * matcore.elem_sym(At, 2 * j - 1)
        res.append(abs(lhs - rhs) / s ** (2 * j + 1))
    return np.array(res)


def check_general_austere(inp, tol=DEFAULT_TOL):
    return bool(np.all(general_austere_residuals(inp) < tol))


def hypersurface_residuals(rep):
    """Scaled residuals of e_{2j+1}(A) = e_{2j-1}(A~) for every odd degree."""
    A = rep.A
    e_a = matcore.elem_sym_all(A)
    e_t = matcore.elem_sym_all(rep.a_tilde)
    s = _scale(A)
    side = A.shape[0]
    res = []
    for j in range((side - 1) // 2 + 1):
        d = 2 * j + 1
        rhs = e_t[d - 2] if d - 2 >= 0 else 0.0
        res.append(abs(e_a[d] - rhs) / s**d)
    return np.array(res)


def check_hypersurface_austere(rep, tol=DEFAULT_TOL):
    return bool(np.all(hypersurface_residuals(rep) < tol))


def compat_residual(rep):
    """||J^T A~ J + A~|| / scale on the holomorphic distribution.

    Stark operators anticommute with J there (A~(JX, JY) = -A~(X, Y)).
    """
    J = rep.phi[:-1, :-1]
    At = rep.a_tilde
    return float(np.linalg.norm(J.T @ At @ J + At) / _scale(rep.A))


def check_stark(rep, tol=DEFAULT_TOL):
    return check_hypersurface_austere(rep, tol) and compat_residual(rep) < tol


def hopf_lift(rep):
    """Shape operator of the Hopf preimage in S^{2n+3}, side 2n+2.

    Layout: the fibre direction first, coupled to W with entry 1; the
    interior block is A~, the border is v and the corner alpha, where
    A = [[A~, v], [v^T, alpha]].
    """
    if rep.split is not None:
        rep, _ = rep.to_standard()
    A = rep.A
    m = A.shape[0]
    Ah = np.zeros((m + 1, m + 1))
    Ah[1:, 1:] = A
    Ah[0, m] = Ah[m, 0] = 1.0
    return Ah


def lift_odd_functions(rep):
    """Scaled odd-degree symmetric functions of the Hopf lift."""
    Ah = hopf_lift(rep)
    e = matcore.elem_sym_all(Ah)
    s = _scale(Ah)
    return np.array([abs(e[d]) / s**d for d in range(1, len(e), 2)])


def lift_charpoly_identity_check(rep, tol=DEFAULT_TOL):
    """charpoly(A^) against the expansion in e_k(A) and e_k(A~).

    Every coefficient is compared: e_k(A^) = e_k(A) - e_{k-2}(A~), which
    contains the displayed leading terms (e_1, e_2 - 1, e_3 - e_1(A~)).
    """
    if rep.split is not None:
        rep, _ = rep.to_standard()
    Ah = hopf_lift(rep)
    c = matcore.charpoly_coeffs(Ah)
    e_a = matcore.elem_sym_all(rep.A)
    e_t = matcore.elem_sym_all(rep.a_tilde)
    s = _scale(Ah)
    for k in range(1, len(c)):
        expected = (e_a[k] if k < len(e_a) else 0.0) - (e_t[k - 2] if 0 <= k - 2 < len(e_t) else 0.0)
        if abs((-1) ** k * c[k] - expected) / s**k >= tol:
            return False
    return True


@dataclass
class Classification:
    is_hopf: bool
    hopf_violation: float
    reducible: bool
    invariant_block_dims: tuple
    flags: list = field(default_factory=list)


def hopf_violation(rep):
    """||A W - <A W, W> W|| with W the last basis vector."""
    aw = rep.A[:, -1]
    return float(np.linalg.norm(aw[:-1]))


def classify(rep, tol=DEFAULT_TOL):
    from . import canonform

    if not check_stark(rep, tol):
        raise NotStark("classify requires a stark shape operator")
    viol = hopf_violation(rep)
    is_hopf = viol < tol * _scale(rep.A)
    flags = []
    if is_hopf:
        flags.append("hopf: no stark hypersurface has this shape operator on an open set")
    std, _ = rep.to_standard()
    sub = canonform.detect_invariant_subspace(std.A, std.phi, tol)
    cf = canonform.reduce_to_canonical(rep, tol)
    reducible = sub is not None
    if reducible != (cf.kind == "reducible"):
        flags.append("detector and normal-form reduction disagree on reducibility")
    return Classification(is_hopf, viol, reducible, cf.dims, flags)


def rep_from_json(obj):
    """Parse {"n", "basis", "entries"}; entries are symmetrised on load."""
    try:
        n = int(obj["n"])
        entries = np.asarray(obj["entries"], dtype=float)
        basis = obj.get("basis", "standard")
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad shape-operator JSON: {exc}") from exc
    if entries.ndim != 2 or entries.shape != (2 * n + 1, 2 * n + 1):
        raise DimensionMismatch(f"entries must be {2 * n + 1}x{2 * n + 1} for n={n}")
    asym = float(np.max(np.abs(entries - entries.T)))
    if asym > 1e-9:
        log.warning("input matrix asymmetric by %.3e; symmetrising", asym)
    if basis == "standard":
        split = None
    elif isinstance(basis, dict) and "split" in basis:
        split = tuple(basis["split"])
    else:
        raise ParseError(f"unknown basis tag {basis!r}")
    return ShapeOperatorRep(entries, split)


def load_rep(path):
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return rep_from_json(obj)


def rep_to_json(rep):
    basis = "standard" if rep.split is None else {"split": list(rep.split)}
    return {"n": rep.n, "basis": basis, "entries": rep.A.tolist()}
