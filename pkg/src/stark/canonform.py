"""Normal forms for stark shape operators.

Every stark shape operator is orthogonally conjugate, by a change of basis
respecting the complex structure, to one of two layouts:

irreducible (standard basis, phi = J_n)::

    [[0, S, d],
     [S, 0, 0],
     [d^T, 0, 0]]          S symmetric n x n, d != 0

reducible (split basis, phi = J_{k,l})::

    [[P,  Q, 0,   0, 0],
     [Q, -P, 0,   0, 0],
     [0,  0, 0,   S, d],
     [0,  0, S,   0, 0],
     [0,  0, d^T, 0, 0]]   P, Q symmetric k x k, k > 0

The reduction is recursive. At each level the unitary freedom rotates
A W into (beta, 0, ..., 0), the complement V' of {W, A W} inherits a
stark operator with structure vector phi(e_1), and the basis returned for
V' is spliced back together with e_1, phi(e_1) and W.
"""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import austere
from .austere import ShapeOperatorRep, j_split, j_standard
from .errors import NotStark, ToleranceBreach

log = logging.getLogger(__name__)

DEFAULT_TOL = austere.DEFAULT_TOL


@dataclass
class CanonicalForm:
    kind: str
    dims: tuple
    transform: np.ndarray
    matrix: np.ndarray
    S: np.ndarray
    d: np.ndarray
    P: np.ndarray = None
    Q: np.ndarray = None
    residual: float = 0.0
    phi_residual: float = 0.0
    p11: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    def to_json(self):
        k, l = self.dims
        out = {
            "kind": self.kind,
            "k": k,
            "l": l,
            "residual": self.residual,
            "phi_residual": self.phi_residual,
            "transform": self.transform.tolist(),
            "S": self.S.tolist(),
            "d": self.d.tolist(),
            "flags": list(self.flags),
        }
        if self.kind == "reducible":
            out["P"] = self.P.tolist()
            out["Q"] = self.Q.tolist()
        return out


def realify(g):
    """Real 2m x 2m matrix of a complex m x m matrix acting on (x; y)."""
    return np.block([[g.real, -g.imag], [g.imag, g.real]])


def unitary_with_first_column(z):
    """Unitary g with g[:, 0] = z / |z|."""
    m = z.shape[0]
    M = np.eye(m, dtype=complex)
    M[:, 0] = z
    g, r = np.linalg.qr(M)
    g[:, 0] *= r[0, 0] / abs(r[0, 0])
    return g


def irreducible_matrix(S, d):
    S = np.atleast_2d(np.asarray(S, dtype=float))
    d = np.atleast_1d(np.asarray(d, dtype=float))
    n = S.shape[0]
    A = np.zeros((2 * n + 1, 2 * n + 1))
    A[:n, n : 2 * n] = S
    A[n : 2 * n, :n] = S.T
    A[:n, -1] = d
    A[-1, :n] = d
    return A


def reducible_matrix(P, Q, S, d):
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    k = P.shape[0]
    l = 0 if S is None else np.atleast_2d(S).shape[0]
    if l:
        core = irreducible_matrix(S, d)
    else:
        core = np.zeros((1, 1))
    A = np.zeros((2 * k + 2 * l + 1,) * 2)
    A[:k, :k] = P
    A[:k, k : 2 * k] = Q
    A[k : 2 * k, :k] = Q.T
    A[k : 2 * k, k : 2 * k] = -P
    A[2 * k :, 2 * k :] = core
    return A


def layout_fit(B, kind, k, l):
    """Project ``B`` onto the requested layout.

    Returns ``(blocks, residual)`` where residual is the max-abs distance
    between ``B`` and the layout rebuilt from its own blocks.
    """
    if kind == "irreducible":
        n = l
        S = 0.5 * (B[:n, n : 2 * n] + B[n : 2 * n, :n].T)
        S = 0.5 * (S + S.T)
        d = 0.5 * (B[:n, -1] + B[-1, :n])
        model = irreducible_matrix(S, d) if n else np.zeros((1, 1))
        blocks = {"S": S, "d": d}
    else:
        P = 0.5 * (B[:k, :k] - B[k : 2 * k, k : 2 * k])
        P = 0.5 * (P + P.T)
        Q = 0.5 * (B[:k, k : 2 * k] + B[k : 2 * k, :k].T)
        Q = 0.5 * (Q + Q.T)
        o = 2 * k
        S = 0.5 * (B[o : o + l, o + l : o + 2 * l] + B[o + l : o + 2 * l, o : o + l].T)
        S = 0.5 * (S + S.T)
        d = 0.5 * (B[o : o + l, -1] + B[-1, o : o + l])
        model = reducible_matrix(P, Q, S if l else None, d)
        blocks = {"P": P, "Q": Q, "S": S, "d": d}
    return blocks, float(np.max(np.abs(B - model)))


def _reduce(A, tol, scale, p11s, level=0):
    """Reduce a standard-basis stark matrix. Returns (kind, H, k, l) with
    H @ A @ H.T in canonical layout and H @ J_m @ H.T = J_target."""
    side = A.shape[0]
    m = (side - 1) // 2
    b = A[:m, -1]
    c = A[m : 2 * m, -1]
    z = b + 1j * c
    beta = float(np.linalg.norm(z))
    if beta <= tol * scale:
        return "reducible", np.eye(side), m, 0

    R = np.eye(side)
    R[:-1, :-1] = realify(unitary_with_first_column(z))
    A1 = R.T @ A @ R
    H_rot = R.T

    p11 = float(A1[0, 0])
    p11s.append(p11)
    if abs(p11) > tol * scale:
        raise ToleranceBreach(
            f"p11 = {p11:.3e} at level {level}: operator is not stark",
            stage=level,
            residual=abs(p11),
        )
    if m == 1:
        return "irreducible", H_rot, 0, 1

    idx = list(range(1, m)) + list(range(m + 1, 2 * m)) + [m]
    A_sub = A1[np.ix_(idx, idx)]
    kind, H_sub, k, l = _reduce(A_sub, tol, scale, p11s, level + 1)

    E = np.zeros((2 * m - 1, side))
    E[np.arange(2 * m - 1), idx] = 1.0
    rows = H_sub @ E
    e1 = np.eye(side)[0]
    je1 = np.eye(side)[m]
    w = np.eye(side)[-1]
    if np.max(np.abs(rows[-1] - je1)) > 1e-12:
        raise ToleranceBreach("recursion moved the inner structure vector", stage=level)

    if kind == "irreducible":
        n1 = m - 1
        new = [e1, *rows[:n1], je1, *rows[n1 : 2 * n1], w]
        kind_out, k_out, l_out = "irreducible", 0, m
    else:
        x = rows[: 2 * k]
        u = rows[2 * k : 2 * k + l]
        ju = rows[2 * k + l : 2 * k + 2 * l]
        new = [*x, e1, *u, je1, *ju, w]
        kind_out, k_out, l_out = "reducible", k, l + 1
    return kind_out, np.array(new) @ H_rot, k_out, l_out


def reduce_to_canonical(rep, tol=DEFAULT_TOL):
    """Orthogonal change of basis bringing a stark operator to normal form.

    The returned ``transform`` H satisfies H @ A @ H.T == matrix (canonical
    layout) and H @ phi @ H.T == J_n or J_{k,l}.
    """
    if not isinstance(rep, ShapeOperatorRep):
        rep = ShapeOperatorRep(rep)
    if not austere.check_stark(rep, tol):
        raise NotStark("reduce_to_canonical requires a stark shape operator")
    std, P = rep.to_standard()
    scale = max(1.0, float(np.linalg.norm(rep.A, 2)))
    p11s = []
    kind, H, k, l = _reduce(std.A, tol, scale, p11s)
    H = H @ P
    B = H @ rep.A @ H.T
    blocks, residual = layout_fit(B, kind, k, l)
    target = j_standard(rep.n) if kind == "irreducible" else j_split(k, l)
    phi_res = float(np.max(np.abs(H @ rep.phi @ H.T - target)))
    flags = []
    if kind == "reducible" and l == 0:
        flags.append("AW = 0: Hopf-type operator, no stark hypersurface realises it")
    if residual > tol * scale or phi_res > tol:
        raise ToleranceBreach(
            f"normal form residual {residual:.3e} (phi {phi_res:.3e})",
            stage="final",
            residual=residual,
        )
    return CanonicalForm(
        kind=kind,
        dims=(k, l),
        transform=H,
        matrix=B,
        S=blocks["S"],
        d=blocks["d"],
        P=blocks.get("P"),
        Q=blocks.get("Q"),
        residual=residual,
        phi_residual=phi_res,
        p11=p11s,
        flags=flags,
    )


def _closure(v, A, J, rank_tol):
    """Smallest subspace containing v and invariant under A and J."""
    Q = (v / np.linalg.norm(v))[:, None]
    while True:
        cand = np.hstack([A @ Q, J @ Q])
        cand = cand - Q @ (Q.T @ cand)
        u, s, _ = np.linalg.svd(cand, full_matrices=False)
        new = u[:, s > rank_tol]
        if new.shape[1] == 0:
            return Q
        Q, _ = np.linalg.qr(np.hstack([Q, new]))


def detect_invariant_subspace(A_h, J_h, tol=DEFAULT_TOL, trials=3):
    """Minimal nonzero proper subspace of im(J_h) invariant under A_h and J_h.

    Candidates are eigenvectors of random symmetric combinations of A_h,
    J^T A_h J, A_h^2 and J^T A_h^2 J compressed to im(J_h); each candidate is
    grown to its closure under A_h and J_h. Returns an orthonormal basis
    (columns) of the smallest closure lying in im(J_h), or None.
    """
    A = np.asarray(A_h, dtype=float)
    J = np.asarray(J_h, dtype=float)
    N = A.shape[0]
    u, s, _ = np.linalg.svd(J)
    img = u[:, s > 0.5]
    if img.shape[1] == 0:
        return None
    scale = max(1.0, float(np.linalg.norm(A, 2)))
    rank_tol = tol * scale
    if np.linalg.norm(A, 2) < tol:
        warnings.warn("A_h vanishes: every J-invariant plane is invariant", stacklevel=2)
        v = img[:, 0]
        basis, _ = np.linalg.qr(np.column_stack([v, J @ v]))
        return basis
    rng = np.random.default_rng(20150801)
    A2 = A @ A
    best = None
    for _ in range(trials):
        lam = rng.normal(size=4)
        T = lam[0] * A + lam[1] * J.T @ A @ J + lam[2] * A2 + lam[3] * J.T @ A2 @ J
        T = img.T @ T @ img
        _, vecs = np.linalg.eigh(0.5 * (T + T.T))
        for v in (img @ vecs).T:
            C = _closure(v, A, J, rank_tol)
            dim = C.shape[1]
            if dim >= N:
                continue
            outside = C - img @ (img.T @ C)
            if np.linalg.norm(outside) > 1e3 * rank_tol:
                continue
            if best is None or dim < best.shape[1]:
                best = C
        if best is not None and best.shape[1] == 2:
            break
    return best


def balanced_spectrum_residual(M):
    ev = np.linalg.eigvalsh(austere.matcore.sym(M))
    return float(np.max(np.abs(ev + ev[::-1]))) if ev.size else 0.0


def balanced_spectrum_check(M, tol=DEFAULT_TOL):
    """Sorted eigenvalues satisfy lambda_i + lambda_{n+1-i} = 0."""
    scale = max(1.0, float(np.linalg.norm(M, 2)))
    return balanced_spectrum_residual(M) < tol * scale
