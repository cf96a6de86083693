import numpy as np
import pytest

from stark import austere, canonform, samples
from stark.austere import ShapeOperatorRep, j_split, j_standard
from stark.errors import NotStark


def check_layout(cf, A, phi):
    H = cf.transform
    assert np.linalg.norm(H @ H.T - np.eye(H.shape[0])) < 1e-11
    B = H @ A @ H.T
    _, res = canonform.layout_fit(B, cf.kind, *cf.dims)
    assert res < 1e-9
    k, l = cf.dims
    target = j_standard(l) if cf.kind == "irreducible" else j_split(k, l)
    assert np.abs(H @ phi @ H.T - target).max() < 1e-9


def test_already_canonical_irreducible():
    rng = np.random.default_rng(20)
    A = samples.random_irreducible(2, rng)
    cf = canonform.reduce_to_canonical(ShapeOperatorRep(A))
    assert cf.kind == "irreducible" and cf.dims == (0, 2)
    assert cf.residual < 1e-12
    # transform is a signed permutation up to the d-direction rotation
    check_layout(cf, A, j_standard(2))


def test_scramble_and_recover_n2():
    rng = np.random.default_rng(21)
    S = samples.random_symmetric(2, rng)
    A0 = canonform.irreducible_matrix(S, [1.0, 0.0])
    G = samples.random_phi_commuting(2, rng)
    A = G @ A0 @ G.T
    cf = canonform.reduce_to_canonical(ShapeOperatorRep(A))
    assert cf.kind == "irreducible"
    check_layout(cf, A, j_standard(2))


def test_aw_zero_is_reducible_with_l_zero():
    rng = np.random.default_rng(22)
    A = samples.random_reducible(2, 0, rng)
    P = austere.split_to_standard(2, 0)
    cf = canonform.reduce_to_canonical(ShapeOperatorRep(P @ A @ P.T))
    assert cf.kind == "reducible" and cf.dims == (2, 0)
    assert cf.flags


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_round_trip(n):
    rng = np.random.default_rng(100 + n)
    for _ in range(150):
        A, kind, dims = samples.random_stark(n, rng)
        cf = canonform.reduce_to_canonical(ShapeOperatorRep(A))
        assert cf.kind == kind
        assert cf.dims == (dims if kind == "reducible" else (0, n))
        check_layout(cf, A, j_standard(n))
        # p11 vanishes at every recursion level
        assert all(abs(p) < 1e-9 for p in cf.p11)
        # stark is preserved by the change of basis
        B = cf.transform @ A @ cf.transform.T
        rep = ShapeOperatorRep(B, None if cf.kind == "irreducible" else cf.dims)
        assert austere.check_stark(rep)


def test_split_basis_input():
    rng = np.random.default_rng(23)
    A = samples.random_reducible(1, 2, rng)
    rep = ShapeOperatorRep(A, (1, 2))
    cf = canonform.reduce_to_canonical(rep)
    assert cf.kind == "reducible" and cf.dims == (1, 2)
    check_layout(cf, A, rep.phi)


def test_not_stark_rejected():
    with pytest.raises(NotStark):
        canonform.reduce_to_canonical(ShapeOperatorRep(np.diag([1.0, 1.0, -2.0])))


def test_to_json_keys():
    rng = np.random.default_rng(24)
    A, _, _ = samples.random_stark(2, rng, k=1)
    out = canonform.reduce_to_canonical(ShapeOperatorRep(A)).to_json()
    assert {"kind", "k", "l", "residual", "transform", "P", "Q"} <= set(out)


# -- invariant subspace detection -------------------------------------------


def test_detect_block_diagonal_returns_smaller_block():
    rng = np.random.default_rng(25)
    # split-basis reducible operator: a 2-dim P,Q block and the W-coupled rest
    A = samples.random_reducible(1, 2, rng)
    sub = canonform.detect_invariant_subspace(A, j_split(1, 2))
    assert sub is not None and sub.shape[1] == 2
    expected = np.zeros((7, 7))
    expected[0, 0] = expected[1, 1] = 1.0
    assert np.allclose(sub @ sub.T, expected, atol=1e-8)


def brute_force_has_plane(A, J):
    """Search J-invariant planes {v, Jv} inside im(J) that A maps into themselves.

    Candidates v run over eigenvectors of the compression of A + t J^T A J to
    im(J) for a sweep of t, independently of the detector's random draws.
    """
    u, s, _ = np.linalg.svd(J)
    img = u[:, s > 0.5]
    for t in np.linspace(-3, 3, 61):
        T = img.T @ (A + t * J.T @ A @ J) @ img
        _, V = np.linalg.eigh(T)
        for v in (img @ V).T:
            Q, _ = np.linalg.qr(np.column_stack([v, J @ v]))
            if np.linalg.norm(A @ Q - Q @ (Q.T @ A @ Q)) < 1e-8:
                return True
    return False


def test_detect_irreducible_core_none():
    rng = np.random.default_rng(26)
    A = samples.random_irreducible(2, rng)
    J = j_standard(2)
    assert not brute_force_has_plane(A, J)
    assert canonform.detect_invariant_subspace(A, J) is None


def test_brute_force_finds_reducible_plane():
    rng = np.random.default_rng(28)
    assert brute_force_has_plane(samples.random_reducible(1, 1, rng), j_split(1, 1))


def test_detect_zero_operator_warns():
    Jh = j_standard(2)[:-1, :-1]
    with pytest.warns(UserWarning):
        sub = canonform.detect_invariant_subspace(np.zeros((4, 4)), Jh)
    assert sub.shape == (4, 2)
    assert np.allclose(Jh @ sub, sub @ (sub.T @ Jh @ sub))


# -- balanced spectra --------------------------------------------------------


def test_balanced_forms():
    rng = np.random.default_rng(27)

    def R(n):
        return np.diag([-1.0] * n + [1.0] * (n + 1))

    for n in range(1, 5):
        for _ in range(100):
            A = samples.random_irreducible(n, rng)
            assert np.allclose(R(n) @ A + A @ R(n), 0.0)
            assert canonform.balanced_spectrum_check(A)
            k = int(rng.integers(1, n + 1))
            assert canonform.balanced_spectrum_check(samples.random_reducible(k, n - k, rng))


def test_unbalanced():
    assert not canonform.balanced_spectrum_check(np.diag([1.0, 1.0, -1.0]))
