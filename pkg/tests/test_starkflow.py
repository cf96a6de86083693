import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stark import starkflow as sf
from stark.errors import BZero, OutsideCanonicalPatch, OutsideValidRegion, StepUnderflow, UDegenerate
from stark.starkflow import FirstIntegrals, FrameScalars, ReducedState

C3 = 3.0 ** (2.0 / 3.0)


def random_state(rng):
    return ReducedState(rng.uniform(-1, 3), rng.uniform(0.3, 2.0), rng.uniform(0.5, 2.0))


def fd_derivative(func, rs, direction, eps=1e-6):
    """Central difference of func(rs) along a (dt, du, dv) direction."""
    d = np.asarray(direction)
    x = np.array([rs.t, rs.u, rs.v])
    fp = np.array(func(ReducedState(*(x + eps * d))))
    fm = np.array(func(ReducedState(*(x - eps * d))))
    return (fp - fm) / (2 * eps)


def ratio_of(rs):
    return sf.invariant_ratio(sf.from_reduced(rs))


# -- change of variables -----------------------------------------------------


def test_to_reduced_examples():
    assert sf.to_reduced(FrameScalars(1, 1, 1)) == ReducedState(1, 1, 1)
    rs = sf.to_reduced(FrameScalars(3, 0, 0))
    assert (rs.t, rs.u) == (0, 0)
    assert rs.v == pytest.approx(C3)


def test_reduced_round_trip():
    rng = np.random.default_rng(30)
    for _ in range(1000):
        fs = FrameScalars(rng.uniform(0.01, 10), rng.uniform(0, 10), rng.uniform(-10, 10))
        back = sf.from_reduced(sf.to_reduced(fs))
        assert np.allclose([back.beta, back.mu, back.kappa], [fs.beta, fs.mu, fs.kappa], rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("fs", [(-1, 1, 0), (1, -1, 0)])
def test_outside_patch(fs):
    with pytest.raises(OutsideCanonicalPatch):
        sf.to_reduced(FrameScalars(*fs))


def test_beta_zero_rejected():
    with pytest.raises(OutsideCanonicalPatch):
        FrameScalars(0.0, 1.0, 1.0)


# -- first integrals ---------------------------------------------------------


def test_first_integral_examples():
    fi = sf.first_integrals(ReducedState(1, 1, 1))
    assert fi.C == pytest.approx(-1 / 3) and fi.D == pytest.approx(2 / 3)
    fi = sf.first_integrals(ReducedState(0, 0, C3))
    assert fi.C == pytest.approx(-(3 ** (-5 / 3)))
    assert fi.D == pytest.approx(3 ** (-1 / 3))


def test_recover_examples():
    rs = sf.recover_state(FirstIntegrals(-1 / 3, 2 / 3), 1.0)
    assert np.allclose([rs.t, rs.u, rs.v], [1, 1, 1], atol=1e-12)
    rs = sf.recover_state(FirstIntegrals(-(3 ** (-5 / 3)), 3 ** (-1 / 3)), C3)
    assert np.allclose([rs.t, rs.u, rs.v], [0, 0, C3], atol=1e-5)
    with pytest.raises(OutsideValidRegion):
        sf.recover_state(FirstIntegrals(0, 10), 1e-3)


def test_recover_inverts_first_integrals():
    rng = np.random.default_rng(31)
    for _ in range(1000):
        rs = random_state(rng)
        back = sf.recover_state(sf.first_integrals(rs), rs.v)
        assert np.allclose([back.t, back.u, back.v], [rs.t, rs.u, rs.v], atol=1e-12)


def test_equilibrium_seed():
    assert sf.cd_rhs(sf.EQUILIBRIUM) == (0.0, 0.0)


def test_equilibrium_has_no_real_state():
    # u^3 = t - (3Cv + 1)/v^3 < 0 for every v > 0 when (C, D) = (1, -1)
    for v in np.geomspace(1e-3, 1e3, 200):
        with pytest.raises(OutsideValidRegion):
            sf.recover_state(sf.EQUILIBRIUM, v)


def test_cd_rhs_examples():
    assert sf.cd_rhs(FirstIntegrals(0, 0)) == (0, 2)
    assert np.allclose(sf.cd_rhs(FirstIntegrals(-1 / 3, 2 / 3)), (28 / 9, 14 / 9))


# -- right-hand sides --------------------------------------------------------


def test_tuv_rhs_example():
    r = sf.tuv_rhs(ReducedState(1, 1, 1))
    assert np.allclose(r["x_dir"], (2, -2, 4 / 3))
    assert np.allclose(r["y_dir"], (-4, -2 / 3, 2))
    assert sf.tuv_rhs(ReducedState(2, 0.5, 1.7))["x_dir"][0] == 0


def test_tuv_rhs_u_zero():
    with pytest.raises(UDegenerate):
        sf.tuv_rhs(ReducedState(1, 0, 1))
    assert sf.tuv_rhs(ReducedState(1, 0, 1), need_y=False)["y_dir"] is None


def test_chain_rule_example():
    rs = ReducedState(1, 1, 1)
    got = fd_derivative(lambda s: (sf.first_integrals(s).C, sf.first_integrals(s).D), rs, sf.tuv_rhs(rs)["x_dir"])
    assert np.allclose(got, (28 / 9, 14 / 9), atol=1e-8)


def test_chain_rule_random():
    rng = np.random.default_rng(32)
    for _ in range(1000):
        rs = random_state(rng)
        r = sf.tuv_rhs(rs)

        def cd(s):
            fi = sf.first_integrals(s)
            return fi.C, fi.D

        assert np.allclose(fd_derivative(cd, rs, r["x_dir"]), sf.cd_rhs(sf.first_integrals(rs)), atol=1e-6)
        assert np.allclose(fd_derivative(cd, rs, r["y_dir"]), 0.0, atol=1e-6)


def test_v_rhs_x():
    assert sf.v_rhs_x(-1 / 3, 1.0) == pytest.approx(sf.tuv_rhs(ReducedState(1, 1, 1))["x_dir"][2])
    assert sf.v_rhs_x(0.0, 5.0) == 2.0
    assert sf.v_rhs_x(-1 / 2.5, 2.5) == pytest.approx(0.0)


# -- cubic and ratio ---------------------------------------------------------


@pytest.mark.parametrize(
    "fs,A,B",
    [((1, 1, 1), 7 / 3, 7 / 27), ((3, 0, 0), 4, 0), ((1, 0, 0), 4 / 3, -16 / 27)],
)
def test_cubic_coeff_examples(fs, A, B):
    hc = sf.cubic_coeffs(FrameScalars(*fs))
    assert hc.a_lin == pytest.approx(A) and hc.b_const == pytest.approx(B, abs=1e-15)


def test_cubic_coeffs_match_determinant():
    # det(l I - K0) = l^3 + A l + i B, evaluated by brute force at three points
    rng = np.random.default_rng(33)
    for _ in range(200):
        b, m, k = rng.uniform(-5, 5, size=3)
        if b == 0:
            continue
        K = np.array([[0, -1, 0], [1, 1j * k, -m], [0, m, 1j * b]])
        K0 = K - np.trace(K) / 3 * np.eye(3)
        hc = sf.cubic_coeffs(FrameScalars(b, m, k))
        for lam in (0.0, 1.0, 2j):
            assert np.linalg.det(lam * np.eye(3) - K0) == pytest.approx(lam**3 + hc.a_lin * lam + 1j * hc.b_const, abs=1e-9)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.01, 10), st.floats(-10, 10), st.floats(-10, 10))
def test_a_at_least_one(b, m, k):
    assert sf.cubic_coeffs(FrameScalars(b, m, k)).a_lin >= 1.0


def test_invariant_ratio_examples():
    assert sf.invariant_ratio(FrameScalars(1, 1, 1)) == pytest.approx(189.0)
    with pytest.raises(BZero) as exc:
        sf.invariant_ratio(FrameScalars(3, 0, 0))
    assert exc.value.a_cubed == pytest.approx(64.0)


def test_derived_identities_examples():
    out = sf.derived_cd_identities(ReducedState(1, 1, 1))
    assert out["A_from_cd"] == pytest.approx(7 / 3) and out["B_from_cd"] == pytest.approx(7 / 27)
    assert sf.derived_cd_identities(ReducedState(0, 0, C3))["B_from_cd"] == pytest.approx(0.0, abs=1e-12)
    assert sf.derived_cd_identities(ReducedState(0, 0, 1))["B_from_cd"] == pytest.approx(-16 / 27)


def test_derived_identities_random():
    rng = np.random.default_rng(34)
    for _ in range(10_000):
        rs = ReducedState(rng.uniform(-3, 3), rng.uniform(0, 2), rng.uniform(0.2, 3))
        hc = sf.cubic_coeffs(sf.from_reduced(rs))
        out = sf.derived_cd_identities(rs)
        assert out["A_from_cd"] == pytest.approx(hc.a_lin, abs=1e-10 * max(1, abs(hc.a_lin)))
        assert out["B_from_cd"] == pytest.approx(hc.b_const, abs=1e-10 * max(1, abs(hc.b_const)))


def test_ratio_from_cd_at_known_state():
    fi = sf.first_integrals(ReducedState(1, 1, 1))
    assert sf.ratio_from_cd(fi.C, fi.D) == pytest.approx(189.0)
    # the other reading of the denominator, (2D^2 - 3CD - 1)^2, would give 1029/25
    assert sf.ratio_from_cd(fi.C, fi.D) != pytest.approx(1029 / 25)


# -- integration -------------------------------------------------------------


def test_y_flow_preserves_first_integrals_and_ratio():
    grid, states = sf.integrate_tuv(ReducedState(1, 1, 1), "y", (0.0, 0.5), 1e-3)
    fis = [sf.first_integrals(ReducedState(*s)) for s in states]
    assert max(abs(f.C + 1 / 3) for f in fis) < 1e-8
    assert max(abs(f.D - 2 / 3) for f in fis) < 1e-8
    ratios = [ratio_of(ReducedState(*s)) for s in states]
    assert max(abs(r / 189 - 1) for r in ratios) < 1e-7


def test_ratio_invariant_along_x():
    rng = np.random.default_rng(35)
    done = 0
    while done < 10:
        rs = random_state(rng)
        try:
            _, states = sf.integrate_tuv(rs, "x", (0.0, 0.2), 1e-3)
        except OutsideValidRegion:
            continue
        bs = [sf.cubic_coeffs(sf.from_reduced(ReducedState(*s))).b_const for s in states]
        if min(abs(b) for b in bs) < 1e-3 or np.any(states[:, 1] < 0):
            continue
        r = np.array([ratio_of(ReducedState(*s)) for s in states])
        assert np.max(np.abs(r / r[0] - 1)) < 1e-7
        done += 1


def test_rk4_order():
    # error against a fine reference shrinks ~16x per halving
    rs = ReducedState(1, 1, 1)
    _, ref = sf.integrate_tuv(rs, "x", (0.0, 0.3), 1e-4)
    errs = []
    for h in (0.02, 0.01, 0.005):
        _, st_ = sf.integrate_tuv(rs, "x", (0.0, 0.3), h)
        errs.append(np.abs(st_[-1] - ref[-1]).max())
    assert errs[0] / errs[1] >= 8 and errs[1] / errs[2] >= 8


def test_equilibrium_x_flow_has_no_drift():
    _, cdv = sf.integrate_cd_x(sf.EQUILIBRIUM, 1.0, (0.0, 1.0), 1e-3)
    assert np.abs(cdv[:, :2] - [1.0, -1.0]).max() < 1e-8


def test_integrate_flow_equilibrium_outside_region():
    with pytest.raises(OutsideValidRegion):
        sf.integrate_flow(sf.EQUILIBRIUM, 1.0, (0.0, 1.0), (0.0, 0.1), 1e-2)


def test_integrate_flow_matches_full_system():
    # oracle: integrate the full (t, u, v) system along x, then along y
    seed = sf.first_integrals(ReducedState(1, 1, 1))
    field = sf.integrate_flow(seed, 1.0, (0.0, 0.1), (0.0, 0.1), 1e-3)
    _, xline = sf.integrate_tuv(ReducedState(1, 1, 1), "x", (0.0, 0.1), 1e-3)
    for i in (0, 50, 100):
        _, col = sf.integrate_tuv(ReducedState(*xline[i]), "y", (0.0, 0.1), 1e-3)
        got = np.column_stack([field.t[i], field.u[i], field.v[i]])
        assert np.abs(got - col).max() < 1e-9


def test_integrate_flow_first_integrals_constant_in_y():
    seed = sf.first_integrals(ReducedState(1, 1, 1))
    f = sf.integrate_flow(seed, 1.0, (0.0, 0.0), (0.0, 0.5), 1e-3)
    C = ((f.t - f.u**3) * f.v**2 - 1 / f.v) / 3
    D = f.v * (f.t + 1) / 3
    assert np.abs(C + 1 / 3).max() < 1e-8 and np.abs(D - 2 / 3).max() < 1e-8
    dC = np.diff(C[0]) / 1e-3
    assert np.abs(dC).max() < 1e-6


def test_integrate_flow_reports_last_valid_coordinate():
    seed = sf.first_integrals(ReducedState(1, 1e-3, 1))
    with pytest.raises(OutsideValidRegion) as exc:
        sf.integrate_flow(seed, 1.0, (0.0, 2.0), (0.0, 0.1), 1e-3)
    assert exc.value.coordinate is not None


def test_step_underflow():
    seed = sf.first_integrals(ReducedState(1, 1, 1))
    with pytest.raises(StepUnderflow):
        sf.integrate_flow(seed, 1.0, (0.0, 1.0), (0.0, 1.0), 0.0)
    with pytest.raises(StepUnderflow):
        sf.integrate_flow(seed, 1.0, (0.0, 1.0), (0.0, 1.0), 1e-9)


def test_flow_rows_header_order():
    seed = sf.first_integrals(ReducedState(1, 1, 1))
    f = sf.integrate_flow(seed, 1.0, (0.0, 0.002), (0.0, 0.001), 1e-3)
    rows = list(f.rows())
    assert len(rows) == 3 * 2
    x, y, t, u, v, b, m, k, C, D, r = rows[0]
    assert (x, y, t, u, v) == (0.0, 0.0, 1.0, 1.0, 1.0)
    assert r == pytest.approx(189.0)
