import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from btwist.errors import NonPositiveRadius
from btwist.profile import (
    RadiusProfile, ProfileNorms, classify, compute_norms, compute_sigmas, critical_point_kappa, evaluate,
)

NORM_FIELDS = ("r_min", "r_max", "d1_norm", "d2_norm", "d2_sq_norm")


@st.composite
def profiles(draw, max_k=3):
    k = draw(st.integers(1, max_k))
    amp = st.floats(-0.05, 0.05, allow_nan=False)
    harm = tuple((draw(amp), draw(amp)) for _ in range(k))
    return RadiusProfile(draw(st.floats(0.5, 2.0)), harm)


def test_evaluate_constant(P0):
    assert evaluate(P0, 0.37) == (1.0, 0.0, 0.0)


def test_evaluate_cosine_at_zero(P1):
    R, dR, ddR = evaluate(P1, 0.0)
    assert R == pytest.approx(1.01, abs=1e-15)
    assert dR == pytest.approx(0.0, abs=1e-15)
    assert ddR == pytest.approx(-0.04 * math.pi**2, rel=1e-14)


def test_evaluate_quarter_period(P2):
    R, dR, ddR = evaluate(P2, 0.25)
    assert R == pytest.approx(1.0, abs=1e-15)
    assert dR == pytest.approx(-0.001 * math.pi, rel=1e-14)
    assert ddR == pytest.approx(0.0, abs=1e-15)


def test_evaluate_array_matches_scalar(P1):
    t = np.linspace(-3, 3, 17)
    R, dR, ddR = evaluate(P1, t)
    for i, ti in enumerate(t):
        assert (R[i], dR[i], ddR[i]) == pytest.approx(evaluate(P1, ti), abs=1e-15)


def test_periodicity(P1):
    # t + k rounds the fractional part by at most one ulp
    t = np.linspace(0, 1, 101)
    for k in (-3, 1, 7):
        for x, y in zip(evaluate(P1, t + k), evaluate(P1, t)):
            np.testing.assert_allclose(x, y, rtol=1e-14, atol=1e-13)


def test_norms_constant(P0):
    n = compute_norms(P0)
    assert (n.r_min, n.r_max, n.d1_norm, n.d2_norm, n.d2_sq_norm, n.kappa) == (1, 1, 0, 0, 0, 0)


@pytest.mark.parametrize("name", ["P1", "P2"])
def test_norms_match_bruteforce_oracle(name, frozen, request):
    n = compute_norms(request.getfixturevalue(name))
    ref = frozen["norms"][name]
    for f in NORM_FIELDS + ("kappa",):
        assert getattr(n, f) == pytest.approx(ref[f], rel=1e-9), f
    assert n.t_bar == pytest.approx(ref["t_bar"], abs=1e-9)


def test_norms_reject_small_grid(P1):
    with pytest.raises(ValueError):
        compute_norms(P1, grid_points=512)


def test_non_positive_radius():
    with pytest.raises(NonPositiveRadius):
        compute_norms(RadiusProfile(0.1, ((0.2, 0.0),)))


def test_sigmas_constant(P0):
    assert compute_sigmas(P0.norms, 0.5) == (math.inf, math.inf)


def test_sigmas_match_oracle(P1, P2, frozen):
    s0, _ = compute_sigmas(P1.norms)
    assert s0 == pytest.approx(15.7563, rel=1e-5)
    assert s0 == pytest.approx(frozen["sigmas"]["P1"]["sigma0"], rel=1e-10)
    _, sB = compute_sigmas(P2.norms, 0.5)
    assert sB == pytest.approx(13.73, abs=0.01)
    assert sB == pytest.approx(frozen["sigmas"]["P2"]["sigmaB"], rel=1e-10)


def test_sigmas_reject_bad_epsilon(P1):
    for eps in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            compute_sigmas(P1.norms, eps)


def test_classify_constant(P0):
    r = classify(P0)
    assert r.in_R0 and r.in_RB
    assert not r.in_R0_tilde and not r.in_RB_tilde
    assert r.kappa == 0.0 and r.c_max == 0.0


def test_classify_p2(P2, frozen):
    r = classify(P2, 0.5)
    assert r.in_RB and r.in_RB_tilde
    assert r.kappa == pytest.approx(0.01974, rel=1e-3)
    assert r.inf_F == pytest.approx(frozen["criterion_P2_billiard"]["inf_F"], rel=1e-6)
    assert r.c_max == pytest.approx(0.0364, rel=2e-3)


def test_classify_p1(P1, frozen):
    r = classify(P1, 0.5)
    assert r.in_RB and not r.in_RB_tilde
    assert r.sigmaB == pytest.approx(frozen["sigmas"]["P1"]["sigmaB"], rel=1e-10)
    assert r.inf_F == pytest.approx(frozen["criterion_P1_billiard"]["inf_F"], rel=1e-6)
    assert r.inf_F > 10 * r.kappa


def test_classify_rejects_small_omega_grid(P2):
    with pytest.raises(ValueError):
        classify(P2, omega_grid=100)


def test_critical_point_mode_single_harmonic(P2):
    # one cosine: the only interior maximum is the global one
    t, k = critical_point_kappa(P2)
    assert k == pytest.approx(P2.norms.kappa, rel=1e-9)
    r = classify(P2, critical_point_mode=True)
    assert r.critical_point_mode and r.in_RB_tilde


def test_critical_point_mode_picks_secondary_max():
    # R = 1 + 0.01 cos 2pi t + 0.004 cos 6pi t has local maxima besides t = 0
    prof = RadiusProfile(1.0, ((0.01, 0.0), (0.0, 0.0), (0.004, 0.0)))
    t, k = critical_point_kappa(prof)
    R, dR, ddR = evaluate(prof, t)
    assert abs(dR) < 1e-10 and ddR < 0
    assert k >= prof.norms.kappa - 1e-12


def test_profile_json_roundtrip(tmp_path, P1):
    path = tmp_path / "p.json"
    path.write_text(json.dumps(P1.to_dict()))
    assert RadiusProfile.load(path) == P1


def test_classify_report_to_dict(P2):
    d = classify(P2).to_dict()
    assert set(d["norms"]) == set(ProfileNorms.__dataclass_fields__)


@settings(max_examples=100, deadline=None)
@given(profiles())
def test_sigma_b_never_exceeds_sigma0(prof):
    s0, sB = compute_sigmas(prof.norms, 0.5)
    assert sB <= s0


@settings(max_examples=30, deadline=None)
@given(profiles(), st.floats(0.2, 5.0))
def test_norms_scale_covariant(prof, lam):
    a, b = compute_norms(prof), compute_norms(prof.scaled(lam))
    for f in ("r_min", "r_max", "d1_norm", "d2_norm"):
        assert getattr(b, f) == pytest.approx(lam * getattr(a, f), rel=1e-8, abs=1e-14)
    assert b.d2_sq_norm == pytest.approx(lam**2 * a.d2_sq_norm, rel=1e-8, abs=1e-14)


@settings(max_examples=15, deadline=None)
@given(profiles())
def test_refinement_matches_denser_grid(prof):
    fine = 10 * 2**16
    t = np.arange(fine) / fine
    R, dR, ddR = evaluate(prof, t)
    sq = 2 * (dR * dR + R * ddR)
    n = compute_norms(prof)
    brute = {"r_min": R.min(), "r_max": R.max(), "d1_norm": np.abs(dR).max(),
             "d2_norm": np.abs(ddR).max(), "d2_sq_norm": np.abs(sq).max()}
    for f, v in brute.items():
        assert getattr(n, f) == pytest.approx(v, rel=1e-6, abs=1e-12), f


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 0.1), st.floats(0.0, 0.1), st.floats(0.0, 0.1))
def test_tilde_flag_monotone_in_kappa(k1, k2, infF):
    # the tilde rule is kappa > 0 and kappa > inf F; with inf F fixed it is monotone in kappa
    lo, hi = sorted((k1, k2))
    flag = lambda k: k > 0 and k > infF
    assert not (flag(lo) and not flag(hi))
