import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraccert.certify import (
    CaseLabel,
    DensityModel,
    ProblemSpec,
    ThresholdError,
    RadiusTooSmallError,
    classify,
    compute_thresholds,
    growth_membership,
    regime_constant,
    regime_limit,
    verify_elliptic,
    verify_parabolic,
)
from fraccert.fraclap import FracOrder, neg_flap_psi, radial_supersolution_criterion
from fraccert.specfun import Regime


def spec(N, s, alpha, beta, K=1.0, p=1.0, T=1.0, c0=None, log=False):
    dens = DensityModel(K, alpha, log)
    if c0 is not None:
        return ProblemSpec(FracOrder(s, N), dens, beta, p, c0=c0)
    return ProblemSpec(FracOrder(s, N), dens, beta, p, T=T)


def test_classify_examples():
    assert classify(spec(3, 0.5, 10.0, 1.5)) is CaseLabel.I
    assert classify(spec(1, 0.75, 0.0, 2.5)) is CaseLabel.IV
    assert classify(spec(1, 0.5, 1.0, 1.0)) is CaseLabel.NONE
    assert classify(spec(1, 0.5, 1.0, 1.0, log=True)) is CaseLabel.III
    assert classify(spec(1, 0.5, 0.0, 0.5)) is CaseLabel.II


@settings(max_examples=200)
@given(st.integers(1, 4), st.floats(0.05, 0.95), st.floats(-2.0, 3.0), st.floats(0.01, 8.0))
def test_classify_rules(N, s, alpha, beta):
    label = classify(spec(N, s, alpha, beta))
    if beta <= N - 2 * s:
        assert label is CaseLabel.I
    elif beta < N:
        assert label is (CaseLabel.II if alpha <= 2 * s else CaseLabel.NONE)
    elif beta > N:
        assert label is (CaseLabel.IV if alpha + beta <= N + 2 * s else CaseLabel.NONE)


def test_spec_validation():
    with pytest.raises(ValueError):
        spec(1, 0.5, 0.0, -1.0)
    with pytest.raises(ValueError):
        spec(1, 0.5, 0.0, 1.0, p=0.5)
    with pytest.raises(ValueError):
        ProblemSpec(FracOrder(0.5, 1), DensityModel(), 1.0)
    with pytest.raises(ValueError):
        ProblemSpec(FracOrder(0.5, 1), DensityModel(), 1.0, T=1.0, c0=1.0)
    with pytest.raises(ValueError):
        DensityModel(K=0.0)
    with pytest.raises(ValueError):
        spec(1, 0.5, 0.5, 1.0, log=True)


def _mp_constants(N, s, beta):
    g = mp.gamma
    if beta < N:
        return -g(N / 2) * g((N - beta) / 2) / (g(N / 2 + s) * g((N - beta) / 2 - s))
    if beta == N:
        return -g(N / 2) / (g(-s) * g(N / 2 + s))
    return -g(N / 2) * g((beta - N) / 2) / (g(-s) * g(beta / 2 + s))


@pytest.mark.parametrize("N,s,alpha,beta", [(1, 0.5, 0.0, 0.5), (2, 0.3, 0.2, 1.7),
                                            (1, 0.5, 0.5, 1.0), (3, 0.75, 0.0, 3.0),
                                            (1, 0.75, 0.0, 2.5), (2, 0.4, 0.1, 2.5)])
def test_regime_constants(N, s, alpha, beta):
    sp = spec(N, s, alpha, beta)
    C = regime_constant(sp)
    assert C > 0
    assert C == pytest.approx(float(_mp_constants(N, s, beta)), rel=1e-10)


# root of 2 psi(1) - psi(-s) - psi(1/2 + s): the O(1/|log(1-z)|) correction of the
# logarithmic regime vanishes there (mpmath findroot)
S_LOG = 0.58045775509909277044


@pytest.mark.parametrize("N,s,beta,regime", [
    (2, 0.9, 0.8, Regime.FINITE_LIMIT),
    (1, S_LOG, 1.0, Regime.LOG_DIVERGENT),
    (1, 0.75, 2.5, Regime.POWER_DIVERGENT),
    (3, 0.6, 4.0, Regime.POWER_DIVERGENT),
])
def test_normalized_far_field_limit(N, s, beta, regime):
    alpha = 0.0 if regime is not Regime.LOG_DIVERGENT else 0.5
    sp = spec(N, s, alpha, beta)
    lim = regime_limit(sp)
    assert lim.regime is regime
    errs = []
    for k in range(4, 9):
        z = 1 - 10.0**-k
        # Pfaff image of F(N/2 + s, beta/2 + s; N/2; -r^2)
        val = float(mp.hyp2f1(-s, beta / 2 + s, N / 2, z)) / lim.normalizer(z)
        errs.append(abs(-val / regime_constant(sp) - 1))
    assert errs[-1] <= 1e-3
    assert all(b <= a for a, b in zip(errs, errs[1:]))


def test_finite_regime_converges_slowly_for_small_exponent():
    # F(z) = C + D (1-z)^d + ...; with d = (N - beta)/2 = 0.25 the gap at
    # z = 1 - 1e-8 is still about 1e-2 relative
    sp = spec(1, 0.5, 0.0, 0.5)
    lim = regime_limit(sp)
    z = 1 - 1e-8
    val = -float(mp.hyp2f1(-0.5, 0.75, 0.5, z))
    assert abs(val / regime_constant(sp) - 1) == pytest.approx(1.5e-2, rel=0.1)
    assert lim.exponent == pytest.approx(0.25)


def test_case_two_certificate():
    sp = spec(1, 0.5, 0.0, 0.5)
    th = compute_thresholds(sp)
    assert th.case is CaseLabel.II
    rep = verify_parabolic(sp, 2 * th.value, thresholds=th)
    assert rep.verdict
    assert rep.worst_scaled_residual < -1e-8
    assert rep.comparability_ok
    # the bound is sufficient, not sharp: the grid needs much less
    assert rep.minimal_parameter < th.value
    low = verify_parabolic(sp, 0.5 * rep.minimal_parameter, thresholds=th)
    assert not low.verdict


def test_elliptic_certificate():
    sp = spec(1, 0.5, 0.0, 0.5)
    th = compute_thresholds(sp)
    K = sp.density.K
    ell = spec(1, 0.5, 0.0, 0.5, c0=2 * K * th.value / (sp.p * K))
    rep = verify_elliptic(ell, thresholds=th)
    assert rep.verdict
    assert rep.parameter == pytest.approx(2 * rep.threshold)
    bad = spec(1, 0.5, 0.0, 0.5, c0=0.5 * rep.minimal_parameter)
    assert not verify_elliptic(bad, thresholds=th).verdict


@pytest.mark.parametrize("args", [
    dict(N=3, s=0.5, alpha=10.0, beta=1.5),
    dict(N=1, s=0.75, alpha=0.0, beta=2.5),
    dict(N=1, s=0.5, alpha=1.0, beta=1.0, log=True),
    dict(N=1, s=0.5, alpha=0.5, beta=1.0),
    dict(N=2, s=0.5, alpha=0.3, beta=2.0),
])
def test_other_cases_certify(args):
    sp = spec(**args)
    th = compute_thresholds(sp)
    lam = 2 * th.value if th.value > 0 else 1.0
    rep = verify_parabolic(sp, lam, thresholds=th)
    assert rep.verdict, rep.summary()


def test_log_case_inner_threshold():
    sp = spec(1, 0.5, 1.0, 1.0, log=True)
    th = compute_thresholds(sp)
    assert th.inner == pytest.approx(1 / (0.5 * math.e))


def test_none_case_has_no_threshold():
    with pytest.raises(ThresholdError):
        compute_thresholds(spec(1, 0.5, 1.0, 1.0))
    rep = verify_parabolic(spec(1, 0.5, 1.0, 1.0), 10.0)
    assert not rep.verdict


def test_radius_too_small():
    sp = spec(1, 0.75, 0.0, 2.5)
    th = compute_thresholds(sp)
    assert th.R_epsilon > 2
    with pytest.raises(RadiusTooSmallError):
        compute_thresholds(sp, R_epsilon=1.5 + 0 * th.R_epsilon)


def test_summary_is_plain_data():
    sp = spec(1, 0.5, 0.0, 0.5)
    summary = verify_parabolic(sp, 5.0).summary()
    assert summary["case"] == "II"
    assert summary["verdict"] in ("pass", "fail")


def test_growth_membership_examples():
    sp = spec(1, 0.5, 0.2, 1.8)
    s, alpha = 0.5, 0.2
    assert growth_membership((2 * s - alpha) / 2, sp).member
    assert not growth_membership(2 * s - alpha, sp).member
    assert growth_membership(1e-6, sp).member
    for sigma in ((2 * s - alpha) / 2, 2 * s - alpha + 0.1, 1e-6):
        assert growth_membership(sigma, sp).scan_agrees


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 3), st.floats(0.05, 0.45), st.floats(0.05, 1.0))
def test_case_one_weights_are_supersolutions(N, s, frac):
    beta = frac * (N - 2 * s)
    fo = FracOrder(s, N)
    r = np.geomspace(1e-2, 1e3, 40)
    assert np.all(neg_flap_psi(beta, fo, r) <= 1e-12)
    assert radial_supersolution_criterion(beta, fo)[0]
