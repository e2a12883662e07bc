import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uplink_rsma import analytic as an
from uplink_rsma.exceptions import InfeasibleMomentsError, InvalidParameterError
from uplink_rsma.mcs import PRESETS, McsScheme
from uplink_rsma.sinr import SystemConfig
from uplink_rsma.spatial import DistanceProfile, Window, sample_interferers_model_a, B1

import riemann_oracles as ro

LAM = 1e-4


def _random_profile(rng, N, n_int=30):
    r = np.sort(rng.uniform(5.0, 120.0, N))
    return DistanceProfile(r, rng.uniform(20.0, 600.0, n_int))


def test_split_factors_table():
    s = McsScheme.from_db([0.0], [0.4])  # theta = 1
    sf = an.split_factors(0.5, 0.3, s)
    assert np.allclose(sf.u[:, 0], [0.0, 0.5, 0.0, 0.5])
    assert sf.active[:, 0].tolist() == [False, True, False, True]
    assert np.allclose(sf.c, [0.3, 0.7, 0.7, 0.3])
    with pytest.raises(InvalidParameterError):
        an.split_factors(1.2, 0.0, s)


def test_shannon_factors_match_split_factors():
    t = np.array([0.3])
    theta = np.expm1(t)
    s = McsScheme((float(theta[0]),), (0.0, 1.0))
    assert np.allclose(an.shannon_factors(t, 0.35)[:, 0], an.split_factors(0.35, 0.0, s).u[:, 0])


def test_conditional_crr_is_exact_fading_average():
    from uplink_rsma.mcs import crr_empirical
    rng = np.random.default_rng(0)
    prof = _random_profile(rng, 3, 10)
    cfg = SystemConfig(N=3, beta=0.4, q=0.5, sigma2_norm=1e-9)
    for n in (1, 3):
        exact = an.crr_conditional(prof, cfg, PRESETS["S3"], n)
        est = crr_empirical(prof, cfg, PRESETS["S3"], n, 200_000, np.random.default_rng(n)).value
        assert est == pytest.approx(exact, abs=6e-3)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 1), st.floats(0, 1))
def test_conditional_q_symmetry(seed, beta, q):
    rng = np.random.default_rng(seed)
    prof = _random_profile(rng, 2)
    s = PRESETS["S4"]
    a = an.crr_conditional(prof, SystemConfig(beta=beta, q=q), s, 1)
    b = an.crr_conditional(prof, SystemConfig(beta=1 - beta, q=1 - q), s, 1)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-14)


def test_conditional_crr_bounds():
    rng = np.random.default_rng(1)
    for _ in range(50):
        prof = _random_profile(rng, 2)
        for beta in (0.0, 0.3, 1.0):
            v = an.crr_conditional(prof, SystemConfig(beta=beta), PRESETS["S3"], 1)
            assert 0.0 <= v <= 2 * PRESETS["S3"].max_rate


def test_degenerate_cases_are_exact():
    rng = np.random.default_rng(2)
    for _ in range(100):
        prof = _random_profile(rng, 2)
        for beta in (0.0, 1.0):
            cfg = SystemConfig(beta=beta, q=0.0)
            for n in (1, 2):
                assert an.crr_conditional(prof, cfg, PRESETS["S4"], n) == pytest.approx(
                    an.crr_noma_conditional(prof, cfg, PRESETS["S4"], n), abs=1e-12)
    prof = DistanceProfile(np.array([30.0]), np.array([80.0, 200.0]))
    cfg = SystemConfig(N=1)
    assert an.crr_oma_conditional(prof, cfg, PRESETS["S1"]) == an.crr_noma_conditional(prof, cfg, PRESETS["S1"], 1)
    with pytest.raises(InvalidParameterError):
        an.crr_oma_conditional(_random_profile(rng, 2), cfg, PRESETS["S1"])


def test_expected_products_against_model_a_monte_carlo():
    # synthetic topologies drawn from the same spatial model as the integrals
    rng = np.random.default_rng(3)
    cfg = SystemConfig(beta=0.0)
    s = PRESETS["S2"]
    w = Window(1600.0)
    vals = []
    for _ in range(2000):
        r = np.sort(np.sqrt(rng.standard_exponential(2) / (B1 * LAM * math.pi)))
        d = np.hypot(*sample_interferers_model_a(LAM, 2, w, rng).T)
        vals.append(an.crr_noma_conditional(DistanceProfile(r, d), cfg, s, 1))
    mean, se = np.mean(vals), np.std(vals) / math.sqrt(len(vals))
    assert abs(an.moment_crr_noma(1, cfg, s, 1) - mean) < 4 * se


def test_expected_products_small_instance_against_riemann():
    cfg = SystemConfig()
    ref = ro.expected_product([0.5], [1], LAM, 2, 2, 4.0, m_outer=601)
    val = an.expected_products([[0.5]], 1.0, cfg, 2)[0]
    assert val == pytest.approx(ref, rel=1e-6)


def test_intra_and_inter_factors_against_riemann():
    cfg = SystemConfig(N=3)
    for r in (20.0, 90.0):
        assert an.intra_cell_factor(r, [0.7], cfg, 1)[0] == pytest.approx(
            ro.intra_ordered_two(r, [0.7], [1], LAM, 4.0, m=1000), rel=1e-6)
        assert an.inter_cell_factor(r, [0.7], cfg)[0] == pytest.approx(
            ro.inter_pgfl(r, [0.7], [1], LAM, 3, 4.0), rel=1e-6)
    assert an.intra_cell_factor(50.0, [0.7], cfg, 3)[0] == 1.0


def test_expected_products_limits_and_batching():
    cfg = SystemConfig()
    vals = an.expected_products([[0.0], [1e-3], [1e3], [1e8], [1e20]], 1.0, cfg, 1)
    assert vals[0] == pytest.approx(1.0, abs=1e-9)
    assert np.all(np.diff(vals) < 0)
    # power-law tail: P(success) ~ a^(-2/eta)
    assert vals[4] / vals[3] == pytest.approx(1e-6, rel=1e-3)
    single = an.expected_products([[1e3]], 1.0, cfg, 1)
    assert single[0] == pytest.approx(vals[2], rel=1e-8)
    with pytest.raises(InvalidParameterError):
        an.expected_products([[-1.0]], 1.0, cfg, 1)


def test_moment_spec_coefficients():
    spec = an.MomentSpec(3, 2)
    assert sum(c for _, c in spec.outer()) == 2 ** 3
    assert sum(c for _, c in spec.terms()) == (4 * 2) ** 3
    assert all(k.shape == (4, 2) and k.sum() == 3 for k, _ in spec.terms())
    with pytest.raises(InvalidParameterError):
        an.MomentSpec(0, 1)


def test_first_moment_is_average_rate_and_moments_ordered():
    cfg = SystemConfig(beta=0.4, q=0.3)
    s = PRESETS["S3"]
    m1 = an.moment_crr_rsma(1, cfg, s, 1)
    assert m1 == an.avg_received_rate_rsma(cfg, s, 1)
    m2 = an.moment_crr_rsma(2, cfg, s, 1)
    assert m1 ** 2 < m2 < 2 * s.max_rate * m1


def test_second_moment_against_conditional_average_on_model_a():
    rng = np.random.default_rng(4)
    cfg = SystemConfig(beta=0.5)
    s = PRESETS["S1"]
    w = Window(1600.0)
    vals = []
    for _ in range(1500):
        r = np.sort(np.sqrt(rng.standard_exponential(2) / (B1 * LAM * math.pi)))
        d = np.hypot(*sample_interferers_model_a(LAM, 2, w, rng).T)
        vals.append(an.crr_conditional(DistanceProfile(r, d), cfg, s, 2) ** 2)
    mean, se = np.mean(vals), np.std(vals) / math.sqrt(len(vals))
    assert abs(an.moment_crr_rsma(2, cfg, s, 2) - mean) < 4 * se


def test_oma_moment_uses_single_user():
    s = PRESETS["S1"]
    assert an.moment_crr_oma(1, SystemConfig(N=2), s) == an.moment_crr_noma(1, SystemConfig(N=1), s, 1)
    assert an.avg_received_rate(SystemConfig(), s, 1, "noma") == an.moment_crr_noma(1, SystemConfig(), s, 1)
    with pytest.raises(InvalidParameterError):
        an.avg_received_rate(SystemConfig(), s, 1, "cdma")


def test_noise_lowers_rate():
    s = PRESETS["S1"]
    quiet = an.avg_received_rate_rsma(SystemConfig(), s, 1)
    noisy = an.avg_received_rate_rsma(SystemConfig(sigma2_norm=10 ** -9.5), s, 1)
    assert noisy < quiet


def test_shannon_weight_inverts_threshold_maps():
    # t_j(a) from the closed forms, differentiated numerically
    a = np.array([0.3, 2.0, 40.0])
    beta, h = 0.3, 1e-6
    t = lambda a: (np.log1p(a) - np.log1p(a * (1 - beta)), np.log1p(a * beta),
                   np.log1p(a) - np.log1p(a * beta), np.log1p(a * (1 - beta)))
    deriv = [(p - m) / (2 * h) for p, m in zip(t(a + h), t(a - h))]
    expect = 0.25 * (deriv[0] + deriv[3]) + 0.75 * (deriv[1] + deriv[2])
    assert np.allclose(an.shannon_weight(a, beta, 0.25), expect, rtol=1e-7)
    # and a(t_j) recovers the ratio (e^t - 1) / L_j
    for j, tj in enumerate(t(a)):
        L = an.shannon_factors(tj, beta)[j]
        assert np.allclose(np.expm1(tj) / L, a)


def test_shannon_transform_against_t_riemann_with_surrogate():
    # any decreasing F: int_0^tmax F(a_j(t)) dt == int F(a) t_j'(a) da
    F = lambda a: 1.0 / (1.0 + np.sqrt(a))
    beta, q = 0.5, 0.35
    total = 0.0
    for j, (coef, t_max) in enumerate([(q, -math.log1p(-beta)), (1 - q, 60.0), (1 - q, -math.log(beta)), (q, 60.0)]):
        t = np.linspace(0.0, t_max, 2_000_001)[:-1]
        a = np.expm1(t) / an.shannon_factors(t, beta)[j]
        total += coef * np.trapezoid(F(a), t)
    from uplink_rsma.quadrature import integrate
    val, _ = integrate(lambda x: F(np.exp(x)) * an.shannon_weight(np.exp(x), beta, q) * np.exp(x), -40.0, 120.0)
    assert val == pytest.approx(total, rel=1e-5)


def test_achievable_rate_guard_and_flatness():
    with pytest.raises(InvalidParameterError):
        an.avg_achievable_rate_rsma(SystemConfig(), 2, inter_cell=False)
    a = an.avg_achievable_rate_rsma(SystemConfig(beta=0.2, q=0.3), 2)
    b = an.avg_achievable_rate_rsma(SystemConfig(beta=0.7, q=0.9), 2)
    assert a == pytest.approx(b, rel=1e-6)


def test_beta_fit_recovers_parameters():
    alpha, phi, scale = 2.5, 4.0, 0.8
    mu = alpha / (alpha + phi)
    var = alpha * phi / ((alpha + phi) ** 2 * (alpha + phi + 1))
    mean, m2 = scale * mu, scale ** 2 * (var + mu * mu)
    meta = an.fit_beta_meta(mean, m2, scale)
    assert (meta.alpha, meta.phi) == pytest.approx((alpha, phi), rel=1e-10)
    assert meta.mean == pytest.approx(mean)
    ccdf = meta.ccdf([0.0, scale])
    assert ccdf.tolist() == [1.0, 0.0]


def test_beta_fit_degenerate_and_infeasible():
    # vanishing variance concentrates the law at the mean
    meta = an.fit_beta_meta(0.3, 0.09 + 1e-12, 1.0)
    assert meta.ccdf(0.29) > 0.999 and meta.ccdf(0.31) < 0.001
    with pytest.raises(InfeasibleMomentsError, match="variance"):
        an.fit_beta_meta(0.3, 0.3, 1.0)
    with pytest.raises(InfeasibleMomentsError, match="mean"):
        an.fit_beta_meta(1.2, 1.5, 1.0)
    with pytest.raises(InfeasibleMomentsError):
        an.fit_beta_meta(0.3, 0.05, 1.0)
    clamped = an.fit_beta_meta(0.3, 0.3, 1.0, clamp=True)
    assert clamped.clamped and clamped.alpha > 0 and clamped.phi > 0


def test_meta_scale():
    s = PRESETS["S3"]
    assert an.meta_scale("rsma", s) == 1.2
    assert an.meta_scale("noma", s) == 0.6
