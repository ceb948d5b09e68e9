import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybrid_ebf.beamform import (
    PrecoderKind,
    ideal_mean_received_power,
    isotropic_mean_received_power,
    make_precoder,
    mean_received_power_approx,
    mean_received_power_mc,
    mean_received_power_rayleigh_approx,
    received_power,
    simulate_received_power,
)
from hybrid_ebf.channel import build_stats, complex_normal
from hybrid_ebf.impair import draw_api
from hybrid_ebf.sysmodel import InvalidParameter, default_params


def test_perfect_csi_identity(rng):
    h = complex_normal(rng, 8)
    z = make_precoder(PrecoderKind.PERFECT_CSI, h=h)
    assert np.linalg.norm(z) == pytest.approx(1.0)
    amp = z @ h
    assert amp.imag == pytest.approx(0.0, abs=1e-14)
    assert amp.real == pytest.approx(np.linalg.norm(h))


def test_hybrid_mrt_without_api_is_plain_mrt(rng):
    h_hat = complex_normal(rng, 6)
    z = make_precoder(PrecoderKind.HYBRID_MRT, h_hat=h_hat, api=draw_api(6, 0.0, "uniform", rng))
    np.testing.assert_allclose(z, np.conj(h_hat) / np.linalg.norm(h_hat), rtol=1e-14, atol=1e-16)
    z_none = make_precoder(PrecoderKind.HYBRID_MRT, h_hat=h_hat, api=None)
    np.testing.assert_array_equal(z_none, make_precoder(PrecoderKind.HYBRID_MRT_NO_API, h_hat=h_hat))


def test_single_ps_is_unit_modulus(rng):
    h_hat = complex_normal(rng, (4, 10))
    z = make_precoder(PrecoderKind.SINGLE_PS, h_hat=h_hat)
    np.testing.assert_allclose(np.abs(z), 1.0, rtol=1e-14)
    np.testing.assert_allclose(np.angle(z), np.angle(np.conj(h_hat)), atol=1e-12)


def test_impaired_precoder_norm_bounded(rng):
    n = 12
    h_hat = complex_normal(rng, (50, n))
    api = draw_api(n, 0.16, "uniform", rng, size=50)
    z = make_precoder(PrecoderKind.HYBRID_MRT, h_hat=h_hat, api=api)
    assert np.all(np.linalg.norm(z, axis=-1) <= np.sqrt(n) * 2 * (1 + 0.16))


@pytest.mark.parametrize("kind", [PrecoderKind.PERFECT_CSI, PrecoderKind.HYBRID_MRT, PrecoderKind.SINGLE_PS])
def test_zero_norm_rejected(kind):
    zero = np.zeros(4, dtype=complex)
    with pytest.raises(ValueError):
        make_precoder(kind, h=zero, h_hat=zero)


def test_received_power_examples(rng):
    n, p_d = 5, 2.0
    assert received_power(np.ones(n), np.zeros(n), p_d) == 0.0
    h = complex_normal(rng, n)
    z = make_precoder(PrecoderKind.PERFECT_CSI, h=h)
    assert received_power(z, h, p_d) == pytest.approx(p_d * np.linalg.norm(h) ** 2)
    c = 0.3 - 0.4j
    iso = make_precoder(PrecoderKind.ISOTROPIC, h=np.full(n, c))
    assert received_power(iso, np.full(n, c), p_d, PrecoderKind.ISOTROPIC) == pytest.approx(p_d * n * abs(c) ** 2)


def test_received_power_rejects_negative_power():
    with pytest.raises(InvalidParameter):
        received_power(np.ones(2), np.ones(2), -1.0)


def test_perfect_csi_dominates_mrt_per_realisation(params, stats, rng):
    r = rng.spawn(3)
    out = simulate_received_power([PrecoderKind.PERFECT_CSI, PrecoderKind.HYBRID_MRT_NO_API], params, stats,
                                  params.ul_pilot_power_fixed, params.ce_slot_fixed, 2000, *r, delta=0.065)
    ideal, mrt = out[PrecoderKind.PERFECT_CSI], out[PrecoderKind.HYBRID_MRT_NO_API]
    assert np.all(mrt >= 0)
    assert np.all(ideal >= mrt * (1 - 1e-12))


# --- Monte Carlo against closed forms ------------------------------------------------


def _within_3se(mc, ref):
    mean, se = mc
    assert abs(mean - ref) <= 3 * se, (mean, se, ref)


def test_mc_perfect_csi(params, stats, rng):
    mc = mean_received_power_mc(PrecoderKind.PERFECT_CSI, params, stats, params.ul_pilot_power_fixed,
                                params.ce_slot_fixed, 100_000, rng, delta=0.065)
    _within_3se(mc, ideal_mean_received_power(params, stats))


def test_mc_isotropic(params, stats, rng):
    mc = mean_received_power_mc(PrecoderKind.ISOTROPIC, params, stats, params.ul_pilot_power_fixed,
                                params.ce_slot_fixed, 100_000, rng, delta=0.065)
    _within_3se(mc, isotropic_mean_received_power(params, stats))


def test_mc_rayleigh_perfect_csi(rng):
    p = default_params(rice_factor=0.0)
    s = build_stats(p)
    mc = mean_received_power_mc(PrecoderKind.PERFECT_CSI, p, s, p.ul_pilot_power_fixed, p.ce_slot_fixed,
                                100_000, rng)
    _within_3se(mc, p.dl_tx_power * s.beta * p.n_antennas)


def test_mc_matches_approximation_at_defaults(params, stats, rng):
    mean, _ = mean_received_power_mc(PrecoderKind.HYBRID_MRT_NO_API, params, stats, params.ul_pilot_power_fixed,
                                     params.ce_slot_fixed, 100_000, rng, delta=0.065)
    approx = mean_received_power_approx(params, stats, params.ul_pilot_power_fixed, params.ce_slot_fixed)
    assert abs(mean - approx) / approx < 0.02


def test_mc_rejects_zero_trials(params, stats, rng):
    with pytest.raises(InvalidParameter):
        mean_received_power_mc(PrecoderKind.PERFECT_CSI, params, stats, 1e-3, 1e-6, 0, rng)


# --- closed-form limits --------------------------------------------------------------


def test_high_snr_limit_is_ideal():
    p = default_params(noise_psd=1e-40)
    s = build_stats(p)
    assert mean_received_power_approx(p, s, p.ul_pilot_power_fixed, p.ce_slot_fixed) == pytest.approx(
        ideal_mean_received_power(p, s), rel=1e-12)


def test_single_antenna_is_ideal():
    p = default_params(n_antennas=1)
    s = build_stats(p)
    assert mean_received_power_approx(p, s, 1e-3, 1e-6) == pytest.approx(ideal_mean_received_power(p, s), rel=1e-14)


def test_no_pilot_energy_leaves_one_antenna_gain(params, stats):
    expected = params.dl_tx_power * (stats.mean_norm_sq + stats.beta / (params.rice_factor + 1))
    assert mean_received_power_approx(params, stats, 0.0, params.ce_slot_fixed) == pytest.approx(expected, rel=1e-12)


def test_approx_rejects_negative(params, stats):
    with pytest.raises(InvalidParameter):
        mean_received_power_approx(params, stats, -1e-3, 1e-6)


@given(st.floats(1e-5, 1e-1), st.floats(1e-10, 1e-5))
def test_rayleigh_specialisation(p_c, tau_c):
    p = default_params(rice_factor=0.0)
    s = build_stats(p)
    assert mean_received_power_rayleigh_approx(p, s.beta, p_c, tau_c) == pytest.approx(
        mean_received_power_approx(p, s, p_c, tau_c), rel=1e-12)


def test_rayleigh_limits():
    p = default_params(rice_factor=0.0)
    b = build_stats(p).beta
    assert mean_received_power_rayleigh_approx(p, b, 0.0, 1e-6) == pytest.approx(p.dl_tx_power * b, rel=1e-12)
    hi = default_params(rice_factor=0.0, noise_psd=1e-40)
    assert mean_received_power_rayleigh_approx(hi, b, 1e-3, 1e-6) == pytest.approx(
        hi.dl_tx_power * b * hi.n_antennas, rel=1e-12)


def test_strictly_increasing_in_power_and_time(params, stats, rng):
    p_c = rng.uniform(1e-6, params.ul_pilot_power_max, 100)
    tau_c = rng.uniform(1e-11, params.coherence_time / params.n_antennas, 100)
    base = mean_received_power_approx(params, stats, p_c, tau_c)
    assert np.all(mean_received_power_approx(params, stats, p_c * 1.01, tau_c) > base)
    assert np.all(mean_received_power_approx(params, stats, p_c, tau_c * 1.01) > base)


@pytest.mark.parametrize("n", [2, 10, 40])
@pytest.mark.parametrize("k", [0.0, 2.0, 10.0])
@pytest.mark.parametrize("d", [5.0, 15.0, 25.0])
def test_sandwich_between_isotropic_and_ideal(n, k, d):
    p = default_params(n_antennas=n, rice_factor=k, distance=d)
    s = build_stats(p)
    energies = np.concatenate([[0.0], np.geomspace(1e-15, 1e-3, 30)])
    mu = mean_received_power_approx(p, s, energies, 1.0)
    assert np.all(mu >= isotropic_mean_received_power(p, s) * (1 - 1e-12))
    assert np.all(mu <= ideal_mean_received_power(p, s) * (1 + 1e-12))
