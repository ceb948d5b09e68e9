import numpy as np
import pytest

from hybrid_ebf.channel import ChannelStats, build_stats, sample
from hybrid_ebf.sysmodel import InvalidParameter, SystemParams, default_params, large_scale_beta


def test_broadside_mean_is_real_and_equal(params):
    s = build_stats(params)
    beta = large_scale_beta(params)
    expected = np.sqrt(beta * 2 / 3)
    np.testing.assert_allclose(s.mean, expected * np.ones(20), rtol=1e-12, atol=0)


def test_rayleigh_limit(params):
    s = build_stats(params.evolve(rice_factor=0.0))
    assert np.all(s.mean == 0)
    assert s.cov_scale == pytest.approx(large_scale_beta(params))


def test_default_mean_norm(params, stats):
    assert stats.mean_norm_sq == pytest.approx(2 / 3 * large_scale_beta(params) * 20, rel=1e-12)


def test_mean_norm_with_gains_and_angle():
    gains = tuple(np.linspace(0.5, 2.0, 8))
    p = default_params(n_antennas=8, antenna_gains=gains, aoa_deg=30.0, rice_factor=4.0)
    s = build_stats(p)
    beta = large_scale_beta(p)
    assert s.mean_norm_sq == pytest.approx(beta * 4 / 5 * sum(gains), rel=1e-12)
    # half-wavelength spacing: adjacent phase step is pi sin(psi)
    step = np.angle(s.mean[1] / s.mean[0])
    assert step == pytest.approx(np.pi * np.sin(np.radians(30.0)))
    assert np.angle(s.mean[0]) == 0.0


def test_negative_rice_rejected(params):
    bad = params.evolve()
    object.__setattr__(bad, "rice_factor", -1.0)  # bypass SystemParams validation
    with pytest.raises(InvalidParameter):
        build_stats(bad)


def test_zero_variance_sample_is_mean(stats, rng):
    s = ChannelStats(stats.mean, 0.0, stats.beta, stats.rice_factor)
    np.testing.assert_array_equal(sample(s, rng), stats.mean)


def test_sample_moments(stats, rng):
    h = sample(stats, rng, size=100_000)
    assert h.shape == (100_000, 20)
    err = np.abs(h.mean(axis=0) - stats.mean)
    assert np.all(err < 4 * np.sqrt(stats.cov_scale / 1e5))
    var = h.var(axis=0)
    np.testing.assert_allclose(var, stats.cov_scale, rtol=0.05)
    centered = h - stats.mean
    cov = centered.T @ centered.conj() / h.shape[0]
    off = np.abs(cov - np.diag(np.diag(cov)))
    assert off.max() < 0.05 * stats.cov_scale
    e_norm = np.mean(np.sum(np.abs(h) ** 2, axis=1))
    assert e_norm == pytest.approx(stats.mean_norm_sq + 20 * stats.cov_scale, rel=0.02)
