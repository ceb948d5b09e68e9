import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybrid_ebf.sysmodel import (
    InvalidParameter,
    SystemParams,
    dbm_to_watts,
    default_params,
    large_scale_beta,
    watts_to_dbm,
)


def test_defaults_match_scenario():
    p = default_params()
    assert p.n_antennas == 20
    assert p.coherence_time == 10e-3
    assert p.ce_slot_fixed == 10e-6
    assert p.dl_tx_power == pytest.approx(3.981, rel=1e-3)
    assert p.ul_pilot_power_max == pytest.approx(1e-2)
    assert p.ul_pilot_power_fixed == pytest.approx(1e-4)
    assert p.noise_psd == pytest.approx(1e-18)
    assert p.antenna_spacing == pytest.approx(0.16393, rel=1e-4)
    assert p.unit_ref_atten == pytest.approx((p.antenna_spacing / (2 * np.pi)) ** 2)
    assert p.antenna_gains == (1.0,) * 20
    assert (p.rice_factor, p.aoa_deg, p.distance, p.pathloss_exp) == (2.0, 0.0, 15.0, 2.5)


@pytest.mark.parametrize("dbm, watts", [(0.0, 1e-3), (36.0, 3.981), (-150.0, 1e-18)])
def test_dbm_examples(dbm, watts):
    assert dbm_to_watts(dbm) == pytest.approx(watts, rel=1e-3)


def test_watts_to_dbm_rejects_nonpositive():
    with pytest.raises(ValueError):
        watts_to_dbm(0.0)
    with pytest.raises(ValueError):
        watts_to_dbm(-1.0)


@given(st.floats(-200, 60))
def test_dbm_round_trip(x):
    assert watts_to_dbm(dbm_to_watts(x)) == pytest.approx(x, rel=1e-12, abs=1e-12)


def test_beta_default():
    assert large_scale_beta(default_params()) == pytest.approx(7.81e-7, rel=0.01)


def test_beta_unit_distance_and_zero_exponent():
    p = default_params(distance=1.0, pathloss_exp=3.7)
    assert large_scale_beta(p) == pytest.approx(p.unit_ref_atten)
    q = default_params(distance=42.0, pathloss_exp=0.0)
    assert large_scale_beta(q) == pytest.approx(q.unit_ref_atten)


def test_beta_rejects_nonpositive_distance():
    with pytest.raises(InvalidParameter):
        large_scale_beta(default_params(distance=0.0))


@given(st.floats(0.5, 100), st.floats(0.5, 100), st.floats(0.1, 5))
def test_beta_decreasing_in_distance(d1, d2, exp):
    if d1 == d2:
        return
    lo, hi = sorted((d1, d2))
    b_lo = large_scale_beta(default_params(distance=lo, pathloss_exp=exp))
    b_hi = large_scale_beta(default_params(distance=hi, pathloss_exp=exp))
    assert b_hi < b_lo


@pytest.mark.parametrize("bad", [
    dict(n_antennas=0), dict(coherence_time=0.0), dict(noise_psd=0.0), dict(dl_tx_power=-1.0),
    dict(rice_factor=-0.1), dict(antenna_gains=(1.0, 0.0)), dict(n_antennas=3, antenna_gains=(1.0, 1.0)),
])
def test_invalid_params_rejected(bad):
    with pytest.raises(InvalidParameter):
        SystemParams(**bad)


def test_evolve_rederives_dependent_fields():
    p = default_params()
    q = p.evolve(carrier_freq=2.4e9, n_antennas=4)
    assert q.antenna_spacing == pytest.approx(3e8 / (2 * 2.4e9))
    assert q.unit_ref_atten == pytest.approx((q.antenna_spacing / (2 * np.pi)) ** 2)
    assert q.antenna_gains == (1.0,) * 4
    r = p.evolve(antenna_spacing=0.1, unit_ref_atten=1e-3)
    assert r.unit_ref_atten == 1e-3
