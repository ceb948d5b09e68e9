import numpy as np
import pytest
from scipy import stats as sps

from hybrid_ebf.beamform import ideal_mean_received_power
from hybrid_ebf.channel import build_stats
from hybrid_ebf.experiments import (
    PRESET_NAMES,
    Alloc,
    Metric,
    Mode,
    SweepSpec,
    SweepVariable,
    format_rows,
    ks_distance,
    preset,
    run_sweep,
    run_trials,
    simulate_hhat_norm_sq,
    simulate_point,
    trial_records,
    write_meta,
)
from hybrid_ebf.beamform import PrecoderKind
from hybrid_ebf.sysmodel import InvalidParameter, default_params


def small_spec(trials=2500, **kw):
    modes = ("fixed:mc:received:hybrid_mrt", "fixed:mc:stored:hybrid_mrt", "joint:mc:stored:single_ps",
             "joint:closed:stored")
    return SweepSpec(SweepVariable.D, (10.0, 20.0), modes, trials=trials, master_seed=5, **kw)


# --- presets -----------------------------------------------------------------------


def test_every_preset_builds():
    for name in PRESET_NAMES:
        spec = preset(name, trials=10)
        assert spec.trials == 10 and len(spec.values) > 0 and len(spec.modes) > 0


def test_preset_ranges():
    k = preset("sweep_K").values
    assert min(k) == 0 and max(k) == 10
    assert max(preset("sweep_delta").values) == 0.16
    assert max(preset("sweep_d").values) == 25
    assert preset("sweep_N").values == (10, 20, 30, 40, 50)


def test_unknown_preset():
    with pytest.raises(KeyError):
        preset("fig99")


def test_sweep_spec_validation():
    with pytest.raises(InvalidParameter):
        SweepSpec(SweepVariable.D, (), ("fixed:closed:stored",))
    with pytest.raises(InvalidParameter):
        SweepSpec(SweepVariable.D, (5.0,), ("fixed:closed:stored",), trials=0)


# --- modes -------------------------------------------------------------------------


def test_mode_round_trip():
    mode = Mode.parse("digital_joint:mc:stored:hybrid_mrt_no_api")
    assert mode.alloc is Alloc.DIGITAL_JOINT and mode.metric is Metric.STORED
    assert Mode.parse(str(mode)) == mode
    assert Mode.parse("joint:closed:p_c_opt").precoder is PrecoderKind.HYBRID_MRT


@pytest.mark.parametrize("text", ["joint:mc", "joint:sim:stored", "best:mc:stored", "joint:mc:stored:laser",
                                  "joint:mc:energy"])
def test_mode_parse_errors(text):
    with pytest.raises(InvalidParameter):
        Mode.parse(text)


# --- Monte Carlo engine ------------------------------------------------------------


def test_perfect_csi_mode_matches_ideal_mean():
    spec = SweepSpec(SweepVariable.D, (15.0,), ("none:mc:received:perfect_csi",), trials=100_000, master_seed=1)
    (row,) = run_trials(spec)
    p = default_params()
    assert abs(row.mean - ideal_mean_received_power(p, build_stats(p))) <= 3 * row.stderr


def test_results_independent_of_worker_count():
    spec = small_spec()
    assert format_rows(run_sweep(spec, workers=1)) == format_rows(run_sweep(spec, workers=2))


def test_same_seed_same_bytes_other_seed_differs():
    a = format_rows(run_sweep(small_spec()))
    assert a == format_rows(run_sweep(small_spec()))
    from dataclasses import replace
    assert a != format_rows(run_sweep(replace(small_spec(), master_seed=6)))


def test_modes_share_random_draws():
    spec = SweepSpec(SweepVariable.D, (15.0,), ("fixed:mc:received:hybrid_mrt",), trials=1500, master_seed=2)
    both = SweepSpec(SweepVariable.D, (15.0,), ("fixed:mc:received:single_ps", "fixed:mc:received:hybrid_mrt"),
                     trials=1500, master_seed=2)
    np.testing.assert_array_equal(simulate_point(spec, 0)[0], simulate_point(both, 0)[1])


def test_frozen_api_is_shared_across_chunks():
    spec = SweepSpec(SweepVariable.D, (15.0,), ("fixed:mc:received:hybrid_mrt",), trials=3000, master_seed=4,
                     freeze_api=True)
    assert np.all(np.isfinite(simulate_point(spec, 0)[0]))


def test_stderr_shrinks_with_trials():
    def se(trials):
        spec = SweepSpec(SweepVariable.D, (15.0,), ("fixed:mc:received:hybrid_mrt",), trials=trials, master_seed=3)
        return run_trials(spec)[0].stderr

    assert se(1000) / se(100_000) == pytest.approx(10.0, rel=0.10)


def test_closed_rows_carry_no_trials():
    rows = run_trials(small_spec(trials=10))
    closed = [r for r in rows if ":closed:" in r.mode]
    assert closed and all(r.trials == 0 and r.stderr == 0.0 for r in closed)


def test_trial_ledger_identity():
    spec = small_spec(trials=500)
    p = default_params(distance=10.0)
    n = p.n_antennas
    records = trial_records(spec, 0)
    assert len(records) == 500
    for r in records:
        expected = (p.coherence_time - n * r.tau_c) * r.harvested_power - n * r.tau_c * r.p_c
        assert r.stored_energy == expected


# --- validation statistics ---------------------------------------------------------


def test_ks_requires_samples():
    with pytest.raises(InvalidParameter):
        ks_distance(np.zeros(99), sps.norm())


def test_ks_self_sampled_is_small():
    law = sps.gamma(2.5)
    x = law.rvs(size=100_000, random_state=np.random.default_rng(9))
    assert ks_distance(x, law) < 0.006


def test_ks_constant_samples_is_large():
    assert ks_distance(np.full(500, 0.0), sps.norm()) >= 0.5
    assert ks_distance(np.full(500, 0.0), sps.norm().cdf) >= 0.5


def test_hhat_norm_follows_noncentral_chi_square():
    norm_sq, law = simulate_hhat_norm_sq(default_params(), 0.065, 100_000, master_seed=0)
    assert ks_distance(norm_sq, law.norm_sq_cdf) < 0.01


def test_meta_sorted(tmp_path):
    path = tmp_path / "x.meta"
    write_meta({"b": 1, "a": 2}, path)
    assert path.read_text() == "a=2\nb=1\n"
