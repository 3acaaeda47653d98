import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fmcw_rdd.radar_sim import (
    C,
    DESK_BOUNDS,
    DESK_CONFIG,
    PAPER_BOUNDS,
    PAPER_CONFIG,
    ConfigError,
    DegeneratePowerError,
    InterfererSpec,
    ObjectSpec,
    RadarConfig,
    RangeOverflowError,
    SamplingBounds,
    ScenarioSpec,
    beat_frequency,
    inject_interference,
    mean_power,
    sample_scenario,
    simulate,
    synth_interference,
    synth_objects,
)
from fmcw_rdd.rd_pipeline import rd_map


def test_paper_config_constants():
    cfg = PAPER_CONFIG
    assert (cfg.f0, cfg.B, cfg.T, cfg.B_if) == (79e9, 0.27e9, 12.8e-6, 10e6)
    assert (cfg.N, cfg.M, cfg.A, cfg.window) == (512, 128, 16, "hann")
    assert cfg.T_r == cfg.T
    assert cfg.fs == pytest.approx(40e6)


def test_paper_bounds_constants():
    b = PAPER_BOUNDS
    assert b.n_objects == (1, 20)
    assert b.range_m == (0.0, 100.0)
    assert b.velocity == (-20.0, 20.0)
    assert b.f0_i == (78.9e9, 79.1e9)
    assert b.B_i == (0.15e9, 0.25e9)
    assert b.T_i == (12e-6, 24e-6)
    assert b.snr_db == (-15.5, -0.5)
    assert b.snir_db == (15.0, 35.0)


def test_desk_preset_keeps_slope_and_sample_rate():
    assert DESK_CONFIG.slope == pytest.approx(PAPER_CONFIG.slope)
    assert DESK_CONFIG.fs == pytest.approx(PAPER_CONFIG.fs)
    # SNR shift compensates the lost coherent gain of a 16x smaller frame
    gain = 10 * math.log10((512 * 128) / (128 * 32))
    assert DESK_BOUNDS.snr_db[0] - PAPER_BOUNDS.snr_db[0] == pytest.approx(gain, abs=0.01)


@pytest.mark.parametrize(
    "kw",
    [dict(f0=0), dict(B=-1), dict(T=0), dict(T_r=1e-6), dict(N=1), dict(M=1), dict(B_if=0)],
)
def test_radar_config_rejects_invalid(kw):
    with pytest.raises(ConfigError):
        RadarConfig(**kw)


def test_beat_frequency_closed_form():
    # 2 B R / (c T) for 50 m, plus the Doppler shift 2 f0 v / c for 5 m/s
    expected = 2 * 0.27e9 * 50 / (299792458 * 12.8e-6) + 2 * 79e9 * 5 / 299792458
    assert float(beat_frequency(PAPER_CONFIG, 50.0, 5.0)) == pytest.approx(expected, rel=1e-15)
    assert C == 299792458.0


def test_sample_scenario_inside_bounds_and_deterministic():
    for seed in range(20):
        sc = sample_scenario(seed, PAPER_CONFIG, PAPER_BOUNDS)
        assert 1 <= len(sc.objects) <= 20
        for o in sc.objects:
            assert 0 <= o.range <= 100 and -20 <= o.velocity <= 20
        for i in sc.interferers:
            assert 78.9e9 <= i.f0_i <= 79.1e9
            assert 0.15e9 <= i.B_i <= 0.25e9
            assert 12e-6 <= i.T_i <= 24e-6
            assert 0 <= i.t_offset <= i.T_i
        assert -15.5 <= sc.snr_db <= -0.5 and 15 <= sc.snir_db <= 35
        assert sc == sample_scenario(seed, PAPER_CONFIG, PAPER_BOUNDS)


def test_point_interval_bounds_pin_values():
    b = PAPER_BOUNDS.with_(range_m=(50.0, 50.0))
    sc = sample_scenario(7, PAPER_CONFIG, b)
    assert all(o.range == 50.0 for o in sc.objects)


def test_inverted_bounds_rejected():
    with pytest.raises(ConfigError):
        sample_scenario(0, PAPER_CONFIG, SamplingBounds(range_m=(10.0, 5.0)))


def test_empty_object_list_is_zero():
    assert not synth_objects(PAPER_CONFIG, []).any()


def test_single_object_unit_modulus():
    x = synth_objects(PAPER_CONFIG, [ObjectSpec(37.0, -3.0, 1.0, 0.4)])
    np.testing.assert_allclose(np.abs(x), 1.0, atol=1e-12)


def test_object_tone_matches_sample_by_sample_formula(tiny_cfg):
    cfg = tiny_cfg
    obj = ObjectSpec(range=3.3, velocity=2.5, amplitude=0.7, phase=1.1)
    x = synth_objects(cfg, [obj])
    fb = 2 * cfg.B * obj.range / (C * cfg.T) + 2 * cfg.f0 * obj.velocity / C
    fd = 2 * cfg.f0 * obj.velocity / C
    ts = cfg.T / cfg.N
    for n in range(cfg.N):
        for m in range(cfg.M):
            ref = obj.amplitude * complex(
                math.cos(2 * math.pi * fb * n * ts + 2 * math.pi * fd * m * cfg.T_r + obj.phase),
                math.sin(2 * math.pi * fb * n * ts + 2 * math.pi * fd * m * cfg.T_r + obj.phase),
            )
            assert abs(x[n, m] - ref) < 1e-9


def test_superposition(tiny_cfg):
    a = [ObjectSpec(2.0, 1.0), ObjectSpec(5.5, -4.0, 2.0, 0.3)]
    b = [ObjectSpec(8.0, 0.0, 0.5)]
    np.testing.assert_allclose(
        synth_objects(tiny_cfg, a + b), synth_objects(tiny_cfg, a) + synth_objects(tiny_cfg, b), rtol=1e-12, atol=1e-12
    )


def test_range_overflow_rejected():
    r_max = PAPER_CONFIG.fs / 2 * C * PAPER_CONFIG.T / (2 * PAPER_CONFIG.B)
    with pytest.raises(RangeOverflowError):
        synth_objects(PAPER_CONFIG, [ObjectSpec(r_max * 1.01, 0.0)])


def test_worked_example_peak_at_bin_90():
    # 2 B R / c = 90.07 bins for R = 50 m
    rd = rd_map(synth_objects(PAPER_CONFIG, [ObjectSpec(50.0, 0.0)]))
    n, m = np.unravel_index(np.argmax(np.abs(rd)), rd.shape)
    assert (n, m) == (round(2 * 0.27e9 * 50 / 299792458), 64)


def test_interference_identical_chirp_fully_masked():
    cfg = PAPER_CONFIG
    itf = InterfererSpec(f0_i=cfg.f0, B_i=cfg.B, T_i=cfg.T, t_offset=0.0)
    data, mask = synth_interference(cfg, [itf])
    assert mask.all()
    np.testing.assert_allclose(np.angle(data * np.conj(data[0, 0])), 0.0, atol=1e-6)


def test_interference_empty_list():
    data, mask = synth_interference(PAPER_CONFIG, [])
    assert not data.any() and not mask.any()


def test_interference_burst_length_about_80_samples():
    cfg = PAPER_CONFIG
    k_e = 0.27e9 / 12.8e-6
    k_i = 0.2e9 / 18e-6
    # choose the start frequency so the chirps cross 6 us into ramp 0
    tc = 6e-6
    f0_i = cfg.f0 + k_e * tc - k_i * tc
    itf = InterfererSpec(f0_i=f0_i, B_i=0.2e9, T_i=18e-6, t_offset=0.0)
    _, mask = synth_interference(cfg, [itf])
    burst = int(mask[:, 0].sum())
    expected = 2 * cfg.B_if / abs(k_i - k_e) * cfg.fs
    assert abs(k_i - k_e) == pytest.approx(9.98e12, rel=1e-3)
    assert expected == pytest.approx(80.2, abs=0.1)
    assert abs(burst - expected) <= 1
    # the burst is one contiguous run centred on the crossing
    idx = np.flatnonzero(mask[:, 0])
    assert idx[-1] - idx[0] + 1 == burst
    assert abs(idx.mean() - tc * cfg.fs) <= 1


def test_interference_mask_soundness_and_gate():
    cfg = PAPER_CONFIG
    sc = sample_scenario(3, cfg, PAPER_BOUNDS)
    data, mask = synth_interference(cfg, sc.interferers)
    assert not data[~mask].any()
    itf = sc.interferers[0]
    # brute-force gate check on a handful of samples
    for n, m in [(0, 0), (100, 5), (511, 127), (250, 64), (17, 99)]:
        t = m * cfg.T_r + n * cfg.Ts
        f_e = cfg.f0 + cfg.slope * n * cfg.Ts
        f_i = itf.f0_i + itf.B_i / itf.T_i * ((t - itf.t_offset) % itf.T_i)
        assert mask[n, m] == (abs(f_i - f_e) <= cfg.B_if)


def test_noise_power_matches_snr():
    cfg = PAPER_CONFIG
    sc = ScenarioSpec(objects=(ObjectSpec(30.0, 3.0),), snr_db=0.0, seed=11)
    pair = simulate(cfg, sc)
    ratio = mean_power(pair.noise) / mean_power(pair.objects)
    assert 0.95 <= ratio <= 1.05
    assert np.iscomplexobj(pair.noise)
    # circular: real and imaginary parts carry equal power
    assert np.var(pair.noise.real) == pytest.approx(np.var(pair.noise.imag), rel=0.05)


def test_noise_free_no_interference_equals_objects():
    cfg = DESK_CONFIG
    objs = (ObjectSpec(20.0, 1.0), ObjectSpec(60.0, -5.0, 2.0, 1.0))
    pair = simulate(cfg, ScenarioSpec(objects=objs))
    np.testing.assert_array_equal(pair.interfered.data, synth_objects(cfg, objs))
    assert not pair.interfered.mask.any()


def test_interference_power_is_snir_above_signal_plus_noise():
    cfg = DESK_CONFIG
    sc = sample_scenario(5, cfg, DESK_BOUNDS)
    pair = simulate(cfg, sc)
    m = pair.interfered.mask
    assert m.any()
    ratio_db = 10 * np.log10(mean_power(pair.interference[m]) / mean_power(pair.clean.data))
    assert ratio_db == pytest.approx(sc.snir_db, abs=1e-9)


def test_snir_20_db_apart_gives_amplitude_ratio_10():
    cfg = DESK_CONFIG
    sc = sample_scenario(9, cfg, DESK_BOUNDS)
    a = simulate(cfg, replace(sc, snir_db=15.0)).interference
    b = simulate(cfg, replace(sc, snir_db=35.0)).interference
    m = a != 0
    np.testing.assert_allclose(np.abs(b[m]) / np.abs(a[m]), 10.0, rtol=1e-9)


def test_scaling_ratios_invariant_to_object_amplitude():
    cfg = DESK_CONFIG
    sc = sample_scenario(2, cfg, DESK_BOUNDS)
    louder = replace(sc, objects=tuple(replace(o, amplitude=2 * o.amplitude) for o in sc.objects))
    p1, p2 = simulate(cfg, sc), simulate(cfg, louder)
    np.testing.assert_allclose(p2.noise, 2 * p1.noise, rtol=1e-12)
    np.testing.assert_allclose(p2.interference, 2 * p1.interference, rtol=1e-9, atol=1e-12)


def test_determinism_bit_identical():
    sc = sample_scenario(21, DESK_CONFIG, DESK_BOUNDS)
    a, b = simulate(DESK_CONFIG, sc), simulate(DESK_CONFIG, sc)
    assert a.interfered.data.tobytes() == b.interfered.data.tobytes()
    assert (a.interfered.mask == b.interfered.mask).all()


def test_degenerate_power_rejected():
    with pytest.raises(DegeneratePowerError):
        simulate(DESK_CONFIG, ScenarioSpec(objects=(ObjectSpec(10.0, 0.0, amplitude=0.0),), snr_db=0.0))


def test_inject_interference_reuses_simulated_scaling():
    cfg = DESK_CONFIG
    sc = sample_scenario(4, cfg, DESK_BOUNDS)
    pair = simulate(cfg, sc)
    frame = inject_interference(cfg, pair.clean.data, sc.interferers, sc.snir_db)
    np.testing.assert_array_equal(frame.data, pair.interfered.data)
    np.testing.assert_array_equal(frame.mask, pair.interfered.mask)


@given(
    r=st.floats(0.0, 95.0),
    v=st.floats(-19.0, 19.0),
)
def test_frequency_placement_property(r, v):
    cfg = DESK_CONFIG
    rd = rd_map(synth_objects(cfg, [ObjectSpec(r, v)]))
    n, m = np.unravel_index(np.argmax(np.abs(rd)), rd.shape)
    pred_n = cfg.range_bin(r, v)
    pred_m = cfg.M // 2 + cfg.doppler_bin(v)
    assert abs(n - pred_n) <= 1
    # Doppler wraps around the centred axis
    dm = (m - pred_m + cfg.M / 2) % cfg.M - cfg.M / 2
    assert abs(dm) <= 1
