import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nyfr_psd.waveforms import (GridSpec, NyquistGridSignal, SignalSpec, add_awgn, bpsk_chips,
                                gen_bpsk, gen_lfm, gen_mp, generate, mix)

GRID = GridSpec(32000, 32e9, band_start=-2e9)


def test_grid_derived_quantities():
    assert GRID.duration == pytest.approx(1e-6)
    assert GRID.bin_hz == pytest.approx(1e6)
    assert GRID.band_stop == pytest.approx(30e9)
    assert GRID.in_band(-2e9) and not GRID.in_band(30e9)
    with pytest.raises(ValueError):
        GridSpec(0, 1.0)


def test_quarter_rate_tone_is_j_power_n():
    g = GridSpec(64, 4.0)
    s = gen_mp(SignalSpec("MP", 1.0), g)
    np.testing.assert_allclose(s.samples, 1j ** np.arange(64), atol=1e-12)


def test_zero_length_pulse_is_silent():
    s = gen_mp(SignalSpec("MP", 1e9, pulse_len=0.0), GRID)
    assert not np.any(s.samples)


def test_1p3_ghz_tone_has_single_dominant_line():
    f, p = gen_mp(SignalSpec("MP", 1.3e9), GRID).spectrum()
    assert f[np.argmax(p)] == pytest.approx(1.3e9)
    assert np.sort(p)[-2] < 1e-12 * p.max()


def test_carrier_outside_band_rejected():
    with pytest.raises(ValueError, match="outside"):
        gen_mp(SignalSpec("MP", 31e9), GRID)


def test_pulse_window_must_fit():
    with pytest.raises(ValueError):
        gen_mp(SignalSpec("MP", 1e9, start_time=0.8e-6, pulse_len=0.5e-6), GRID)
    with pytest.raises(ValueError):
        SignalSpec("QAM", 1e9)


def test_all_ones_bpsk_equals_mp():
    kw = dict(amplitude=1.3, initial_phase=0.4, start_time=100e-9, pulse_len=500e-9)
    mp = gen_mp(SignalSpec("MP", 5.2e9, **kw), GRID)
    bp = gen_bpsk(SignalSpec("BPSK", 5.2e9, symbol_rate=10e6, code="1111", **kw), GRID)
    np.testing.assert_array_equal(mp.samples, bp.samples)


def test_two_symbol_code_flips_at_midpoint():
    g = GridSpec(1000, 1e9)
    s = gen_bpsk(SignalSpec("BPSK", 0.0, symbol_rate=2e6, code="10"), g)
    np.testing.assert_array_equal(s.samples[:500], 1)
    np.testing.assert_array_equal(s.samples[500:], -1)


def test_bpsk_matches_hand_keyed_tone():
    spec = SignalSpec("BPSK", 7.8e9, symbol_rate=10e6, code="1001100110")
    s = gen_bpsk(spec, GRID)
    # independent construction: 100 samples per symbol, code repeated
    n = np.arange(GRID.n_samples)
    bits = np.array([1 if c == "1" else -1 for c in spec.code])
    chips = bits[(n // 3200) % 10]
    ref = chips * np.exp(2j * np.pi * 7.8e9 * n / GRID.sample_rate)
    np.testing.assert_allclose(s.samples, ref, atol=1e-9)
    # main lobe of the 10 Msym/s keying spans about 20 MHz around the carrier
    f, p = s.spectrum()
    band = np.abs(f - 7.8e9) <= 10e6
    assert p[band].sum() > 0.8 * p.sum()


def test_bpsk_requires_symbol_rate_and_code():
    with pytest.raises(ValueError):
        bpsk_chips(SignalSpec("BPSK", 1e9, code="1"), GRID, 0, 10)
    with pytest.raises(ValueError):
        gen_bpsk(SignalSpec("BPSK", 1e9, symbol_rate=1e6, code=""), GRID)


def test_zero_bandwidth_lfm_equals_mp():
    kw = dict(initial_phase=1.0, start_time=50e-9, pulse_len=300e-9)
    np.testing.assert_array_equal(gen_lfm(SignalSpec("LFM", 9e9, **kw), GRID).samples,
                                  gen_mp(SignalSpec("MP", 9e9, **kw), GRID).samples)


def test_lfm_instantaneous_frequency_ramp():
    T, B, fc = 1e-6, 8e6, 14.5e9
    s = gen_lfm(SignalSpec("LFM", fc, bandwidth_hz=B), GRID)
    # demodulate the carrier, then finite-difference the unwrapped phase
    n = np.arange(GRID.n_samples)
    base = s.samples * np.exp(-2j * np.pi * fc * n / GRID.sample_rate)
    finst = np.diff(np.unwrap(np.angle(base))) * GRID.sample_rate / (2 * np.pi)
    slope = np.polyfit(n[:-1] / GRID.sample_rate, finst, 1)[0]
    assert slope == pytest.approx(B / T, rel=1e-6)


def test_lfm_occupancy_about_8_mhz():
    f, p = gen_lfm(SignalSpec("LFM", 14.5e9, bandwidth_hz=8e6), GRID).spectrum()
    occupied = f[p > 0.1 * p.max()]
    assert 6e6 < occupied.max() - occupied.min() < 10e6


def test_lfm_band_must_stay_inside():
    with pytest.raises(ValueError):
        gen_lfm(SignalSpec("LFM", 29.999e9, bandwidth_hz=10e6), GRID)


def test_mix_identities():
    x = gen_mp(SignalSpec("MP", 2e9), GRID)
    np.testing.assert_array_equal(mix([x]).samples, x.samples)
    neg = NyquistGridSignal(-x.samples, GRID)
    assert not np.any(mix([x, neg]).samples)
    with pytest.raises(ValueError):
        mix([])
    with pytest.raises(ValueError):
        mix([x, gen_mp(SignalSpec("MP", 2e9), GridSpec(32000, 32e9))])


def test_mix_of_three_signal_components_occupies_three_regions():
    comps = [generate(SignalSpec("MP", 1.3e9), GRID),
             generate(SignalSpec("BPSK", 7.8e9, symbol_rate=10e6, code="1001100110"), GRID),
             generate(SignalSpec("LFM", 14.5e9, bandwidth_hz=8e6), GRID)]
    f, p = mix(comps).spectrum()
    for fc in (1.3e9, 7.8e9, 14.5e9):
        assert p[np.abs(f - fc) < 20e6].sum() > 0.25 * p.sum()


def test_awgn_infinite_snr_is_identity():
    x = gen_mp(SignalSpec("MP", 2e9), GRID)
    y = add_awgn(x, np.inf, 1)
    np.testing.assert_array_equal(x.samples, y.samples)


def test_awgn_snr_and_mean():
    g = GridSpec(1_000_000, 1e9)
    x = gen_mp(SignalSpec("MP", 0.1e9), g)
    y = add_awgn(x, 0.0, 7)
    noise = y.samples - x.samples
    snr = 10 * np.log10(1.0 / np.mean(np.abs(noise) ** 2))
    assert abs(snr) < 0.5
    assert abs(noise.mean()) < 5 * 1.0 / np.sqrt(len(noise))


def test_awgn_reference_is_in_pulse_power():
    g = GridSpec(200_000, 1e9)
    x = gen_mp(SignalSpec("MP", 0.1e9, pulse_len=20e-6), g)  # 10% duty
    y = add_awgn(x, 10.0, 3)
    assert y.meta["noise_var"] == pytest.approx(0.1)


def test_awgn_deterministic_per_seed():
    x = gen_mp(SignalSpec("MP", 2e9), GRID)
    np.testing.assert_array_equal(add_awgn(x, 3, 5).samples, add_awgn(x, 3, 5).samples)
    assert not np.array_equal(add_awgn(x, 3, 5).samples, add_awgn(x, 3, 6).samples)


@settings(max_examples=30, deadline=None)
@given(f1=st.integers(-1000, 14000), f2=st.integers(15000, 29000))
def test_energy_additivity_disjoint_tones(f1, f2):
    g = GridSpec(32000, 32e9, -2e9)
    a = gen_mp(SignalSpec("MP", f1 * 1e6), g)
    b = gen_mp(SignalSpec("MP", f2 * 1e6, amplitude=0.5), g)
    pa, pb, pab = a.spectrum()[1].sum(), b.spectrum()[1].sum(), mix([a, b]).spectrum()[1].sum()
    assert pab == pytest.approx(pa + pb, rel=1e-9)
