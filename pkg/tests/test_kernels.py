import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nyfr_psd.kernels import (AutocorrSeq, FlopReport, NufftConfig, autocorr_fft, fft, flops, ifft,
                              nudft_direct, nufft_time_to_freq)


def direct_dft(x):
    n = len(x)
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) @ x


def direct_autocorr(x):
    n = len(x)
    r = np.zeros(2 * n - 1, complex)
    for k in range(-(n - 1), n):
        r[k + n - 1] = sum(x[i] * np.conj(x[i - k]) for i in range(max(k, 0), min(n, n + k))) / n
    return r


def test_fft_examples():
    d = np.zeros(16)
    d[0] = 1
    np.testing.assert_allclose(fft(d), np.ones(16))
    x = np.random.default_rng(0).standard_normal(999) + 0j
    np.testing.assert_allclose(ifft(fft(x)), x, atol=1e-12)
    y = np.random.default_rng(1).standard_normal(64) + 1j * np.random.default_rng(2).standard_normal(64)
    np.testing.assert_allclose(fft(y), direct_dft(y), atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 600), seed=st.integers(0, 2**32 - 1))
def test_parseval(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    assert np.sum(np.abs(fft(x)) ** 2) / n == pytest.approx(np.sum(np.abs(x) ** 2), rel=1e-10)


def test_autocorr_examples():
    d = np.zeros(8)
    d[0] = 1
    r = autocorr_fft(d)
    np.testing.assert_allclose(r.lags, np.eye(1, 15, 7).ravel() / 8, atol=1e-15)
    r = autocorr_fft(np.ones(2))
    np.testing.assert_allclose(r.lags, [0.5, 1.0, 0.5], atol=1e-15)
    x = np.random.default_rng(3).standard_normal(128) + 1j * np.random.default_rng(4).standard_normal(128)
    np.testing.assert_allclose(autocorr_fft(x).lags, direct_autocorr(x), rtol=0, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 300), seed=st.integers(0, 2**32 - 1))
def test_autocorr_invariants(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    r = autocorr_fft(x)
    assert len(r.lags) == 2 * n - 1
    assert r.hermitian_error() <= 1e-12 * max(1.0, abs(r.at(0)))
    assert abs(r.at(0).imag) < 1e-12 * abs(r.at(0))
    assert r.at(0).real == pytest.approx(np.mean(np.abs(x) ** 2), rel=1e-12)


def test_autocorr_seq_helpers():
    r = AutocorrSeq(np.arange(5), 3)
    np.testing.assert_array_equal(r.lag_axis, [-2, -1, 0, 1, 2])
    assert r.at(-2) == 0 and r.at(2) == 4
    c = r.circular(8)
    np.testing.assert_array_equal(c.real, [2, 3, 4, 0, 0, 0, 0, 1])
    with pytest.raises(ValueError):
        AutocorrSeq(np.zeros(4), 3)
    with pytest.raises(ValueError):
        r.circular(4)
    with pytest.raises(ValueError):
        autocorr_fft([])


def test_nufft_single_sample_at_zero():
    w = 2 * np.pi * np.linspace(-16e9, 16e9, 2048, endpoint=False)
    np.testing.assert_allclose(nufft_time_to_freq([1.0], [0.0], w), np.ones(2048), atol=1e-9)


def test_nufft_uniform_instants_is_dft():
    n = 512
    rng = np.random.default_rng(5)
    y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    t = np.arange(n) * 1.0
    w = 2 * np.pi * np.arange(n) / n
    np.testing.assert_allclose(nufft_time_to_freq(y, t, w), direct_dft(y), atol=1e-9)
    # and through the gridding path
    cfg = NufftConfig(direct_threshold=1)
    Y = nufft_time_to_freq(y, t, w, cfg)
    assert np.max(np.abs(Y - direct_dft(y))) <= 1e-6 * np.max(np.abs(Y))


def test_nufft_small_random_case_matches_direct_sum():
    rng = np.random.default_rng(6)
    y = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    t = np.sort(rng.uniform(0, 1e-6, 64))
    w = 2 * np.pi * (np.arange(256) - 128) * 256e6 / 256
    ref = np.array([np.sum(y * np.exp(-1j * wi * t)) for wi in w])
    Y = nufft_time_to_freq(y, t, w, NufftConfig(direct_threshold=1))
    assert np.max(np.abs(Y - ref)) <= 1e-6 * np.max(np.abs(ref))


def test_nufft_rejects_bad_input():
    with pytest.raises(ValueError):
        nufft_time_to_freq([1, 2], [0.0], np.arange(4.0))
    with pytest.raises(ValueError, match="uniform"):
        nufft_time_to_freq([1.0], [0.0], np.r_[0.0, 1.0, 3.0, 4.0], NufftConfig(direct_threshold=1))
    with pytest.raises(ValueError):
        NufftConfig(tol=1e-15)
    with pytest.raises(ValueError):
        NufftConfig(kernel_width=2)
    with pytest.raises(ValueError):
        NufftConfig(oversampling=1.2)


def test_nufft_tolerance_controls_spread():
    assert NufftConfig(tol=1e-3).spread < NufftConfig(tol=1e-6).spread < NufftConfig(tol=1e-12).spread


def test_nudft_direct_chunks_agree():
    rng = np.random.default_rng(7)
    y = rng.standard_normal(50) + 0j
    t = rng.uniform(0, 1, 50)
    w = np.linspace(-30, 30, 301)
    np.testing.assert_allclose(nudft_direct(y, t, w, chunk=7), nudft_direct(y, t, w), atol=1e-12)


def test_flop_formulas_exact():
    n = 32000
    lg = math.log2
    assert flops("proposed", n, sparsity_k=10).total_flops == pytest.approx(
        11 * n * lg(n) + (6 * n - 3) * lg(2 * n - 1) + 2 * n - 1, rel=1e-15)
    assert flops("time_domain", n, 4000, 100).total_flops == pytest.approx(
        100 * 4000**2 + n * 4000**2 + (2 * n - 1) * lg(2 * n - 1), rel=1e-15)
    assert flops("freq_domain", n, 4000, 100).total_flops == pytest.approx(
        4000 * lg(4000) + 100 * 4000**2 + n * 4000**2, rel=1e-15)


def test_flop_reference_totals():
    assert 8.3e6 <= flops("proposed", 32000, sparsity_k=10).total_flops <= 8.5e6
    assert flops("time_domain", 32000, 4000, 100).total_flops >= 5e11
    assert 0.9e10 <= flops("proposed", 32000, sparsity_k=22400).total_flops <= 1.2e10


def test_flop_errors_and_csv():
    with pytest.raises(ValueError):
        flops("sparse", 10)
    with pytest.raises(ValueError):
        flops("proposed", 0)
    r = flops("proposed", 32000, 4000, 1, 10)
    assert isinstance(r, FlopReport)
    assert r.csv_row().split(",")[:5] == ["proposed", "32000", "4000", "1", "10"]
    assert len(FlopReport.CSV_HEADER.split(",")) == len(r.csv_row().split(","))


@settings(max_examples=60, deadline=None)
@given(method=st.sampled_from(["proposed", "time_domain", "freq_domain"]),
       n=st.integers(2, 10**5), m=st.integers(2, 10**4), l=st.integers(1, 1000), k=st.integers(1, 1000),
       which=st.integers(0, 3))
def test_flops_monotone(method, n, m, l, k, which):
    args = [n, m, l, k]
    base = flops(method, *args).total_flops
    args[which] += 1
    assert flops(method, *args).total_flops >= base
