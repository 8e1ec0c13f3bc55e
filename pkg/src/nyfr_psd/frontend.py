"""Nyquist folding receiver front end.

The chain is: RF pulse-train sampling on the Nyquist grid, ideal anti-alias
filter keeping ``[-f_s/2, f_s/2)``, and decimation by ``K_Z`` down to the ADC
rate.  The pulse train uses the harmonic expansion
``p[n] = w_s * sum_{k=0..K_h} exp(-j k (w_s t_n + theta(t_n)))`` so that content
in Nyquist zone ``k`` lands at baseband carrying ``exp(-j k theta)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal as sps

from .waveforms import GridSpec, NyquistGridSignal


@dataclass(frozen=True)
class LoSpec:
    adc_rate_hz: float = 4e9
    mod_kind: str = "sinusoid"
    mod_amplitude: float = 2.0
    mod_freq_hz: float = 20e6
    mod_phase: float = 0.0

    def __post_init__(self):
        if not self.adc_rate_hz > 0:
            raise ValueError("adc_rate_hz must be positive")
        if self.mod_kind not in ("sinusoid", "none"):
            raise ValueError(f"mod_kind must be 'sinusoid' or 'none', got {self.mod_kind!r}")
        if self.mod_amplitude < 0:
            raise ValueError("mod_amplitude must be non-negative")

    @property
    def omega_s(self) -> float:
        return 2 * np.pi * self.adc_rate_hz

    def unmodulated(self) -> "LoSpec":
        return replace(self, mod_kind="none")


@dataclass(frozen=True)
class NyfrConfig:
    """Receiver parameters; the Nyquist grid is derived, not stored separately.

    ``harmonic_order`` defaults to ``K_Z - 1`` so that the pulse train has exactly
    one harmonic per surveilled zone.
    """

    lo: LoSpec = field(default_factory=LoSpec)
    nz_count: int = 8
    n_samples: int = 32000
    harmonic_order: int | None = None

    def __post_init__(self):
        if self.nz_count < 1:
            raise ValueError("nz_count must be >= 1")
        if self.n_samples % self.nz_count:
            raise ValueError(
                f"N = {self.n_samples} is not divisible by K_Z = {self.nz_count}"
            )
        if self.harmonic_order is None:
            object.__setattr__(self, "harmonic_order", self.nz_count - 1)
        if self.harmonic_order < self.nz_count - 1:
            raise ValueError(
                f"harmonic_order {self.harmonic_order} cannot reach zone {self.nz_count - 1}"
            )

    @property
    def m_samples(self) -> int:
        return self.n_samples // self.nz_count

    @property
    def sample_rate(self) -> float:
        return self.nz_count * self.lo.adc_rate_hz

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.n_samples, self.sample_rate, band_start=-self.lo.adc_rate_hz / 2)

    def to_dict(self) -> dict:
        return {
            "adc_rate_hz": self.lo.adc_rate_hz,
            "mod_kind": self.lo.mod_kind,
            "mod_amplitude": self.lo.mod_amplitude,
            "mod_freq_hz": self.lo.mod_freq_hz,
            "mod_phase": self.lo.mod_phase,
            "nz_count": self.nz_count,
            "n_samples": self.n_samples,
            "harmonic_order": self.harmonic_order,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NyfrConfig":
        lo_keys = ("adc_rate_hz", "mod_kind", "mod_amplitude", "mod_freq_hz", "mod_phase")
        lo = LoSpec(**{k: d[k] for k in lo_keys if k in d})
        rest = {k: d[k] for k in ("nz_count", "n_samples", "harmonic_order") if k in d}
        return cls(lo=lo, **rest)


@dataclass
class MeasurementRecord:
    samples: np.ndarray
    uniform_instants: np.ndarray
    nonuniform_instants: np.ndarray
    config: NyfrConfig
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        m = self.config.m_samples
        self.samples = np.asarray(self.samples, dtype=complex)
        for name in ("samples", "uniform_instants", "nonuniform_instants"):
            if len(getattr(self, name)) != m:
                raise ValueError(f"{name} must have M = {m} entries")
        lo = self.config.lo
        dev = np.abs(self.nonuniform_instants - self.uniform_instants)
        if np.any(dev > lo.mod_amplitude / lo.omega_s * (1 + 1e-9) + 1e-21):
            raise ValueError("non-uniform instants deviate more than A / w_s")
        if lo.mod_amplitude < np.pi and np.any(np.diff(self.nonuniform_instants) <= 0):
            raise ValueError("non-uniform instants are not strictly increasing")


def lo_phase(t, lo: LoSpec):
    """theta(t) = A sin(2 pi f_mod t + phi), or zero when unmodulated."""
    t = np.asarray(t, dtype=float)
    if lo.mod_kind == "none":
        return np.zeros_like(t)
    return lo.mod_amplitude * np.sin(2 * np.pi * lo.mod_freq_hz * t + lo.mod_phase)


def nz_index(carrier_hz: float, adc_rate_hz: float) -> int:
    """Nyquist-zone index round(f_c / f_s), ties rounded away from zero."""
    r = carrier_hz / adc_rate_hz
    return int(np.sign(r) * np.floor(abs(r) + 0.5))


def pulse_train(config: NyfrConfig) -> NyquistGridSignal:
    grid = config.grid
    n = np.arange(grid.n_samples)
    theta = lo_phase(grid.times(), config.lo)
    # w_s t_n = 2 pi n / K_Z exactly on the Nyquist grid
    base = 2 * np.pi * n / config.nz_count + theta
    p = np.zeros(grid.n_samples, dtype=complex)
    for k in range(config.harmonic_order + 1):
        p += np.exp(-1j * k * base)
    return NyquistGridSignal(config.lo.omega_s * p, grid, {"role": "pulse_train"})


def rf_sample(s: NyquistGridSignal, p: NyquistGridSignal) -> NyquistGridSignal:
    if s.grid != p.grid:
        raise ValueError(f"grid mismatch: {s.grid} vs {p.grid}")
    return NyquistGridSignal(s.samples * p.samples, s.grid, dict(s.meta))


def baseband_bins(config: NyfrConfig) -> np.ndarray:
    """Numpy-ordered N-point DFT bins covering [-f_s/2, f_s/2)."""
    m = config.m_samples
    return np.arange(-(m // 2), m - m // 2) % config.n_samples


def nonuniform_instants(config: NyfrConfig, m_count: int | None = None) -> np.ndarray:
    """t'_m = (2 pi m - theta(t_m)) / w_s."""
    m_count = config.m_samples if m_count is None else m_count
    m = np.arange(m_count)
    t_m = m / config.lo.adc_rate_hz
    return (2 * np.pi * m - lo_phase(t_m, config.lo)) / config.lo.omega_s


def lpf_decimate(x: NyquistGridSignal, config: NyfrConfig) -> MeasurementRecord:
    if x.grid != config.grid:
        raise ValueError(f"signal grid {x.grid} does not match receiver grid {config.grid}")
    spec = np.fft.fft(x.samples)
    kept = np.zeros_like(spec)
    bins = baseband_bins(config)
    kept[bins] = spec[bins]
    y = np.fft.ifft(kept)[:: config.nz_count]
    m = np.arange(config.m_samples)
    return MeasurementRecord(
        samples=y,
        uniform_instants=m / config.lo.adc_rate_hz,
        nonuniform_instants=nonuniform_instants(config),
        config=config,
        meta=dict(x.meta),
    )


def acquire(s: NyquistGridSignal, config: NyfrConfig) -> MeasurementRecord:
    """Full front end: s -> s * p -> LPF -> decimate."""
    return lpf_decimate(rf_sample(s, pulse_train(config)), config)


def spectrogram(rec: MeasurementRecord, nperseg: int = 128, noverlap: int | None = None):
    """Two-sided short-time Fourier magnitude of the ADC output.

    Returns ``(freqs_hz, times_s, power)`` with ``power`` shaped (freq, time).
    """
    fs = rec.config.lo.adc_rate_hz
    nperseg = min(nperseg, len(rec.samples))
    f, t, z = sps.stft(
        rec.samples, fs=fs, nperseg=nperseg, noverlap=noverlap,
        return_onesided=False, boundary=None, padded=False,
    )
    order = np.argsort(f)
    return f[order], t, np.abs(z[order]) ** 2
