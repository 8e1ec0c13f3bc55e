"""RF test scenes on the full-band Nyquist grid.

Signals are complex analytic sequences sampled at ``K_Z * f_s``.  The grid is
periodic in frequency, so an absolute carrier label such as 14.5 GHz maps to
a unique DFT bin as long as it sits inside ``[band_start, band_start + rate)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

KINDS = ("MP", "BPSK", "LFM")


@dataclass(frozen=True)
class GridSpec:
    n_samples: int
    sample_rate: float
    band_start: float | None = None

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ValueError(f"n_samples must be a positive integer, got {self.n_samples}")
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "n_samples", int(self.n_samples))
        if self.band_start is None:
            object.__setattr__(self, "band_start", -self.sample_rate / 2)

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate

    @property
    def bin_hz(self) -> float:
        return self.sample_rate / self.n_samples

    @property
    def band_stop(self) -> float:
        return self.band_start + self.sample_rate

    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.sample_rate

    def in_band(self, freq_hz: float) -> bool:
        return self.band_start <= freq_hz < self.band_stop

    def bin_of(self, freq_hz: float) -> int:
        """DFT bin index (numpy order) nearest to ``freq_hz``."""
        return int(np.round(freq_hz / self.bin_hz)) % self.n_samples

    def dft_freqs(self) -> np.ndarray:
        """Frequency label of each numpy-ordered DFT bin, folded into the band."""
        k = np.arange(self.n_samples)
        f = k * self.bin_hz
        return self.band_start + np.mod(f - self.band_start, self.sample_rate)


@dataclass(frozen=True)
class SignalSpec:
    kind: str
    carrier_hz: float
    amplitude: float = 1.0
    initial_phase: float = 0.0
    start_time: float = 0.0
    pulse_len: float | None = None  # None: to the end of the record
    symbol_rate: float | None = None
    code: str | None = None
    bandwidth_hz: float = 0.0

    def __post_init__(self):
        kind = self.kind.upper()
        if kind not in KINDS:
            raise ValueError(f"unknown signal kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)
        if self.code is not None and not isinstance(self.code, str):
            object.__setattr__(self, "code", "".join(str(int(b)) for b in self.code))

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class NyquistGridSignal:
    samples: np.ndarray
    grid: GridSpec
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.shape != (self.grid.n_samples,):
            raise ValueError(
                f"expected {self.grid.n_samples} samples, got shape {self.samples.shape}"
            )

    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """(freqs, |DFT|^2) sorted by ascending in-band frequency."""
        f = self.grid.dft_freqs()
        order = np.argsort(f, kind="stable")
        power = np.abs(np.fft.fft(self.samples)) ** 2
        return f[order], power[order]


def _window(spec: SignalSpec, grid: GridSpec) -> tuple[int, int, float]:
    """Quantized [i0, i1) sample window and the pulse length in seconds."""
    pulse_len = grid.duration - spec.start_time if spec.pulse_len is None else spec.pulse_len
    eps = 1e-9 / grid.sample_rate
    if spec.start_time < -eps or pulse_len < 0:
        raise ValueError(
            f"pulse window [{spec.start_time}, {spec.start_time} + {pulse_len}) is invalid"
        )
    if spec.start_time + pulse_len > grid.duration + eps:
        raise ValueError(
            f"pulse window ends at {spec.start_time + pulse_len:.6g} s, past the "
            f"{grid.duration:.6g} s record"
        )
    i0 = int(round(spec.start_time * grid.sample_rate))
    i1 = min(int(round((spec.start_time + pulse_len) * grid.sample_rate)), grid.n_samples)
    return max(i0, 0), i1, pulse_len


def _check_carrier(spec: SignalSpec, grid: GridSpec):
    if not grid.in_band(spec.carrier_hz):
        raise ValueError(
            f"carrier {spec.carrier_hz:.6g} Hz outside surveillance band "
            f"[{grid.band_start:.6g}, {grid.band_stop:.6g})"
        )


def _carrier(spec: SignalSpec, grid: GridSpec, n: np.ndarray) -> np.ndarray:
    # phase reduced modulo one cycle before scaling to keep precision on long grids
    cycles = np.mod(spec.carrier_hz / grid.sample_rate * n, 1.0)
    return spec.amplitude * np.exp(1j * (2 * np.pi * cycles + spec.initial_phase))


def gen_mp(spec: SignalSpec, grid: GridSpec) -> NyquistGridSignal:
    """Mono-frequency pulse: a gated complex tone."""
    if spec.kind != "MP":
        raise ValueError(f"gen_mp needs kind MP, got {spec.kind}")
    _check_carrier(spec, grid)
    i0, i1, _ = _window(spec, grid)
    out = np.zeros(grid.n_samples, dtype=complex)
    n = np.arange(i0, i1)
    out[i0:i1] = _carrier(spec, grid, n)
    return NyquistGridSignal(out, grid, {"spec": spec.to_dict()})


def bpsk_chips(spec: SignalSpec, grid: GridSpec, i0: int, i1: int) -> np.ndarray:
    """+/-1 keying for samples i0..i1-1; '1' keeps phase, '0' flips it."""
    if not spec.symbol_rate or spec.symbol_rate <= 0:
        raise ValueError("BPSK needs a positive symbol_rate")
    if not spec.code:
        raise ValueError("BPSK needs a nonempty code")
    samples_per_symbol = grid.sample_rate / spec.symbol_rate
    if samples_per_symbol < 1:
        raise ValueError(
            f"symbol interval {1 / spec.symbol_rate:.3g} s is shorter than one grid sample"
        )
    bits = np.array([1.0 if c == "1" else -1.0 for c in spec.code])
    n_sym = int(math.ceil((i1 - i0) / samples_per_symbol)) + 1
    bounds = i0 + np.round(np.arange(n_sym + 1) * samples_per_symbol).astype(int)
    sym = np.searchsorted(bounds, np.arange(i0, i1), side="right") - 1
    return bits[sym % len(bits)]


def gen_bpsk(spec: SignalSpec, grid: GridSpec) -> NyquistGridSignal:
    if spec.kind != "BPSK":
        raise ValueError(f"gen_bpsk needs kind BPSK, got {spec.kind}")
    _check_carrier(spec, grid)
    i0, i1, _ = _window(spec, grid)
    out = np.zeros(grid.n_samples, dtype=complex)
    n = np.arange(i0, i1)
    out[i0:i1] = _carrier(spec, grid, n) * bpsk_chips(spec, grid, i0, i1)
    return NyquistGridSignal(out, grid, {"spec": spec.to_dict()})


def gen_lfm(spec: SignalSpec, grid: GridSpec) -> NyquistGridSignal:
    """Linear chirp sweeping [f_c - B/2, f_c + B/2] across the pulse.

    The carrier term uses absolute time, like ``gen_mp``, so B = 0 reproduces
    the MP pulse sample for sample.
    """
    if spec.kind != "LFM":
        raise ValueError(f"gen_lfm needs kind LFM, got {spec.kind}")
    if spec.bandwidth_hz < 0:
        raise ValueError("LFM bandwidth must be non-negative")
    half = spec.bandwidth_hz / 2
    if not (grid.in_band(spec.carrier_hz - half) and grid.in_band(spec.carrier_hz + half)):
        raise ValueError(
            f"LFM band [{spec.carrier_hz - half:.6g}, {spec.carrier_hz + half:.6g}] Hz "
            f"leaves the surveillance band [{grid.band_start:.6g}, {grid.band_stop:.6g})"
        )
    i0, i1, pulse_len = _window(spec, grid)
    out = np.zeros(grid.n_samples, dtype=complex)
    n = np.arange(i0, i1)
    out[i0:i1] = _carrier(spec, grid, n)
    if spec.bandwidth_hz > 0 and pulse_len > 0:
        tau = n / grid.sample_rate - spec.start_time - pulse_len / 2
        out[i0:i1] *= np.exp(1j * np.pi * (spec.bandwidth_hz / pulse_len) * tau**2)
    return NyquistGridSignal(out, grid, {"spec": spec.to_dict()})


_GENERATORS = {"MP": gen_mp, "BPSK": gen_bpsk, "LFM": gen_lfm}


def generate(spec: SignalSpec, grid: GridSpec) -> NyquistGridSignal:
    return _GENERATORS[spec.kind](spec, grid)


def mix(signals: Sequence[NyquistGridSignal]) -> NyquistGridSignal:
    if not signals:
        raise ValueError("mix needs at least one signal")
    grid = signals[0].grid
    for s in signals[1:]:
        if s.grid != grid:
            raise ValueError(f"grid mismatch: {s.grid} vs {grid}")
    total = np.sum([s.samples for s in signals], axis=0)
    return NyquistGridSignal(total, grid, {"components": [s.meta for s in signals]})


def make_rng(seed) -> np.random.Generator:
    """Counter-based Philox stream; accepts an int or a SeedSequence."""
    return np.random.Generator(np.random.Philox(seed))


def add_awgn(signal: NyquistGridSignal, snr_db: float, seed: int) -> NyquistGridSignal:
    """Add circular complex white noise at an in-pulse RF SNR.

    Signal power is the mean ``|s|^2`` over the nonzero samples, so the noise
    level does not depend on how much of the record the pulse occupies.
    """
    if np.isposinf(snr_db):
        return NyquistGridSignal(signal.samples.copy(), signal.grid, dict(signal.meta))
    active = np.abs(signal.samples) > 0
    if not active.any():
        raise ValueError("SNR is undefined for an all-zero signal")
    p_sig = np.mean(np.abs(signal.samples[active]) ** 2)
    var = p_sig / 10 ** (snr_db / 10)
    rng = make_rng(seed)
    noise = rng.standard_normal((2, signal.grid.n_samples)) * np.sqrt(var / 2)
    meta = dict(signal.meta, snr_db=snr_db, noise_var=var, seed=seed)
    return NyquistGridSignal(signal.samples + noise[0] + 1j * noise[1], signal.grid, meta)
