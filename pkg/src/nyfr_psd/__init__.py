"""Nyquist folding receiver simulation and fast power-spectrum reconstruction."""

from .detection import (AccuracyResult, DetectionPolicy, SweepSpec, accuracy_pct, detect_peaks,
                        is_eligible, run_sweep)
from .frontend import LoSpec, MeasurementRecord, NyfrConfig, acquire, nz_index, pulse_train
from .kernels import AutocorrSeq, FlopReport, NufftConfig, autocorr_fft, flops, nufft_time_to_freq
from .reconstruction import (PowerSpectrum, RegularizationPolicy, baseline_freq_domain,
                             baseline_time_domain, build_sensing_matrix, power_spectrum,
                             proposed_pipeline)
from .waveforms import GridSpec, NyquistGridSignal, SignalSpec, add_awgn, generate, mix

__version__ = "0.1.0"
