"""Peak picking, trial eligibility and the Monte Carlo sweep engine."""

from __future__ import annotations

import csv
import functools
import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import frontend, reconstruction
from .frontend import LoSpec, NyfrConfig
from .kernels import flops
from .reconstruction import PowerSpectrum, RegularizationPolicy
from .waveforms import SignalSpec, add_awgn, generate, make_rng, mix


@dataclass(frozen=True)
class DetectionPolicy:
    """Threshold is ``median + threshold_gamma * MAD`` of the spectrum values.

    ``max_spurious`` is how many of the K strongest detections (K = number of
    true signals) may miss every truth and still count as eligible.
    """

    freq_tol_bins: int = 2
    threshold_gamma: float = 5.0
    max_spurious: int = 0

    def __post_init__(self):
        if self.freq_tol_bins < 1:
            raise ValueError("freq_tol_bins must be >= 1")
        if self.threshold_gamma <= 0:
            raise ValueError("threshold_gamma must be positive")
        if self.max_spurious < 0:
            raise ValueError("max_spurious must be >= 0")


def detect_peaks(ps: PowerSpectrum, policy: DetectionPolicy = DetectionPolicy(),
                 bin_hz: float | None = None):
    """Local maxima above a robust threshold, strongest first.

    A maximum within ``freq_tol_bins`` bins of a stronger one is suppressed;
    ``bin_hz`` defaults to the spectrum spacing.  Returns ``(freq_hz, power)``.
    """
    v = ps.values
    med = np.median(v)
    mad = np.median(np.abs(v - med))
    thresh = med + policy.threshold_gamma * mad
    if len(v) < 3:
        return []
    left = np.concatenate([[-np.inf], v[:-1]])
    right = np.concatenate([v[1:], [-np.inf]])
    cand = np.flatnonzero((v > left) & (v >= right) & (v > thresh))
    cand = cand[np.argsort(v[cand], kind="stable")[::-1]]
    radius = policy.freq_tol_bins * (bin_hz or ps.df) / ps.df
    kept: list[int] = []
    for i in cand:
        if all(abs(int(i) - j) > radius for j in kept):
            kept.append(int(i))
    return [(float(ps.freq_of_bin(i)), float(v[i])) for i in kept]


def nz_identified(detections, truth: Sequence[float], adc_rate_hz: float) -> bool:
    """True when the K strongest detections cover every true carrier's Nyquist zone."""
    zones = {frontend.nz_index(f, adc_rate_hz) for f, _ in detections[: len(truth)]}
    return all(frontend.nz_index(c, adc_rate_hz) in zones for c in truth)


def _matches(freq: float, carrier: float, bandwidth: float, tol_hz: float) -> bool:
    return abs(freq - carrier) <= bandwidth / 2 + tol_hz


def is_eligible(detections, truth: Sequence[float], policy: DetectionPolicy = DetectionPolicy(),
                bin_hz: float = 1.0, bandwidths: Sequence[float] | None = None) -> bool:
    """Every true carrier found, and the K strongest detections all land on a truth.

    A detection matches a carrier when it lies within ``freq_tol_bins`` bins of
    the carrier's occupied band ``[f_c - B/2, f_c + B/2]`` (B = 0 by default).
    """
    if len(truth) == 0:
        raise ValueError("truth must be nonempty")
    bandwidths = [0.0] * len(truth) if bandwidths is None else list(bandwidths)
    tol = policy.freq_tol_bins * bin_hz
    freqs = [f for f, _ in detections]
    for c, b in zip(truth, bandwidths):
        if not any(_matches(f, c, b, tol) for f in freqs):
            return False
    top = freqs[: len(truth)]
    stray = sum(not any(_matches(f, c, b, tol) for c, b in zip(truth, bandwidths)) for f in top)
    return stray <= policy.max_spurious


# --------------------------------------------------------------------------
# sweeps


SWEEP_AXES = ("snr_db", "pulse_len_s", "mod_amplitude", "mod_freq_hz", "lfm_bandwidth_hz")
DEFAULT_AMPLITUDE = {"MP": 1.0, "BPSK": 1.2, "LFM": 1.5}


@dataclass(frozen=True)
class SweepSpec:
    """One Monte Carlo experiment: a scene template and the parameter grid.

    Every combination of the five axis lists is one grid point.  Carriers are
    drawn uniformly from ``carrier_range_hz`` (None means the whole surveillance
    band) avoiding ``guard_bins`` Nyquist-grid bins around zone boundaries.
    ``max_lag`` sets the Bartlett smoothing span; None means no smoothing.
    """

    kinds: tuple = ("MP",)
    snr_db: tuple = (10.0,)
    pulse_len_s: tuple = (500e-9,)
    mod_amplitude: tuple = (2.0,)
    mod_freq_hz: tuple = (20e6,)
    lfm_bandwidth_hz: tuple = (10e6,)
    symbol_rate: float = 10e6
    amplitudes: tuple | None = None
    trials: int = 100
    base_seed: int = 0
    method: str = "proposed"
    l_snapshots: int = 1
    adc_rate_hz: float = 4e9
    nz_count: int = 8
    n_samples: int = 32000
    mod_kind: str = "sinusoid"
    carrier_range_hz: tuple | None = (2e9, 18e9)
    guard_bins: int = 3
    window: str = "bartlett"
    max_lag: int | None = 4000
    epsilon_rel: float = 1e-3
    policy: DetectionPolicy = field(default_factory=DetectionPolicy)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for axis in SWEEP_AXES:
            vals = getattr(self, axis)
            if not isinstance(vals, tuple):
                object.__setattr__(self, axis, tuple(vals) if np.iterable(vals) else (vals,))
            if len(getattr(self, axis)) == 0:
                raise ValueError(f"sweep axis {axis} is empty")
        object.__setattr__(self, "kinds", tuple(k.upper() for k in self.kinds))
        if not self.kinds:
            raise ValueError("kinds must be nonempty")
        if self.method not in ("proposed", "time_domain", "freq_domain"):
            raise ValueError(f"unknown method {self.method!r}")
        if isinstance(self.policy, dict):
            object.__setattr__(self, "policy", DetectionPolicy(**self.policy))

    def points(self) -> list[dict]:
        return [dict(zip(SWEEP_AXES, combo))
                for combo in itertools.product(*(getattr(self, a) for a in SWEEP_AXES))]

    def receiver(self, point: dict) -> NyfrConfig:
        lo = LoSpec(self.adc_rate_hz, self.mod_kind, point["mod_amplitude"], point["mod_freq_hz"])
        return NyfrConfig(lo, self.nz_count, self.n_samples)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["policy"] = asdict(self.policy)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        d = dict(d)
        if "policy" in d and isinstance(d["policy"], dict):
            d["policy"] = DetectionPolicy(**d["policy"])
        for k in ("kinds", "amplitudes", "carrier_range_hz", *SWEEP_AXES):
            if d.get(k) is not None and isinstance(d[k], list):
                d[k] = tuple(d[k])
        return cls(**d)


@dataclass
class AccuracyResult:
    params: dict
    eligible: int
    total: int
    failures: int = 0
    nz_correct: int = 0
    mean_flops: float = 0.0
    wall_ms: float = 0.0
    errors: list = field(default_factory=list)

    def __post_init__(self):
        if not 0 <= self.eligible <= self.total:
            raise ValueError("eligible must lie in [0, total]")

    @property
    def accuracy_pct(self) -> float:
        return accuracy_pct(self.eligible, self.total)


def accuracy_pct(eligible: int, total: int) -> float:
    """Share of eligible experiments, in percent."""
    return 100.0 * eligible / total


def trial_seed(base_seed: int, point: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(base_seed, spawn_key=(point, trial))


def _occupied_bw(kind: str, spec: SweepSpec, point: dict) -> float:
    if kind == "LFM":
        return point["lfm_bandwidth_hz"]
    if kind == "BPSK":
        return spec.symbol_rate
    return 0.0


def draw_carrier(rng: np.random.Generator, config: NyfrConfig, half_bw: float,
                 guard_bins: int, carrier_range: tuple | None = None) -> float:
    """Uniform carrier keeping the occupied band ``guard_bins`` away from zone edges."""
    grid = config.grid
    fs = config.lo.adc_rate_hz
    lo, hi = carrier_range if carrier_range is not None else (grid.band_start, grid.band_stop)
    margin = guard_bins * grid.bin_hz + half_bw
    for _ in range(10000):
        f = rng.uniform(lo, hi)
        offset = (f + fs / 2) % fs  # distance into the zone
        if margin <= offset <= fs - margin and grid.in_band(f - half_bw) and grid.in_band(f + half_bw):
            return float(f)
    raise ValueError("no admissible carrier: guard band swallows the carrier range")


def build_scene(spec: SweepSpec, point: dict, rng: np.random.Generator, config: NyfrConfig):
    """Random scene for one trial; returns (clean signal, carriers, bandwidths)."""
    grid = config.grid
    pulse = min(point["pulse_len_s"], grid.duration)
    comps, carriers, bws = [], [], []
    for i, kind in enumerate(spec.kinds):
        amp = (spec.amplitudes[i] if spec.amplitudes is not None
               else (1.0 if len(spec.kinds) == 1 else DEFAULT_AMPLITUDE[kind]))
        bw = _occupied_bw(kind, spec, point)
        half = point["lfm_bandwidth_hz"] / 2 if kind == "LFM" else bw / 2
        fc = draw_carrier(rng, config, half, spec.guard_bins, spec.carrier_range_hz)
        start = rng.uniform(0, grid.duration - pulse)
        phase = rng.uniform(0, 2 * np.pi)
        kwargs = dict(amplitude=amp, initial_phase=phase, start_time=start, pulse_len=pulse)
        if kind == "BPSK":
            n_sym = max(1, math.ceil(pulse * spec.symbol_rate))
            code = "".join(rng.choice(["0", "1"], size=n_sym))
            sig = SignalSpec(kind, fc, symbol_rate=spec.symbol_rate, code=code, **kwargs)
        elif kind == "LFM":
            sig = SignalSpec(kind, fc, bandwidth_hz=point["lfm_bandwidth_hz"], **kwargs)
        else:
            sig = SignalSpec(kind, fc, **kwargs)
        comps.append(generate(sig, grid))
        carriers.append(fc)
        bws.append(bw)
    return mix(comps), carriers, bws


@functools.lru_cache(maxsize=4)
def _time_domain_solver(config: NyfrConfig):
    A = reconstruction.build_sensing_matrix(reconstruction.SensingMatrixSpec.from_config(config))
    return reconstruction.TimeDomainBaseline(A)


@functools.lru_cache(maxsize=4)
def _freq_domain_matrix(config: NyfrConfig):
    A = reconstruction.build_sensing_matrix(reconstruction.SensingMatrixSpec.from_config(config))
    return reconstruction.frequency_sensing_matrix(A)


def estimate_spectrum(spec: SweepSpec, records, sparsity_k: int = 1) -> tuple[PowerSpectrum, float]:
    """Run the configured method on the snapshot records; returns (spectrum, flops)."""
    config = records[0].config
    n, m = config.n_samples, config.m_samples
    if spec.method == "proposed":
        ps = reconstruction.proposed_pipeline(
            records, RegularizationPolicy(spec.epsilon_rel), spec.window, sparsity_k,
            max_lag=spec.max_lag)
        return ps, ps.meta["flops"]
    Y = np.stack([r.samples for r in records])
    if spec.method == "time_domain":
        r_s = reconstruction.baseline_time_domain(Y, solver=_time_domain_solver(config),
                                                  grid=config.grid)
        ps = reconstruction.power_spectrum(r_s, spec.window, config.grid, "time_domain",
                                           max_lag=spec.max_lag)
    else:
        ps = reconstruction.baseline_freq_domain(Y, _freq_domain_matrix(config), config.grid)
    return ps, flops(spec.method, n, m, len(records), sparsity_k).total_flops


def run_trial(spec: SweepSpec, point_index: int, trial: int) -> dict:
    """One end-to-end experiment.  Never raises: failures come back as records."""
    point = spec.points()[point_index]
    t0 = time.perf_counter()
    try:
        ss = trial_seed(spec.base_seed, point_index, trial)
        scene_seq, noise_seq = ss.spawn(2)
        rng = make_rng(scene_seq)
        config = spec.receiver(point)
        clean, carriers, bws = build_scene(spec, point, rng, config)
        noise_seeds = noise_seq.spawn(spec.l_snapshots)
        records = [frontend.acquire(add_awgn(clean, point["snr_db"], s), config)
                   for s in noise_seeds]
        ps, n_flops = estimate_spectrum(spec, records, sparsity_k=len(spec.kinds))
        # tolerances are counted in record-resolution bins, F / N
        bin_hz = config.grid.bin_hz
        dets = detect_peaks(ps, spec.policy, bin_hz)
        ok = is_eligible(dets, carriers, spec.policy, bin_hz, bws)
        nz_ok = nz_identified(dets, carriers, config.lo.adc_rate_hz)
        return {"eligible": bool(ok), "nz_correct": bool(nz_ok), "flops": n_flops, "error": None,
                "wall_ms": 1e3 * (time.perf_counter() - t0)}
    except Exception as exc:  # recorded per trial, aggregated by the caller
        return {"eligible": False, "nz_correct": False, "flops": 0.0, "error": f"{type(exc).__name__}: {exc}",
                "wall_ms": 1e3 * (time.perf_counter() - t0)}


def _run_batch(args):
    spec, jobs = args
    return [run_trial(spec, p, t) for p, t in jobs]


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[AccuracyResult]:
    """Accuracy per grid point.  Results do not depend on ``workers``."""
    points = spec.points()
    jobs = [(p, t) for p in range(len(points)) for t in range(spec.trials)]
    if workers <= 1:
        outcomes = [run_trial(spec, p, t) for p, t in jobs]
    else:
        chunks = [jobs[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_run_batch, [(spec, c) for c in chunks]))
        outcomes = [None] * len(jobs)
        for i, part in enumerate(parts):
            for j, res in enumerate(part):
                outcomes[i + j * workers] = res
    results = []
    for p, point in enumerate(points):
        block = outcomes[p * spec.trials:(p + 1) * spec.trials]
        errors = [o["error"] for o in block if o["error"]]
        ok = [o for o in block if not o["error"]]
        results.append(AccuracyResult(
            params=dict(point),
            eligible=sum(o["eligible"] for o in block),
            total=spec.trials,
            failures=len(errors),
            nz_correct=sum(o["nz_correct"] for o in block),
            mean_flops=float(np.mean([o["flops"] for o in ok])) if ok else 0.0,
            wall_ms=float(np.mean([o["wall_ms"] for o in block])),
            errors=errors,
        ))
    return results


SWEEP_CSV_COLUMNS = (*SWEEP_AXES, "eligible", "total", "failures", "accuracy_pct",
                     "nz_correct", "mean_flops", "wall_ms")


def write_sweep_csv(path, results: Sequence[AccuracyResult], header: dict | None = None):
    """One row per grid point; ``header`` lines are written as ``# key: value``."""
    with open(path, "w", newline="") as fh:
        for k, v in (header or {}).items():
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh)
        w.writerow(SWEEP_CSV_COLUMNS)
        for r in results:
            w.writerow([*(r.params[a] for a in SWEEP_AXES), r.eligible, r.total, r.failures,
                        f"{r.accuracy_pct:.4f}", r.nz_correct, f"{r.mean_flops:.6e}", f"{r.wall_ms:.3f}"])


def binomial_band(p_hat: float, n: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson 95% interval for a success rate, in percent."""
    p = p_hat / 100
    denom = 1 + z**2 / n
    centre = (p + z**2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z**2 / (4 * n**2)) / denom
    lo = 0.0 if p == 0 else 100 * max(0.0, centre - half)
    hi = 100.0 if p == 1 else 100 * min(1.0, centre + half)
    return lo, hi


def plateau_start(xs: Sequence[float], results: Sequence[AccuracyResult], tail: int = 3,
                  min_level: float = 50.0) -> float:
    """Smallest axis value from which the accuracy curve stays on its plateau.

    The plateau level is the pooled accuracy of the last ``tail`` points.  A point
    is on the plateau when its Wilson band overlaps the Wilson band of that level.
    Returns ``inf`` when the level is below ``min_level`` percent: such a curve
    never reaches a usable plateau.
    """
    if len(xs) != len(results) or not results:
        raise ValueError("xs and results must be nonempty and of equal length")
    order = np.argsort(xs)
    xs = [xs[i] for i in order]
    results = [results[i] for i in order]
    pooled = results[-tail:]
    n_pooled = sum(r.total for r in pooled)
    level = accuracy_pct(sum(r.eligible for r in pooled), n_pooled)
    if level < min_level:
        return math.inf
    floor = binomial_band(level, n_pooled)[0]
    start = math.inf
    for x, r in zip(reversed(xs), reversed(results)):
        if binomial_band(r.accuracy_pct, r.total)[1] < floor:
            break
        start = x
    return float(start)
