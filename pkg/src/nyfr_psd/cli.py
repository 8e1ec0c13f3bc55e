"""Command-line front end.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
Outputs go to ``--out``, else ``$NYFR_PSD_OUT``, else ``./nyfr_out``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, detection, frontend, io, reconstruction
from .frontend import NyfrConfig
from .kernels import FlopReport, flops
from .reconstruction import DENSE_CAP, RegularizationPolicy
from .waveforms import add_awgn, generate, mix

OUT_ENV = "NYFR_PSD_OUT"


class ConfigError(Exception):
    """Bad input the user can fix; maps to exit code 2."""


def _out_dir(args) -> Path:
    d = Path(args.out or os.environ.get(OUT_ENV) or "nyfr_out")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _receiver_overrides(cfg: NyfrConfig, args) -> NyfrConfig:
    lo = cfg.lo
    if args.adc_rate is not None:
        lo = replace(lo, adc_rate_hz=args.adc_rate)
    if args.mod_amplitude is not None:
        lo = replace(lo, mod_amplitude=args.mod_amplitude)
    if args.mod_freq is not None:
        lo = replace(lo, mod_freq_hz=args.mod_freq)
    if args.no_mod:
        lo = lo.unmodulated()
    kw = {}
    if args.n_samples is not None:
        kw["n_samples"] = args.n_samples
    if args.nz_count is not None:
        kw["nz_count"] = args.nz_count
    if kw or lo is not cfg.lo:
        return NyfrConfig(lo, kw.get("nz_count", cfg.nz_count), kw.get("n_samples", cfg.n_samples))
    return cfg


def _scene(args) -> io.Scene:
    if args.scene:
        if not Path(args.scene).is_file():
            raise FileNotFoundError(args.scene)
        scene = io.load_scene(args.scene)
    else:
        scene = io.three_signal_scene()
    scene.config = _receiver_overrides(scene.config, args)
    if args.seed is not None:
        scene.seed = args.seed
    if args.snr is not None:
        scene.snr_db = None if np.isinf(args.snr) else args.snr
    if not scene.signals:
        raise ConfigError("scene has no signals")
    return scene


def _provenance(scene: io.Scene | None = None, **kw) -> dict:
    d = {"build_id": io.build_id(), "version": __version__}
    if scene is not None:
        d["scene"] = scene.to_dict()
    d.update(kw)
    return d


def _records(scene: io.Scene, snapshots: int):
    """Clean scene plus ``snapshots`` noisy front-end records with derived seeds."""
    grid = scene.config.grid
    clean = mix([generate(s, grid) for s in scene.signals])
    seeds = np.random.SeedSequence(scene.seed).spawn(snapshots)
    noisy = [clean if scene.snr_db is None else add_awgn(clean, scene.snr_db, s) for s in seeds]
    return clean, [frontend.acquire(x, scene.config) for x in noisy]


# --------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    scene = _scene(args)
    cfg = scene.config
    out = _out_dir(args)
    clean, (rec,) = _records(scene, 1)
    io.save_scene(scene, out / "scene.json")
    prov = _provenance(scene)
    io.write_signal(out / "signal.bin", clean, prov)
    io.write_record(out / "record.bin", rec, prov)
    f, t, p = frontend.spectrogram(rec, args.nperseg)
    io.write_spectrogram_csv(out / "spectrogram.csv", f, t, p, prov)
    zones = [frontend.nz_index(s.carrier_hz, cfg.lo.adc_rate_hz) for s in scene.signals]
    print(f"N={cfg.n_samples} M={cfg.m_samples} K_Z={cfg.nz_count}")
    print(f"theta={'none' if cfg.lo.mod_kind == 'none' else 'sinusoid'} "
          f"A={cfg.lo.mod_amplitude:g} f_mod={cfg.lo.mod_freq_hz:g} Hz")
    for s, z in zip(scene.signals, zones):
        print(f"{s.kind:5s} f_c={s.carrier_hz:.6g} Hz NZ={z}")
    print(f"wrote {out}")
    return 0


def _spectrum_for(scene: io.Scene, method: str, args):
    cfg = scene.config
    if method != "proposed" and cfg.n_samples > DENSE_CAP:
        raise ConfigError(
            f"{method} baseline refused: N = {cfg.n_samples} exceeds the dense cap of "
            f"{DENSE_CAP} samples; use a smaller --n-samples")
    _, recs = _records(scene, args.snapshots)
    if method == "proposed":
        pol = RegularizationPolicy(args.epsilon, args.regularization)
        return reconstruction.proposed_pipeline(recs, pol, args.window, len(scene.signals),
                                                max_lag=args.max_lag)
    spec = detection.SweepSpec(method=method, window=args.window, max_lag=args.max_lag)
    ps, n_flops = detection.estimate_spectrum(spec, recs, len(scene.signals))
    ps.meta["flops"] = n_flops
    return ps


def _report(ps, scene, args, out: Path, name: str) -> int:
    policy = detection.DetectionPolicy(args.tol_bins, args.gamma)
    bin_hz = scene.config.grid.bin_hz
    dets = detection.detect_peaks(ps, policy, bin_hz)
    meta = _provenance(scene, method=ps.method, n=scene.config.n_samples,
                       m=scene.config.m_samples, snapshots=args.snapshots)
    io.write_spectrum_csv(out / name, ps, meta)
    print(f"method={ps.method} bins={len(ps)} flops={ps.meta.get('flops', float('nan')):.4g}")
    for f, p in dets[: max(3, len(scene.signals))]:
        print(f"peak {f:.6g} Hz power {p:.4g}")
    ok = detection.is_eligible(dets, [s.carrier_hz for s in scene.signals], policy, bin_hz)
    print(f"all carriers found: {ok}")
    print(f"wrote {out / name}")
    return 0


def cmd_reconstruct(args) -> int:
    scene = _scene(args)
    ps = _spectrum_for(scene, args.method, args)
    return _report(ps, scene, args, _out_dir(args), "spectrum.csv")


def cmd_baseline(args) -> int:
    scene = _scene(args)
    ps = _spectrum_for(scene, args.method, args)
    return _report(ps, scene, args, _out_dir(args), f"baseline_{args.method}.csv")


def cmd_sweep(args) -> int:
    base = {}
    if args.config:
        if not Path(args.config).is_file():
            raise FileNotFoundError(args.config)
        with open(args.config) as fh:
            base = json.load(fh)
        base = base.get("sweep", base)
    over = {
        "kinds": tuple(k.strip().upper() for k in args.kinds.split(",")) if args.kinds else None,
        "snr_db": args.snr_grid, "pulse_len_s": args.pulse_len,
        "mod_amplitude": args.mod_amplitude_grid, "mod_freq_hz": args.mod_freq_grid,
        "lfm_bandwidth_hz": args.lfm_bw, "trials": args.trials, "base_seed": args.seed,
        "method": args.method, "l_snapshots": args.snapshots, "n_samples": args.n_samples,
        "adc_rate_hz": args.adc_rate, "nz_count": args.nz_count,
        "mod_kind": "none" if args.no_mod else None,
    }
    base.update({k: v for k, v in over.items() if v is not None})
    try:
        spec = detection.SweepSpec.from_dict(base)
        spec.receiver(spec.points()[0])
    except TypeError as exc:
        raise ConfigError(f"bad sweep configuration: {exc}") from exc
    if spec.method != "proposed" and spec.n_samples > DENSE_CAP:
        raise ConfigError(f"{spec.method} baseline refused: N = {spec.n_samples} exceeds the "
                          f"dense cap of {DENSE_CAP} samples")
    workers = args.workers or os.cpu_count() or 1
    results = detection.run_sweep(spec, workers)
    out = _out_dir(args)
    detection.write_sweep_csv(out / "sweep.csv", results,
                              {k: json.dumps(v, default=str) for k, v in
                               _provenance(sweep=spec.to_dict()).items()})
    for r in results:
        print(" ".join(f"{k}={v:g}" for k, v in r.params.items()),
              f"accuracy={r.accuracy_pct:.1f}% ({r.eligible}/{r.total}) failures={r.failures}")
    print(f"wrote {out / 'sweep.csv'}")
    return 0


def cmd_flops(args) -> int:
    if args.n is None:
        rows = [flops("proposed", 32000, 4000, 1, 10),
                flops("time_domain", 32000, 4000, 100),
                flops("proposed", 32000, 4000, 1, 22400)]
    else:
        methods = [args.method] if args.method else ["proposed", "time_domain", "freq_domain"]
        rows = [flops(m, args.n, args.m, args.l, args.k) for m in methods]
    print(FlopReport.CSV_HEADER)
    for r in rows:
        print(r.csv_row())
    return 0


# --------------------------------------------------------------------------
# parser


def _add_receiver(p):
    g = p.add_argument_group("receiver overrides")
    g.add_argument("--n-samples", type=int, help="Nyquist-grid length N")
    g.add_argument("--nz-count", type=int, help="number of Nyquist zones K_Z")
    g.add_argument("--adc-rate", type=float, help="ADC rate f_s in Hz")
    g.add_argument("--mod-amplitude", type=float, help="LO phase-modulation amplitude (rad)")
    g.add_argument("--mod-freq", type=float, help="LO phase-modulation frequency (Hz)")
    g.add_argument("--no-mod", action="store_true", help="unmodulated LO (theta = 0)")


def _add_scene(p):
    p.add_argument("--scene", help="JSON scene file (default: the three-signal demo scene)")
    p.add_argument("--seed", type=int)
    p.add_argument("--snr", type=float, help="RF input SNR in dB (inf for noiseless)")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./nyfr_out)")
    _add_receiver(p)


def _add_estimator(p, methods, default):
    p.add_argument("--method", choices=methods, default=default)
    p.add_argument("--snapshots", type=int, default=1, help="number of noisy records L")
    p.add_argument("--window", choices=("rect", "bartlett"), default="bartlett")
    p.add_argument("--max-lag", type=int, default=4000, help="Bartlett span in lags")
    p.add_argument("--epsilon", type=float, default=1e-3, help="relative r_p floor")
    p.add_argument("--regularization", choices=("zero_fill", "tikhonov"), default="zero_fill")
    p.add_argument("--tol-bins", type=int, default=2)
    p.add_argument("--gamma", type=float, default=5.0, help="threshold = median + gamma * MAD")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nyfr-psd", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="scene -> front end; writes dumps and a spectrogram")
    _add_scene(p)
    p.add_argument("--nperseg", type=int, default=128)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="power spectrum of a scene")
    _add_scene(p)
    _add_estimator(p, ("proposed", "time_domain", "freq_domain"), "proposed")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("baseline", help="dense covariance-sensing baselines (small N only)")
    _add_scene(p)
    _add_estimator(p, ("time_domain", "freq_domain"), "time_domain")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("sweep", help="Monte Carlo accuracy sweep")
    p.add_argument("--config", help="JSON file holding SweepSpec fields (optionally under 'sweep')")
    p.add_argument("--kinds", help="comma list of MP,BPSK,LFM")
    p.add_argument("--snr-grid", type=_floats)
    p.add_argument("--pulse-len", type=_floats, help="seconds")
    p.add_argument("--mod-amplitude-grid", type=_floats)
    p.add_argument("--mod-freq-grid", type=_floats)
    p.add_argument("--lfm-bw", type=_floats)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=("proposed", "time_domain", "freq_domain"))
    p.add_argument("--snapshots", type=int)
    p.add_argument("--workers", type=int, help="processes (default: all cores)")
    p.add_argument("--n-samples", type=int)
    p.add_argument("--nz-count", type=int)
    p.add_argument("--adc-rate", type=float)
    p.add_argument("--no-mod", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("flops", help="operation-count table")
    p.add_argument("--n", type=int, help="N (omit for the reference table)")
    p.add_argument("--m", type=int, default=4000)
    p.add_argument("--l", type=int, default=100)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--method", choices=("proposed", "time_domain", "freq_domain"))
    p.set_defaults(func=cmd_flops)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename or exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # anything else is a runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
