"""File formats: JSON scene files, raw sample dumps and CSV outputs.

Scene file (JSON)::

    {
      "receiver": {"adc_rate_hz": 4e9, "mod_kind": "sinusoid", "mod_amplitude": 2.0,
                   "mod_freq_hz": 2e7, "mod_phase": 0.0, "nz_count": 8,
                   "n_samples": 32000},
      "signals": [{"kind": "MP", "carrier_hz": 1.3e9, ...}, ...],
      "snr_db": 10.0,          # optional, null or absent for noiseless
      "seed": 0
    }

Every receiver key is optional and falls back to the defaults.  ``signals``
entries take the ``SignalSpec`` field names.

Raw dumps (signals and ADC records) are one ASCII header line
``NYFRBIN1 <json>\\n`` followed by little-endian float64 pairs ``re, im``.
CSV outputs start with ``# key: value`` metadata lines.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .frontend import MeasurementRecord, NyfrConfig, nonuniform_instants
from .reconstruction import PowerSpectrum
from .waveforms import GridSpec, NyquistGridSignal, SignalSpec

MAGIC = b"NYFRBIN1 "


@dataclass
class Scene:
    config: NyfrConfig
    signals: list
    snr_db: float | None = None
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"receiver": self.config.to_dict(),
                "signals": [s.to_dict() for s in self.signals],
                "snr_db": self.snr_db, "seed": self.seed, **self.extra}

    @classmethod
    def from_dict(cls, d: dict) -> "Scene":
        if not isinstance(d, dict):
            raise ValueError("scene file must hold a JSON object")
        unknown = set(d) - {"receiver", "signals", "snr_db", "seed", "policy", "sweep", "method"}
        if unknown:
            raise ValueError(f"unknown scene keys: {sorted(unknown)}")
        sigs = d.get("signals", [])
        if not isinstance(sigs, list):
            raise ValueError("'signals' must be a list")
        extra = {k: d[k] for k in ("policy", "sweep", "method") if k in d}
        return cls(NyfrConfig.from_dict(d.get("receiver", {})),
                   [SignalSpec(**s) for s in sigs], d.get("snr_db"), int(d.get("seed", 0)), extra)


def load_scene(path) -> Scene:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not valid JSON ({exc})") from exc
    return Scene.from_dict(d)


def save_scene(scene: Scene, path):
    with open(path, "w") as fh:
        json.dump(scene.to_dict(), fh, indent=2)
        fh.write("\n")


def three_signal_scene(snr_db: float | None = 10.0, seed: int = 0) -> Scene:
    """Three full-length pulses at 1.3, 7.8 and 14.5 GHz on the default receiver."""
    sigs = [
        SignalSpec("MP", 1.3e9),
        SignalSpec("BPSK", 7.8e9, symbol_rate=10e6, code="1001100110"),
        SignalSpec("LFM", 14.5e9, bandwidth_hz=8e6),
    ]
    return Scene(NyfrConfig(), sigs, snr_db, seed)


# --------------------------------------------------------------------------
# raw dumps


def _write_bin(path, samples: np.ndarray, header: dict):
    x = np.asarray(samples, dtype=complex)
    inter = np.empty(2 * len(x), dtype="<f8")
    inter[0::2], inter[1::2] = x.real, x.imag
    with open(path, "wb") as fh:
        fh.write(MAGIC + json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(inter.tobytes())


def _read_bin(path) -> tuple[np.ndarray, dict]:
    with open(path, "rb") as fh:
        line = fh.readline()
        if not line.startswith(MAGIC):
            raise ValueError(f"{path}: missing {MAGIC.decode().strip()} header")
        header = json.loads(line[len(MAGIC):])
        raw = np.frombuffer(fh.read(), dtype="<f8")
    if len(raw) % 2:
        raise ValueError(f"{path}: odd number of float64 values")
    return raw[0::2] + 1j * raw[1::2], header


def write_signal(path, sig: NyquistGridSignal, extra: dict | None = None):
    g = sig.grid
    header = {"kind": "signal", "n_samples": g.n_samples, "sample_rate": g.sample_rate,
              "band_start": g.band_start, **(extra or {})}
    _write_bin(path, sig.samples, header)


def read_signal(path) -> NyquistGridSignal:
    x, h = _read_bin(path)
    if h.get("kind") != "signal":
        raise ValueError(f"{path}: not a signal dump")
    grid = GridSpec(h["n_samples"], h["sample_rate"], h["band_start"])
    return NyquistGridSignal(x, grid, {k: v for k, v in h.items() if k not in ("kind",)})


def write_record(path, rec: MeasurementRecord, extra: dict | None = None):
    header = {"kind": "record", "m_samples": rec.config.m_samples,
              "adc_rate_hz": rec.config.lo.adc_rate_hz, "receiver": rec.config.to_dict(),
              **(extra or {})}
    _write_bin(path, rec.samples, header)


def read_record(path) -> MeasurementRecord:
    y, h = _read_bin(path)
    if h.get("kind") != "record":
        raise ValueError(f"{path}: not a record dump")
    cfg = NyfrConfig.from_dict(h["receiver"])
    m = np.arange(cfg.m_samples)
    return MeasurementRecord(y, m / cfg.lo.adc_rate_hz, nonuniform_instants(cfg), cfg,
                             {k: v for k, v in h.items() if k not in ("kind", "receiver")})


# --------------------------------------------------------------------------
# CSV


def _write_meta(fh, meta: dict):
    for k, v in meta.items():
        fh.write(f"# {k}: {json.dumps(v, sort_keys=True, default=str)}\n")


def read_csv_meta(path) -> dict:
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("# "):
                break
            k, _, v = line[2:].partition(": ")
            meta[k] = json.loads(v)
    return meta


SPECTRUM_COLUMNS = ("freq_hz", "power")


def write_spectrum_csv(path, ps: PowerSpectrum, meta: dict | None = None):
    with open(path, "w", newline="") as fh:
        _write_meta(fh, {"method": ps.method, **{k: v for k, v in ps.meta.items()}, **(meta or {})})
        w = csv.writer(fh)
        w.writerow(SPECTRUM_COLUMNS)
        for f, p in zip(ps.freqs, ps.values):
            w.writerow([repr(float(f)), repr(float(p))])


def read_spectrum_csv(path) -> tuple[np.ndarray, np.ndarray, dict]:
    meta = read_csv_meta(path)
    with open(path, newline="") as fh:
        rows = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(rows)
        if tuple(header) != SPECTRUM_COLUMNS:
            raise ValueError(f"{path}: expected columns {SPECTRUM_COLUMNS}, got {header}")
        data = np.array([[float(a), float(b)] for a, b in rows]).reshape(-1, 2)
    return data[:, 0], data[:, 1], meta


def write_spectrogram_csv(path, freqs, times, power, meta: dict | None = None):
    """Rows are frequencies; the header row lists ``freq_hz`` then each frame time."""
    with open(path, "w", newline="") as fh:
        _write_meta(fh, meta or {})
        w = csv.writer(fh)
        w.writerow(["freq_hz", *(f"{t:.9e}" for t in times)])
        for f, row in zip(freqs, power):
            w.writerow([f"{f:.9e}", *(f"{v:.9e}" for v in row)])


def build_id() -> str:
    """Short digest of the package sources; identical sources give the same id."""
    h = hashlib.sha1()
    for p in sorted(Path(__file__).parent.glob("*.py")):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()[:12]
