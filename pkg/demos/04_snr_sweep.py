"""A short Monte Carlo sweep of detection accuracy against input SNR.

Each trial draws a random carrier, start time and phase, adds noise, runs the
fast reconstruction and asks whether the strongest peak falls on the carrier.
The result is written as a CSV with one row per SNR point.
"""

from nyfr_psd.detection import SweepSpec, binomial_band, plateau_start, run_sweep, write_sweep_csv


def main():
    snr = (-15.0, -10.0, -5.0, 0.0, 5.0)
    spec = SweepSpec(kinds=("LFM",), snr_db=snr, trials=40, base_seed=7)
    results = run_sweep(spec)
    for r in results:
        lo, hi = binomial_band(r.accuracy_pct, r.total)
        print(f"{r.params['snr_db']:6.1f} dB  {r.accuracy_pct:5.1f}%  [{lo:5.1f}, {hi:5.1f}]")
    print(f"curve reaches its plateau at {plateau_start(snr, results):g} dB")
    write_sweep_csv("lfm_sweep.csv", results, {"kinds": "LFM", "trials": spec.trials})
    print("wrote lfm_sweep.csv")


if __name__ == "__main__":
    main()
