"""Power-spectrum reconstruction from NYFR measurements.

The fast route is ``proposed_pipeline``: non-uniform transform of the ADC
samples at their true sampling instants, inverse FFT back to the Nyquist grid,
FFT autocorrelation, lag-wise division by the pulse-train autocorrelation and
a final transform.  The dense compressive-covariance baselines solve the
least-squares systems built from the sensing matrix ``A`` and are only meant
for small grids.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sla

from . import frontend
from .frontend import MeasurementRecord, NyfrConfig
from .kernels import AutocorrSeq, NufftConfig, autocorr_fft, flops, nufft_time_to_freq
from .waveforms import GridSpec, NyquistGridSignal

DENSE_CAP = 4096


@dataclass
class PowerSpectrum:
    """Real spectrum with an affine bin map: bin i sits at ``f0 + i * df`` Hz."""

    values: np.ndarray
    f0: float
    df: float
    method: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("power spectrum contains non-finite values")

    def __len__(self):
        return len(self.values)

    @property
    def freqs(self) -> np.ndarray:
        return self.f0 + self.df * np.arange(len(self.values))

    def freq_of_bin(self, i):
        return self.f0 + self.df * np.asarray(i)

    def bin_of_freq(self, f):
        return np.round((np.asarray(f) - self.f0) / self.df).astype(int) % len(self.values)


@dataclass(frozen=True)
class RegularizationPolicy:
    epsilon_rel: float = 1e-3
    mode: str = "zero_fill"

    def __post_init__(self):
        if not 0 < self.epsilon_rel < 1:
            raise ValueError("epsilon_rel must lie in (0, 1)")
        if self.mode not in ("zero_fill", "tikhonov"):
            raise ValueError(f"mode must be zero_fill or tikhonov, got {self.mode!r}")


# --------------------------------------------------------------------------
# sensing model


@dataclass(frozen=True, eq=False)
class SensingMatrixSpec:
    """Inputs to the dense sensing matrix.

    ``theta_samples`` is theta on the Nyquist grid (length N).  Zone block ``l``
    is modulated by ``exp(-j * modulation_indices[l] * theta(t_m))``; ``gain``
    scales the whole operator (``w_s / K_Z`` reproduces the simulator).
    """

    n: int
    m: int
    nz_count: int
    theta_samples: np.ndarray
    modulation_indices: tuple | None = None
    gain: float = 1.0

    def __post_init__(self):
        if self.n != self.m * self.nz_count:
            raise ValueError(f"N = {self.n} must equal M * K_Z = {self.m} * {self.nz_count}")
        if len(self.theta_samples) != self.n:
            raise ValueError("theta_samples must be given on the N-point grid")
        if self.modulation_indices is None:
            object.__setattr__(self, "modulation_indices", tuple(range(self.nz_count)))
        if len(self.modulation_indices) != self.nz_count:
            raise ValueError("need one modulation index per zone")

    @classmethod
    def from_config(cls, config: NyfrConfig) -> "SensingMatrixSpec":
        theta = frontend.lo_phase(config.grid.times(), config.lo)
        return cls(config.n_samples, config.m_samples, config.nz_count, theta,
                   gain=config.lo.omega_s / config.nz_count)


def build_sensing_matrix(spec: SensingMatrixSpec, cap: int = DENSE_CAP) -> np.ndarray:
    """A = gain * [I .. I] diag(e^{-j l theta}) blockdiag(IDFT_M) DFT_N, as an M x N array."""
    n, m, kz = spec.n, spec.m, spec.nz_count
    if n > cap:
        raise ValueError(
            f"dense sensing matrix refused for N = {n} > cap {cap}; use proposed_pipeline"
        )
    dft_n = sfft.fft(np.eye(n), axis=0)
    theta_m = np.asarray(spec.theta_samples)[::kz]
    d = np.arange(-(m // 2), m - m // 2)
    A = np.zeros((m, n), dtype=complex)
    for l, idx in enumerate(spec.modulation_indices):
        block = np.empty((m, n), dtype=complex)
        block[d % m] = dft_n[(l * m + d) % n]
        A += np.exp(-1j * idx * theta_m)[:, None] * sfft.ifft(block, axis=0)
    return spec.gain * A


class SelectionMatrix:
    """Index-table form of the N^2 x (2N-1) Toeplitz selection matrix.

    Row ``a + b N`` of vec(R) (column-major) holds lag ``a - b``.
    """

    def __init__(self, n: int):
        self.n = n
        a, b = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        self.column = (a - b).ravel(order="F") + (n - 1)

    @property
    def shape(self):
        return (self.n**2, 2 * self.n - 1)

    def gather(self, lags) -> np.ndarray:
        """vec(R) = C r."""
        return np.asarray(lags)[self.column]

    def scatter(self, v) -> np.ndarray:
        """C^T v."""
        v = np.asarray(v, dtype=complex)
        L = 2 * self.n - 1
        return np.bincount(self.column, v.real, L) + 1j * np.bincount(self.column, v.imag, L)

    def dense(self) -> np.ndarray:
        C = np.zeros(self.shape)
        C[np.arange(self.n**2), self.column] = 1.0
        return C


def kron_selection_product(A: np.ndarray, C: SelectionMatrix) -> np.ndarray:
    """(A* kron A) C assembled one lag column at a time from the index table."""
    m, n = A.shape
    out = np.zeros((m * m, 2 * n - 1), dtype=complex)
    rows = np.arange(n * n)
    a, b = rows % n, rows // n
    for r, col in enumerate(C.column):
        out[:, col] += np.kron(np.conj(A[:, b[r]]), A[:, a[r]])
    return out


def _lag_correlations(A: np.ndarray) -> np.ndarray:
    """Phi[(i, j), k] = sum_b A[i, b + k] conj(A[j, b]) for all row pairs, lags ascending."""
    m, n = A.shape
    L = sfft.next_fast_len(2 * n - 1)
    FA = sfft.fft(A, L, axis=1)
    lag_pos = np.arange(-(n - 1), n) % L
    phi = np.empty((m * m, 2 * n - 1), dtype=complex)
    for j in range(m):
        phi[j * m:(j + 1) * m] = sfft.ifft(FA * np.conj(FA[j]), axis=1)[:, lag_pos]
    return phi


def _diag_sums(W: np.ndarray) -> np.ndarray:
    """h[k] = sum_b W[b + k, b], k = -(n-1)..(n-1)."""
    n = W.shape[0]
    a, b = np.indices(W.shape)
    idx = (a - b).ravel() + n - 1
    w = W.ravel()
    return np.bincount(idx, w.real, 2 * n - 1) + 1j * np.bincount(idx, w.imag, 2 * n - 1)


def _truncated_pinv_hermitian(G: np.ndarray, floor: float):
    lam, V = sla.eigh(G, driver="evd")  # divide and conquer copes best with the clustered null space
    lam_max = max(lam.max(), 0.0)
    keep = lam > floor * lam_max
    inv = (V[:, keep] / lam[keep]) @ V[:, keep].conj().T
    lam_min = lam[keep].min() if keep.any() else 0.0
    return inv, int(keep.sum()), (np.sqrt(lam_max / lam_min) if lam_min > 0 else np.inf)


class TimeDomainBaseline:
    """Precomputed least-squares operator for r_s = ((A* kron A) C)^+ vec(R_y).

    Small systems materialize the M^2 x (2N-1) matrix and take a truncated SVD;
    larger ones use the normal equations, whose Gram matrix is a 2-D
    autocorrelation of A^H A.  Singular values below ``rcond`` times the largest
    are discarded, giving the minimum-norm solution.
    """

    def __init__(self, A: np.ndarray, rcond: float = 1e-8, materialize_cap: int = 2**24):
        self.A = np.asarray(A, dtype=complex)
        m, n = self.A.shape
        self.m, self.n = m, n
        self.rcond = rcond
        if m * m * (2 * n - 1) <= materialize_cap:
            self.route = "svd"
            phi = _lag_correlations(self.A)
            U, sv, Vh = sla.svd(phi, full_matrices=False, lapack_driver="gesvd")
            keep = sv > rcond * sv[0]
            self._op = (Vh[keep].conj().T / sv[keep]) @ U[:, keep].conj().T
            self.rank = int(keep.sum())
            self.cond = float(sv[0] / sv[keep][-1])
            self.full_cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
        else:
            self.route = "normal"
            Q = self.A.conj().T @ self.A
            L = sfft.next_fast_len(2 * n - 1)
            FQ = sfft.fft2(Q, (L, L))
            corr = sfft.ifft2(FQ * np.conj(FQ))
            del FQ
            pos = np.arange(-(n - 1), n) % L
            G = corr[np.ix_(pos, pos)]
            del corr
            G = (G + G.conj().T) / 2
            # normal equations square the condition number; cap the floor at
            # what double precision resolves
            self._op, self.rank, self.cond = _truncated_pinv_hermitian(G, max(rcond, 1e-6) ** 2)
            self.full_cond = np.inf if self.rank < 2 * n - 1 else self.cond

    @property
    def rank_deficient(self) -> bool:
        return self.rank < 2 * self.n - 1

    def solve(self, R_y: np.ndarray) -> np.ndarray:
        if self.route == "svd":
            return self._op @ R_y.ravel(order="F")
        W = self.A.conj().T @ R_y @ self.A
        return self._op @ _diag_sums(W)


def sample_covariance(y_snapshots) -> np.ndarray:
    Y = np.atleast_2d(np.asarray(y_snapshots, dtype=complex))
    return Y.T @ Y.conj() / Y.shape[0]


def baseline_time_domain(y_snapshots, A: np.ndarray | None = None, C: SelectionMatrix | None = None,
                         solver: TimeDomainBaseline | None = None,
                         grid: GridSpec | None = None) -> AutocorrSeq:
    """Least-squares lag recovery from an L x M block of ADC snapshots.

    Pass a prebuilt ``solver`` to reuse the offline factorization.  When ``C`` is
    given the system matrix is assembled literally from its index table.
    """
    if solver is None:
        if A is None:
            raise ValueError("need either A or a prebuilt solver")
        if C is not None:
            solver = _solver_from_selection(np.asarray(A, dtype=complex), C)
        else:
            solver = TimeDomainBaseline(A)
    if solver.n > DENSE_CAP:
        raise ValueError(f"time-domain baseline refused for N = {solver.n} > cap {DENSE_CAP}")
    R_y = sample_covariance(y_snapshots)
    r = solver.solve(R_y)
    r = (r + np.conj(r[::-1])) / 2
    meta = {"cond": solver.cond, "rank": solver.rank, "min_norm": solver.rank_deficient,
            "l_snapshots": int(np.atleast_2d(y_snapshots).shape[0]), "route": solver.route}
    return AutocorrSeq(r, solver.n, grid, meta)


def _solver_from_selection(A: np.ndarray, C: SelectionMatrix) -> TimeDomainBaseline:
    solver = TimeDomainBaseline.__new__(TimeDomainBaseline)
    solver.A, (solver.m, solver.n), solver.rcond = A, A.shape, 1e-8
    phi = kron_selection_product(A, C)
    U, sv, Vh = sla.svd(phi, full_matrices=False)
    keep = sv > solver.rcond * sv[0]
    solver._op = (Vh[keep].conj().T / sv[keep]) @ U[:, keep].conj().T
    solver.rank, solver.cond, solver.route = int(keep.sum()), float(sv[0] / sv[keep][-1]), "svd"
    solver.full_cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    return solver


def frequency_sensing_matrix(A: np.ndarray) -> np.ndarray:
    """B = DFT_M A IDFT_N."""
    return sfft.fft(sfft.ifft(A, axis=1), axis=0)


def baseline_freq_domain(y_snapshots, B: np.ndarray, grid: GridSpec | None = None,
                         rcond: float = 1e-8) -> PowerSpectrum:
    """Per-bin power E|S(w_n)|^2 from (B* kr B)^+ vec(R_y(w)).

    The Khatri-Rao Gram matrix is |B^H B|^2 element-wise and the right-hand side
    is b_n^H R_y(w) b_n, so the N^2-row system is never formed.
    """
    B = np.asarray(B, dtype=complex)
    m, n = B.shape
    if n > DENSE_CAP:
        raise ValueError(f"frequency-domain baseline refused for N = {n} > cap {DENSE_CAP}")
    Y = sfft.fft(np.atleast_2d(np.asarray(y_snapshots, dtype=complex)), axis=1)
    R = sample_covariance(Y)
    G = np.abs(B.conj().T @ B) ** 2
    h = np.real(np.einsum("in,ij,jn->n", B.conj(), R, B))
    op, rank, cond = _truncated_pinv_hermitian(G, max(rcond, 1e-6) ** 2)
    p = op @ h
    grid = grid or GridSpec(n, 1.0)
    f = grid.dft_freqs()
    order = np.argsort(f, kind="stable")
    return PowerSpectrum(p[order], f[order][0], grid.bin_hz, "freq_domain",
                         {"cond": cond, "rank": rank, "min_norm": rank < n})


def lags_to_bin_power(r: AutocorrSeq) -> np.ndarray:
    """E|S_b|^2 = sum_k (N - |k|) r[k] exp(-j 2 pi b k / N), numpy bin order."""
    n = r.n_ref
    k = r.lag_axis
    folded = np.zeros(n, dtype=complex)
    np.add.at(folded, k % n, (n - np.abs(k)) * r.lags)
    return np.real(sfft.fft(folded))


# --------------------------------------------------------------------------
# proposed pipeline


def nufft_freq_grid(config: NyfrConfig) -> np.ndarray:
    """Angular frequencies w_i = 2 pi (b0 + i) F / N, starting at -f_s/2."""
    n, m = config.n_samples, config.m_samples
    b0 = -(m // 2)
    return 2 * np.pi * (b0 + np.arange(n)) * config.sample_rate / n


def reconstruct_xhat(rec: MeasurementRecord, n: int | None = None,
                     nufft_config: NufftConfig | None = None) -> NyquistGridSignal:
    """Nyquist-grid estimate of the pulse-sampled signal, x_hat = IFT{Y'}.

    Scaled by N / M so that with an unmodulated LO x_hat equals ``s * p``
    exactly (the ADC samples lifted onto every K_Z-th grid point).
    """
    config = rec.config
    n = config.n_samples if n is None else n
    if n != config.n_samples:
        raise ValueError(f"n = {n} must equal K_Z * M = {config.n_samples}")
    Y = nufft_time_to_freq(rec.samples, rec.nonuniform_instants, nufft_freq_grid(config),
                           nufft_config)
    b0 = -(config.m_samples // 2)
    ramp = np.exp(2j * np.pi * b0 * np.arange(n) / n)
    xhat = config.nz_count * ramp * sfft.ifft(Y)
    return NyquistGridSignal(xhat, config.grid, {"role": "xhat"})


@functools.lru_cache(maxsize=16)
def _pulse_autocorr_cached(config: NyfrConfig) -> AutocorrSeq:
    p = frontend.pulse_train(config)
    return autocorr_fft(p.samples, config.grid)


def pulse_autocorr_ref(config: NyfrConfig) -> AutocorrSeq:
    """r_p of the pulse train; depends only on the LO and grid, so it is cached."""
    r = _pulse_autocorr_cached(config)
    return AutocorrSeq(r.lags.copy(), r.n_ref, r.grid)


def divide_autocorr(r_x: AutocorrSeq, r_p: AutocorrSeq,
                    policy: RegularizationPolicy = RegularizationPolicy()) -> AutocorrSeq:
    if r_x.n_ref != r_p.n_ref:
        raise ValueError("lag supports differ")
    mag = np.abs(r_p.lags)
    peak = mag.max()
    if peak == 0:
        raise ValueError("pulse autocorrelation is identically zero")
    eps = policy.epsilon_rel * peak
    if policy.mode == "zero_fill":
        ok = mag >= eps
        out = np.zeros_like(r_x.lags)
        out[ok] = r_x.lags[ok] / r_p.lags[ok]
    else:
        out = r_x.lags * np.conj(r_p.lags) / (mag**2 + eps**2)
    out = (out + np.conj(out[::-1])) / 2
    return AutocorrSeq(out, r_x.n_ref, r_x.grid or r_p.grid, {"regularization": policy.mode})


def power_spectrum(r_s: AutocorrSeq, window: str = "rect", grid: GridSpec | None = None,
                   method: str = "proposed", max_lag: int | None = None) -> PowerSpectrum:
    """Transform of the (optionally Bartlett-tapered) lags over 2N-1 points.

    ``max_lag`` shortens the Bartlett taper to ``1 - |k| / max_lag`` (zero beyond),
    trading resolution for a smoother estimate.  Bins are reordered to ascend
    from the first bin at or above the grid's band start.  Negative values are
    kept.
    """
    n = r_s.n_ref
    L = 2 * n - 1
    lags = r_s.lags
    if window == "bartlett":
        span = n if max_lag is None else max_lag
        if span < 1:
            raise ValueError("max_lag must be >= 1")
        lags = lags * np.clip(1 - np.abs(r_s.lag_axis) / span, 0, None)
    elif window != "rect":
        raise ValueError(f"window must be 'rect' or 'bartlett', got {window!r}")
    P = sfft.fft(AutocorrSeq(lags, n).circular())
    scale = np.max(np.abs(P)) or 1.0
    residue = float(np.max(np.abs(P.imag)) / scale)
    if residue > 1e-6:
        raise ValueError(f"lag sequence is not Hermitian: imaginary residue {residue:.2e}")
    grid = grid or r_s.grid or GridSpec(n, 1.0)
    df = grid.sample_rate / L
    q0 = int(np.ceil(grid.band_start / df - 1e-9))
    order = (q0 + np.arange(L)) % L
    return PowerSpectrum(P.real[order], q0 * df, df, method,
                         {"imag_residue": residue, "window": window, "max_lag": max_lag})


def proposed_pipeline(rec: MeasurementRecord | Sequence[MeasurementRecord],
                      policy: RegularizationPolicy = RegularizationPolicy(),
                      window: str = "rect", sparsity_k: int = 1,
                      nufft_config: NufftConfig | None = None,
                      max_lag: int | None = None) -> PowerSpectrum:
    """NUFFT -> IFFT -> autocorrelation -> divide by r_p -> FT.

    Several records of the same receiver may be passed; their r_x estimates are
    averaged before the division.
    """
    recs = [rec] if isinstance(rec, MeasurementRecord) else list(rec)
    config = recs[0].config
    r_x = None
    for r in recs:
        if r.config != config:
            raise ValueError("all records must share one receiver configuration")
        xhat = reconstruct_xhat(r, nufft_config=nufft_config)
        est = autocorr_fft(xhat.samples, config.grid).lags
        r_x = est if r_x is None else r_x + est
    r_x = AutocorrSeq(r_x / len(recs), config.n_samples, config.grid)
    r_s = divide_autocorr(r_x, pulse_autocorr_ref(config), policy)
    ps = power_spectrum(r_s, window, config.grid, method="proposed", max_lag=max_lag)
    report = flops("proposed", config.n_samples, config.m_samples, len(recs), sparsity_k)
    ps.meta.update(flops=report.total_flops, config=config.to_dict(),
                   regularization={"epsilon_rel": policy.epsilon_rel, "mode": policy.mode})
    return ps
