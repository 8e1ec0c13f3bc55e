"""Transforms and lag-domain kernels used by the reconstruction pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .waveforms import GridSpec


def fft(x) -> np.ndarray:
    return sfft.fft(np.asarray(x, dtype=complex))


def ifft(X) -> np.ndarray:
    return sfft.ifft(np.asarray(X, dtype=complex))


# --------------------------------------------------------------------------
# lag sequences


@dataclass
class AutocorrSeq:
    """Lags k = -(N-1)..(N-1), stored at index k + N - 1."""

    lags: np.ndarray
    n_ref: int
    grid: GridSpec | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lags = np.asarray(self.lags, dtype=complex)
        if self.lags.shape != (2 * self.n_ref - 1,):
            raise ValueError(
                f"expected {2 * self.n_ref - 1} lags for N = {self.n_ref}, got {self.lags.shape}"
            )

    @property
    def lag_axis(self) -> np.ndarray:
        return np.arange(-(self.n_ref - 1), self.n_ref)

    def at(self, k):
        return self.lags[np.asarray(k) + self.n_ref - 1]

    def hermitian_error(self) -> float:
        return float(np.max(np.abs(self.lags - np.conj(self.lags[::-1]))))

    def circular(self, length: int | None = None) -> np.ndarray:
        """Lags placed in FFT order (k mod length) for a transform of ``length``."""
        length = 2 * self.n_ref - 1 if length is None else length
        if length < 2 * self.n_ref - 1:
            raise ValueError("circular length must cover all lags")
        out = np.zeros(length, dtype=complex)
        out[self.lag_axis % length] = self.lags
        return out


def autocorr_fft(x, grid: GridSpec | None = None) -> AutocorrSeq:
    """Biased estimator r[k] = (1/N) sum_n x[n] x*[n-k] via zero-padded FFTs."""
    x = np.asarray(x, dtype=complex)
    n = len(x)
    if n < 1:
        raise ValueError("autocorr_fft needs at least one sample")
    # any length >= 2N-1 avoids circular wrap; pick a fast one
    L = sfft.next_fast_len(2 * n - 1)
    X = sfft.fft(x, L)
    c = sfft.ifft(X * np.conj(X)) / n
    lags = np.concatenate([c[L - (n - 1):], c[:n]])
    return AutocorrSeq(lags, n, grid)


# --------------------------------------------------------------------------
# non-uniform Fourier transform


@dataclass(frozen=True)
class NufftConfig:
    """Gaussian-gridding parameters for the non-uniform transform.

    ``kernel_width`` is the number of fine-grid points spread on each side of a
    sample; when omitted it is derived from ``tol``.
    """

    tol: float = 1e-6
    oversampling: float = 2.0
    kernel_width: int | None = None
    direct_threshold: int = 1024

    def __post_init__(self):
        if not 0 < self.tol < 1:
            raise ValueError("tol must lie in (0, 1)")
        if self.oversampling < 1.5:
            raise ValueError("oversampling below 1.5 is not supported")
        if self.tol < 1e-13:
            raise ValueError(f"tol {self.tol:g} is below what double-precision gridding reaches")
        if self.kernel_width is not None and _gauss_error(self.kernel_width, self.oversampling) > self.tol:
            raise ValueError(
                f"kernel_width {self.kernel_width} gives ~{_gauss_error(self.kernel_width, self.oversampling):.1e} "
                f"error, above tol {self.tol:g}"
            )

    @property
    def spread(self) -> int:
        if self.kernel_width is not None:
            return self.kernel_width
        # two decades of headroom: the bound is relative to sum |c_m|
        w = 2
        while _gauss_error(w, self.oversampling) > self.tol * 1e-2:
            w += 1
        return w


def _gauss_error(width: int, R: float) -> float:
    # Greengard & Lee truncation/aliasing bound for the Gaussian kernel
    return math.exp(-math.pi * width * (R - 0.5) / R)


def nudft_direct(y, instants, omegas, chunk: int = 2048) -> np.ndarray:
    """Y(w) = sum_m y_m exp(-j w t_m) by direct summation."""
    y = np.asarray(y, dtype=complex)
    t = np.asarray(instants, dtype=float)
    w = np.asarray(omegas, dtype=float)
    out = np.empty(len(w), dtype=complex)
    for i in range(0, len(w), chunk):
        out[i:i + chunk] = np.exp(-1j * np.outer(w[i:i + chunk], t)) @ y
    return out


def _nufft1_gauss(c: np.ndarray, x: np.ndarray, n_modes: int, cfg: NufftConfig) -> np.ndarray:
    """sum_m c_m exp(-j k x_m) for k = -n_modes/2 .. n_modes - n_modes/2 - 1."""
    w = cfg.spread
    mr = int(math.ceil(cfg.oversampling * n_modes))
    mr = max(mr + (mr % 2), 2 * w + 2)
    tau = math.pi * w / (n_modes**2 * cfg.oversampling * (cfg.oversampling - 0.5))
    h = 2 * math.pi / mr
    x = np.mod(x, 2 * math.pi)
    base = np.floor(x / h).astype(np.int64)
    offs = np.arange(-w + 1, w + 1)
    idx = base[:, None] + offs[None, :]
    weights = np.exp(-((x[:, None] - idx * h) ** 2) / (4 * tau)) * c[:, None]
    idx = np.mod(idx, mr).ravel()
    weights = weights.ravel()
    fine = np.bincount(idx, weights.real, mr) + 1j * np.bincount(idx, weights.imag, mr)
    G = sfft.fft(fine)
    k = np.arange(-(n_modes // 2), n_modes - n_modes // 2)
    return G[k % mr] * (math.sqrt(math.pi / tau) * np.exp(k.astype(float) ** 2 * tau) / mr)


def nufft_time_to_freq(y, instants, freq_grid, config: NufftConfig | None = None) -> np.ndarray:
    """Y'(w_i) = sum_m y(t_m) exp(-j w_i t'_m) on a uniform angular-frequency grid.

    ``freq_grid`` must be uniformly spaced (rad/s).  Small grids use the direct
    sum; larger ones a Gaussian-gridding type-1 NUFFT.
    """
    cfg = config or NufftConfig()
    y = np.asarray(y, dtype=complex)
    t = np.asarray(instants, dtype=float)
    w = np.asarray(freq_grid, dtype=float)
    if y.shape != t.shape:
        raise ValueError("samples and instants must have the same length")
    n = len(w)
    if n < cfg.direct_threshold or n < 2:
        return nudft_direct(y, t, w)
    dw = (w[-1] - w[0]) / (n - 1)
    if not np.allclose(np.diff(w), dw, rtol=1e-9, atol=0):
        raise ValueError("freq_grid must be uniformly spaced")
    half = n // 2
    # shift so the integer modes are centred: w_i = w_0 + (half + k) dw
    c = y * np.exp(-1j * (w[0] + half * dw) * t)
    return _nufft1_gauss(c, dw * t, n, cfg)


# --------------------------------------------------------------------------
# flop accounting


METHODS = ("proposed", "time_domain", "freq_domain")


@dataclass(frozen=True)
class FlopReport:
    method: str
    n: int
    m: int
    l_snapshots: int
    sparsity_k: int
    total_flops: float

    CSV_HEADER = "method,n,m,l_snapshots,sparsity_k,total_flops"

    def csv_row(self) -> str:
        return (f"{self.method},{self.n},{self.m},{self.l_snapshots},"
                f"{self.sparsity_k},{self.total_flops:.6e}")


def flops(method: str, n: int, m: int = 1, l_snapshots: int = 1, sparsity_k: int = 1) -> FlopReport:
    """Closed-form operation counts with base-2 logarithms.

    proposed:    (k+1) N log N + (6N-3) log(2N-1) + (2N-1)
    time_domain: L M^2 + N M^2 + (2N-1) log(2N-1)
    freq_domain: M log M + L M^2 + N M^2
    """
    for name, v in (("n", n), ("m", m), ("l_snapshots", l_snapshots), ("sparsity_k", sparsity_k)):
        if v < 1:
            raise ValueError(f"{name} must be positive, got {v}")
    lg = math.log2
    if method == "proposed":
        total = (sparsity_k + 1) * n * lg(n) + (6 * n - 3) * lg(2 * n - 1) + (2 * n - 1)
    elif method == "time_domain":
        total = l_snapshots * m**2 + n * m**2 + (2 * n - 1) * lg(2 * n - 1)
    elif method == "freq_domain":
        total = m * lg(m) + l_snapshots * m**2 + n * m**2
    else:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    return FlopReport(method, n, m, l_snapshots, sparsity_k, float(total))
