"""
Framing, noise tracking and cross-correlation of microphone-array frames.

Correlations follow the convention

    R_ij(tau) = sum_n x_i[n] x_j[n - tau]        (circular in n - tau)

so ``R_ij`` peaks at the lag by which channel ``i`` lags channel ``j``.
The plain FFT path returns ``irfft(X_i conj(X_j))``, which equals that sum
exactly (the 1/N of the inverse DFT cancels the N of the cross-spectrum). The
whitened and weighted forms are the bare sums over all N bins,
``sum_k G(k) exp(2j pi k tau / N)`` = ``N * irfft(G)``, so identical unit-magnitude
spectra give N at lag 0.

Spectra are stored one-sided (``rfft``, N//2 + 1 bins); the negative-frequency
half is the complex conjugate mirror and is implied by ``irfft``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import get_window

WEIGHT_FLOOR = 0.1
RATIO_CAP = 1e6
DEFAULT_FLOOR_REL = 1e-12


# --------------------------------------------------------------------------- #
# Framing
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class FrameConfig:
    """Frame size, sample rate and taper for the analysis front end.

    Frames always advance by half a frame (50 % overlap).
    """

    frame_size: int = 1024
    sample_rate: float = 48000.0
    window: str = "hann"
    overlap: float = 0.5

    def __post_init__(self):
        n = self.frame_size
        if n < 64 or n & (n - 1):
            raise ValueError(f"frame_size must be a power of two >= 64, got {n}")
        if self.overlap != 0.5:
            raise ValueError(f"overlap is fixed at 0.5, got {self.overlap}")
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")

    @property
    def hop(self) -> int:
        return self.frame_size // 2

    @property
    def n_bins(self) -> int:
        return self.frame_size // 2 + 1

    def taper(self) -> np.ndarray:
        # periodic variant: exact 50 % overlap-add for Hann
        return get_window(self.window, self.frame_size, fftbins=True)


@dataclass(frozen=True)
class Frame:
    """One block of ``frame_size`` samples per microphone and its spectra.

    Attributes
    ----------
    index : int
        Frame counter, starting at 0.
    start : int
        Sample offset of the first sample of the block.
    channels : ndarray, shape (n_mics, N)
        Raw (untapered) sample blocks.
    spectra : ndarray, shape (n_mics, N//2 + 1), complex
        ``rfft`` of each tapered block.
    """

    index: int
    start: int
    channels: np.ndarray
    spectra: np.ndarray

    @property
    def frame_size(self) -> int:
        return self.channels.shape[1]

    def mean_psd(self) -> np.ndarray:
        """Arithmetic mean over microphones of ``|X_i(k)|**2``."""
        return np.mean(np.abs(self.spectra) ** 2, axis=0)

    def mean_power(self) -> float:
        return float(np.mean(np.abs(self.spectra) ** 2))


def _as_channels(samples) -> np.ndarray:
    if isinstance(samples, np.ndarray):
        arr = np.asarray(samples, dtype=float)
        if arr.ndim != 2:
            raise ValueError(f"expected (n_mics, n_samples) array, got shape {arr.shape}")
    else:
        chans = [np.asarray(c, dtype=float).ravel() for c in samples]
        lengths = {len(c) for c in chans}
        if len(lengths) > 1:
            raise ValueError(f"channel length mismatch: lengths {sorted(lengths)}")
        arr = np.vstack(chans) if chans else np.empty((0, 0))
    if arr.shape[0] < 2:
        raise ValueError(f"need at least 2 channels, got {arr.shape[0]}")
    return arr


def frame_stream(samples, cfg: FrameConfig) -> Iterator[Frame]:
    """Cut multichannel samples into tapered, half-overlapping frames.

    Parameters
    ----------
    samples : ndarray (n_mics, n_samples) or sequence of 1-D sequences
        Per-channel sample streams of identical length.
    cfg : FrameConfig

    Returns
    -------
    iterator of Frame
        Frames start every ``cfg.hop`` samples; a trailing partial block is
        dropped.

    Raises
    ------
    ValueError
        Mismatched channel lengths, fewer than 2 channels, or fewer samples
        than one frame.
    """
    data = _as_channels(samples)
    n = cfg.frame_size
    if data.shape[1] < n:
        raise ValueError(f"need at least {n} samples per channel, got {data.shape[1]}")
    return _iter_frames(data, cfg)


def _iter_frames(data: np.ndarray, cfg: FrameConfig) -> Iterator[Frame]:
    n, hop = cfg.frame_size, cfg.hop
    taper = cfg.taper()
    n_frames = (data.shape[1] - n) // hop + 1
    for idx in range(n_frames):
        start = idx * hop
        block = data[:, start:start + n]
        yield Frame(idx, start, block, np.fft.rfft(block * taper, axis=1))


def count_frames(n_samples: int, cfg: FrameConfig) -> int:
    if n_samples < cfg.frame_size:
        return 0
    return (n_samples - cfg.frame_size) // cfg.hop + 1


# --------------------------------------------------------------------------- #
# Cross-correlation
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class CrossCorrelation:
    """Lag-domain coherence for one microphone pair.

    ``values[k]`` holds the correlation at lag ``k - tau_max``.
    """

    pair: Tuple[int, int]
    values: np.ndarray
    tau_max: int
    kind: str

    @property
    def lags(self) -> np.ndarray:
        return np.arange(-self.tau_max, self.tau_max + 1)

    def at(self, lag: int) -> float:
        if abs(lag) > self.tau_max:
            raise IndexError(f"lag {lag} outside +/-{self.tau_max}")
        return float(self.values[lag + self.tau_max])

    def argmax(self) -> int:
        return int(np.argmax(self.values)) - self.tau_max


def _window_lags(full: np.ndarray, tau_max: Optional[int]) -> Tuple[np.ndarray, int]:
    n = full.shape[-1]
    if tau_max is None:
        tau_max = n // 2 - 1
    if not 0 <= tau_max <= (n - 1) // 2:
        raise ValueError(f"tau_max={tau_max} does not fit a length-{n} correlation")
    if tau_max == 0:
        return full[..., :1].copy(), 0
    return np.concatenate([full[..., -tau_max:], full[..., :tau_max + 1]], axis=-1), tau_max


def crosscorr_plain_time(xi, xj, tau_max: Optional[int] = None,
                         pair: Tuple[int, int] = (0, 1)) -> CrossCorrelation:
    """Direct O(N^2) circular cross-correlation; reference for the FFT path."""
    xi = np.asarray(xi, dtype=float)
    xj = np.asarray(xj, dtype=float)
    if xi.shape != xj.shape or xi.ndim != 1:
        raise ValueError(f"length mismatch: {xi.shape} vs {xj.shape}")
    n = xi.size
    taus = np.arange(n)
    # row tau holds x_j[n - tau] for every n
    shifted = xj[(np.arange(n)[None, :] - taus[:, None]) % n]
    full = shifted @ xi
    values, tau_max = _window_lags(full, tau_max)
    return CrossCorrelation(pair, values, tau_max, "plain")


def _check_spectra(Xi: np.ndarray, Xj: np.ndarray, n: Optional[int]) -> int:
    if Xi.shape != Xj.shape:
        raise ValueError(f"spectrum length mismatch: {Xi.shape} vs {Xj.shape}")
    if n is None:
        n = 2 * (Xi.shape[-1] - 1)
    if n // 2 + 1 != Xi.shape[-1]:
        raise ValueError(f"{Xi.shape[-1]} bins is not a one-sided spectrum of length {n}")
    return n


def crosscorr_plain_fft(Xi, Xj, tau_max: Optional[int] = None, n: Optional[int] = None,
                        pair: Tuple[int, int] = (0, 1)) -> CrossCorrelation:
    """Plain cross-correlation from one-sided spectra in O(N log N)."""
    Xi = np.asarray(Xi, dtype=complex)
    Xj = np.asarray(Xj, dtype=complex)
    n = _check_spectra(Xi, Xj, n)
    full = np.fft.irfft(Xi * np.conj(Xj), n=n)
    values, tau_max = _window_lags(full, tau_max)
    return CrossCorrelation(pair, values, tau_max, "plain")


def default_floor(*spectra: np.ndarray) -> float:
    """Whitening guard: ``1e-12`` times the mean bin power of the given spectra."""
    power = np.mean([np.mean(np.abs(s) ** 2) for s in spectra])
    return DEFAULT_FLOOR_REL * float(power)


def normalized_cross_spectrum(Xi, Xj, floor_eps: float) -> np.ndarray:
    """``X_i X_j^* / (|X_i||X_j|)``, zero wherever ``|X_i||X_j| <= floor_eps``.

    Broadcasts over leading axes.
    """
    cross = Xi * np.conj(Xj)
    mag = np.abs(Xi) * np.abs(Xj)
    keep = mag > floor_eps
    out = np.zeros_like(cross)
    np.divide(cross, mag, out=out, where=keep)
    return out


def crosscorr_whitened(Xi, Xj, floor_eps: Optional[float] = None,
                       tau_max: Optional[int] = None, n: Optional[int] = None,
                       pair: Tuple[int, int] = (0, 1)) -> CrossCorrelation:
    """Whitened (phase-only) cross-correlation.

    Every bin whose magnitude product exceeds ``floor_eps`` contributes a unit
    magnitude term; the rest contribute nothing.
    """
    return _weighted(Xi, Xj, None, floor_eps, tau_max, n, pair, "whitened")


def crosscorr_weighted(Xi, Xj, w_e, floor_eps: Optional[float] = None,
                       tau_max: Optional[int] = None, n: Optional[int] = None,
                       pair: Tuple[int, int] = (0, 1)) -> CrossCorrelation:
    """Whitened cross-correlation with each bin scaled by ``w_e(k)**2``."""
    w_e = np.asarray(w_e, dtype=float)
    if w_e.shape != np.shape(Xi)[-1:]:
        raise ValueError(f"weight shape {w_e.shape} does not match spectrum {np.shape(Xi)}")
    return _weighted(Xi, Xj, w_e, floor_eps, tau_max, n, pair, "weighted")


def _weighted(Xi, Xj, w_e, floor_eps, tau_max, n, pair, kind) -> CrossCorrelation:
    Xi = np.asarray(Xi, dtype=complex)
    Xj = np.asarray(Xj, dtype=complex)
    n = _check_spectra(Xi, Xj, n)
    if floor_eps is None:
        floor_eps = default_floor(Xi, Xj)
    G = normalized_cross_spectrum(Xi, Xj, floor_eps)
    if w_e is not None:
        G = G * (w_e * w_e)
    full = n * np.fft.irfft(G, n=n)
    values, tau_max = _window_lags(full, tau_max)
    return CrossCorrelation(pair, values, tau_max, kind)


def weighted_pair_correlations(spectra: np.ndarray, pairs: Sequence[Tuple[int, int]],
                               w_e: Optional[np.ndarray], floor_eps: float,
                               tau_max: Sequence[int]) -> list:
    """Weighted correlations for many pairs of one frame in a single batch.

    Bitwise identical to calling :func:`crosscorr_weighted` pair by pair.
    """
    n = 2 * (spectra.shape[1] - 1)
    ii = np.array([p[0] for p in pairs])
    jj = np.array([p[1] for p in pairs])
    G = normalized_cross_spectrum(spectra[ii], spectra[jj], floor_eps)
    if w_e is not None:
        G = G * (w_e * w_e)
    full = n * np.fft.irfft(G, n=n, axis=1)
    kind = "whitened" if w_e is None else "weighted"
    out = []
    for row, pair, tm in zip(full, pairs, tau_max):
        values, tm = _window_lags(row, tm)
        out.append(CrossCorrelation(tuple(pair), values, tm, kind))
    return out


# --------------------------------------------------------------------------- #
# Noise estimate and spectral weights
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class NoiseState:
    """Recursive noise power estimate and weighting parameters.

    ``frames_seen`` counts updates. While it is below ``warmup_frames`` the
    estimate is the plain running mean of the frames seen so far, and
    :attr:`warming_up` is true.
    """

    noise_psd: np.ndarray
    alpha: float = 0.4
    gamma: float = 0.3
    rate: float = 0.05
    warmup_frames: int = 10
    frames_seen: int = 0

    def __post_init__(self):
        if np.any(np.asarray(self.noise_psd) < 0):
            raise ValueError("noise_psd entries must be non-negative")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not 0 < self.rate <= 1:
            raise ValueError(f"rate must lie in (0, 1], got {self.rate}")
        if self.warmup_frames < 0:
            raise ValueError("warmup_frames must be >= 0")

    @classmethod
    def initial(cls, n_bins: int, **params) -> "NoiseState":
        return cls(np.zeros(n_bins), **params)

    @property
    def warming_up(self) -> bool:
        return self.frames_seen < self.warmup_frames


def update_noise(state: NoiseState, mean_psd) -> NoiseState:
    """Fold one frame's mean power spectrum into the noise estimate.

    Past the warm-up, ``X_n <- (1 - rate) X_n + rate X``.
    """
    X = np.asarray(mean_psd, dtype=float)
    if X.shape != state.noise_psd.shape:
        raise ValueError(f"psd shape {X.shape} != noise estimate {state.noise_psd.shape}")
    if np.any(X < 0):
        raise ValueError("mean_psd must be non-negative")
    if state.warming_up:
        k = state.frames_seen
        new = state.noise_psd + (X - state.noise_psd) / (k + 1)
    else:
        new = (1.0 - state.rate) * state.noise_psd + state.rate * X
    return replace(state, noise_psd=new, frames_seen=state.frames_seen + 1)


def noise_mask_weight(mean_psd, state: NoiseState) -> np.ndarray:
    """``w(k) = max(0.1, (X - alpha X_n) / X)``; zero-power bins get 0.1."""
    X = np.asarray(mean_psd, dtype=float)
    raw = np.full_like(X, -np.inf)
    np.divide(X - state.alpha * state.noise_psd, X, out=raw, where=X > 0)
    return np.maximum(WEIGHT_FLOOR, raw)


def enhanced_weight(w, mean_psd, state: NoiseState) -> np.ndarray:
    """Boost ``w`` by ``(X / X_n)**gamma`` in bins where ``X > X_n``.

    Where ``X_n == 0`` and ``X > 0`` the ratio is taken as ``1e6``.
    """
    w = np.asarray(w, dtype=float)
    X = np.asarray(mean_psd, dtype=float)
    Xn = state.noise_psd
    ratio = np.full_like(X, RATIO_CAP)
    np.divide(X, Xn, out=ratio, where=Xn > 0)
    boost = X > Xn
    out = w.copy()
    out[boost] = w[boost] * ratio[boost] ** state.gamma
    return out
