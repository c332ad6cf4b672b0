"""Frame-by-frame localizer: spectra -> weights -> correlations -> delays -> direction."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, fields, replace
from typing import Iterable, List, Optional

import numpy as np

from .geometry import ArrayGeometry, DegenerateDirection, DirectionEstimate, solve_direction
from .io import DetectionRecord
from .spectral import (DEFAULT_FLOOR_REL, Frame, FrameConfig, NoiseState, enhanced_weight,
                       frame_stream, noise_mask_weight, update_noise, weighted_pair_correlations)
from .tdoa import TdoaSet, consistency_search, extract_peaks


@dataclass(frozen=True)
class LocalizerConfig:
    frame_size: int = 1024
    window: str = "hann"
    alpha: float = 0.4
    gamma: float = 0.3
    noise_rate: float = 0.05
    warmup_frames: int = 10
    num_peaks: int = 8
    min_separation: int = 2
    tol: int = 1
    gate_factor: float = 4.0
    floor_rel: float = DEFAULT_FLOOR_REL

    def __post_init__(self):
        # reuse the component validators so bad settings fail before any audio is read
        FrameConfig(self.frame_size, window=self.window).taper()
        NoiseState.initial(2, alpha=self.alpha, gamma=self.gamma, rate=self.noise_rate,
                           warmup_frames=self.warmup_frames)
        if self.num_peaks < 1 or self.min_separation < 1 or self.tol < 0:
            raise ValueError("num_peaks and min_separation must be >= 1, tol >= 0")
        if not (self.gate_factor >= 0 and self.floor_rel >= 0):
            raise ValueError("gate_factor and floor_rel must be non-negative")

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    def updated(self, **overrides) -> "LocalizerConfig":
        unknown = set(overrides) - set(self.field_names())
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class FrameResult:
    frame_index: int
    time_s: float
    tdoas: Optional[TdoaSet] = None
    direction: Optional[DirectionEstimate] = None

    @property
    def detected(self) -> bool:
        return self.direction is not None

    def record(self) -> DetectionRecord:
        return DetectionRecord.from_estimate(self.time_s, self.direction, self.tdoas)


class Localizer:
    """Streaming single-source localizer for one array.

    Holds the noise estimate, so frames must be fed in time order.
    """

    def __init__(self, geom: ArrayGeometry, config: LocalizerConfig = LocalizerConfig()):
        self.geom = geom
        self.config = config
        self.frame_cfg = FrameConfig(config.frame_size, geom.sample_rate, config.window)
        n = geom.n_mics
        self.pairs = geom.pairs()
        self.tau_max = [min(geom.max_lag(i, j), (config.frame_size - 1) // 2)
                        for i, j in self.pairs]
        self._indep = [k for k, (i, _) in enumerate(self.pairs) if i == 0]
        self._dep = [k for k, (i, _) in enumerate(self.pairs) if i > 0]
        assert len(self._indep) == n - 1
        self.reset()

    def reset(self):
        c = self.config
        self.noise = NoiseState.initial(self.frame_cfg.n_bins, alpha=c.alpha, gamma=c.gamma,
                                        rate=c.noise_rate, warmup_frames=c.warmup_frames)
        self.frame_times: List[float] = []

    def weights(self, frame: Frame) -> np.ndarray:
        """Enhanced spectral weights for ``frame``; advances the noise estimate."""
        psd = frame.mean_psd()
        w = noise_mask_weight(psd, self.noise)
        w_e = enhanced_weight(w, psd, self.noise)
        self.noise = update_noise(self.noise, psd)
        return w_e

    def process_frame(self, frame: Frame) -> FrameResult:
        t0 = time.perf_counter()
        c = self.config
        time_s = (frame.start + 0.5 * frame.frame_size) / self.geom.sample_rate
        warming = self.noise.warming_up
        w_e = self.weights(frame)
        result = FrameResult(frame.index, time_s)
        if not warming:
            result.tdoas = self._search(frame, w_e)
            if result.tdoas is not None:
                try:
                    result.direction = solve_direction(self.geom, result.tdoas)
                except DegenerateDirection:
                    result.tdoas = None
        self.frame_times.append(time.perf_counter() - t0)
        return result

    def _search(self, frame: Frame, w_e: np.ndarray) -> Optional[TdoaSet]:
        c = self.config
        floor = c.floor_rel * frame.mean_power()
        corrs = weighted_pair_correlations(frame.spectra, self.pairs, w_e, floor, self.tau_max)
        indep = [corrs[k] for k in self._indep]
        background = float(np.median(np.abs(np.concatenate([r.values for r in indep]))))
        min_score = c.gate_factor * background * len(indep)
        peaks = [extract_peaks(r, c.num_peaks, c.min_separation) for r in indep]
        dependent = {corrs[k].pair: extract_peaks(corrs[k], c.num_peaks, c.min_separation)
                     for k in self._dep}
        return consistency_search(peaks, dependent, c.tol, min_score, frame.index)

    def run(self, samples) -> Iterable[FrameResult]:
        for frame in frame_stream(samples, self.frame_cfg):
            yield self.process_frame(frame)

    def locate(self, samples) -> List[DetectionRecord]:
        """Detections for a whole recording, in time order."""
        return [r.record() for r in self.run(samples) if r.detected]

    @property
    def mean_frame_time(self) -> float:
        return float(np.mean(self.frame_times)) if self.frame_times else float("nan")
