"""Simulated reproductions: distance/elevation error table, near-field curve, throughput."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .geometry import ArrayGeometry, angular_error, nearfield_error_curve
from .pipeline import Localizer, LocalizerConfig
from .simulate import Echo, Scene, position_from_angles, render

# (distance m, elevation deg, measured mean error deg) from the hardware trials
TABLE1_ROWS: Tuple[Tuple[float, float, float], ...] = (
    (3.0, -7.0, 1.7),
    (3.0, 8.0, 3.0),
    (1.5, -13.0, 3.1),
    (0.9, 24.0, 3.3),
)

NEARFIELD_DISTANCES = (0.25, 0.3, 0.35, 0.4, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0)


@dataclass
class SceneResult:
    frames: int
    detections: int
    errors: np.ndarray

    @property
    def detection_rate(self) -> float:
        return self.detections / self.frames if self.frames else 0.0

    @property
    def mean_error(self) -> float:
        return float(np.mean(self.errors)) if self.errors.size else float("nan")


def run_scene(geom: ArrayGeometry, scene: Scene, duration: float,
              config: LocalizerConfig = LocalizerConfig()) -> SceneResult:
    """Render a scene, localize it, and score detections against the true direction."""
    x = render(scene, geom, duration)
    loc = Localizer(geom, config)
    results = list(loc.run(x))
    scored = [r for r in results if not r.frame_index < config.warmup_frames]
    truth = np.asarray(scene.source_position, dtype=float) - geom.center
    errs = np.array([angular_error(r.direction.u, truth) for r in scored if r.detected])
    return SceneResult(len(scored), len(errs), errs)


@dataclass
class Table1Row:
    distance: float
    elevation: float
    reported_error: float
    mean_error: float
    detections: int
    frames: int


def table1(geom: ArrayGeometry, snr_db: float = 15.0, azimuth_step: float = 30.0,
           duration: float = 0.5, signal_kind: str = "white", echoes: Sequence[Echo] = (),
           seed: int = 0, config: LocalizerConfig = LocalizerConfig(),
           rows=TABLE1_ROWS) -> List[Table1Row]:
    """Mean angular error per (distance, elevation), averaged over an azimuth sweep.

    Every detection of every azimuth counts once in the mean.
    """
    out = []
    azimuths = np.arange(0.0, 360.0, azimuth_step)
    for r_idx, (dist, elev, reported) in enumerate(rows):
        errs, frames = [], 0
        for a_idx, az in enumerate(azimuths):
            pos = position_from_angles(dist, az, elev, geom.center)
            scene = Scene(tuple(pos), signal_kind, snr_db, tuple(echoes),
                          seed=seed + 1000 * r_idx + a_idx)
            res = run_scene(geom, scene, duration, config)
            errs.append(res.errors)
            frames += res.frames
        errs = np.concatenate(errs)
        mean = float(errs.mean()) if errs.size else float("nan")
        out.append(Table1Row(dist, elev, reported, mean, int(errs.size), frames))
    return out


def nearfield(geom: ArrayGeometry, distances: Sequence[float] = NEARFIELD_DISTANCES,
              trials: int = 500, seed: int = 0) -> List[Tuple[float, float]]:
    errs = nearfield_error_curve(geom, distances, trials, seed)
    return list(zip(map(float, distances), map(float, errs)))


@dataclass
class BenchResult:
    frames: int
    seconds: float
    required_fps: float

    @property
    def fps(self) -> float:
        return self.frames / self.seconds

    @property
    def realtime_factor(self) -> float:
        return self.fps / self.required_fps


def bench(geom: ArrayGeometry, config: LocalizerConfig = LocalizerConfig(),
          duration: float = 2.0, seed: int = 0, snr_db: float = 10.0) -> BenchResult:
    """Time the full pipeline on a simulated white source at 3 m.

    Real time means keeping up with one hop of new samples per frame, i.e.
    ``fs / (N / 2)`` frames per second.
    """
    pos = position_from_angles(3.0, 30.0, 10.0, geom.center)
    x = render(Scene(tuple(pos), "white", snr_db, seed=seed), geom, duration)
    loc = Localizer(geom, config)
    t0 = time.perf_counter()
    n = sum(1 for _ in loc.run(x))
    dt = time.perf_counter() - t0
    return BenchResult(n, dt, geom.sample_rate / (config.frame_size / 2))
