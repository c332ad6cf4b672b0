"""
Synthetic multichannel recordings of a point source seen by a microphone array.

Each microphone receives the source signal delayed by its exact propagation
time (``distance / c``, applied as a frequency-domain phase shift) and scaled
by ``1 / distance``, plus optional discrete echoes and independent white noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.signal import butter, sosfilt

from .geometry import ArrayGeometry

SIGNAL_KINDS = ("white", "speech", "tone", "impulse")


@dataclass(frozen=True)
class Echo:
    """One image-source reflection.

    ``delay_ms`` is the extra path delay relative to the direct sound at the
    array centre. ``direction`` is the unit vector from the array towards the
    image source; by default the direct direction mirrored in the horizontal
    plane (a floor bounce).
    """

    delay_ms: float
    attenuation: float
    direction: Optional[Tuple[float, float, float]] = None

    def __post_init__(self):
        if not 0 < self.attenuation < 1:
            raise ValueError(f"echo attenuation must lie in (0, 1), got {self.attenuation}")
        if not self.delay_ms > 0:
            raise ValueError(f"echo delay must be positive, got {self.delay_ms} ms")


@dataclass(frozen=True)
class Scene:
    source_position: Tuple[float, float, float]
    signal_kind: str = "white"
    snr_db: float = math.inf
    echoes: Tuple[Echo, ...] = ()
    seed: int = 0
    tone_hz: float = 1000.0
    signal: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if self.signal is None and self.signal_kind not in SIGNAL_KINDS:
            raise ValueError(f"unknown signal kind {self.signal_kind!r}; expected one of {SIGNAL_KINDS}")
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ValueError(f"snr_db must be finite or +inf, got {self.snr_db}")


def fractional_delay(signal, delay: float) -> np.ndarray:
    """Circularly delay ``signal`` by ``delay`` samples (may be fractional).

    Applies the linear phase ``exp(-2j pi k delay / L)``. Integer delays are an
    exact ``np.roll``. For even ``L`` the Nyquist bin is scaled by
    ``cos(pi * delay)``, the real part of its phase factor.
    """
    x = np.asarray(signal, dtype=float)
    n = x.shape[-1]
    if not abs(delay) < n / 2:
        raise ValueError(f"|delay| = {abs(delay)} must be below half the signal length {n / 2}")
    if float(delay).is_integer():
        return np.roll(x, int(delay), axis=-1)
    k = np.arange(n // 2 + 1)
    phase = np.exp(-2j * np.pi * k * delay / n)
    return np.fft.irfft(np.fft.rfft(x, axis=-1) * phase, n=n, axis=-1)


def source_signal(kind: str, n: int, fs: float, rng: np.random.Generator,
                  tone_hz: float = 1000.0) -> np.ndarray:
    """Unit-scale test signal of ``n`` samples."""
    t = np.arange(n) / fs
    if kind == "white":
        return rng.standard_normal(n)
    if kind == "speech":
        sos = butter(4, [300.0, 4000.0], btype="bandpass", fs=fs, output="sos")
        band = sosfilt(sos, rng.standard_normal(n))
        # syllable-rate bursts, about 4 per second
        env = np.sin(2 * np.pi * 4.0 * t + rng.uniform(0, 2 * np.pi)) ** 2
        return band * env / (np.std(band * env) + 1e-300)
    if kind == "tone":
        return math.sqrt(2.0) * np.sin(2 * np.pi * tone_hz * t + rng.uniform(0, 2 * np.pi))
    if kind == "impulse":
        period = int(round(0.1 * fs))
        x = np.zeros(n)
        x[int(rng.integers(period))::period] = 1.0
        return x
    raise ValueError(f"unknown signal kind {kind!r}")


def _paths(scene: Scene, geom: ArrayGeometry):
    """(per-mic delay in samples, per-mic gain) for the direct path and each echo."""
    fs, c = geom.sample_rate, geom.speed_of_sound
    src = np.asarray(scene.source_position, dtype=float)
    dist = np.linalg.norm(src - geom.mic_positions, axis=1)
    paths = [(dist / c * fs, 1.0 / dist)]
    rel = src - geom.center
    r0 = float(np.linalg.norm(rel))
    for echo in scene.echoes:
        if echo.direction is None:
            e = rel * np.array([1.0, 1.0, -1.0]) / r0
        else:
            e = np.asarray(echo.direction, dtype=float)
            e = e / np.linalg.norm(e)
        path_len = r0 + c * echo.delay_ms * 1e-3
        offsets = (geom.mic_positions - geom.center) @ e
        delay = (path_len - offsets) / c * fs
        paths.append((delay, np.full(geom.n_mics, echo.attenuation / path_len)))
    return paths


def render(scene: Scene, geom: ArrayGeometry, duration: float) -> np.ndarray:
    """Render ``duration`` seconds of the scene, shape (n_mics, n_samples).

    The recording starts at the whole sample preceding the first arrival, so
    the common time of flight is not rendered as leading silence.

    Additive noise is white, independent per microphone, with power set so that
    the mean clean power across microphones over the render is ``snr_db``
    above it. A fixed ``scene.seed`` gives bit-identical output.

    Raises
    ------
    ValueError
        Non-positive duration, or a source inside the microphone hull.
    """
    if not duration > 0:
        raise ValueError(f"duration must be positive, got {duration}")
    if geom.contains(scene.source_position):
        raise ValueError(f"source {scene.source_position} lies inside the microphone hull")
    fs = geom.sample_rate
    n = int(round(duration * fs))
    paths = _paths(scene, geom)
    # drop the whole-sample part of the earliest arrival; relative delays stay exact
    lead = math.floor(min(float(np.min(d)) for d, _ in paths))
    paths = [(d - lead, g) for d, g in paths]
    max_delay = max(float(np.max(d)) for d, _ in paths)
    pad = int(math.ceil(max_delay)) + 64
    total = n + pad
    if total < 2 * max_delay + 2:
        total = int(2 * max_delay) + 2
    rng = np.random.default_rng(scene.seed)
    if scene.signal is not None:
        s = np.asarray(scene.signal, dtype=float)
        if s.size < total:
            s = np.concatenate([np.zeros(total - s.size), s])
        s = s[-total:]
    else:
        s = source_signal(scene.signal_kind, total, fs, rng, scene.tone_hz)

    clean = np.zeros((geom.n_mics, total))
    for delays, gains in paths:
        for m in range(geom.n_mics):
            clean[m] += gains[m] * fractional_delay(s, delays[m])
    clean = clean[:, total - n:]

    if math.isinf(scene.snr_db):
        return clean
    power = float(np.mean(clean ** 2))
    sigma = math.sqrt(power / 10.0 ** (scene.snr_db / 10.0))
    return clean + sigma * rng.standard_normal(clean.shape)


def render_noise(n_mics: int, n_samples: int, seed: int = 0, sigma: float = 1.0) -> np.ndarray:
    """Independent white noise on every channel, no source."""
    return sigma * np.random.default_rng(seed).standard_normal((n_mics, n_samples))


def position_from_angles(distance: float, azimuth: float, elevation: float,
                         center: Sequence[float] = (0.0, 0.0, 0.0)) -> np.ndarray:
    az, el = math.radians(azimuth), math.radians(elevation)
    u = np.array([math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)])
    return np.asarray(center, dtype=float) + distance * u
