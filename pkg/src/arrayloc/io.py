"""
File formats: multichannel WAV, array geometry config, detection records, CSV tables.

Geometry config (JSON, lengths in metres)::

    {
      "units": "m",
      "microphones": [[x, y, z], ...],
      "speed_of_sound": 343.0,      # optional
      "sample_rate": 48000          # optional
    }

Detections are JSON Lines, one :class:`DetectionRecord` per line.
"""

from __future__ import annotations

import csv
import json
import os
import struct
import warnings
from dataclasses import asdict, dataclass
from typing import IO, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.io import wavfile

from .geometry import (DEFAULT_SAMPLE_RATE, SPEED_OF_SOUND, ArrayGeometry, DirectionEstimate,
                       build_geometry)
from .tdoa import TdoaSet


class AudioFormatError(ValueError):
    pass


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------- #
# WAV
# --------------------------------------------------------------------------- #

_INT_SCALE = {np.dtype(np.int16): 2.0 ** 15, np.dtype(np.int32): 2.0 ** 31}


def _check_riff_complete(path) -> None:
    size = os.path.getsize(path)
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) < 12 or head[:4] not in (b"RIFF", b"RIFX") or head[8:12] != b"WAVE":
            raise AudioFormatError(f"{path}: not a RIFF/WAVE file")
        fmt = "<I" if head[:4] == b"RIFF" else ">I"
        pos = 12
        while True:
            hdr = fh.read(8)
            if len(hdr) < 8:
                raise AudioFormatError(f"{path}: truncated file, no complete data chunk")
            (chunk_size,) = struct.unpack(fmt, hdr[4:])
            if hdr[:4] == b"data":
                if pos + 8 + chunk_size > size:
                    raise AudioFormatError(
                        f"{path}: truncated file, data chunk declares {chunk_size} bytes, "
                        f"{size - pos - 8} present")
                return
            pos += 8 + chunk_size + (chunk_size & 1)
            fh.seek(pos)


def read_multichannel_wav(path) -> Tuple[np.ndarray, float]:
    """Read a PCM/float WAV as ``(channels, sample_rate)``.

    Returns
    -------
    samples : ndarray, shape (n_channels, n_samples), float64 in [-1, 1]
    fs : float

    Raises
    ------
    AudioFormatError
        Unsupported sample encoding (only 16/24/32-bit integer and 32-bit float
        are read), a truncated file, or fewer than 2 channels.
    """
    _check_riff_complete(path)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", wavfile.WavFileWarning)
            fs, data = wavfile.read(path)
    except (ValueError, struct.error, EOFError, wavfile.WavFileWarning) as exc:
        raise AudioFormatError(f"{path}: {exc}") from exc
    if data.ndim == 1:
        raise AudioFormatError(f"{path}: need >= 2 channels, file is mono")
    if data.dtype in _INT_SCALE:
        # 24-bit PCM comes back left-justified in int32
        out = data.astype(np.float64) / _INT_SCALE[data.dtype]
    elif data.dtype == np.float32:
        out = data.astype(np.float64)
    else:
        raise AudioFormatError(f"{path}: unsupported sample encoding {data.dtype}")
    return np.ascontiguousarray(out.T), float(fs)


def write_multichannel_wav(path, samples, sample_rate: float, encoding: str = "float32") -> None:
    """Write (n_channels, n_samples) data as WAV; ``encoding`` is 'float32' or 'int16'."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"expected (n_channels, n_samples), got shape {x.shape}")
    if encoding == "float32":
        data = x.T.astype(np.float32)
    elif encoding == "int16":
        data = np.clip(np.round(x.T * 2.0 ** 15), -2 ** 15, 2 ** 15 - 1).astype(np.int16)
    else:
        raise ValueError(f"unsupported encoding {encoding!r}")
    wavfile.write(path, int(round(sample_rate)), data)


# --------------------------------------------------------------------------- #
# Geometry config
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class GeometryConfig:
    mic_positions: np.ndarray
    speed_of_sound: float = SPEED_OF_SOUND
    sample_rate: float = DEFAULT_SAMPLE_RATE

    def build(self, sample_rate: Optional[float] = None,
              speed_of_sound: Optional[float] = None) -> ArrayGeometry:
        return build_geometry(self.mic_positions,
                              speed_of_sound or self.speed_of_sound,
                              sample_rate or self.sample_rate)


def read_geometry_config(path) -> GeometryConfig:
    """Load and validate a microphone layout file.

    The layout is checked (count, finiteness, rank) before returning, so errors
    surface before any audio is touched.
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: malformed geometry file: {exc.msg}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    if not isinstance(doc, dict) or "microphones" not in doc:
        raise ConfigError(f"{path}: expected an object with a 'microphones' list")
    units = doc.get("units", "m")
    if units != "m":
        raise ConfigError(f"{path}: units must be 'm', got {units!r}")
    try:
        pos = np.array(doc["microphones"], dtype=float)
        c = float(doc.get("speed_of_sound", SPEED_OF_SOUND))
        fs = float(doc.get("sample_rate", DEFAULT_SAMPLE_RATE))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: malformed geometry file: {exc}") from exc
    if pos.ndim != 2 or pos.shape[1] != 3:
        raise ConfigError(f"{path}: 'microphones' must be a list of [x, y, z] triples")
    cfg = GeometryConfig(pos, c, fs)
    try:
        cfg.build()
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return cfg


def write_geometry_config(path, mic_positions, speed_of_sound: float = SPEED_OF_SOUND,
                          sample_rate: float = DEFAULT_SAMPLE_RATE) -> None:
    doc = {
        "units": "m",
        "microphones": np.asarray(mic_positions, dtype=float).tolist(),
        "speed_of_sound": speed_of_sound,
        "sample_rate": sample_rate,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_geometry(path, sample_rate: Optional[float] = None) -> ArrayGeometry:
    return read_geometry_config(path).build(sample_rate=sample_rate)


# --------------------------------------------------------------------------- #
# Detections
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class DetectionRecord:
    time_s: float
    azimuth_deg: float
    elevation_deg: float
    u: Tuple[float, float, float]
    raw_norm: float
    score: float
    tdoas: Tuple[int, ...]

    @classmethod
    def from_estimate(cls, time_s: float, est: DirectionEstimate, tdoas: TdoaSet) -> "DetectionRecord":
        return cls(float(time_s), est.azimuth, est.elevation,
                   tuple(float(x) for x in est.u), est.raw_norm, float(tdoas.score),
                   tuple(int(d) for d in tdoas.delays))

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, line: str) -> "DetectionRecord":
        d = json.loads(line)
        d["u"] = tuple(d["u"])
        d["tdoas"] = tuple(d["tdoas"])
        return cls(**d)

    def direction(self) -> DirectionEstimate:
        return DirectionEstimate(np.array(self.u), self.azimuth_deg, self.elevation_deg,
                                 self.raw_norm, self.score)


def write_detections(records: Iterable[DetectionRecord], fh: IO[str]) -> int:
    n = 0
    for rec in records:
        fh.write(rec.to_json() + "\n")
        n += 1
    return n


def read_detections(fh: IO[str]) -> List[DetectionRecord]:
    return [DetectionRecord.from_json(line) for line in fh if line.strip()]


def write_csv(fh: IO[str], header: Sequence[str], rows: Iterable[Sequence]) -> None:
    writer = csv.writer(fh)
    writer.writerow(header)
    writer.writerows(rows)
