"""
Far-field direction from a delay set.

For a plane wave arriving from unit direction ``u``, the delay between the
reference microphone and microphone ``i`` satisfies

    u . (m_i - m_0) = c * TDOA(0, i)

Stacking the N-1 equations gives an over-determined (N-1) x 3 system solved
once-for-all with a left pseudo-inverse. The raw solution is normalized, which
both absorbs near-field shrinkage of ``|u|`` and cancels ``c``.

Angle convention: x forward, y left, z up; azimuth = atan2(y, x), elevation =
asin(z), both in degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.spatial import ConvexHull

from .tdoa import TdoaSet

SPEED_OF_SOUND = 343.0
DEFAULT_SAMPLE_RATE = 48000.0
DEGENERATE_NORM = 1e-6


class GeometryError(ValueError):
    """Microphone layout cannot resolve a 3-D direction."""


class DegenerateDirection(ValueError):
    """The delay set maps to (nearly) the zero vector."""


@dataclass(frozen=True)
class ArrayGeometry:
    """Microphone positions plus the precomputed direction solver.

    Build with :func:`build_geometry`, which validates the layout.
    """

    mic_positions: np.ndarray
    diff_matrix: np.ndarray
    pinv: np.ndarray
    speed_of_sound: float = SPEED_OF_SOUND
    sample_rate: float = DEFAULT_SAMPLE_RATE

    @property
    def n_mics(self) -> int:
        return self.mic_positions.shape[0]

    @property
    def center(self) -> np.ndarray:
        return self.mic_positions.mean(axis=0)

    @property
    def aperture(self) -> float:
        d = self.mic_positions[:, None, :] - self.mic_positions[None, :, :]
        return float(np.linalg.norm(d, axis=-1).max())

    def pairs(self):
        n = self.n_mics
        return [(i, j) for i in range(n) for j in range(i + 1, n)]

    def max_lag(self, i: int, j: int) -> int:
        """Largest physically possible |TDOA(i, j)| in whole samples."""
        baseline = np.linalg.norm(self.mic_positions[j] - self.mic_positions[i])
        return int(math.ceil(baseline * self.sample_rate / self.speed_of_sound - 1e-9))

    def farfield_delays(self, u) -> np.ndarray:
        """Exact plane-wave ``TDOA(0, i)``, i = 1..N-1, in (fractional) samples."""
        u = np.asarray(u, dtype=float)
        return self.diff_matrix @ u.T * (self.sample_rate / self.speed_of_sound)

    def source_delays(self, position) -> np.ndarray:
        """Exact spherical-wave ``TDOA(0, i)`` for a point source, in samples.

        ``position`` may be one point or an (n, 3) batch; the batch gives an
        (n, N-1) result.
        """
        p = np.asarray(position, dtype=float)
        dist = np.linalg.norm(p[..., None, :] - self.mic_positions, axis=-1)
        t = dist * (self.sample_rate / self.speed_of_sound)
        return t[..., :1] - t[..., 1:]

    def hull(self) -> ConvexHull:
        return ConvexHull(self.mic_positions)

    def contains(self, point) -> bool:
        """True if ``point`` lies strictly inside the convex hull of the microphones."""
        eq = self.hull().equations
        p = np.asarray(point, dtype=float)
        return bool(np.all(eq[:, :3] @ p + eq[:, 3] < -1e-12))

    def inner_radius(self) -> float:
        """Distance from the array centre to the nearest hull face."""
        eq = self.hull().equations
        return float(np.min(-(eq[:, :3] @ self.center + eq[:, 3])))


def build_geometry(mic_positions, speed_of_sound: float = SPEED_OF_SOUND,
                   sample_rate: float = DEFAULT_SAMPLE_RATE) -> ArrayGeometry:
    """Validate a microphone layout and precompute its pseudo-inverse.

    Raises
    ------
    GeometryError
        Fewer than 4 microphones, non-finite coordinates, or a layout whose
        difference vectors do not span 3-D (coplanar or coincident mics).
    """
    pos = np.asarray(mic_positions, dtype=float)
    if pos.ndim != 2 or pos.shape[1] != 3:
        raise GeometryError(f"microphone positions must be (N, 3), got shape {pos.shape}")
    if pos.shape[0] < 4:
        raise GeometryError(f"need at least 4 microphones, got {pos.shape[0]}")
    if not np.all(np.isfinite(pos)):
        raise GeometryError("microphone positions must be finite")
    if not (speed_of_sound > 0 and sample_rate > 0):
        raise GeometryError("speed_of_sound and sample_rate must be positive")
    diff = pos[1:] - pos[0]
    rank = np.linalg.matrix_rank(diff)
    if rank < 3:
        raise GeometryError(
            f"microphone difference matrix has rank {rank} < 3 "
            "(microphones coplanar or coincident)")
    # rank 3 is guaranteed here, so the 3x3 normal matrix is invertible
    pinv = np.linalg.inv(diff.T @ diff) @ diff.T
    pos.setflags(write=False)
    diff.setflags(write=False)
    pinv.setflags(write=False)
    return ArrayGeometry(pos, diff, pinv, float(speed_of_sound), float(sample_rate))


def prism_geometry(dims: Sequence[float] = (0.50, 0.40, 0.36), **kwargs) -> ArrayGeometry:
    """Eight microphones on the corners of a box centred at the origin."""
    hx, hy, hz = (0.5 * d for d in dims)
    corners = [(sx * hx, sy * hy, sz * hz)
               for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)]
    return build_geometry(corners, **kwargs)


@dataclass(frozen=True)
class DirectionEstimate:
    u: np.ndarray
    azimuth: float
    elevation: float
    raw_norm: float
    score: float = float("nan")


def solve_direction(geom: ArrayGeometry,
                    tdoas: Union[TdoaSet, Sequence[float], np.ndarray]) -> DirectionEstimate:
    """Least-squares unit direction from N-1 delays (samples) against mic 0.

    Raises
    ------
    DegenerateDirection
        When the raw solution has norm below 1e-6 (e.g. all delays zero).
    """
    if isinstance(tdoas, TdoaSet):
        delays = np.asarray(tdoas.delays, dtype=float)
        score = tdoas.score
    else:
        delays = np.asarray(tdoas, dtype=float)
        score = float("nan")
    if delays.shape != (geom.n_mics - 1,):
        raise ValueError(f"expected {geom.n_mics - 1} delays, got shape {delays.shape}")
    rhs = geom.speed_of_sound * delays / geom.sample_rate
    raw = geom.pinv @ rhs
    norm = float(np.linalg.norm(raw))
    if norm < DEGENERATE_NORM:
        raise DegenerateDirection(f"direction vector norm {norm:.3g} is degenerate")
    u = raw / norm
    az, el = direction_to_angles(u)
    return DirectionEstimate(u, az, el, norm, score)


def direction_to_angles(u) -> Tuple[float, float]:
    """Azimuth in (-180, 180] and elevation in [-90, 90], degrees."""
    u = np.asarray(u, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) > 1e-6:
        raise ValueError(f"expected a unit vector, got norm {np.linalg.norm(u):.6g}")
    x, y, z = u
    if math.hypot(x, y) < 1e-12:
        az = 0.0
    else:
        az = math.degrees(math.atan2(y, x))
        if az <= -180.0:
            az = 180.0
    el = math.degrees(math.asin(max(-1.0, min(1.0, z))))
    return az, el


def angles_to_direction(azimuth: float, elevation: float) -> np.ndarray:
    az, el = math.radians(azimuth), math.radians(elevation)
    return np.array([math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)])


def angular_error(u, v) -> np.ndarray:
    """Angle in degrees between direction vectors (row-wise for 2-D input)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    # atan2 form keeps full precision for nearly parallel vectors
    cross = np.linalg.norm(np.cross(u, v), axis=-1)
    return np.degrees(np.arctan2(cross, np.sum(u * v, axis=-1)))


def random_directions(n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` unit vectors uniform on the sphere."""
    d = rng.standard_normal((n, 3))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def nearfield_error_curve(geom: ArrayGeometry, distances: Sequence[float], trials: int = 500,
                          seed: int = 0, quantize: bool = True) -> np.ndarray:
    """Mean angular error of the far-field solver for point sources at each distance.

    The same ``trials`` directions, uniform on the sphere, are reused at every
    distance. Delays come from exact spherical propagation, rounded to whole
    samples when ``quantize`` is set; the error is measured against the
    direction from the array centre to the source.

    Raises
    ------
    ValueError
        A distance that places every source inside the microphone hull
        (closer to the centre than the nearest hull face).
    """
    rmin = geom.inner_radius()
    dirs = random_directions(trials, np.random.default_rng(seed))
    out = []
    for r in distances:
        if not r > rmin:
            raise ValueError(f"distance {r} m lies inside the array hull (inner radius {rmin:.3f} m)")
        delays = geom.source_delays(geom.center + r * dirs)
        if quantize:
            delays = np.round(delays)
        est = np.array([solve_direction(geom, d).u for d in delays])
        out.append(float(np.mean(angular_error(est, dirs))))
    return np.array(out)
