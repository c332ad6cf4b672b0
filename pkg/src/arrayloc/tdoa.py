"""
Delay candidates per microphone pair and the consistent-set search.

Microphones are indexed from 0; microphone 0 is the reference, so a delay set
holds ``d[i] = TDOA(0, i)`` for ``i = 1 .. n_mics - 1`` and every other pair
follows as ``TDOA(i, j) = d[j] - d[i]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from .spectral import CrossCorrelation

DEFAULT_NUM_PEAKS = 8
DEFAULT_MIN_SEPARATION = 2
DEFAULT_TOL = 1


@dataclass(frozen=True)
class PeakList:
    """Up to M strongest correlation peaks of one pair, strongest first."""

    pair: Tuple[int, int]
    lags: Tuple[int, ...]
    values: Tuple[float, ...]

    def __post_init__(self):
        if len(self.lags) != len(self.values):
            raise ValueError("lags and values differ in length")
        if any(a < b for a, b in zip(self.values, self.values[1:])):
            raise ValueError("peak values must be sorted non-increasing")

    def __len__(self) -> int:
        return len(self.lags)


@dataclass(frozen=True)
class TdoaSet:
    """Delays of microphones 1..N-1 relative to microphone 0, in samples."""

    delays: Tuple[int, ...]
    score: float
    frame_index: Optional[int] = None

    @property
    def n_mics(self) -> int:
        return len(self.delays) + 1


def extract_peaks(corr: CrossCorrelation, num_peaks: int = DEFAULT_NUM_PEAKS,
                  min_separation: int = DEFAULT_MIN_SEPARATION) -> PeakList:
    """Pick the strongest local maxima of a correlation.

    A lag is a local maximum when it is strictly above its left neighbour and
    not below its right one (plateaus report their first lag). The two ends of
    the lag window count when they beat their single neighbour. Peaks are
    accepted greedily by value, skipping any closer than ``min_separation``
    lags to an already accepted peak.
    """
    if num_peaks < 1:
        raise ValueError(f"num_peaks must be >= 1, got {num_peaks}")
    v = np.asarray(corr.values, dtype=float)
    if v.size == 1:
        cand = np.array([0])
    else:
        left = np.empty(v.size, dtype=bool)
        right = np.empty(v.size, dtype=bool)
        left[0] = True
        left[1:] = v[1:] > v[:-1]
        right[-1] = v[-1] > v[-2]
        right[:-1] = v[:-1] >= v[1:]
        right[0] = v[0] > v[1]
        cand = np.flatnonzero(left & right)
    # stable sort keeps lower lags first on ties
    cand = cand[np.argsort(-v[cand], kind="stable")]
    picked = []
    for idx in cand:
        if all(abs(int(idx) - p) >= min_separation for p in picked):
            picked.append(int(idx))
            if len(picked) == num_peaks:
                break
    lags = tuple(p - corr.tau_max for p in picked)
    values = tuple(float(v[p]) for p in picked)
    return PeakList(tuple(corr.pair), lags, values)


def dependent_delay(tdoas: TdoaSet, i: int, j: int) -> int:
    """``TDOA(i, j) = d[j] - d[i]`` with ``d[0] = 0``."""
    n = tdoas.n_mics
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"microphone index out of range 0..{n - 1}: ({i}, {j})")
    if i == j:
        raise ValueError(f"dependent delay needs two distinct microphones, got i = j = {i}")
    d = (0,) + tuple(tdoas.delays)
    return d[j] - d[i]


def _allowed_lags(peaks: PeakList, tol: int) -> frozenset:
    return frozenset(lag + t for lag in peaks.lags for t in range(-tol, tol + 1))


def _check_inputs(peaklists: Sequence[PeakList], dependent: Mapping[Tuple[int, int], PeakList]):
    n_indep = len(peaklists)
    if n_indep < 1:
        raise ValueError("need at least one independent pair")
    for k, pl in enumerate(peaklists):
        if tuple(pl.pair) != (0, k + 1):
            raise ValueError(f"peaklists[{k}] must hold pair (0, {k + 1}), got {pl.pair}")
    needed = {(i, j) for i in range(1, n_indep + 1) for j in range(i + 1, n_indep + 1)}
    missing = needed - set(dependent)
    if missing:
        raise ValueError(f"missing dependent pairs {sorted(missing)}")


def consistency_search(peaklists: Sequence[PeakList],
                       dependent: Mapping[Tuple[int, int], PeakList],
                       tol: int = DEFAULT_TOL,
                       min_score: float = -math.inf,
                       frame_index: Optional[int] = None) -> Optional[TdoaSet]:
    """Best-scoring delay set whose implied pair delays all match observed peaks.

    Parameters
    ----------
    peaklists : sequence of PeakList
        ``peaklists[k]`` holds the candidates for pair ``(0, k + 1)``.
    dependent : mapping (i, j) -> PeakList
        Peaks of the correlation of every pair ``1 <= i < j``.
    tol : int
        A derived delay ``d[j] - d[i]`` is consistent if it lies within
        ``tol`` lags of some peak of pair ``(i, j)``.
    min_score : float
        Sets whose summed peak value does not exceed this are rejected.

    Returns
    -------
    TdoaSet or None
        The consistent combination with the greatest summed value, or None.
        Ties go to the combination that comes first when each list is walked
        strongest-first, lists nested in pair order.

    Notes
    -----
    Depth-first over pairs with candidates strongest-first. A branch is cut
    when its partial score plus the best remaining values cannot beat the
    incumbent, and as soon as a pair constraint fails, so the result equals
    that of full enumeration of all M**(N-1) combinations.
    """
    _check_inputs(peaklists, dependent)
    n_indep = len(peaklists)
    if any(len(pl) == 0 for pl in peaklists):
        return None

    allowed: Dict[Tuple[int, int], frozenset] = {
        key: _allowed_lags(pl, tol) for key, pl in dependent.items()
    }
    lags = [list(pl.lags) for pl in peaklists]
    vals = [list(pl.values) for pl in peaklists]
    suffix = [0.0] * (n_indep + 1)
    for k in range(n_indep - 1, -1, -1):
        suffix[k] = suffix[k + 1] + vals[k][0]
    # per-level list of the constraint sets linking mic k+1 to each earlier mic
    links = [[allowed[(m + 1, k + 1)] for m in range(k)] for k in range(n_indep)]

    best_score = min_score
    best_set: Optional[Tuple[int, ...]] = None
    chosen = [0] * n_indep

    def cutoff() -> float:
        # float slack so rounding in the bound can never prune an exact winner
        if math.isinf(best_score):
            return best_score
        return best_score - 1e-9 * (1.0 + abs(best_score))

    def descend(level: int, partial: float):
        nonlocal best_score, best_set
        if level == n_indep:
            if partial > best_score:
                best_score, best_set = partial, tuple(chosen)
            return
        rest = suffix[level + 1]
        prior = links[level]
        for lag, val in zip(lags[level], vals[level]):
            if partial + val + rest < cutoff():
                break
            if all(lag - chosen[m] in prior[m] for m in range(level)):
                chosen[level] = lag
                descend(level + 1, partial + val)

    descend(0, 0.0)
    if best_set is None:
        return None
    return TdoaSet(best_set, best_score, frame_index)


def verify_tdoa_set(tdoas: TdoaSet, dependent: Mapping[Tuple[int, int], PeakList],
                    tol: int = DEFAULT_TOL) -> bool:
    """Check every dependent pair constraint of a delay set."""
    n = tdoas.n_mics
    for i in range(1, n):
        for j in range(i + 1, n):
            d = dependent_delay(tdoas, i, j)
            if not any(abs(d - lag) <= tol for lag in dependent[(i, j)].lags):
                return False
    return True
