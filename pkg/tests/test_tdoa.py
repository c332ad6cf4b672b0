import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arrayloc.spectral import CrossCorrelation
from arrayloc.tdoa import (DEFAULT_NUM_PEAKS, PeakList, TdoaSet, consistency_search,
                           dependent_delay, extract_peaks, verify_tdoa_set)


def corr_from(lag_values, tau_max=20):
    v = np.zeros(2 * tau_max + 1)
    for lag, val in lag_values.items():
        v[lag + tau_max] = val
    return CrossCorrelation((0, 1), v, tau_max, "weighted")


def exhaustive(peaklists, dependent, tol, min_score=-math.inf):
    """Reference: try every combination, keep the first strictly best consistent one."""
    n = len(peaklists) + 1
    best, best_score = None, min_score
    for combo in itertools.product(*[range(len(pl)) for pl in peaklists]):
        d = [0] + [pl.lags[c] for pl, c in zip(peaklists, combo)]
        ok = True
        for i in range(1, n):
            for j in range(i + 1, n):
                if not any(abs(d[j] - d[i] - p) <= tol for p in dependent[(i, j)].lags):
                    ok = False
        if not ok:
            continue
        score = 0.0
        for pl, c in zip(peaklists, combo):
            score += pl.values[c]
        if score > best_score:
            best, best_score = tuple(d[1:]), score
    return best, best_score


def random_instance(r, n_mics, m, lag_range=4, integer_values=False):
    def plist(pair):
        k = int(r.integers(1, m + 1))
        lags = tuple(int(x) for x in r.integers(-lag_range, lag_range + 1, k))
        if integer_values:
            vals = r.integers(1, 4, k).astype(float)  # forces ties
        else:
            vals = r.uniform(0, 10, k)
        vals = tuple(float(v) for v in sorted(vals, reverse=True))
        return PeakList(pair, lags, vals)

    peaklists = [plist((0, i)) for i in range(1, n_mics)]
    dependent = {(i, j): plist((i, j)) for i in range(1, n_mics) for j in range(i + 1, n_mics)}
    return peaklists, dependent


def planted(delays, extra_dependent=()):
    """Peak lists consistent with ``delays`` (mic 0 implied at 0)."""
    d = (0,) + tuple(delays)
    n = len(d)
    peaklists = [PeakList((0, i), (d[i],), (1.0,)) for i in range(1, n)]
    dependent = {(i, j): PeakList((i, j), (d[j] - d[i],), (1.0,))
                 for i in range(1, n) for j in range(i + 1, n)}
    return peaklists, dependent


class TestExtractPeaks:
    def test_single_impulse(self):
        pl = extract_peaks(corr_from({3: 2.5}))
        assert pl.lags == (3,) and pl.values == (2.5,)

    def test_default_count(self):
        assert DEFAULT_NUM_PEAKS == 8

    def test_top_two_of_three(self):
        corr = corr_from({-10: 5.0, 0: 4.0, 10: 3.0})
        brute = sorted(zip(corr.values, corr.lags), reverse=True)[:2]
        pl = extract_peaks(corr, num_peaks=2)
        assert pl.lags == tuple(int(l) for _, l in brute) == (-10, 0)

    def test_zero_count_rejected(self):
        with pytest.raises(ValueError):
            extract_peaks(corr_from({0: 1.0}), num_peaks=0)

    def test_separation(self):
        v = np.array([0, 5, 0, 4.9, 0, 1, 0, 0, 0], float)
        corr = CrossCorrelation((0, 1), v, 4, "weighted")
        assert extract_peaks(corr, 3, min_separation=2).lags == (-3, -1, 1)
        assert extract_peaks(corr, 3, min_separation=3).lags == (-3, 1)

    def test_edges_count(self):
        v = np.array([3.0, 1.0, 0.0, 1.0, 2.0])
        pl = extract_peaks(CrossCorrelation((0, 1), v, 2, "weighted"), 4)
        assert pl.lags == (-2, 2)

    def test_plateau_reported_once(self):
        v = np.array([0.0, 2.0, 2.0, 2.0, 0.0])
        pl = extract_peaks(CrossCorrelation((0, 1), v, 2, "weighted"), 4)
        assert pl.lags == (-1,)

    @given(seed=st.integers(0, 2 ** 32 - 1), m=st.integers(1, 10))
    def test_properties(self, seed, m):
        r = np.random.default_rng(seed)
        corr = CrossCorrelation((0, 1), r.standard_normal(41), 20, "weighted")
        pl = extract_peaks(corr, m, min_separation=3)
        assert len(pl) <= m
        assert list(pl.values) == sorted(pl.values, reverse=True)
        assert all(-20 <= l <= 20 for l in pl.lags)
        for a, b in itertools.combinations(pl.lags, 2):
            assert abs(a - b) >= 3
        v = corr.values
        for lag in pl.lags:
            k = lag + 20
            assert (k == 0 or v[k] > v[k - 1]) and (k == 40 or v[k] >= v[k + 1])


class TestPeakList:
    def test_must_be_sorted(self):
        with pytest.raises(ValueError, match="sorted"):
            PeakList((0, 1), (1, 2), (1.0, 2.0))


class TestDependentDelay:
    def test_difference(self):
        t = TdoaSet((4, 10), 0.0)
        assert dependent_delay(t, 1, 2) == 6
        assert dependent_delay(t, 2, 1) == -6
        assert dependent_delay(t, 0, 2) == 10

    def test_same_index(self):
        with pytest.raises(ValueError):
            dependent_delay(TdoaSet((4, 10), 0.0), 1, 1)

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            dependent_delay(TdoaSet((4, 10), 0.0), 1, 3)

    def test_zero_set(self):
        t = TdoaSet((0,) * 7, 0.0)
        assert all(dependent_delay(t, i, j) == 0
                   for i in range(8) for j in range(8) if i != j)


class TestConsistencySearch:
    def test_true_delays_of_simulated_source(self, prism, rng):
        u = rng.standard_normal(3)
        u /= np.linalg.norm(u)
        exact = np.concatenate([[0.0], prism.farfield_delays(u)])
        q = np.round(exact).astype(int)
        peaklists = []
        for i in range(1, 8):
            decoys = [int(q[i]) + 30 + 3 * k for k in range(7)]
            peaklists.append(PeakList((0, i), (int(q[i]),) + tuple(decoys),
                                      (5.0,) + tuple(4.0 - 0.1 * k for k in range(7))))
        dependent = {(i, j): PeakList((i, j), (int(np.round(exact[j] - exact[i])),), (1.0,))
                     for i in range(1, 8) for j in range(i + 1, 8)}
        got = consistency_search(peaklists, dependent, tol=1)
        assert got.delays == tuple(int(x) for x in q[1:])
        assert len(dependent) == 21
        assert verify_tdoa_set(got, dependent, tol=1)

    def test_decoy_pair_rejected(self):
        peaklists, dependent = planted((3, -5, 8, 1))
        dependent[(2, 4)] = PeakList((2, 4), (40, -40), (1.0, 0.5))
        assert consistency_search(peaklists, dependent, tol=1) is None

    def test_higher_score_set_wins(self):
        a, b = (3, -5, 8), (-6, 2, 4)
        pa, da = planted(a)
        pb, db = planted(b)
        peaklists = [PeakList((0, i + 1), (pa[i].lags[0], pb[i].lags[0]), (2.0, 1.5))
                     for i in range(3)]
        peaklists[1] = PeakList((0, 2), (pb[1].lags[0], pa[1].lags[0]), (3.0, 1.0))
        dependent = {k: PeakList(k, da[k].lags + db[k].lags, (1.0, 1.0)) for k in da}
        # a scores 2 + 1 + 2 = 5, b scores 1.5 + 3 + 1.5 = 6
        ref, ref_score = exhaustive(peaklists, dependent, 0)
        got = consistency_search(peaklists, dependent, tol=0)
        assert got.delays == ref == b
        assert got.score == ref_score == 6.0

    def test_min_score_gate(self):
        peaklists, dependent = planted((1, 2, 3))
        assert consistency_search(peaklists, dependent, min_score=3.0) is None
        assert consistency_search(peaklists, dependent, min_score=2.9).score == 3.0

    def test_pair_count_mismatch(self):
        peaklists, dependent = planted((1, 2, 3))
        del dependent[(1, 3)]
        with pytest.raises(ValueError, match="missing"):
            consistency_search(peaklists, dependent)
        with pytest.raises(ValueError, match="pair"):
            consistency_search(peaklists[::-1], planted((1, 2, 3))[1])

    def test_empty_list_means_no_detection(self):
        peaklists, dependent = planted((1, 2))
        peaklists[0] = PeakList((0, 1), (), ())
        assert consistency_search(peaklists, dependent) is None

    def test_frame_index_carried(self):
        peaklists, dependent = planted((1, 2))
        assert consistency_search(peaklists, dependent, frame_index=42).frame_index == 42

    @settings(max_examples=300, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), n_mics=st.integers(2, 5), m=st.integers(1, 4),
           tol=st.integers(0, 1), ties=st.booleans(), gated=st.booleans())
    def test_matches_exhaustive(self, seed, n_mics, m, tol, ties, gated):
        r = np.random.default_rng(seed)
        peaklists, dependent = random_instance(r, n_mics, m, integer_values=ties)
        min_score = float(r.uniform(0, 10)) if gated else -math.inf
        ref, ref_score = exhaustive(peaklists, dependent, tol, min_score)
        got = consistency_search(peaklists, dependent, tol, min_score)
        if ref is None:
            assert got is None
        else:
            assert got.delays == ref and got.score == ref_score
            assert verify_tdoa_set(got, dependent, tol)

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), bump=st.floats(0.0, 5.0))
    def test_score_monotonicity(self, seed, bump):
        r = np.random.default_rng(seed)
        peaklists, dependent = random_instance(r, 4, 3)
        first = consistency_search(peaklists, dependent, 1)
        if first is None:
            return
        # raise the value of one selected peak, keep the list sorted
        k = int(r.integers(len(peaklists)))
        pl = peaklists[k]
        idx = pl.lags.index(first.delays[k])
        vals = list(pl.values)
        vals[idx] += bump
        order = sorted(range(len(vals)), key=lambda t: -vals[t])
        peaklists[k] = PeakList(pl.pair, tuple(pl.lags[t] for t in order),
                                tuple(vals[t] for t in order))
        second = consistency_search(peaklists, dependent, 1)
        assert second.score >= first.score
        assert second.delays == first.delays or second.score >= first.score + bump
