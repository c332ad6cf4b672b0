"""
Rejecting false peaks by consistency.

With eight microphones only seven delays are independent (all against mic 0).
The remaining 21 pairs must agree: d(i, j) = d(0, j) - d(0, i). The search
keeps several candidate peaks per independent pair and returns the highest
scoring combination that every dependent pair confirms.

A reflection gives mic pair (0, 3) a decoy that is stronger than the true
peak. Taking each argmax alone picks the decoy; the search does not.
"""

import numpy as np

from arrayloc.geometry import angles_to_direction, prism_geometry, solve_direction
from arrayloc.tdoa import PeakList, consistency_search

geom = prism_geometry()
u = angles_to_direction(35.0, 10.0)
true = np.concatenate([[0], np.round(geom.farfield_delays(u)).astype(int)])

peaklists = []
for i in range(1, 8):
    if i == 3:
        # decoy 25 samples away, stronger than the true peak
        peaklists.append(PeakList((0, i), (int(true[i]) + 25, int(true[i])), (1.3, 1.0)))
    else:
        peaklists.append(PeakList((0, i), (int(true[i]),), (1.0,)))
dependent = {(i, j): PeakList((i, j), (int(true[j] - true[i]),), (1.0,))
             for i in range(1, 8) for j in range(i + 1, 8)}

greedy = [pl.lags[0] for pl in peaklists]
found = consistency_search(peaklists, dependent, tol=1)

print("true delays   :", true[1:].tolist())
print("per-pair max  :", greedy)
print("consistent set:", list(found.delays), f"score {found.score:.1f}")
for name, d in (("per-pair max", greedy), ("consistent", found.delays)):
    est = solve_direction(geom, np.array(d, float))
    print(f"{name:>13}: azimuth {est.azimuth:6.1f}, elevation {est.elevation:5.1f}")
