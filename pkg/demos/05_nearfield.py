"""
What the far-field assumption costs up close.

Real sources are at finite distance, so wavefronts are curved. Feeding the
exact spherical delays to the plane-wave solver biases the direction. The bias
is largest for sources near the array's own size and fades with distance.
"""

from arrayloc.evaluation import NEARFIELD_DISTANCES
from arrayloc.geometry import nearfield_error_curve, prism_geometry

geom = prism_geometry()
quantized = nearfield_error_curve(geom, NEARFIELD_DISTANCES)
exact = nearfield_error_curve(geom, NEARFIELD_DISTANCES, quantize=False)

print("distance  mean error (whole-sample delays)  (exact delays)")
for d, q, e in zip(NEARFIELD_DISTANCES, quantized, exact):
    print(f"{d:6.2f} m  {q:8.2f} deg {'#' * int(round(10 * q)):<32} {e:6.2f} deg")
