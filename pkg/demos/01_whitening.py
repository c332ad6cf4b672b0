"""
Why whiten a cross-correlation?

A low-pass source makes the plain cross-correlation a broad hump: the true lag
sits somewhere on a wide peak. Dividing out the magnitude keeps only phase, and
every bin then votes equally for the delay, so the peak collapses to a spike.
"""

import numpy as np
from scipy.signal import lfilter

from arrayloc.spectral import crosscorr_plain_fft, crosscorr_whitened

rng = np.random.default_rng(0)
n, true_delay = 1024, 17

# a strongly coloured source: one-pole low-pass of white noise
s = lfilter([1.0], [1.0, -0.95], rng.standard_normal(n + 100))
xj = s[50:50 + n]
xi = s[50 - true_delay:50 - true_delay + n]   # xi lags xj by true_delay samples

Xi, Xj = np.fft.rfft(xi), np.fft.rfft(xj)
plain = crosscorr_plain_fft(Xi, Xj, tau_max=100)
white = crosscorr_whitened(Xi, Xj, tau_max=100)


def width(corr):
    """Number of lags above half the peak value."""
    v = corr.values / corr.values.max()
    return int(np.sum(v > 0.5))


print(f"true delay        : {true_delay}")
print(f"plain argmax      : {plain.argmax():4d}   half-height width {width(plain)} lags")
print(f"whitened argmax   : {white.argmax():4d}   half-height width {width(white)} lags")
