"""Sound source direction finding with a 3-D microphone array.

Delays between microphone pairs come from noise-weighted, whitened
cross-correlations; a consistency search over candidate delays rejects false
peaks, and a least-squares far-field model turns the delays into a direction.
"""

from .geometry import (ArrayGeometry, DirectionEstimate, build_geometry, direction_to_angles,
                       nearfield_error_curve, prism_geometry, solve_direction)
from .pipeline import Localizer, LocalizerConfig
from .simulate import Echo, Scene, fractional_delay, render
from .spectral import (CrossCorrelation, Frame, FrameConfig, NoiseState, crosscorr_plain_fft,
                       crosscorr_plain_time, crosscorr_weighted, crosscorr_whitened,
                       enhanced_weight, frame_stream, noise_mask_weight, update_noise)
from .tdoa import PeakList, TdoaSet, consistency_search, dependent_delay, extract_peaks

__version__ = "0.1.0"
