import numpy as np
import pytest

from arrayloc.evaluation import run_scene
from arrayloc.pipeline import Localizer, LocalizerConfig
from arrayloc.simulate import Scene, position_from_angles, render, render_noise


def azimuth_gap(a, b):
    return abs((a - b + 180.0) % 360.0 - 180.0)


class TestConfig:
    def test_defaults(self):
        c = LocalizerConfig()
        assert (c.frame_size, c.alpha, c.gamma, c.num_peaks, c.tol) == (1024, 0.4, 0.3, 8, 1)

    def test_updated_ignores_none(self):
        c = LocalizerConfig().updated(alpha=0.5, gamma=None)
        assert c.alpha == 0.5 and c.gamma == 0.3

    @pytest.mark.parametrize("bad", [dict(frame_size=1000), dict(alpha=1.5), dict(gamma=0.0),
                                     dict(noise_rate=0.0), dict(num_peaks=0), dict(tol=-1),
                                     dict(window="nope")])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            LocalizerConfig(**bad)

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="unknown"):
            LocalizerConfig().updated(beta=1.0)


class TestLocalizer:
    def test_white_source_azimuth(self, prism):
        pos = position_from_angles(3.0, 20.0, 0.0)
        x = render(Scene(tuple(pos), "white", 10.0, seed=11), prism, 1.0)
        recs = Localizer(prism).locate(x)
        assert len(recs) > 50
        assert np.mean([azimuth_gap(r.azimuth_deg, 20.0) for r in recs]) <= 3.0

    def test_pure_noise(self, prism):
        results = list(Localizer(prism).run(render_noise(8, 3 * 48000, seed=5)))
        assert len(results) == 280
        assert sum(r.detected for r in results) <= 0.01 * len(results)

    def test_tone_below_white(self, prism):
        pos = position_from_angles(3.0, 45.0, 0.0)
        white = run_scene(prism, Scene(tuple(pos), "white", 10.0, seed=2), 1.0)
        tone = run_scene(prism, Scene(tuple(pos), "tone", 10.0, seed=2), 1.0)
        assert tone.detection_rate < white.detection_rate

    def test_warmup_silent(self, prism):
        x = render(Scene((3.0, 0.0, 0.0), "white", 20.0, seed=1), prism, 0.5)
        results = list(Localizer(prism).run(x))
        assert not any(r.detected for r in results[:10])
        assert any(r.detected for r in results[10:])

    def test_deterministic_and_resettable(self, prism):
        x = render(Scene((2.0, 1.0, 0.5), "white", 10.0, seed=3), prism, 0.5)
        loc = Localizer(prism)
        a = loc.locate(x)
        loc.reset()
        b = loc.locate(x)
        assert a == b == Localizer(prism).locate(x)

    def test_times_monotone(self, prism):
        x = render(Scene((2.0, -1.0, 0.0), "white", 10.0, seed=4), prism, 0.5)
        recs = Localizer(prism).locate(x)
        times = [r.time_s for r in recs]
        assert times == sorted(times) and len(set(times)) == len(times)
        # frame centre of frame k is (k * 512 + 512) / 48000
        k = (np.array(times) * 48000.0 - 512) / 512
        np.testing.assert_allclose(k, np.round(k), atol=1e-9)

    def test_records_consistent(self, prism):
        x = render(Scene((3.0, 1.0, 0.0), "white", 10.0, seed=6), prism, 0.5)
        for r in Localizer(prism).locate(x):
            assert len(r.tdoas) == 7
            assert abs(np.linalg.norm(r.u) - 1) < 1e-9
            assert r.score > 0

    def test_frame_size_override(self, prism):
        cfg = LocalizerConfig(frame_size=512)
        loc = Localizer(prism, cfg)
        assert max(loc.tau_max) == min(prism.max_lag(0, 7), 255)
        x = render(Scene((3.0, 0.0, 0.0), "white", 20.0, seed=1), prism, 0.5)
        recs = loc.locate(x)
        assert recs and np.median([azimuth_gap(r.azimuth_deg, 0.0) for r in recs]) < 5.0

    def test_mean_frame_time(self, prism):
        loc = Localizer(prism)
        assert np.isnan(loc.mean_frame_time)
        list(loc.run(render_noise(8, 48000 // 4, seed=1)))
        assert loc.mean_frame_time > 0
