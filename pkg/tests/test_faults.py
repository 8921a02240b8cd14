import numpy as np
import pytest

from nbm_detect.errors import FaultError
from nbm_detect.faults import (DEFAULT_WINDOW, WINDOW_STEPS, FaultSpec, OnsetWindow, build_grid, inject,
                               read_grid_manifest, sample_onsets, trend_value, write_grid_manifest)
from nbm_detect.scada import DEFAULT_SPLIT, STEPS_PER_MONTH

from conftest import make_series


class TestOnsets:
    def test_default_window(self):
        assert DEFAULT_WINDOW.n_steps == WINDOW_STEPS == 2016
        # straddles the month 12/13 boundary, inside monitoring
        assert DEFAULT_WINDOW.start_step < 12 * STEPS_PER_MONTH <= DEFAULT_WINDOW.end_step
        assert DEFAULT_SPLIT.monitoring[0] <= DEFAULT_WINDOW.start_step
        assert DEFAULT_WINDOW.end_step < 13 * STEPS_PER_MONTH

    def test_single_step_window(self):
        assert sample_onsets(OnsetWindow(500, 500), 5, seed=1).tolist() == [500] * 5

    def test_deterministic(self):
        a = sample_onsets(DEFAULT_WINDOW, 50, seed=3)
        assert np.array_equal(a, sample_onsets(DEFAULT_WINDOW, 50, seed=3))
        assert not np.array_equal(a, sample_onsets(DEFAULT_WINDOW, 50, seed=4))

    def test_uniform_frequencies(self):
        w = OnsetWindow.two_weeks(1000)
        draws = sample_onsets(w, 10_000, seed=0)
        assert draws.min() >= w.start_step and draws.max() <= w.end_step
        counts = np.bincount(draws - w.start_step, minlength=w.n_steps)
        p = 1 / w.n_steps
        mean, sd = 10_000 * p, np.sqrt(10_000 * p * (1 - p))
        # per-step counts within 3 sd except for the expected handful of tail cases
        assert np.mean(np.abs(counts - mean) > 3 * sd) < 0.01
        chi2 = ((counts - mean) ** 2 / mean).sum()
        dof = w.n_steps - 1
        assert abs(chi2 - dof) < 4 * np.sqrt(2 * dof)

    def test_empty_window(self):
        with pytest.raises(FaultError):
            OnsetWindow(10, 9)

    def test_bad_n(self):
        with pytest.raises(FaultError):
            sample_onsets(DEFAULT_WINDOW, 0, seed=0)


class TestTrend:
    def test_pre_onset(self):
        spec = FaultSpec(5, 1000)
        assert trend_value(spec, 999) == 0.0
        assert trend_value(spec, 1000) == 0.0

    def test_fast_slope_one_day(self):
        assert trend_value(FaultSpec(10, 1000, 0.05), 1144) == pytest.approx(0.5, abs=1e-12)

    def test_slow_slope_two_days(self):
        assert trend_value(FaultSpec(1, 1000, 0.05), 1288) == pytest.approx(0.1, abs=1e-12)

    def test_vectorised(self):
        t = np.arange(990, 1010)
        v = trend_value(FaultSpec(2, 1000), t)
        assert v.shape == t.shape and v[:11].sum() == 0 and np.all(np.diff(v[10:]) > 0)

    @pytest.mark.parametrize("kwargs", [dict(slope_index=0, onset_step=0), dict(slope_index=11, onset_step=0),
                                        dict(slope_index=2.5, onset_step=0),
                                        dict(slope_index=1, onset_step=0, unit_scale=-0.1)])
    def test_invalid_spec(self, kwargs):
        with pytest.raises(FaultError):
            FaultSpec(**kwargs)


class TestInject:
    def test_zero_scale_identity(self):
        s = make_series(300, start=50, normalized=True)
        assert inject(s, FaultSpec(10, 100, unit_scale=0.0)).equals(s)

    def test_pre_onset_and_other_channels_unchanged(self):
        s = make_series(300, start=50, normalized=True)
        out = inject(s, FaultSpec(7, 200))
        cut = 200 - 50
        assert np.array_equal(out.values[:cut + 1], s.values[:cut + 1])
        others = [j for j in range(6) if j != 3]
        assert np.array_equal(out.values[:, others], s.values[:, others])

    def test_spot_check(self):
        s = make_series(400, normalized=True)
        spec = FaultSpec(3, 100)
        out = inject(s, spec)
        assert out["gear_bearing_temp"][350] == s["gear_bearing_temp"][350] + trend_value(spec, 350)

    def test_input_untouched(self):
        s = make_series(300, normalized=True)
        before = s.values.copy()
        inject(s, FaultSpec(10, 10))
        assert np.array_equal(s.values, before)

    def test_raw_series_rejected(self):
        with pytest.raises(FaultError, match="normalized"):
            inject(make_series(300), FaultSpec(1, 10))

    def test_unknown_channel(self):
        with pytest.raises(FaultError):
            inject(make_series(300, normalized=True), FaultSpec(1, 10), channel="rotor_temp")

    def test_onset_outside(self):
        with pytest.raises(FaultError, match="outside"):
            inject(make_series(300, normalized=True), FaultSpec(1, 300))


class TestGrid:
    def test_default_shape(self):
        g = build_grid(master_seed=1)
        assert len(g) == 500
        assert g.slopes() == list(range(1, 11))
        for k in range(1, 11):
            cases = [c for c in g if c.slope_index == k]
            assert [c.onset_ordinal for c in cases] == list(range(50))
            assert all(DEFAULT_WINDOW.start_step <= c.onset_step <= DEFAULT_WINDOW.end_step for c in cases)
        assert len({c.case_seed for c in g}) == 500

    def test_single_case(self):
        assert len(build_grid(slopes=[4], n_onsets=1, master_seed=0)) == 1

    def test_deterministic(self):
        assert build_grid(master_seed=9) == build_grid(master_seed=9)
        assert build_grid(master_seed=9) != build_grid(master_seed=10)

    def test_slopes_drawn_independently(self):
        g = build_grid(master_seed=2)
        per_slope = [tuple(c.onset_step for c in g if c.slope_index == k) for k in (1, 2)]
        assert per_slope[0] != per_slope[1]

    def test_subset_consistent(self):
        full = build_grid(master_seed=5)
        part = build_grid(slopes=[3], master_seed=5)
        assert part.cases == tuple(c for c in full if c.slope_index == 3)

    def test_manifest_round_trip(self, tmp_path):
        g = build_grid(slopes=[1, 10], n_onsets=4, master_seed=3)
        write_grid_manifest(g, tmp_path / "grid.csv")
        assert read_grid_manifest(tmp_path / "grid.csv", 3) == g
        assert (tmp_path / "grid.csv").read_text().splitlines()[0] == \
            "slope_index,onset_ordinal,onset_step,case_seed"

    def test_bad_slope(self):
        with pytest.raises(FaultError):
            build_grid(slopes=[0, 1])
