"""Property-based checks of the invariants shared across modules."""

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from nbm_detect.alarms import ResidualSeries, Threshold, alarm_criterion_1, alarm_criterion_2, percentile
from nbm_detect.faults import FaultSpec, inject, trend_value
from nbm_detect.scada import CHANNELS, ScadaSeries, apply_normalization, fit_normalization, invert_normalization
from nbm_detect.seeding import derive_seed

import oracles

finite = st.floats(-3, 3, allow_nan=False, width=64)
residual_arrays = hnp.arrays(np.float64, st.integers(144, 400), elements=finite)
levels = st.floats(-1, 2, allow_nan=False)


def thr(q):
    return Threshold(q, (0, 0), 1000)


@settings(max_examples=60, deadline=None)
@given(residual_arrays, levels)
def test_criteria_match_brute_force(values, q):
    v = values.tolist()
    assert alarm_criterion_1(ResidualSeries(values), thr(q)).flags.tolist() == oracles.c1_flags(v, q)
    assert alarm_criterion_2(ResidualSeries(values), thr(q)).flags.tolist() == oracles.c2_flags(v, q)


@settings(max_examples=60, deadline=None)
@given(residual_arrays, levels, st.data())
def test_criteria_causal(values, q, data):
    cut = data.draw(st.integers(144, len(values)))
    for rule in (alarm_criterion_1, alarm_criterion_2):
        full = rule(ResidualSeries(values), thr(q)).flags
        prefix = rule(ResidualSeries(values[:cut]), thr(q)).flags
        assert np.array_equal(full[:cut], prefix)


@settings(max_examples=60, deadline=None)
@given(residual_arrays, levels, st.data())
def test_criteria_monotone(values, q, data):
    i = data.draw(st.integers(0, len(values) - 1))
    bump = data.draw(st.floats(0, 5))
    raised = values.copy()
    raised[i] += bump
    for rule in (alarm_criterion_1, alarm_criterion_2):
        before = rule(ResidualSeries(values), thr(q)).flags
        after = rule(ResidualSeries(raised), thr(q)).flags
        assert not np.any(before & ~after)


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=200),
       st.floats(0.001, 0.999))
def test_percentile_oracle(values, q):
    assert percentile(values, q) == oracles.sorted_percentile(values, q)


@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=50), st.floats(0.01, 0.99))
def test_percentile_bounded(values, q):
    p = percentile(values, q)
    assert min(values) <= p <= max(values)


@settings(max_examples=40, deadline=None)
@given(hnp.arrays(np.float64, st.tuples(st.integers(2, 40), st.just(len(CHANNELS))),
                  elements=st.floats(0, 300, allow_nan=False)))
def test_normalization_round_trip(values):
    values[:, 1] %= 360
    for j in range(values.shape[1]):
        assume(np.ptp(values[:, j]) > 1e-6 * max(1.0, np.abs(values[:, j]).max()))
    s = ScadaSeries(np.arange(len(values)), values)
    p = fit_normalization(s)
    n = apply_normalization(s, p)
    assert n.values.min() >= 0 and n.values.max() <= 1
    back = invert_normalization(n, p)
    scale = np.maximum(np.abs(values), np.array([hi - lo for lo, hi in p.ranges.values()]))
    assert np.all(np.abs(back.values - values) <= 1e-12 * scale)


@given(st.integers(1, 10), st.integers(0, 10_000), st.floats(0.0, 1.0), st.integers(0, 20_000),
       st.integers(0, 20_000))
def test_trend_monotone_nonnegative(k, onset, scale, t1, t2):
    spec = FaultSpec(k, onset, scale)
    lo, hi = sorted((t1, t2))
    assert 0 <= trend_value(spec, lo) <= trend_value(spec, hi)


@given(st.integers(1, 9), st.integers(0, 1000), st.integers(1, 5000))
def test_trend_increasing_in_slope(k, onset, dt):
    t = onset + dt
    assert trend_value(FaultSpec(k, onset), t) < trend_value(FaultSpec(k + 1, onset), t)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 10), st.integers(0, 199), st.floats(0, 1))
def test_inject_identity_outside_trend(k, onset_offset, scale):
    rng = np.random.default_rng(onset_offset)
    s = ScadaSeries(np.arange(100, 300), rng.uniform(size=(200, 6)), normalized=True)
    out = inject(s, FaultSpec(k, 100 + onset_offset, scale))
    mask = s.steps <= 100 + onset_offset
    assert np.array_equal(out.values[mask], s.values[mask])
    assert np.array_equal(np.delete(out.values, 3, axis=1), np.delete(s.values, 3, axis=1))


@given(st.integers(0, 2 ** 64 - 1), st.text(max_size=10), st.lists(st.integers(0, 1000), max_size=3))
def test_derive_seed_pure_u64(master, label, ordinals):
    a = derive_seed(master, label, *ordinals)
    assert a == derive_seed(master, label, *ordinals)
    assert 0 <= a < 2 ** 64
