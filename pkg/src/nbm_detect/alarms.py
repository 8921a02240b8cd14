"""Residuals, the 99.9th-percentile threshold and the two windowed alarm rules.

Criterion 1 flags step ``t`` when strictly more than 48 of the 144 residuals in
``[t-143, t]`` strictly exceed the threshold (more than 8 of the past 24 hours).
Criterion 2 flags ``t`` when the mean of the 48 residuals in ``[t-47, t]``
strictly exceeds the threshold.  The window mean is the correctly rounded
window sum divided by 48, so flags do not depend on summation order.  No flag
is raised before a full window of history exists.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import AlarmError

log = logging.getLogger(__name__)

CRITERIA = ("criterion_1", "criterion_2")
C1_WINDOW = 144
C1_MIN_COUNT = 48  # count must be > this
C2_WINDOW = 48
WARMUP = {"criterion_1": C1_WINDOW, "criterion_2": C2_WINDOW}
MIN_CALIBRATION = 1000
RECOMMENDED_CALIBRATION = 10_000


@dataclass(frozen=True, eq=False)
class ResidualSeries:
    values: np.ndarray
    start_step: int = 0

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise AlarmError("residuals must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)

    @property
    def steps(self) -> np.ndarray:
        return np.arange(self.start_step, self.start_step + len(self.values))


def residuals(observed, predicted, start_step: int = 0) -> ResidualSeries:
    """Observed minus predicted; positive means hotter than normal."""
    o = np.asarray(observed, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if o.shape != p.shape or o.ndim != 1:
        raise AlarmError(f"observed and predicted must be equal-length 1-D sequences, got {o.shape} and {p.shape}")
    return ResidualSeries(o - p, start_step)


def percentile(values, q: float) -> float:
    """Linear interpolation between order statistics at rank ``h = q (n - 1)``."""
    if not 0 < q < 1:
        raise AlarmError(f"q must lie in (0, 1), got {q}")
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    n = len(v)
    if n == 0:
        raise AlarmError("percentile of an empty sequence")
    h = q * (n - 1)
    lo = math.floor(h)
    if lo + 1 >= n:
        return float(np.partition(v, lo)[lo])
    part = np.partition(v, (lo, lo + 1))
    v_lo, v_hi = float(part[lo]), float(part[lo + 1])
    return v_lo + (h - lo) * (v_hi - v_lo)


@dataclass(frozen=True)
class Threshold:
    q999: float
    calibrated_on: tuple[int, int]
    n_calibration: int

    def to_dict(self) -> dict:
        return {"q999": self.q999, "calibrated_on": list(self.calibrated_on), "n_calibration": self.n_calibration}


def calibrate_threshold(calibration: ResidualSeries, q: float = 0.999) -> Threshold:
    """Threshold from residuals of a fault-free period (the caller's responsibility)."""
    n = len(calibration)
    if n < MIN_CALIBRATION:
        raise AlarmError(f"{n} calibration residuals; at least {MIN_CALIBRATION} are required")
    if n < RECOMMENDED_CALIBRATION:
        log.warning("threshold calibrated on %d residuals (< %d); the 99.9th percentile is poorly supported",
                    n, RECOMMENDED_CALIBRATION)
    span = (calibration.start_step, calibration.start_step + n - 1)
    return Threshold(percentile(calibration.values, q), span, n)


@dataclass(frozen=True, eq=False)
class AlarmSeries:
    flags: np.ndarray
    start_step: int
    criterion: str
    warmup: int

    def __post_init__(self):
        f = np.array(self.flags, dtype=bool, copy=True).reshape(-1)
        f.setflags(write=False)
        object.__setattr__(self, "flags", f)
        if self.criterion not in CRITERIA:
            raise AlarmError(f"unknown criterion {self.criterion!r}")

    def __len__(self):
        return len(self.flags)

    @property
    def end_step(self) -> int:
        return self.start_step + len(self.flags) - 1

    def index(self, step: int) -> int:
        return step - self.start_step


def _check_length(res: ResidualSeries, window: int):
    if len(res) < window:
        raise AlarmError(f"residual series of length {len(res)} is shorter than the {window}-step window")


def alarm_criterion_1(res: ResidualSeries, thr: Threshold) -> AlarmSeries:
    _check_length(res, C1_WINDOW)
    exceed = (res.values > thr.q999).astype(np.int64)
    csum = np.concatenate(([0], np.cumsum(exceed)))
    flags = np.zeros(len(res), dtype=bool)
    counts = csum[C1_WINDOW:] - csum[:-C1_WINDOW]
    flags[C1_WINDOW - 1:] = counts > C1_MIN_COUNT
    return AlarmSeries(flags, res.start_step, "criterion_1", WARMUP["criterion_1"])


def rolling_mean_exceeds(values: np.ndarray, window: int, level: float) -> np.ndarray:
    """``fsum(values[t-window+1:t+1]) / window > level`` for each full window.

    Windows are first summed in floating point; only windows whose decision
    falls inside the rounding-error bound are re-summed exactly.
    """
    wins = sliding_window_view(values, window)
    approx = wins.sum(axis=1)
    abs_sum = np.abs(wins).sum(axis=1)
    eps = np.finfo(np.float64).eps
    mean = approx / window
    tol = 2.0 * eps * abs_sum + 8.0 * eps * (np.abs(mean) + abs(level)) + 1e-300
    out = mean > level
    for i in np.flatnonzero(np.abs(mean - level) <= tol):
        out[i] = math.fsum(wins[i]) / window > level
    return out


def alarm_criterion_2(res: ResidualSeries, thr: Threshold) -> AlarmSeries:
    _check_length(res, C2_WINDOW)
    flags = np.zeros(len(res), dtype=bool)
    flags[C2_WINDOW - 1:] = rolling_mean_exceeds(res.values, C2_WINDOW, thr.q999)
    return AlarmSeries(flags, res.start_step, "criterion_2", WARMUP["criterion_2"])


ALARM_RULES = {"criterion_1": alarm_criterion_1, "criterion_2": alarm_criterion_2}


def apply_criterion(criterion: str, res: ResidualSeries, thr: Threshold) -> AlarmSeries:
    try:
        rule = ALARM_RULES[criterion]
    except KeyError:
        raise AlarmError(f"unknown criterion {criterion!r}") from None
    return rule(res, thr)


def first_alarm(alarms: AlarmSeries, from_step: int | None = None) -> int | None:
    """Smallest step ``>= from_step`` with a raised flag, or ``None``."""
    start = alarms.start_step if from_step is None else from_step
    i0 = max(0, start - alarms.start_step)
    hits = np.flatnonzero(alarms.flags[i0:])
    return None if len(hits) == 0 else alarms.start_step + i0 + int(hits[0])
