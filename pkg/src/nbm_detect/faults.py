"""Synthetic gear-bearing faults: linear temperature trends overlaid at random onsets."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import FaultError
from .scada import STEPS_PER_DAY, STEPS_PER_MONTH, ScadaSeries, channel_index
from .seeding import derive_seed

DEFAULT_UNIT_SCALE = 0.05
DEFAULT_SLOPES = tuple(range(1, 11))
DEFAULT_N_ONSETS = 50
WINDOW_STEPS = 14 * STEPS_PER_DAY  # 2016


@dataclass(frozen=True)
class FaultSpec:
    """Trend of ``slope_index * unit_scale`` normalized units per day from ``onset_step``."""

    slope_index: int
    onset_step: int
    unit_scale: float = DEFAULT_UNIT_SCALE

    def __post_init__(self):
        if int(self.slope_index) != self.slope_index or not 1 <= self.slope_index <= 10:
            raise FaultError(f"slope_index must be an integer in 1..10, got {self.slope_index}")
        if not self.unit_scale >= 0:
            raise FaultError(f"unit_scale must be >= 0, got {self.unit_scale}")

    @property
    def rate_per_day(self) -> float:
        return self.slope_index * self.unit_scale


@dataclass(frozen=True)
class OnsetWindow:
    """Inclusive step range from which onsets are drawn."""

    start_step: int
    end_step: int

    def __post_init__(self):
        if self.end_step < self.start_step:
            raise FaultError(f"empty onset window [{self.start_step}, {self.end_step}]")

    @classmethod
    def two_weeks(cls, start_step: int) -> "OnsetWindow":
        return cls(start_step, start_step + WINDOW_STEPS - 1)

    @property
    def n_steps(self) -> int:
        return self.end_step - self.start_step + 1


# Two weeks straddling the boundary between months 12 and 13.
DEFAULT_WINDOW = OnsetWindow.two_weeks(12 * STEPS_PER_MONTH - WINDOW_STEPS // 2)


def sample_onsets(window: OnsetWindow, n: int, seed: int) -> np.ndarray:
    """``n`` onsets uniform on the window, with replacement."""
    if n < 1:
        raise FaultError("n must be >= 1")
    rng = np.random.default_rng(seed)
    return rng.integers(window.start_step, window.end_step + 1, size=n, dtype=np.int64)


def trend_value(spec: FaultSpec, t):
    """Additive normalized temperature at step(s) ``t``; zero before onset."""
    elapsed = np.maximum(0, np.asarray(t, dtype=np.int64) - spec.onset_step)
    value = spec.slope_index * spec.unit_scale * elapsed / STEPS_PER_DAY
    return float(value) if np.ndim(value) == 0 else value


def inject(series: ScadaSeries, spec: FaultSpec, channel: str = "gear_bearing_temp") -> ScadaSeries:
    if not series.normalized:
        raise FaultError("faults are injected into normalized series only")
    try:
        channel_index(channel)
    except ValueError as exc:
        raise FaultError(str(exc)) from None
    if not series.start_step <= spec.onset_step <= series.end_step:
        raise FaultError(f"onset {spec.onset_step} outside series [{series.start_step}, {series.end_step}]")
    return series.with_column(channel, series[channel] + trend_value(spec, series.steps))


@dataclass(frozen=True)
class ExperimentCase:
    slope_index: int
    onset_ordinal: int
    onset_step: int
    case_seed: int

    def fault(self, unit_scale: float = DEFAULT_UNIT_SCALE) -> FaultSpec:
        return FaultSpec(self.slope_index, self.onset_step, unit_scale)


@dataclass(frozen=True)
class ExperimentGrid:
    cases: tuple[ExperimentCase, ...]
    master_seed: int

    def __len__(self):
        return len(self.cases)

    def __iter__(self):
        return iter(self.cases)

    def slopes(self) -> list[int]:
        return sorted({c.slope_index for c in self.cases})


def build_grid(window: OnsetWindow = DEFAULT_WINDOW, slopes: Iterable[int] = DEFAULT_SLOPES,
               n_onsets: int = DEFAULT_N_ONSETS, master_seed: int = 0) -> ExperimentGrid:
    """Independent onset draws per slope; ordered by (slope, onset ordinal).

    Onsets for slope ``k`` use ``derive_seed(master_seed, "fault_lab.onsets", k)``
    and each case gets ``derive_seed(master_seed, "fault_lab.case", k, ordinal)``.
    """
    slopes = sorted(set(int(s) for s in slopes))
    if not slopes:
        raise FaultError("at least one slope is required")
    cases = []
    for k in slopes:
        FaultSpec(k, window.start_step)  # validates the slope
        onsets = sample_onsets(window, n_onsets, derive_seed(master_seed, "fault_lab.onsets", k))
        for i, onset in enumerate(onsets.tolist()):
            cases.append(ExperimentCase(k, i, onset, derive_seed(master_seed, "fault_lab.case", k, i)))
    return ExperimentGrid(tuple(cases), master_seed)


MANIFEST_HEADER = ("slope_index", "onset_ordinal", "onset_step", "case_seed")


def write_grid_manifest(grid: ExperimentGrid, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MANIFEST_HEADER)
        for c in grid.cases:
            w.writerow([c.slope_index, c.onset_ordinal, c.onset_step, c.case_seed])


def read_grid_manifest(path: str | Path, master_seed: int) -> ExperimentGrid:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    cases = tuple(ExperimentCase(int(r["slope_index"]), int(r["onset_ordinal"]),
                                 int(r["onset_step"]), int(r["case_seed"])) for r in rows)
    return ExperimentGrid(cases, master_seed)


def grid_from_cases(cases: Sequence[ExperimentCase], master_seed: int) -> ExperimentGrid:
    return ExperimentGrid(tuple(sorted(cases, key=lambda c: (c.slope_index, c.onset_ordinal))), master_seed)
