"""SCADA data model, CSV ingestion, normalization, splitting and a synthetic generator.

A :class:`ScadaSeries` is stored column-wise: an integer ``steps`` vector and a
``(n, 6)`` float matrix with the channels in :data:`CHANNELS` order.  Both arrays
are read-only; every transformation returns a new series.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np
from scipy.signal import lfilter
from scipy.special import ndtr

from .errors import ConfigError, DataError

STEP_MINUTES = 10
STEPS_PER_HOUR = 6
STEPS_PER_DAY = 144
DAYS_PER_MONTH = 30
STEPS_PER_MONTH = STEPS_PER_DAY * DAYS_PER_MONTH  # 4320

CHANNELS = (
    "wind_speed",
    "wind_dir",
    "air_temp",
    "gear_bearing_temp",
    "hydraulic_oil_temp",
    "transformer_winding_temp",
)
INPUT_CHANNELS = ("wind_speed", "wind_dir", "air_temp")
TARGET_CHANNELS = ("gear_bearing_temp", "hydraulic_oil_temp", "transformer_winding_temp")

# CSV header name for each channel, in file order after ``step``.
CSV_COLUMNS = {
    "wind_speed": "wind_speed",
    "wind_dir": "wind_dir",
    "air_temp": "air_temp",
    "gear_bearing_temp": "gear_temp",
    "hydraulic_oil_temp": "oil_temp",
    "transformer_winding_temp": "tr_temp",
}
CSV_HEADER = ("step",) + tuple(CSV_COLUMNS[c] for c in CHANNELS)


def month_range(first_month: int, last_month: int) -> tuple[int, int]:
    """Inclusive step range covering 1-based months ``first_month..last_month``."""
    if first_month < 1 or last_month < first_month:
        raise ValueError(f"invalid month range {first_month}..{last_month}")
    return (first_month - 1) * STEPS_PER_MONTH, last_month * STEPS_PER_MONTH - 1


@dataclass(frozen=True)
class ScadaRecord:
    timestamp: int
    wind_speed: float
    wind_dir: float
    air_temp: float
    gear_bearing_temp: float
    hydraulic_oil_temp: float
    transformer_winding_temp: float


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScadaSeries:
    steps: np.ndarray
    values: np.ndarray
    normalized: bool = False
    step_minutes: int = STEP_MINUTES

    def __post_init__(self):
        steps = np.asarray(self.steps)
        values = np.asarray(self.values, dtype=np.float64)
        if steps.ndim != 1 or len(steps) == 0:
            raise DataError("series must contain at least one record")
        if not np.issubdtype(steps.dtype, np.integer):
            if not np.all(np.equal(np.mod(steps, 1), 0)):
                raise DataError("step indices must be integers")
        steps = steps.astype(np.int64)
        if values.shape != (len(steps), len(CHANNELS)):
            raise DataError(f"values must have shape ({len(steps)}, {len(CHANNELS)}), got {values.shape}")
        if self.step_minutes != STEP_MINUTES:
            raise DataError(f"step_minutes must be {STEP_MINUTES}")
        gaps = np.flatnonzero(np.diff(steps) != 1)
        if len(gaps):
            raise DataError(f"non-uniform spacing: step {steps[gaps[0] + 1]} follows {steps[gaps[0]]}",
                            row=int(gaps[0]) + 1)
        bad = np.flatnonzero(~np.isfinite(values).all(axis=1))
        if len(bad):
            raise DataError("missing or non-finite value", row=int(bad[0]))
        if not self.normalized:
            _check_domain(values)
        object.__setattr__(self, "steps", _readonly(steps))
        object.__setattr__(self, "values", _readonly(values))

    def __len__(self) -> int:
        return len(self.steps)

    def __getitem__(self, channel: str) -> np.ndarray:
        return self.values[:, channel_index(channel)]

    @property
    def start_step(self) -> int:
        return int(self.steps[0])

    @property
    def end_step(self) -> int:
        return int(self.steps[-1])

    def columns(self, channels: Sequence[str]) -> np.ndarray:
        return self.values[:, [channel_index(c) for c in channels]]

    def features(self) -> np.ndarray:
        return self.columns(INPUT_CHANNELS)

    def targets(self, n_targets: int = 3) -> np.ndarray:
        return self.columns(TARGET_CHANNELS[:n_targets])

    def records(self) -> Iterator[ScadaRecord]:
        for step, row in zip(self.steps.tolist(), self.values.tolist()):
            yield ScadaRecord(step, *row)

    def with_column(self, channel: str, column: np.ndarray) -> "ScadaSeries":
        values = np.array(self.values, copy=True)
        values[:, channel_index(channel)] = column
        return ScadaSeries(self.steps, values, normalized=self.normalized)

    def slice_steps(self, start: int, end: int) -> "ScadaSeries":
        """Sub-series for the inclusive step range ``[start, end]``."""
        if start > end:
            raise DataError(f"empty step range [{start}, {end}]")
        if start < self.start_step or end > self.end_step:
            raise DataError(f"step range [{start}, {end}] outside series [{self.start_step}, {self.end_step}]")
        lo, hi = start - self.start_step, end - self.start_step + 1
        return ScadaSeries(self.steps[lo:hi], self.values[lo:hi], normalized=self.normalized)

    def equals(self, other: "ScadaSeries") -> bool:
        return (self.normalized == other.normalized
                and np.array_equal(self.steps, other.steps)
                and np.array_equal(self.values, other.values))


def channel_index(channel: str) -> int:
    try:
        return CHANNELS.index(channel)
    except ValueError:
        raise DataError(f"unknown channel {channel!r}") from None


def _check_domain(values: np.ndarray, row_offset: int = 0) -> None:
    wind = values[:, 0]
    bad = np.flatnonzero(wind < 0)
    if len(bad):
        raise DataError(f"wind_speed {wind[bad[0]]} < 0", row=row_offset + int(bad[0]))
    direction = values[:, 1]
    bad = np.flatnonzero((direction < 0) | (direction >= 360))
    if len(bad):
        raise DataError(f"wind_dir {direction[bad[0]]} outside [0, 360)", row=row_offset + int(bad[0]))


def series_from_records(records: Sequence[ScadaRecord], normalized: bool = False) -> ScadaSeries:
    steps = [r.timestamp for r in records]
    values = [[getattr(r, c) for c in CHANNELS] for r in records]
    return ScadaSeries(np.asarray(steps, dtype=np.int64),
                       np.asarray(values, dtype=np.float64).reshape(len(records), len(CHANNELS)),
                       normalized=normalized)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def load_scada_csv(path: str | Path) -> ScadaSeries:
    """Read a SCADA CSV file.

    Row numbers in error messages are 1-based data rows (the header is row 0).
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError("empty file", row=0) from None
        missing = [c for c in CSV_HEADER if c not in header]
        if missing:
            raise DataError(f"missing column(s): {', '.join(missing)}", row=0)
        idx = [header.index(c) for c in CSV_HEADER]
        steps, rows = [], []
        for rownum, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) < len(header):
                raise DataError(f"expected {len(header)} fields, got {len(row)}", row=rownum)
            try:
                step_text = row[idx[0]].strip()
                step = int(step_text)
            except ValueError:
                raise DataError(f"unparseable step {row[idx[0]]!r}", row=rownum) from None
            vals = []
            for name, i in zip(CSV_HEADER[1:], idx[1:]):
                try:
                    v = float(row[i])
                except ValueError:
                    raise DataError(f"unparseable {name} value {row[i]!r}", row=rownum) from None
                if not math.isfinite(v):
                    raise DataError(f"non-finite {name} value {row[i]!r}", row=rownum)
                vals.append(v)
            if steps and step != steps[-1] + 1:
                raise DataError(f"non-uniform spacing: step {step} follows {steps[-1]}", row=rownum)
            steps.append(step)
            rows.append(vals)
    if not rows:
        raise DataError("file has no data rows")
    values = np.asarray(rows, dtype=np.float64)
    _check_domain(values, row_offset=1)
    return ScadaSeries(np.asarray(steps, dtype=np.int64), values)


def write_scada_csv(series: ScadaSeries, path: str | Path) -> None:
    """Write ``series`` with shortest round-trip float formatting (byte-stable)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        for step, row in zip(series.steps.tolist(), series.values.tolist()):
            fh.write(str(step) + "," + ",".join(repr(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalizationParams:
    """Per-channel ``(min, max)`` pairs for min-max scaling to [0, 1]."""

    ranges: Mapping[str, tuple[float, float]]

    def __post_init__(self):
        for channel, (lo, hi) in self.ranges.items():
            channel_index(channel)
            if not (math.isfinite(lo) and math.isfinite(hi)) or not hi > lo:
                raise DataError(f"degenerate range for {channel}: min={lo}, max={hi}")
        object.__setattr__(self, "ranges", {c: (float(lo), float(hi)) for c, (lo, hi) in self.ranges.items()})

    def to_dict(self) -> dict:
        return {c: {"min": lo, "max": hi} for c, (lo, hi) in self.ranges.items()}

    @classmethod
    def from_dict(cls, d: Mapping) -> "NormalizationParams":
        return cls({c: (v["min"], v["max"]) for c, v in d.items()})


def fit_normalization(series: ScadaSeries, channels: Sequence[str] = CHANNELS) -> NormalizationParams:
    if series.normalized:
        raise DataError("cannot fit normalization on an already normalized series")
    ranges = {}
    for c in channels:
        col = series[c]
        lo, hi = float(col.min()), float(col.max())
        if not hi > lo:
            raise DataError(f"channel {c} is constant ({lo}) over the fit range")
        ranges[c] = (lo, hi)
    return NormalizationParams(ranges)


def _transform(series: ScadaSeries, params: NormalizationParams, channels, forward: bool) -> ScadaSeries:
    channels = CHANNELS if channels is None else tuple(channels)
    missing = [c for c in channels if c not in params.ranges]
    if missing:
        raise DataError(f"normalization params missing channel(s): {', '.join(missing)}")
    values = np.array(series.values, copy=True)
    for c in channels:
        lo, hi = params.ranges[c]
        j = channel_index(c)
        if forward:
            values[:, j] = (values[:, j] - lo) / (hi - lo)
        else:
            values[:, j] = values[:, j] * (hi - lo) + lo
    return ScadaSeries(series.steps, values, normalized=forward)


def apply_normalization(series: ScadaSeries, params: NormalizationParams,
                        channels: Sequence[str] | None = None) -> ScadaSeries:
    if series.normalized:
        raise DataError("series is already normalized")
    return _transform(series, params, channels, forward=True)


def invert_normalization(series: ScadaSeries, params: NormalizationParams,
                         channels: Sequence[str] | None = None) -> ScadaSeries:
    if not series.normalized:
        raise DataError("series is not normalized")
    return _transform(series, params, channels, forward=False)


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    """Inclusive step ranges for the train, calibration and monitoring periods."""

    train: tuple[int, int]
    calibration: tuple[int, int]
    monitoring: tuple[int, int]

    @classmethod
    def from_months(cls, train=(1, 10), calibration=(11, 11), monitoring=(12, 14)) -> "SplitSpec":
        return cls(month_range(*train), month_range(*calibration), month_range(*monitoring))

    def parts(self):
        return {"train": self.train, "calibration": self.calibration, "monitoring": self.monitoring}

    def validate(self, series: ScadaSeries | None = None) -> None:
        prev_end = None
        for name, (start, end) in self.parts().items():
            if start > end:
                raise DataError(f"{name} range [{start}, {end}] is empty")
            if prev_end is not None and start <= prev_end:
                raise DataError(f"{name} range [{start}, {end}] overlaps or precedes the previous range")
            if series is not None and (start < series.start_step or end > series.end_step):
                raise DataError(f"{name} range [{start}, {end}] outside series "
                                f"[{series.start_step}, {series.end_step}]")
            prev_end = end


DEFAULT_SPLIT = SplitSpec.from_months()


def split_series(series: ScadaSeries, spec: SplitSpec = DEFAULT_SPLIT):
    spec.validate(series)
    return tuple(series.slice_steps(*r) for r in (spec.train, spec.calibration, spec.monitoring))


# ---------------------------------------------------------------------------
# Synthetic generator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComponentModel:
    """Ground truth ``T = offset + load_gain * g(v) + air_gain * T_air``."""

    offset: float
    load_gain: float
    air_gain: float
    noise_std: float

    def __call__(self, load: np.ndarray, air_temp: np.ndarray) -> np.ndarray:
        return self.offset + self.load_gain * load + self.air_gain * air_temp


@dataclass(frozen=True)
class SyntheticConfig:
    """Parameters of the synthetic turbine.

    Wind speed is Weibull distributed (``weibull_shape``, ``weibull_scale``) with
    an AR(1) Gaussian copula of time constant ``wind_corr_steps``; the scale has a
    seasonal modulation.  Wind direction is an AR(1) swing of std ``dir_spread``
    degrees around ``dir_prevailing``.  Air temperature is a seasonal plus diurnal cycle with an
    AR(1) weather anomaly.  Temperature noise is AR(1) with coefficient
    ``noise_ar`` per step and stationary std ``ComponentModel.noise_std`` (°C),
    multiplied by ``noise_scale``.  The coldest day of the year is day 15 of a
    360-day year.
    """

    n_months: int = 14
    seed: int = 0
    cut_in: float = 3.0
    rated: float = 13.0
    cut_out: float = 25.0
    max_wind: float = 30.0
    weibull_shape: float = 2.0
    weibull_scale: float = 8.0
    wind_seasonal_amp: float = 0.15
    wind_corr_steps: float = 48.0
    dir_spread: float = 60.0
    dir_corr_steps: float = 72.0
    dir_prevailing: float = 240.0
    air_mean: float = 9.0
    air_seasonal_amp: float = 9.0
    air_diurnal_amp: float = 3.0
    air_anomaly_std: float = 2.5
    air_corr_steps: float = 288.0
    noise_ar: float = 0.8
    noise_scale: float = 1.0
    gear: ComponentModel = field(default_factory=lambda: ComponentModel(35.0, 30.0, 0.5, 1.5))
    oil: ComponentModel = field(default_factory=lambda: ComponentModel(30.0, 12.0, 0.7, 1.0))
    transformer: ComponentModel = field(default_factory=lambda: ComponentModel(45.0, 40.0, 0.35, 1.5))

    def __post_init__(self):
        if self.n_months < 1:
            raise ConfigError(f"n_months must be >= 1, got {self.n_months}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if not 0 <= self.cut_in < self.rated < self.cut_out <= self.max_wind:
            raise ConfigError("need 0 <= cut_in < rated < cut_out <= max_wind")
        if not 0 <= self.noise_ar < 1:
            raise ConfigError("noise_ar must lie in [0, 1)")
        if self.noise_scale < 0:
            raise ConfigError("noise_scale must be >= 0")
        for name in ("weibull_shape", "weibull_scale", "wind_corr_steps", "air_corr_steps"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")

    @property
    def n_steps(self) -> int:
        return self.n_months * STEPS_PER_MONTH

    @classmethod
    def from_dict(cls, d: Mapping) -> "SyntheticConfig":
        kwargs = dict(d)
        for comp in ("gear", "oil", "transformer"):
            if comp in kwargs and isinstance(kwargs[comp], Mapping):
                kwargs[comp] = ComponentModel(**kwargs[comp])
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(kwargs) - known)
        if unknown:
            raise ConfigError(f"unknown synthetic config key(s): {', '.join(unknown)}")
        return cls(**kwargs)


def load_fraction(v: np.ndarray, cut_in: float = 3.0, rated: float = 13.0, cut_out: float = 25.0) -> np.ndarray:
    """Power-curve-like load ``g(v)`` in [0, 1].

    Zero below cut-in, ``(v^3 - cut_in^3) / (rated^3 - cut_in^3)`` up to rated,
    one up to and including cut-out, zero above cut-out.
    """
    v = np.asarray(v, dtype=np.float64)
    ramp = (v ** 3 - cut_in ** 3) / (rated ** 3 - cut_in ** 3)
    return np.where(v < cut_in, 0.0, np.where(v < rated, ramp, np.where(v <= cut_out, 1.0, 0.0)))


def _ar1(rng: np.random.Generator, n: int, phi: float) -> np.ndarray:
    """Stationary unit-variance AR(1) sequence."""
    e = rng.standard_normal(n)
    init = rng.standard_normal()
    return lfilter([math.sqrt(1.0 - phi * phi)], [1.0, -phi], e, zi=[phi * init])[0]


def ground_truth_temperatures(wind_speed: np.ndarray, air_temp: np.ndarray,
                              config: SyntheticConfig) -> np.ndarray:
    """Noise-free (gear, oil, transformer) temperatures, shape ``(n, 3)``."""
    g = load_fraction(wind_speed, config.cut_in, config.rated, config.cut_out)
    return np.column_stack([m(g, air_temp) for m in (config.gear, config.oil, config.transformer)])


def synthesize_scada(config: SyntheticConfig = SyntheticConfig()) -> ScadaSeries:
    n = config.n_steps
    rng = np.random.default_rng(config.seed)
    t = np.arange(n, dtype=np.float64)
    day = t / STEPS_PER_DAY
    year_days = 12 * DAYS_PER_MONTH
    season = np.cos(2 * np.pi * (day - 15.0) / year_days)  # +1 on the coldest day

    z = _ar1(rng, n, math.exp(-1.0 / config.wind_corr_steps))
    u = np.clip(ndtr(z), 1e-12, 1.0 - 1e-12)
    scale = config.weibull_scale * (1.0 + config.wind_seasonal_amp * season)
    wind = scale * (-np.log1p(-u)) ** (1.0 / config.weibull_shape)
    wind = np.clip(wind, 0.0, config.max_wind)

    swing = config.dir_spread * _ar1(rng, n, math.exp(-1.0 / config.dir_corr_steps))
    direction = np.mod(config.dir_prevailing + swing, 360.0)
    direction[direction >= 360.0] = 0.0

    hour = (t % STEPS_PER_DAY) / STEPS_PER_HOUR
    anomaly = config.air_anomaly_std * _ar1(rng, n, math.exp(-1.0 / config.air_corr_steps))
    air = (config.air_mean - config.air_seasonal_amp * season
           - config.air_diurnal_amp * np.cos(2 * np.pi * (hour - 3.0) / 24.0) + anomaly)

    temps = ground_truth_temperatures(wind, air, config)
    for j, m in enumerate((config.gear, config.oil, config.transformer)):
        std = m.noise_std * config.noise_scale
        noise = _ar1(rng, n, config.noise_ar)  # drawn unconditionally to keep streams aligned
        if std > 0:
            temps[:, j] = temps[:, j] + std * noise

    values = np.column_stack([wind, direction, air, temps])
    return ScadaSeries(np.arange(n, dtype=np.int64), values)
