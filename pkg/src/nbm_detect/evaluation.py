"""Detection delay, stability, per-slope summaries and the single- vs multi-target comparison."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .alarms import (CRITERIA, AlarmSeries, ResidualSeries, Threshold, apply_criterion,
                     calibrate_threshold, first_alarm, residuals)
from .errors import EvaluationError, FaultError, StatsError, ZeroVarianceError
from .faults import DEFAULT_UNIT_SCALE, ExperimentCase, ExperimentGrid, inject
from .mlp import MODEL_KINDS, MlpModel, predict_series
from .scada import STEP_MINUTES, ScadaSeries, SplitSpec
from .tstats import TTestResult, paired_t_test, sample_mean_std

HOURS_PER_STEP = STEP_MINUTES / 60.0
REPORT_SCHEMA = "nbm-detect-report/1"


def detection_delay(alarms: AlarmSeries, onset_step: int) -> float | None:
    """Hours from onset to the first flag at or after onset; ``None`` if never raised."""
    first = first_alarm(alarms, onset_step)
    return None if first is None else (first - onset_step) * HOURS_PER_STEP


def detection_stability(alarms: AlarmSeries, first_alarm_step: int, end_step: int) -> float:
    """Fraction of raised flags in ``[first_alarm_step, end_step]`` (both inclusive)."""
    if first_alarm_step > end_step:
        raise EvaluationError(f"first alarm {first_alarm_step} after end step {end_step}")
    if first_alarm_step < alarms.start_step or end_step > alarms.end_step:
        raise EvaluationError("stability range outside the alarm series")
    i0, i1 = alarms.index(first_alarm_step), alarms.index(end_step)
    if not alarms.flags[i0]:
        raise EvaluationError(f"no alarm raised at step {first_alarm_step}")
    return int(alarms.flags[i0:i1 + 1].sum()) / (end_step - first_alarm_step + 1)


def false_positives_before_onset(alarms: AlarmSeries, onset_step: int) -> int:
    """Raised flags in ``[end of warmup, onset_step)``."""
    lo = alarms.warmup - 1  # first index with a full window
    hi = min(onset_step - alarms.start_step, len(alarms))
    return int(alarms.flags[lo:hi].sum()) if hi > lo else 0


@dataclass(frozen=True)
class DetectionOutcome:
    case: ExperimentCase
    criterion: str
    model_kind: str
    first_alarm_step: int | None
    delay_hours: float | None
    stability: float | None
    false_positives_before_onset: int

    @property
    def detected(self) -> bool:
        return self.first_alarm_step is not None

    def row(self) -> dict:
        return {
            "slope_index": self.case.slope_index,
            "onset_ordinal": self.case.onset_ordinal,
            "onset_step": self.case.onset_step,
            "case_seed": self.case.case_seed,
            "model_kind": self.model_kind,
            "criterion": self.criterion,
            "first_alarm_step": self.first_alarm_step,
            "delay_hours": self.delay_hours,
            "stability": self.stability,
            "false_positives_before_onset": self.false_positives_before_onset,
        }


@dataclass(frozen=True)
class SlopeSummary:
    slope_index: int
    n_cases: int
    n_detected: int
    mean_delay_hours: float | None
    std_delay_hours: float | None
    mean_stability: float | None
    std_stability: float | None

    @property
    def defined(self) -> bool:
        return self.n_detected > 0


def summarize_slope(outcomes: Sequence[DetectionOutcome]) -> SlopeSummary:
    """Sample mean / std (divisor n-1) over detected cases of one slope.

    Statistics are ``None`` when nothing was detected; the std is ``None``
    for a single detection.
    """
    if not outcomes:
        raise EvaluationError("no outcomes to summarize")
    slopes = {o.case.slope_index for o in outcomes}
    if len(slopes) != 1:
        raise EvaluationError(f"outcomes span several slopes: {sorted(slopes)}")
    detected = [o for o in outcomes if o.detected]
    if not detected:
        return SlopeSummary(slopes.pop(), len(outcomes), 0, None, None, None, None)
    md, sd = sample_mean_std([o.delay_hours for o in detected])
    ms, ss = sample_mean_std([o.stability for o in detected])
    nan_none = lambda x: None if math.isnan(x) else x  # noqa: E731
    return SlopeSummary(slopes.pop(), len(outcomes), len(detected), md, nan_none(sd), ms, nan_none(ss))


# ---------------------------------------------------------------------------
# Paired comparisons
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairedComparison:
    """One paired t-test of the report, with pair bookkeeping."""

    name: str
    group: str
    a_label: str
    b_label: str
    alternative: str
    n_total: int
    n_excluded: int
    status: str
    result: TTestResult | None = None

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "result"}
        if self.result is not None:
            r = self.result
            d.update(n_pairs=r.n_pairs, mean_difference=r.mean_difference, t_statistic=r.t_statistic,
                     degrees_of_freedom=r.degrees_of_freedom, p_one_sided=r.p_one_sided,
                     p_two_sided=r.p_two_sided)
        else:
            d.update(n_pairs=self.n_total - self.n_excluded, mean_difference=None, t_statistic=None,
                     degrees_of_freedom=None, p_one_sided=None, p_two_sided=None)
        return d


def compare_paired(name, group, a_label, b_label, a_out: Sequence[DetectionOutcome],
                   b_out: Sequence[DetectionOutcome], metric: str, alternative: str) -> PairedComparison:
    """Paired test on ``metric`` over cases detected under both ``a`` and ``b``."""
    pairs = [(x, y) for x, y in zip(a_out, b_out) if x.detected and y.detected]
    n_excl = len(a_out) - len(pairs)
    common = dict(name=name, group=group, a_label=a_label, b_label=b_label, alternative=alternative,
                  n_total=len(a_out), n_excluded=n_excl)
    if len(pairs) < 2:
        return PairedComparison(status="insufficient_pairs", **common)
    a = [getattr(x, metric) for x, _ in pairs]
    b = [getattr(y, metric) for _, y in pairs]
    try:
        res = paired_t_test(a, b, alternative)
    except ZeroVarianceError:
        return PairedComparison(status="zero_variance", **common)
    return PairedComparison(status="ok", result=res, **common)


# ---------------------------------------------------------------------------
# Experiment
# ---------------------------------------------------------------------------

@dataclass
class ComparisonReport:
    outcomes: dict[tuple[str, str], list[DetectionOutcome]]
    summaries: dict[tuple[str, str], list[SlopeSummary]]
    comparisons: list[PairedComparison]
    thresholds: dict[str, Threshold]
    config: dict = field(default_factory=dict)

    def comparison(self, name: str, group: str) -> PairedComparison:
        for c in self.comparisons:
            if c.name == name and c.group == group:
                return c
        raise KeyError((name, group))

    def accounting(self) -> dict:
        out = {}
        for (kind, crit), outs in self.outcomes.items():
            det = sum(o.detected for o in outs)
            out[f"{kind}/{crit}"] = {
                "cases": len(outs), "detected": det, "undetected": len(outs) - det,
                "cases_with_false_positives": sum(o.false_positives_before_onset > 0 for o in outs),
            }
        return out

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "config": self.config,
            "thresholds": {k: t.to_dict() for k, t in self.thresholds.items()},
            "accounting": self.accounting(),
            "slope_summaries": [
                {"model_kind": kind, "criterion": crit, **asdict(s)}
                for (kind, crit), sums in self.summaries.items() for s in sums
            ],
            "ttests": [c.to_dict() for c in self.comparisons],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def write(self, out_dir: str | Path) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(self.to_json(), encoding="utf-8")
        _write_rows(out_dir / "outcomes.csv", [o.row() for outs in self.outcomes.values() for o in outs])
        _write_rows(out_dir / "slope_summary.csv", self.to_dict()["slope_summaries"])
        _write_rows(out_dir / "ttests.csv", [c.to_dict() for c in self.comparisons])


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_rows(path: Path, rows: list[dict]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        if not rows:
            return
        w = csv.writer(fh, lineterminator="\n")
        cols = list(rows[0])
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in cols])


@dataclass
class ModelTrack:
    """Per-model quantities shared by every case: threshold and monitoring predictions."""

    kind: str
    threshold: Threshold
    predicted: np.ndarray


def prepare_model(kind: str, model: MlpModel, calibration: ScadaSeries, monitoring: ScadaSeries) -> ModelTrack:
    if not model.trained:
        raise EvaluationError(f"{kind} model is untrained")
    cal_pred = predict_series(model, calibration.features())[:, 0]
    thr = calibrate_threshold(residuals(calibration["gear_bearing_temp"], cal_pred, calibration.start_step))
    # Injection touches only the gear channel, so monitoring predictions are shared by all cases.
    return ModelTrack(kind, thr, predict_series(model, monitoring.features())[:, 0])


def case_residuals(monitoring: ScadaSeries, track: ModelTrack, case: ExperimentCase,
                   unit_scale: float) -> ResidualSeries:
    faulty = inject(monitoring, case.fault(unit_scale))
    return residuals(faulty["gear_bearing_temp"], track.predicted, monitoring.start_step)


def evaluate_case(monitoring: ScadaSeries, tracks: Sequence[ModelTrack], case: ExperimentCase,
                  criteria: Sequence[str], unit_scale: float, end_step: int) -> list[DetectionOutcome]:
    out = []
    for track in tracks:
        res = case_residuals(monitoring, track, case, unit_scale)
        for crit in criteria:
            alarms = apply_criterion(crit, res, track.threshold)
            first = first_alarm(alarms, case.onset_step)
            if first is not None and first > end_step:
                first = None
            delay = None if first is None else (first - case.onset_step) * HOURS_PER_STEP
            stab = None if first is None else detection_stability(alarms, first, end_step)
            out.append(DetectionOutcome(case, crit, track.kind, first, delay, stab,
                                        false_positives_before_onset(alarms, case.onset_step)))
    return out


def run_experiment(series: ScadaSeries, models: Mapping[str, MlpModel], grid: ExperimentGrid,
                   split: SplitSpec, criteria: Sequence[str] = CRITERIA,
                   unit_scale: float = DEFAULT_UNIT_SCALE, end_step: int | None = None,
                   jobs: int = 1, config_echo: Mapping | None = None) -> ComparisonReport:
    """Inject every grid case, raise alarms with each model and criterion, and compare.

    ``series`` is the full normalized record; thresholds come from the
    calibration range and alarms are evaluated over the monitoring range up to
    ``end_step`` (default: its last step).
    """
    if not series.normalized:
        raise EvaluationError("run_experiment expects a normalized series")
    criteria = tuple(criteria)
    for c in criteria:
        if c not in CRITERIA:
            raise EvaluationError(f"unknown criterion {c!r}")
    kinds = [k for k in MODEL_KINDS if k in models] + sorted(k for k in models if k not in MODEL_KINDS)
    if not kinds:
        raise EvaluationError("no models given")
    try:
        split.validate(series)
    except ValueError as exc:
        raise EvaluationError(str(exc)) from None
    mon_start, mon_end = split.monitoring
    end_step = mon_end if end_step is None else end_step
    if not mon_start <= end_step <= mon_end:
        raise EvaluationError(f"end_step {end_step} outside monitoring range {split.monitoring}")
    for case in grid:
        if not mon_start <= case.onset_step <= end_step:
            raise EvaluationError(f"onset {case.onset_step} outside monitoring range [{mon_start}, {end_step}]")
    calibration = series.slice_steps(*split.calibration)
    monitoring = series.slice_steps(mon_start, end_step)
    tracks = [prepare_model(k, models[k], calibration, monitoring) for k in kinds]

    def work(case):
        try:
            return evaluate_case(monitoring, tracks, case, criteria, unit_scale, end_step)
        except (FaultError, StatsError) as exc:
            raise EvaluationError(f"case slope={case.slope_index} onset={case.onset_step}: {exc}") from exc

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_case = list(pool.map(work, grid.cases))
    else:
        per_case = [work(c) for c in grid.cases]

    outcomes = {(k, c): [] for k in kinds for c in criteria}
    for case_outs in per_case:
        for o in case_outs:
            outcomes[(o.model_kind, o.criterion)].append(o)

    summaries = {}
    for key, outs in outcomes.items():
        by_slope: dict[int, list] = {}
        for o in outs:
            by_slope.setdefault(o.case.slope_index, []).append(o)
        summaries[key] = [summarize_slope(by_slope[s]) for s in sorted(by_slope)]

    comparisons = []
    if "single_target" in kinds and "multi_target" in kinds:
        for c in criteria:
            s, m = outcomes[("single_target", c)], outcomes[("multi_target", c)]
            comparisons.append(compare_paired("delay_single_vs_multi", c, "single_target", "multi_target",
                                              s, m, "delay_hours", "a_greater"))
            comparisons.append(compare_paired("stability_single_vs_multi", c, "single_target", "multi_target",
                                              s, m, "stability", "two_sided"))
    if "criterion_1" in criteria and "criterion_2" in criteria:
        for k in kinds:
            c1, c2 = outcomes[(k, "criterion_1")], outcomes[(k, "criterion_2")]
            comparisons.append(compare_paired("delay_c1_vs_c2", k, "criterion_1", "criterion_2",
                                              c1, c2, "delay_hours", "a_greater"))
            comparisons.append(compare_paired("stability_c1_vs_c2", k, "criterion_1", "criterion_2",
                                              c1, c2, "stability", "a_greater"))

    config = {"unit_scale": unit_scale, "end_step": end_step, "grid_master_seed": grid.master_seed,
              "n_cases": len(grid), "split": {k: list(v) for k, v in split.parts().items()},
              "criteria": list(criteria), "model_kinds": kinds,
              "model_seeds": {k: int(models[k].training_seed) for k in kinds}}
    if config_echo:
        config.update(config_echo)
    return ComparisonReport(outcomes, summaries, comparisons, {t.kind: t.threshold for t in tracks}, config)


def alarm_trace(monitoring: ScadaSeries, track: ModelTrack, case: ExperimentCase,
                unit_scale: float) -> list[dict]:
    """Rows ``step,residual,threshold,flag_c1,flag_c2`` for one case and model."""
    res = case_residuals(monitoring, track, case, unit_scale)
    c1 = apply_criterion("criterion_1", res, track.threshold)
    c2 = apply_criterion("criterion_2", res, track.threshold)
    q = track.threshold.q999
    return [{"step": int(s), "residual": float(r), "threshold": q, "flag_c1": int(f1), "flag_c2": int(f2)}
            for s, r, f1, f2 in zip(res.steps, res.values, c1.flags, c2.flags)]


def write_alarm_trace(rows: list[dict], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_rows(path, rows)
