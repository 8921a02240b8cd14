"""End-to-end pipeline steps behind the CLI subcommands.

Output directory layout::

    <out>/scada.csv                synth: the synthetic record
    <out>/normalization.json       train: min-max ranges fitted on the train range
    <out>/models/<kind>.nbm        train: one model file per preset
    <out>/metrics.json             train: per-target RMSE/MAE on the calibration range
    <out>/grid.csv                 evaluate: experiment manifest
    <out>/report.json              evaluate: comparison report
    <out>/outcomes.csv, slope_summary.csv, ttests.csv
    <out>/traces/<kind>_slope<k>_onset<i>.csv
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from .config import RunConfig
from .errors import ConfigError, DataError, ModelError
from .evaluation import ComparisonReport, alarm_trace, prepare_model, run_experiment, write_alarm_trace
from .faults import build_grid, write_grid_manifest
from .mlp import MODEL_KINDS, RegressionDataset, evaluate_error, load_model, preset_architecture, save_model, train
from .scada import (TARGET_CHANNELS, NormalizationParams, ScadaSeries, apply_normalization, fit_normalization,
                    load_scada_csv, split_series, synthesize_scada, write_scada_csv)

log = logging.getLogger(__name__)


def _json_dump(obj, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")


def load_series(cfg: RunConfig) -> ScadaSeries:
    if cfg.data_source == "csv":
        return load_scada_csv(cfg.csv_path)
    return synthesize_scada(cfg.synthetic)


def normalized_series(cfg: RunConfig, raw: ScadaSeries, params: NormalizationParams | None = None):
    cfg.split.validate(raw)
    if params is None:
        params = fit_normalization(split_series(raw, cfg.split)[0])
    return params, apply_normalization(raw, params)


def cmd_synth(cfg: RunConfig) -> Path:
    if cfg.data_source != "synthetic":
        raise ConfigError("data.source: synth requires source = \"synthetic\"")
    path = Path(cfg.out_dir) / "scada.csv"
    write_scada_csv(synthesize_scada(cfg.synthetic), path)
    log.info("wrote %s", path)
    return path


def cmd_train(cfg: RunConfig) -> dict:
    raw = load_series(cfg)
    params, series = normalized_series(cfg, raw)
    train_part, calibration, _ = split_series(series, cfg.split)
    out = Path(cfg.out_dir)
    _json_dump(params.to_dict(), out / "normalization.json")
    metrics = {"held_out": "calibration", "models": {}}
    for kind in MODEL_KINDS:
        arch = preset_architecture(kind)
        tcfg = cfg.train_config(kind)
        ds = RegressionDataset(train_part.features(), train_part.targets(arch.output_dim))
        log.info("training %s on %d samples (%d epochs)", kind, len(ds), tcfg.epochs)
        model, report = train(ds, arch, tcfg)
        save_model(model, out / "models" / f"{kind}.nbm")
        held = RegressionDataset(calibration.features(), calibration.targets(arch.output_dim))
        err = evaluate_error(model, held)
        metrics["models"][kind] = {
            "training_seed": tcfg.seed,
            "epochs_run": report.epochs_run,
            "final_train_loss": report.final_loss,
            "stopped_early": report.stopped_early,
            "held_out_error": err.to_dict(TARGET_CHANNELS[:arch.output_dim]),
        }
    _json_dump(metrics, out / "metrics.json")
    return metrics


def load_models(out_dir: str | Path) -> dict:
    models = {}
    for kind in MODEL_KINDS:
        path = Path(out_dir) / "models" / f"{kind}.nbm"
        if not path.is_file():
            raise ModelError(f"missing model file {path}; run `train` first")
        models[kind] = load_model(path)
    return models


def load_normalization(out_dir: str | Path) -> NormalizationParams:
    path = Path(out_dir) / "normalization.json"
    if not path.is_file():
        raise DataError(f"missing {path}; run `train` first")
    return NormalizationParams.from_dict(json.loads(path.read_text(encoding="utf-8")))


def cmd_evaluate(cfg: RunConfig) -> ComparisonReport:
    out = Path(cfg.out_dir)
    models = load_models(out)
    params = load_normalization(out)
    _, series = normalized_series(cfg, load_series(cfg), params)
    grid = build_grid(cfg.window, cfg.slopes, cfg.n_onsets, cfg.grid_master_seed)
    write_grid_manifest(grid, out / "grid.csv")
    report = run_experiment(series, models, grid, cfg.split, cfg.criteria, cfg.unit_scale, cfg.end_step,
                            jobs=cfg.jobs, config_echo={"run": cfg.echo()})
    report.write(out)

    wanted = set(cfg.trace_cases)
    cases = [c for c in grid if (c.slope_index, c.onset_ordinal) in wanted]
    if cases:
        split = cfg.split
        end = split.monitoring[1] if cfg.end_step is None else cfg.end_step
        calibration = series.slice_steps(*split.calibration)
        monitoring = series.slice_steps(split.monitoring[0], end)
        for kind, model in models.items():
            track = prepare_model(kind, model, calibration, monitoring)
            for c in cases:
                rows = alarm_trace(monitoring, track, c, cfg.unit_scale)
                write_alarm_trace(rows, out / "traces" / f"{kind}_slope{c.slope_index}_onset{c.onset_ordinal}.csv")
    return report


def _num(v, fmt="{:8.2f}") -> str:
    return " " * (len(fmt.format(0.0))) if v is None else fmt.format(v)


def render_report(doc: dict) -> str:
    """Plain-text tables from a ``report.json`` document."""
    if doc.get("schema", "").split("/")[0] != "nbm-detect-report":
        raise DataError("not an nbm-detect report")
    lines = []
    thr = doc["thresholds"]
    lines.append("Thresholds (99.9th percentile of calibration residuals)")
    for kind in sorted(thr):
        t = thr[kind]
        lines.append(f"  {kind:14s} q999 = {t['q999']:.5f}  (n = {t['n_calibration']}, "
                     f"steps {t['calibrated_on'][0]}..{t['calibrated_on'][1]})")
    groups: dict = {}
    for s in doc["slope_summaries"]:
        groups.setdefault((s["model_kind"], s["criterion"]), []).append(s)
    for (kind, crit), rows in groups.items():
        lines.append("")
        lines.append(f"{kind} / {crit}")
        lines.append("  slope  detected  delay_mean  delay_std  stab_mean  stab_std")
        for s in rows:
            lines.append(f"  {s['slope_index']:5d}  {s['n_detected']:4d}/{s['n_cases']:<3d}"
                         f"  {_num(s['mean_delay_hours'], '{:10.2f}')}  {_num(s['std_delay_hours'], '{:9.2f}')}"
                         f"  {_num(s['mean_stability'], '{:9.4f}')}  {_num(s['std_stability'], '{:8.4f}')}")
    lines.append("")
    lines.append("Paired t-tests (d = a - b)")
    for t in doc["ttests"]:
        head = f"  {t['name']:26s} {t['group']:14s} n={t['n_pairs']:<4d} excluded={t['n_excluded']:<3d}"
        if t["status"] != "ok":
            lines.append(f"{head} {t['status']}")
        else:
            lines.append(f"{head} mean_d={t['mean_difference']:+.4g} t={t['t_statistic']:.3f} "
                         f"p1={t['p_one_sided']:.3g} p2={t['p_two_sided']:.3g} ({t['alternative']})")
    return "\n".join(lines) + "\n"


def cmd_report(cfg: RunConfig) -> str:
    path = Path(cfg.out_dir) / "report.json"
    if not path.is_file():
        raise DataError(f"missing {path}; run `evaluate` first")
    text = render_report(json.loads(path.read_text(encoding="utf-8")))
    (Path(cfg.out_dir) / "summary.txt").write_text(text, encoding="utf-8")
    return text
