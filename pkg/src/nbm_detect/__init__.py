"""Normal-behaviour MLP models for gear-bearing fault detection on wind-turbine SCADA data."""

from .alarms import alarm_criterion_1, alarm_criterion_2, calibrate_threshold, percentile, residuals
from .errors import NbmError
from .faults import FaultSpec, build_grid, inject
from .mlp import MlpModel, TrainConfig, init_model, load_model, preset_architecture, save_model, train
from .scada import ScadaSeries, SyntheticConfig, load_scada_csv, synthesize_scada, write_scada_csv
from .tstats import paired_t_test, student_t_cdf

__all__ = [
    "FaultSpec", "MlpModel", "NbmError", "ScadaSeries", "SyntheticConfig", "TrainConfig",
    "alarm_criterion_1", "alarm_criterion_2", "build_grid", "calibrate_threshold", "init_model", "inject",
    "load_model", "load_scada_csv", "paired_t_test", "percentile", "preset_architecture", "residuals",
    "save_model", "student_t_cdf", "synthesize_scada", "train", "write_scada_csv",
]
