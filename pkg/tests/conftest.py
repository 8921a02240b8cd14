import numpy as np
import pytest

from nbm_detect.mlp import MODEL_KINDS, RegressionDataset, TrainConfig, preset_architecture, train
from nbm_detect.scada import (CHANNELS, DEFAULT_SPLIT, ScadaSeries, SyntheticConfig, apply_normalization,
                              fit_normalization, split_series, synthesize_scada)

# Shorter schedule than the library default; keeps fixture training to a few seconds per model.
QUICK_TRAIN = dict(epochs=40, batch_size=256, learning_rate=3e-3)


def make_series(n, start=0, seed=0, normalized=False):
    rng = np.random.default_rng(seed)
    values = np.column_stack([
        rng.uniform(0, 25, n), rng.uniform(0, 359, n), rng.normal(10, 5, n),
        rng.normal(50, 5, n), rng.normal(40, 3, n), rng.normal(60, 8, n),
    ])
    if normalized:
        values = rng.uniform(0, 1, (n, len(CHANNELS)))
    return ScadaSeries(np.arange(start, start + n), values, normalized=normalized)


def prepared_record(seed):
    raw = synthesize_scada(SyntheticConfig(seed=seed))
    params = fit_normalization(split_series(raw, DEFAULT_SPLIT)[0])
    return raw, params, apply_normalization(raw, params)


def train_presets(series, seed=0, **overrides):
    train_part = split_series(series, DEFAULT_SPLIT)[0]
    cfg = TrainConfig(seed=seed, **{**QUICK_TRAIN, **overrides})
    models = {}
    for kind in MODEL_KINDS:
        arch = preset_architecture(kind)
        ds = RegressionDataset(train_part.features(), train_part.targets(arch.output_dim))
        models[kind] = train(ds, arch, cfg)[0]
    return models


@pytest.fixture(scope="session")
def record():
    """Default-length synthetic record, normalized on the training months."""
    return prepared_record(11)


@pytest.fixture(scope="session")
def trained(record):
    return train_presets(record[2], seed=3)


def pytest_terminal_summary(terminalreporter):
    import verdicts
    if verdicts.LINES:
        terminalreporter.section("acceptance criteria")
        for line in verdicts.LINES:
            terminalreporter.write_line(line)
