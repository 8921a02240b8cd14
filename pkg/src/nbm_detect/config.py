"""Run configuration: a TOML file validated into :class:`RunConfig`.

Every validation error names the offending key path, e.g.
``train.multi_target.epochs: expected an integer >= 1``.  See README for the
full schema.  Seeds left unset are derived from ``master_seed``:

* synthetic data: ``derive_seed(master_seed, "scada_core.synth")``
* training: ``derive_seed(master_seed, "nbm_mlp.train", i)`` with ``i`` the
  position of the model kind in ``("multi_target", "single_target")``
* fault grid: ``derive_seed(master_seed, "fault_lab.grid")``
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .alarms import CRITERIA
from .errors import ConfigError, NbmError
from .faults import DEFAULT_N_ONSETS, DEFAULT_SLOPES, DEFAULT_UNIT_SCALE, DEFAULT_WINDOW, OnsetWindow
from .mlp import MODEL_KINDS, TrainConfig
from .scada import ComponentModel, SplitSpec, SyntheticConfig
from .seeding import derive_seed

MAX_SEED = 2 ** 64 - 1


@dataclass(frozen=True)
class RunConfig:
    master_seed: int = 0
    out_dir: str = "runs/default"
    data_source: str = "synthetic"
    csv_path: str | None = None
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)
    split_months: dict = field(default_factory=lambda: {"train": (1, 10), "calibration": (11, 11),
                                                        "monitoring": (12, 14)})
    train: dict = field(default_factory=dict)
    unit_scale: float = DEFAULT_UNIT_SCALE
    slopes: tuple[int, ...] = DEFAULT_SLOPES
    n_onsets: int = DEFAULT_N_ONSETS
    window: OnsetWindow = DEFAULT_WINDOW
    grid_seed: int | None = None
    criteria: tuple[str, ...] = CRITERIA
    end_step: int | None = None
    trace_cases: tuple[tuple[int, int], ...] = ((1, 0), (10, 0))
    jobs: int = 1

    @property
    def split(self) -> SplitSpec:
        m = self.split_months
        return SplitSpec.from_months(m["train"], m["calibration"], m["monitoring"])

    @property
    def grid_master_seed(self) -> int:
        return derive_seed(self.master_seed, "fault_lab.grid") if self.grid_seed is None else self.grid_seed

    def train_config(self, kind: str) -> TrainConfig:
        return self.train[kind]

    def echo(self) -> dict:
        """Plain-data view of the configuration for reports."""
        syn = dataclasses.asdict(self.synthetic)
        return {
            "master_seed": self.master_seed,
            "data_source": self.data_source,
            "csv_path": self.csv_path,
            "synthetic": syn if self.data_source == "synthetic" else None,
            "split_months": {k: list(v) for k, v in self.split_months.items()},
            "train": {k: dataclasses.asdict(v) for k, v in self.train.items()},
            "slopes": list(self.slopes),
            "n_onsets": self.n_onsets,
            "onset_window": [self.window.start_step, self.window.end_step],
        }


class _Reader:
    """Typed access to one TOML table that records the key path for errors."""

    def __init__(self, table: Mapping, path: str):
        if not isinstance(table, Mapping):
            raise ConfigError(f"{path or '<root>'}: expected a table")
        self.table = dict(table)
        self.path = path
        self.used: set[str] = set()

    def key(self, name: str) -> str:
        return f"{self.path}.{name}" if self.path else name

    def fail(self, name: str, message: str):
        raise ConfigError(f"{self.key(name)}: {message}")

    def has(self, name: str) -> bool:
        return name in self.table

    def raw(self, name: str, default=None):
        self.used.add(name)
        return self.table.get(name, default)

    def int(self, name: str, default=None, lo=None, hi=None):
        v = self.raw(name, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(name, f"expected an integer, got {v!r}")
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            bounds = f">= {lo}" if hi is None else f"in [{lo}, {hi}]"
            self.fail(name, f"expected an integer {bounds}, got {v}")
        return v

    def float(self, name: str, default=None, lo=None, strict=False):
        v = self.raw(name, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(name, f"expected a number, got {v!r}")
        v = float(v)
        if lo is not None and (v <= lo if strict else v < lo):
            self.fail(name, f"expected a number {'>' if strict else '>='} {lo}, got {v}")
        return v

    def str(self, name: str, default=None, choices=None):
        v = self.raw(name, default)
        if v is None:
            return None
        if not isinstance(v, str):
            self.fail(name, f"expected a string, got {v!r}")
        if choices is not None and v not in choices:
            self.fail(name, f"expected one of {list(choices)}, got {v!r}")
        return v

    def list(self, name: str, default=None):
        v = self.raw(name, default)
        if v is not None and not isinstance(v, list):
            self.fail(name, f"expected an array, got {v!r}")
        return v

    def sub(self, name: str) -> "_Reader":
        self.used.add(name)
        return _Reader(self.table.get(name, {}), self.key(name))

    def finish(self):
        unknown = sorted(set(self.table) - self.used)
        if unknown:
            raise ConfigError(f"{self.key(unknown[0])}: unknown key")


def _month_pair(r: _Reader, name: str, default):
    v = r.list(name, list(default))
    if len(v) != 2 or not all(isinstance(x, int) and not isinstance(x, bool) for x in v) or not 1 <= v[0] <= v[1]:
        r.fail(name, f"expected [first_month, last_month] with 1 <= first <= last, got {v!r}")
    return tuple(v)


def _synthetic(r: _Reader, master_seed: int) -> SyntheticConfig:
    kwargs: dict[str, Any] = {}
    for f in dataclasses.fields(SyntheticConfig):
        if not r.has(f.name):
            continue
        if f.name in ("gear", "oil", "transformer"):
            c = r.sub(f.name)
            kwargs[f.name] = ComponentModel(c.float("offset", 0.0), c.float("load_gain", 0.0),
                                            c.float("air_gain", 0.0), c.float("noise_std", 0.0, lo=0.0))
            for k in ("offset", "load_gain", "air_gain", "noise_std"):
                if not c.has(k):
                    c.fail(k, "required")
            c.finish()
        elif f.name in ("n_months", "seed"):
            kwargs[f.name] = r.int(f.name, lo=0 if f.name == "seed" else None, hi=MAX_SEED)
        else:
            kwargs[f.name] = r.float(f.name)
    r.finish()
    kwargs.setdefault("seed", derive_seed(master_seed, "scada_core.synth"))
    try:
        return SyntheticConfig(**kwargs)
    except NbmError as exc:
        raise ConfigError(f"{r.path}: {exc}") from None


def _train(r: _Reader, master_seed: int, ordinal: int) -> TrainConfig:
    seed = r.int("seed", lo=0, hi=MAX_SEED)
    cfg = dict(
        epochs=r.int("epochs", 200, lo=1),
        batch_size=r.int("batch_size", 64, lo=1),
        learning_rate=r.float("learning_rate", 1e-3, lo=0.0, strict=True),
        optimizer=r.str("optimizer", "adam", choices=("adam",)),
        patience=r.int("patience", 0, lo=0),
        seed=derive_seed(master_seed, "nbm_mlp.train", ordinal) if seed is None else seed,
    )
    r.finish()
    return TrainConfig(**cfg)


def parse_config(doc: Mapping, base_dir: Path | None = None, seed: int | None = None,
                 out_dir: str | None = None, jobs: int | None = None) -> RunConfig:
    """Validate a parsed TOML document.  ``seed``, ``out_dir`` and ``jobs`` override the file."""
    root = _Reader(doc, "")
    master = root.int("master_seed", lo=0, hi=MAX_SEED)
    if seed is not None:
        if not 0 <= seed <= MAX_SEED:
            raise ConfigError(f"--seed: expected an unsigned 64-bit integer, got {seed}")
        master = seed
    if master is None:
        raise ConfigError("master_seed: required (or pass --seed)")
    out = root.str("out_dir", "runs/default")
    if out_dir is not None:
        out = out_dir

    data = root.sub("data")
    source = data.str("source", "synthetic", choices=("synthetic", "csv"))
    csv_path = data.str("csv_path")
    if source == "csv":
        if not csv_path:
            data.fail("csv_path", "required when source = \"csv\"")
        p = Path(csv_path)
        if not p.is_absolute() and base_dir is not None:
            csv_path = str(base_dir / p)
    synthetic = _synthetic(data.sub("synthetic"), master)
    data.finish()

    split = root.sub("split")
    months = {
        "train": _month_pair(split, "train_months", (1, 10)),
        "calibration": _month_pair(split, "calibration_months", (11, 11)),
        "monitoring": _month_pair(split, "monitoring_months", (12, 14)),
    }
    split.finish()
    try:
        SplitSpec.from_months(months["train"], months["calibration"], months["monitoring"]).validate()
    except ValueError as exc:
        raise ConfigError(f"split: {exc}") from None
    if source == "synthetic" and months["monitoring"][1] > synthetic.n_months:
        raise ConfigError(f"split.monitoring_months: month {months['monitoring'][1]} beyond "
                          f"data.synthetic.n_months = {synthetic.n_months}")

    tr = root.sub("train")
    train = {kind: _train(tr.sub(kind), master, i) for i, kind in enumerate(MODEL_KINDS)}
    tr.finish()

    faults = root.sub("faults")
    unit_scale = faults.float("unit_scale", DEFAULT_UNIT_SCALE, lo=0.0)
    slopes = faults.list("slopes", list(DEFAULT_SLOPES))
    if not slopes or not all(isinstance(s, int) and not isinstance(s, bool) and 1 <= s <= 10 for s in slopes):
        faults.fail("slopes", f"expected a non-empty array of integers in 1..10, got {slopes!r}")
    if len(set(slopes)) != len(slopes):
        faults.fail("slopes", "duplicate slope")
    n_onsets = faults.int("n_onsets", DEFAULT_N_ONSETS, lo=1)
    w_start = faults.int("window_start_step", DEFAULT_WINDOW.start_step, lo=0)
    w_end = faults.int("window_end_step", DEFAULT_WINDOW.end_step if not faults.has("window_start_step")
                       else w_start + DEFAULT_WINDOW.n_steps - 1, lo=0)
    if w_end < w_start:
        faults.fail("window_end_step", f"must be >= window_start_step ({w_start})")
    grid_seed = faults.int("grid_seed", lo=0, hi=MAX_SEED)
    faults.finish()
    mon = SplitSpec.from_months(months["train"], months["calibration"], months["monitoring"]).monitoring
    if not (mon[0] <= w_start and w_end <= mon[1]):
        raise ConfigError(f"faults.window_start_step: onset window [{w_start}, {w_end}] outside the "
                          f"monitoring range {list(mon)}")

    ev = root.sub("evaluate")
    criteria = ev.list("criteria", list(CRITERIA))
    if not criteria or any(c not in CRITERIA for c in criteria) or len(set(criteria)) != len(criteria):
        ev.fail("criteria", f"expected a non-empty subset of {list(CRITERIA)}, got {criteria!r}")
    end_step = ev.int("end_step", lo=0)
    if end_step is not None and not (w_end <= end_step <= mon[1]):
        ev.fail("end_step", f"must lie in [{w_end}, {mon[1]}]")
    traces = ev.list("trace_cases", [[1, 0], [10, 0]])
    if not all(isinstance(t, list) and len(t) == 2 and all(isinstance(x, int) for x in t) for t in traces):
        ev.fail("trace_cases", "expected an array of [slope_index, onset_ordinal] pairs")
    n_jobs = ev.int("jobs", 1, lo=1)
    if jobs is not None:
        if jobs < 1:
            raise ConfigError(f"--jobs: expected an integer >= 1, got {jobs}")
        n_jobs = jobs
    ev.finish()
    root.finish()

    return RunConfig(master_seed=master, out_dir=out, data_source=source, csv_path=csv_path,
                     synthetic=synthetic, split_months=months, train=train, unit_scale=unit_scale,
                     slopes=tuple(sorted(slopes)), n_onsets=n_onsets, window=OnsetWindow(w_start, w_end),
                     grid_seed=grid_seed, criteria=tuple(c for c in CRITERIA if c in criteria),
                     end_step=end_step, trace_cases=tuple(tuple(t) for t in traces), jobs=n_jobs)


def load_config(path: str | Path | None = None, **overrides) -> RunConfig:
    if path is None:
        return parse_config({"master_seed": 0}, **overrides) if overrides.get("seed") is None \
            else parse_config({}, **overrides)
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from None
    return parse_config(doc, base_dir=path.parent, **overrides)
