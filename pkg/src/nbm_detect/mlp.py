"""Feedforward normal-behaviour networks in plain numpy.

Hidden layer order is ``dense -> batch norm -> activation -> dropout``; the
output layer is affine.  Trainable parameters live in one flat float64 vector
(per dense layer: weight ``(out, in)`` row-major, bias, then batch-norm scale
and shift when enabled).  Batch-norm running statistics live in a second flat
vector (per normalized layer: running mean, then running variance).

Training minimises the mean squared error averaged over samples and targets
with Adam::

    m <- b1 m + (1 - b1) g
    v <- b2 v + (1 - b2) g^2
    p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)

with ``b1 = 0.9, b2 = 0.999, eps = 1e-8``.  Running statistics follow
``r <- momentum * r + (1 - momentum) * batch_stat`` (momentum 0.9, biased
batch variance).  Dropout is inverted: kept units are scaled by ``1/(1-p)``
during training, so inference is a plain forward pass.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ModelError, TrainingError

BN_EPS = 1e-5
BN_MOMENTUM = 0.9
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

ACTIVATIONS = ("relu", "identity")
MODES = ("train", "inference", "frozen")


@dataclass(frozen=True)
class HiddenLayer:
    width: int
    batch_norm: bool = True


@dataclass(frozen=True)
class MlpArchitecture:
    hidden_layers: tuple[HiddenLayer, ...]
    output_dim: int
    input_dim: int = 3
    dropout_rate: float = 0.1
    activation: str = "relu"

    def __post_init__(self):
        layers = tuple(h if isinstance(h, HiddenLayer) else HiddenLayer(*h) for h in self.hidden_layers)
        object.__setattr__(self, "hidden_layers", layers)
        if self.input_dim < 1 or self.output_dim < 1:
            raise ModelError("input_dim and output_dim must be >= 1")
        if any(h.width < 1 for h in layers):
            raise ModelError("hidden widths must be >= 1")
        if not 0 <= self.dropout_rate < 1:
            raise ModelError("dropout_rate must lie in [0, 1)")
        if self.activation not in ACTIVATIONS:
            raise ModelError(f"activation must be one of {ACTIVATIONS}")

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(h.width for h in self.hidden_layers)

    def dense_shapes(self) -> list[tuple[int, int]]:
        dims = [self.input_dim, *self.widths, self.output_dim]
        return [(dims[i + 1], dims[i]) for i in range(len(dims) - 1)]

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden_layers": [[h.width, h.batch_norm] for h in self.hidden_layers],
            "output_dim": self.output_dim,
            "dropout_rate": self.dropout_rate,
            "activation": self.activation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpArchitecture":
        return cls(hidden_layers=tuple(HiddenLayer(int(w), bool(bn)) for w, bn in d["hidden_layers"]),
                   output_dim=int(d["output_dim"]), input_dim=int(d["input_dim"]),
                   dropout_rate=float(d["dropout_rate"]), activation=d["activation"])


PRESETS = {
    "multi_target": MlpArchitecture(hidden_layers=(HiddenLayer(4), HiddenLayer(19)), output_dim=3),
    "single_target": MlpArchitecture(hidden_layers=(HiddenLayer(4), HiddenLayer(4), HiddenLayer(5)), output_dim=1),
}
MODEL_KINDS = tuple(PRESETS)


def preset_architecture(kind: str) -> MlpArchitecture:
    try:
        return PRESETS[kind]
    except KeyError:
        raise ModelError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}") from None


# ---------------------------------------------------------------------------
# Parameter layout
# ---------------------------------------------------------------------------

def _layout(arch: MlpArchitecture):
    """Offsets of each tensor in the trainable and running-stat vectors."""
    params, running = [], []
    p = r = 0
    n_hidden = len(arch.hidden_layers)
    for i, (out_dim, in_dim) in enumerate(arch.dense_shapes()):
        entry = {"weight": (p, (out_dim, in_dim))}
        p += out_dim * in_dim
        entry["bias"] = (p, (out_dim,))
        p += out_dim
        if i < n_hidden and arch.hidden_layers[i].batch_norm:
            entry["gamma"] = (p, (out_dim,))
            entry["beta"] = (p + out_dim, (out_dim,))
            p += 2 * out_dim
            running.append({"running_mean": (r, (out_dim,)), "running_var": (r + out_dim, (out_dim,))})
            r += 2 * out_dim
        else:
            running.append(None)
        params.append(entry)
    return params, running, p, r


def _views(flat: np.ndarray, layout) -> list:
    out = []
    for entry in layout:
        if entry is None:
            out.append(None)
            continue
        out.append({k: flat[o:o + math.prod(s)].reshape(s) for k, (o, s) in entry.items()})
    return out


@dataclass(frozen=True, eq=False)
class MlpModel:
    architecture: MlpArchitecture
    params: np.ndarray
    running: np.ndarray
    training_seed: int = 0
    trained: bool = False

    def __post_init__(self):
        _, _, n_p, n_r = _layout(self.architecture)
        params = np.array(self.params, dtype=np.float64, copy=True).reshape(-1)
        running = np.array(self.running, dtype=np.float64, copy=True).reshape(-1)
        if params.shape != (n_p,) or running.shape != (n_r,):
            raise ModelError(f"parameter vectors must have lengths {n_p} and {n_r}")
        params.setflags(write=False)
        running.setflags(write=False)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "running", running)
        for entry in self.running_views():
            if entry is not None and not np.all(entry["running_var"] > 0):
                raise ModelError("running variance entries must be > 0")

    def layers(self) -> list[dict]:
        return _views(self.params, _layout(self.architecture)[0])

    def running_views(self) -> list:
        return _views(self.running, _layout(self.architecture)[1])

    @property
    def n_params(self) -> int:
        return len(self.params)

    def replace(self, params=None, running=None, trained=None) -> "MlpModel":
        return MlpModel(self.architecture,
                        self.params if params is None else params,
                        self.running if running is None else running,
                        self.training_seed,
                        self.trained if trained is None else trained)

    def equals(self, other: "MlpModel") -> bool:
        return (self.architecture == other.architecture and self.training_seed == other.training_seed
                and np.array_equal(self.params, other.params) and np.array_equal(self.running, other.running))


def init_model(arch: MlpArchitecture, seed: int = 0) -> MlpModel:
    """Glorot-uniform weights in ``±sqrt(6/(fan_in+fan_out))``, zero biases,
    batch-norm scale 1 / shift 0, running statistics (0, 1)."""
    layout, rlayout, n_p, n_r = _layout(arch)
    params = np.zeros(n_p)
    running = np.zeros(n_r)
    rng = np.random.default_rng(seed)
    for entry, view in zip(layout, _views(params, layout)):
        out_dim, in_dim = entry["weight"][1]
        bound = math.sqrt(6.0 / (in_dim + out_dim))
        view["weight"][...] = rng.uniform(-bound, bound, size=(out_dim, in_dim))
        if "gamma" in view:
            view["gamma"][...] = 1.0
    for view in _views(running, rlayout):
        if view is not None:
            view["running_var"][...] = 1.0
    return MlpModel(arch, params, running, training_seed=seed)


# ---------------------------------------------------------------------------
# Forward / backward
# ---------------------------------------------------------------------------

def _activate(h, activation):
    return np.maximum(h, 0.0) if activation == "relu" else h


def _forward(arch, layers, running, x, mode, rng=None):
    """Forward pass returning ``(output, caches, batch_stats)``."""
    caches = []
    stats = []
    a = x
    n_hidden = len(arch.hidden_layers)
    drop = arch.dropout_rate if (mode == "train" and rng is not None) else 0.0
    for i, lay in enumerate(layers):
        z = a @ lay["weight"].T + lay["bias"]
        if i == n_hidden:
            caches.append({"a_in": a})
            return z, caches, stats
        cache = {"a_in": a}
        if "gamma" in lay:
            if mode == "train":
                mu = z.mean(axis=0)
                var = z.var(axis=0)
                stats.append((mu, var))
            else:
                mu, var = running[i]["running_mean"], running[i]["running_var"]
            inv_std = 1.0 / np.sqrt(var + BN_EPS)
            xhat = (z - mu) * inv_std
            h = lay["gamma"] * xhat + lay["beta"]
            cache.update(xhat=xhat, inv_std=inv_std)
        else:
            h = z
        r = _activate(h, arch.activation)
        cache["h"] = h
        if drop > 0.0:
            mask = (rng.random(r.shape) >= drop) / (1.0 - drop)
            r = r * mask
            cache["mask"] = mask
        caches.append(cache)
        a = r
    raise AssertionError("unreachable")


def _backward(arch, layers, grads, caches, dout, mode):
    n_hidden = len(arch.hidden_layers)
    d = dout
    for i in range(n_hidden, -1, -1):
        lay, g, cache = layers[i], grads[i], caches[i]
        if i < n_hidden:
            if "mask" in cache:
                d = d * cache["mask"]
            if arch.activation == "relu":
                d = d * (cache["h"] > 0)
            if "gamma" in lay:
                xhat, inv_std = cache["xhat"], cache["inv_std"]
                g["gamma"][...] = (d * xhat).sum(axis=0)
                g["beta"][...] = d.sum(axis=0)
                dxhat = d * lay["gamma"]
                if mode == "train":
                    n = d.shape[0]
                    d = (inv_std / n) * (n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
                else:
                    d = dxhat * inv_std
        g["weight"][...] = d.T @ cache["a_in"]
        if mode == "train" and i < n_hidden and "gamma" in lay:
            # Batch centring cancels a bias that feeds batch norm exactly.
            g["bias"][...] = 0.0
        else:
            g["bias"][...] = d.sum(axis=0)
        if i > 0:
            d = d @ lay["weight"]


def _as_batch(x, dim, what):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != dim:
        raise ModelError(f"{what} must have trailing dimension {dim}, got shape {np.shape(x)}")
    return x, single


def forward(model: MlpModel, x, mode: str = "inference", rng: np.random.Generator | None = None) -> np.ndarray:
    """Evaluate the network on one input vector or a batch ``(n, input_dim)``.

    ``mode="train"`` normalises with batch statistics and applies dropout when
    ``rng`` is given; ``"inference"`` and ``"frozen"`` use running statistics
    and no dropout.
    """
    if mode not in MODES:
        raise ModelError(f"mode must be one of {MODES}")
    arch = model.architecture
    xb, single = _as_batch(x, arch.input_dim, "input")
    out, _, _ = _forward(arch, model.layers(), model.running_views(), xb, mode, rng)
    return out[0] if single else out


def _loss_and_grad(arch, layers, running, grad_views, x, y, mode, rng=None):
    out, caches, stats = _forward(arch, layers, running, x, mode, rng)
    diff = out - y
    loss = float(np.mean(diff * diff))
    _backward(arch, layers, grad_views, caches, (2.0 / diff.size) * diff, mode)
    return loss, stats


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegressionDataset:
    features: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.features, dtype=np.float64)
        t = np.asarray(self.targets, dtype=np.float64)
        if t.ndim == 1:
            t = t[:, None]
        if f.ndim != 2 or t.ndim != 2 or len(f) != len(t):
            raise ModelError("features and targets must be 2-D with equal length")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "targets", t)

    def __len__(self):
        return len(self.features)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 64
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0
    patience: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ModelError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ModelError("batch_size must be >= 1")
        if not self.learning_rate >= 0:
            raise ModelError("learning_rate must be >= 0")
        if self.optimizer != "adam":
            raise ModelError("only the 'adam' optimizer is implemented")
        if self.patience < 0:
            raise ModelError("patience must be >= 0")


@dataclass
class TrainReport:
    epoch_losses: list[float] = field(default_factory=list)
    stopped_early: bool = False

    @property
    def final_loss(self) -> float:
        return self.epoch_losses[-1]

    @property
    def epochs_run(self) -> int:
        return len(self.epoch_losses)


def _check_dataset(dataset: RegressionDataset, arch: MlpArchitecture):
    if len(dataset) == 0:
        raise TrainingError("empty dataset")
    if dataset.features.shape[1] != arch.input_dim:
        raise ModelError(f"features have dimension {dataset.features.shape[1]}, expected {arch.input_dim}")
    if dataset.targets.shape[1] != arch.output_dim:
        raise ModelError(f"targets have dimension {dataset.targets.shape[1]}, expected {arch.output_dim}")


def train(dataset: RegressionDataset, arch: MlpArchitecture, cfg: TrainConfig = TrainConfig(),
          init: MlpModel | None = None) -> tuple[MlpModel, TrainReport]:
    """Fit ``arch`` to ``dataset``; deterministic for a given ``cfg.seed``.

    Batches come from a fresh permutation each epoch; a trailing batch of a
    single sample is dropped (batch statistics are undefined for it).  With
    ``patience > 0`` training stops once the epoch loss has not improved for
    ``patience`` consecutive epochs.
    """
    _check_dataset(dataset, arch)
    n = len(dataset)
    if n < cfg.batch_size:
        raise TrainingError(f"dataset has {n} samples, fewer than batch_size {cfg.batch_size}")
    model = init if init is not None else init_model(arch, cfg.seed)
    layout, rlayout, n_p, _ = _layout(arch)
    params = np.array(model.params, copy=True)
    running = np.array(model.running, copy=True)
    grad = np.zeros(n_p)
    layers, rviews, gviews = _views(params, layout), _views(running, rlayout), _views(grad, layout)
    m = np.zeros(n_p)
    v = np.zeros(n_p)
    rng = np.random.default_rng([cfg.seed, 1])
    X, Y = dataset.features, dataset.targets
    report = TrainReport()
    best, since_best, t = math.inf, 0, 0
    bs = cfg.batch_size
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        total, seen = 0.0, 0
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            if len(idx) < 2 and start > 0:
                continue
            loss, stats = _loss_and_grad(arch, layers, rviews, gviews, X[idx], Y[idx], "train", rng)
            if not math.isfinite(loss):
                raise TrainingError("non-finite loss", epoch=epoch)
            total += loss * len(idx)
            seen += len(idx)
            t += 1
            m *= ADAM_BETA1
            m += (1 - ADAM_BETA1) * grad
            v *= ADAM_BETA2
            v += (1 - ADAM_BETA2) * grad * grad
            step = cfg.learning_rate / (1 - ADAM_BETA1 ** t)
            params -= step * m / (np.sqrt(v / (1 - ADAM_BETA2 ** t)) + ADAM_EPS)
            k = 0
            for rv in rviews:
                if rv is None:
                    continue
                mu, var = stats[k]
                k += 1
                rv["running_mean"] *= BN_MOMENTUM
                rv["running_mean"] += (1 - BN_MOMENTUM) * mu
                rv["running_var"] *= BN_MOMENTUM
                rv["running_var"] += (1 - BN_MOMENTUM) * var
        epoch_loss = total / seen
        if not math.isfinite(epoch_loss) or not np.all(np.isfinite(params)):
            raise TrainingError("non-finite loss or parameters", epoch=epoch)
        report.epoch_losses.append(epoch_loss)
        if cfg.patience:
            if epoch_loss < best:
                best, since_best = epoch_loss, 0
            else:
                since_best += 1
                if since_best >= cfg.patience:
                    report.stopped_early = True
                    break
    # Batch variance can be exactly zero for a dead unit; keep running_var positive.
    for rv in rviews:
        if rv is not None:
            np.maximum(rv["running_var"], np.finfo(float).tiny, out=rv["running_var"])
    return MlpModel(arch, params, running, training_seed=cfg.seed, trained=True), report


def predict_series(model: MlpModel, features) -> np.ndarray:
    """Inference-mode predictions, shape ``(n, output_dim)``."""
    arch = model.architecture
    f = np.asarray(features, dtype=np.float64)
    if f.size == 0:
        return np.zeros((0, arch.output_dim))
    if f.ndim != 2 or f.shape[1] != arch.input_dim:
        raise ModelError(f"features must have shape (n, {arch.input_dim}), got {f.shape}")
    out, _, _ = _forward(arch, model.layers(), model.running_views(), f, "inference")
    return out


@dataclass(frozen=True)
class ErrorReport:
    rmse: np.ndarray
    mae: np.ndarray

    def to_dict(self, names: Sequence[str] | None = None) -> dict:
        names = names or [f"target_{i}" for i in range(len(self.rmse))]
        return {name: {"rmse": float(r), "mae": float(a)} for name, r, a in zip(names, self.rmse, self.mae)}


def evaluate_error(model: MlpModel, dataset: RegressionDataset) -> ErrorReport:
    if len(dataset) == 0:
        raise ModelError("empty dataset")
    _check_dataset(dataset, model.architecture)
    diff = predict_series(model, dataset.features) - dataset.targets
    return ErrorReport(rmse=np.sqrt(np.mean(diff * diff, axis=0)), mae=np.mean(np.abs(diff), axis=0))


# ---------------------------------------------------------------------------
# Gradient verification
# ---------------------------------------------------------------------------

def loss_and_gradient(model: MlpModel, x, y, mode: str = "frozen") -> tuple[float, np.ndarray]:
    """MSE loss and its gradient w.r.t. the flat trainable vector (no dropout)."""
    arch = model.architecture
    xb, _ = _as_batch(x, arch.input_dim, "input")
    yb, _ = _as_batch(y, arch.output_dim, "target")
    layout, rlayout, n_p, _ = _layout(arch)
    grad = np.zeros(n_p)
    loss, _ = _loss_and_grad(arch, model.layers(), model.running_views(), _views(grad, layout), xb, yb, mode)
    return loss, grad


def _loss_only(arch, params, model, xb, yb, mode):
    layout, rlayout, _, _ = _layout(arch)
    out, _, _ = _forward(arch, _views(params, layout), model.running_views(), xb, mode)
    diff = out - yb
    return float(np.mean(diff * diff))


def gradient_check(model: MlpModel, x, y, epsilon: float = 1e-5, mode: str = "frozen") -> float:
    """Largest relative deviation between analytic and central-difference gradients.

    Per parameter the deviation is ``|a - n| / max(|a|, |n|)``, taken as 0 when
    both are zero.  ``mode="frozen"`` uses running batch-norm statistics;
    ``mode="train"`` differentiates through batch statistics (dropout is off
    in both).
    """
    if not epsilon > 0:
        raise ModelError("epsilon must be > 0")
    if mode not in ("frozen", "train"):
        raise ModelError("gradient_check mode must be 'frozen' or 'train'")
    arch = model.architecture
    xb, _ = _as_batch(x, arch.input_dim, "input")
    yb, _ = _as_batch(y, arch.output_dim, "target")
    _, analytic = loss_and_gradient(model, xb, yb, mode)
    numeric = finite_difference_gradient(model, xb, yb, epsilon, mode)
    return max_relative_deviation(analytic, numeric)


def kink_distance(model: MlpModel, x, mode: str = "frozen") -> float:
    """Smallest ``|pre-activation|`` over rectified hidden units for input ``x``.

    Central differences are only meaningful where no unit sits on the
    rectifier kink; callers of :func:`gradient_check` should require this to be
    well above ``epsilon`` times the parameter sensitivity.
    """
    arch = model.architecture
    if arch.activation != "relu" or not arch.hidden_layers:
        return math.inf
    xb, _ = _as_batch(x, arch.input_dim, "input")
    _, caches, _ = _forward(arch, model.layers(), model.running_views(), xb, mode)
    return float(min(np.abs(c["h"]).min() for c in caches[:-1]))


def finite_difference_gradient(model: MlpModel, x, y, epsilon: float, mode: str = "frozen") -> np.ndarray:
    arch = model.architecture
    xb, _ = _as_batch(x, arch.input_dim, "input")
    yb, _ = _as_batch(y, arch.output_dim, "target")
    p = np.array(model.params, copy=True)
    numeric = np.zeros_like(p)
    for i in range(len(p)):
        orig = p[i]
        p[i] = orig + epsilon
        up = _loss_only(arch, p, model, xb, yb, mode)
        p[i] = orig - epsilon
        down = _loss_only(arch, p, model, xb, yb, mode)
        p[i] = orig
        numeric[i] = (up - down) / (2.0 * epsilon)
    return numeric


def max_relative_deviation(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.abs(a), np.abs(b))
    num = np.abs(a - b)
    rel = np.divide(num, denom, out=np.zeros_like(num), where=denom > 0)
    return float(rel.max()) if rel.size else 0.0


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

MAGIC = b"NBMMLP\x00\x01"


def _tensor_table(model: MlpModel):
    table = []
    for i, (lay, run) in enumerate(zip(model.layers(), model.running_views())):
        for key in ("weight", "bias", "gamma", "beta"):
            if key in lay:
                table.append((f"layer{i}.{key}", lay[key]))
        if run is not None:
            table.append((f"layer{i}.running_mean", run["running_mean"]))
            table.append((f"layer{i}.running_var", run["running_var"]))
    return table


def model_to_bytes(model: MlpModel) -> bytes:
    """Binary model file.

    Layout: 8-byte magic ``NBMMLP\\0\\1``; uint32 little-endian header length;
    UTF-8 JSON header (sorted keys, no whitespace) with ``architecture``,
    ``training_seed``, ``trained`` and ``tensors`` (list of ``{name, shape}``);
    then each tensor as little-endian float64 in row-major order, in header
    order.
    """
    table = _tensor_table(model)
    header = {
        "format": "nbm-mlp",
        "version": 1,
        "architecture": model.architecture.to_dict(),
        "training_seed": int(model.training_seed),
        "trained": bool(model.trained),
        "tensors": [{"name": name, "shape": list(arr.shape)} for name, arr in table],
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = b"".join(np.ascontiguousarray(arr, dtype="<f8").tobytes() for _, arr in table)
    return MAGIC + struct.pack("<I", len(head)) + head + body


def model_from_bytes(blob: bytes) -> MlpModel:
    if blob[:8] != MAGIC:
        raise ModelError("not a model file (bad magic)")
    (hlen,) = struct.unpack("<I", blob[8:12])
    try:
        header = json.loads(blob[12:12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelError(f"corrupt model header: {exc}") from None
    arch = MlpArchitecture.from_dict(header["architecture"])
    template = init_model(arch, 0)
    tensors = {}
    offset = 12 + hlen
    for t in header["tensors"]:
        count = math.prod(t["shape"])
        chunk = blob[offset:offset + 8 * count]
        if len(chunk) != 8 * count:
            raise ModelError("truncated model file")
        tensors[t["name"]] = np.frombuffer(chunk, dtype="<f8").reshape(t["shape"])
        offset += 8 * count
    if offset != len(blob):
        raise ModelError("trailing bytes in model file")
    params = np.array(template.params, copy=True)
    running = np.array(template.running, copy=True)
    layout, rlayout, _, _ = _layout(arch)
    expected = set()
    for i, (lay, run) in enumerate(zip(_views(params, layout), _views(running, rlayout))):
        for key, view in list(lay.items()) + (list(run.items()) if run else []):
            name = f"layer{i}.{key}"
            expected.add(name)
            if name not in tensors or tensors[name].shape != view.shape:
                raise ModelError(f"missing or misshapen tensor {name}")
            view[...] = tensors[name]
    if expected != set(tensors):
        raise ModelError("unexpected tensors in model file")
    return MlpModel(arch, params, running, training_seed=int(header["training_seed"]),
                    trained=bool(header.get("trained", False)))


def save_model(model: MlpModel, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(model_to_bytes(model))


def load_model(path: str | Path) -> MlpModel:
    path = Path(path)
    if not path.is_file():
        raise ModelError(f"model file not found: {path}")
    return model_from_bytes(path.read_bytes())
