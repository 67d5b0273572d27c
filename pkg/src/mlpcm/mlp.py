"""Three-headed multi-layer perceptron written directly against numpy.

Each output (write energy, write latency, endurance) has its own fully
separate sub-network that reads only its slice of the 14-column feature
vector. Hidden layers are rectified, outputs are linear. Parameters of
all heads live in one flat float64 vector so Adam and snapshots operate
on a single array; per-layer weights and biases are views into it.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import FEATURE_MASKS, N_FEATURES, EncodedDataset, Scaler, encode_features
from .device import DeviceParams
from .errors import ShapeError, TraceParseError, TrainingError
from .rng import SplitMix64, derive_seed

log = logging.getLogger(__name__)

MODEL_MAGIC = "pcm-mlp v1"
INIT_SCHEME = "glorot-uniform"


@dataclass(frozen=True)
class HeadSpec:
    name: str
    input_dim: int
    hidden_widths: tuple[int, ...]
    l1: float = 0.0
    l2: float = 0.0
    mask: tuple[int, ...] | None = None  # feature columns; None means all

    def layer_shapes(self) -> list[tuple[int, int]]:
        dims = [self.input_dim, *self.hidden_widths, 1]
        return [(dims[i + 1], dims[i]) for i in range(len(dims) - 1)]


DEFAULT_HEADS = (
    HeadSpec("energy", 14, (28, 28, 14, 6, 6, 16), l1=0.001, l2=0.001, mask=FEATURE_MASKS["energy"]),
    HeadSpec("latency", 8, (30, 14, 24, 16, 12), l1=0.01, l2=0.001, mask=FEATURE_MASKS["latency"]),
    HeadSpec("endurance", 2, (30, 14, 24, 16, 8), l1=0.01, l2=0.001, mask=FEATURE_MASKS["endurance"]),
)


class MlpModel:
    """Weights of independent heads; ``layers[h][i]`` is a ``(W, b)`` view pair."""

    def __init__(self, specs, seed: int = 0, theta: np.ndarray | None = None, n_features: int | None = None):
        self.specs = tuple(specs)
        self.seed = seed
        if n_features is None:
            n_features = max(max(s.mask) + 1 if s.mask else s.input_dim for s in self.specs)
        self.n_features = n_features
        for s in self.specs:
            if s.mask is not None and len(s.mask) != s.input_dim:
                raise ShapeError(f"head {s.name}: mask selects {len(s.mask)} columns, input_dim is {s.input_dim}")
        size = sum(r * c + r for s in self.specs for r, c in s.layer_shapes())
        self.theta = np.zeros(size) if theta is None else np.array(theta, dtype=np.float64)
        if self.theta.shape != (size,):
            raise ShapeError(f"parameter vector has {self.theta.size} entries, expected {size}")
        self.layers = self.views(self.theta)

    def views(self, flat: np.ndarray) -> list[list[tuple[np.ndarray, np.ndarray]]]:
        out, off = [], 0
        for s in self.specs:
            head = []
            for r, c in s.layer_shapes():
                w = flat[off:off + r * c].reshape(r, c)
                off += r * c
                b = flat[off:off + r]
                off += r
                head.append((w, b))
            out.append(head)
        return out

    def copy(self) -> "MlpModel":
        return MlpModel(self.specs, self.seed, self.theta.copy(), self.n_features)

    def head_index(self, name: str) -> int:
        for i, s in enumerate(self.specs):
            if s.name == name:
                return i
        raise KeyError(name)


def init_model(specs=DEFAULT_HEADS, seed: int = 0) -> MlpModel:
    """Glorot-uniform weights from a per-layer seeded stream, zero biases."""
    model = MlpModel(specs, seed)
    for h, head in enumerate(model.layers):
        for i, (w, _b) in enumerate(head):
            fan_out, fan_in = w.shape
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            u = SplitMix64(derive_seed(seed, h, i)).uniform(w.size)
            w[...] = ((2.0 * u - 1.0) * limit).reshape(w.shape)
    return model


def _head_input(spec: HeadSpec, x: np.ndarray) -> np.ndarray:
    return x if spec.mask is None else x[:, spec.mask]


def _head_forward(layers, x: np.ndarray):
    """Output vector plus the per-layer (input, pre-activation) cache."""
    cache = []
    a = x
    last = len(layers) - 1
    for i, (w, b) in enumerate(layers):
        z = a @ w.T + b
        cache.append((a, z))
        a = z if i == last else np.maximum(z, 0.0)
    return a[:, 0], cache


def _check_features(model: MlpModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.n_features:
        raise ShapeError(f"expected features of width {model.n_features}, got shape {x.shape}")
    return x


def forward(model: MlpModel, x) -> np.ndarray:
    """Predictions in standardized units, one column per head."""
    x = _check_features(model, x)
    return np.column_stack([
        _head_forward(layers, _head_input(spec, x))[0]
        for spec, layers in zip(model.specs, model.layers)
    ])


def huber(e, delta: float = 1.0) -> np.ndarray:
    a = np.abs(e)
    return np.where(a <= delta, 0.5 * e * e, delta * (a - 0.5 * delta))


def huber_grad(e, delta: float = 1.0) -> np.ndarray:
    # at |e| == delta both branches give e
    return np.where(np.abs(e) < delta, e, delta * np.sign(e))


def huber_loss(pred, actual, delta: float = 1.0) -> float:
    """Batch-mean Huber loss; for 2-D input, the per-head means are summed."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    e = np.asarray(pred, dtype=np.float64) - np.asarray(actual, dtype=np.float64)
    per_head = np.mean(huber(e, delta), axis=0)
    return float(np.sum(per_head))


def regularization_penalty(model: MlpModel) -> float:
    total = 0.0
    for spec, layers in zip(model.specs, model.layers):
        for w, _b in layers:
            total += spec.l1 * float(np.sum(np.abs(w))) + spec.l2 * float(np.sum(w * w))
    return total


def loss(model: MlpModel, x, y, delta: float = 1.0) -> float:
    return huber_loss(forward(model, x), y, delta) + regularization_penalty(model)


def backward(model: MlpModel, x, y, delta: float = 1.0) -> tuple[float, np.ndarray]:
    """Loss (summed per-head mean Huber + penalty) and its gradient, laid out like ``model.theta``."""
    x = _check_features(model, x)
    y = np.asarray(y, dtype=np.float64).reshape(len(x), len(model.specs))
    if len(x) == 0:
        raise ShapeError("empty batch")
    grad = np.zeros_like(model.theta)
    gviews = model.views(grad)
    scale = 1.0 / len(x)
    data_loss = 0.0
    for h, (spec, layers) in enumerate(zip(model.specs, model.layers)):
        out, cache = _head_forward(layers, _head_input(spec, x))
        e = out - y[:, h]
        data_loss += float(np.sum(huber(e, delta)))
        dz = (huber_grad(e, delta) * scale)[:, None]
        for i in range(len(layers) - 1, -1, -1):
            w, _b = layers[i]
            a_in, _z = cache[i]
            gw, gb = gviews[h][i]
            gw[...] = dz.T @ a_in + spec.l1 * np.sign(w) + 2.0 * spec.l2 * w
            gb[...] = dz.sum(axis=0)
            if i:
                dz = (dz @ w) * (cache[i - 1][1] > 0)
    return data_loss * scale + regularization_penalty(model), grad


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState, t: int, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """In-place bias-corrected Adam update of ``params``; returns ``(params, state)``."""
    if t < 1:
        raise ValueError(f"step index must be >= 1, got {t}")
    state.m *= beta1
    state.m += (1.0 - beta1) * grads
    state.v *= beta2
    state.v += (1.0 - beta2) * grads * grads
    state.t = t
    m_hat = state.m / (1.0 - beta1 ** t)
    v_hat = state.v / (1.0 - beta2 ** t)
    params -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return params, state


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 160
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    huber_delta: float = 1.0
    max_epochs: int = 500
    early_stop_patience: int = 50
    lr_factor: float = 0.5
    lr_patience: int = 20
    min_lr: float = 1e-5
    min_delta: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0 < self.lr_factor < 1:
            raise ValueError("lr_factor must lie in (0, 1)")


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    lr: list = field(default_factory=list)
    best_epoch: int = -1

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "train_loss", "val_loss", "lr"])
            for i, row in enumerate(zip(self.train_loss, self.val_loss, self.lr), start=1):
                w.writerow([i, *(repr(float(v)) for v in row)])


class PlateauSchedule:
    """Multiply the learning rate by ``factor`` after ``patience`` epochs without improvement."""

    def __init__(self, lr: float, factor: float, patience: int, min_lr: float, min_delta: float = 1e-12):
        self.lr = lr
        self.factor = factor
        self.patience = patience
        self.min_lr = min_lr
        self.min_delta = min_delta
        self.best = math.inf
        self.wait = 0

    def update(self, metric: float) -> bool:
        """Record one epoch's metric; returns True when it improved on the best."""
        if metric < self.best - self.min_delta:
            self.best = metric
            self.wait = 0
            return True
        self.wait += 1
        if self.wait >= self.patience:
            self.lr = max(self.lr * self.factor, self.min_lr)
            self.wait = 0
        return False


def _check_finite(model, x, y, cfg, epoch, batch):
    pred = forward(model, x)
    for h, spec in enumerate(model.specs):
        if not np.all(np.isfinite(pred[:, h])) or not math.isfinite(huber_loss(pred[:, h], y[:, h], cfg.huber_delta)):
            raise TrainingError("non-finite loss", epoch, batch, spec.name)
    raise TrainingError("non-finite loss", epoch, batch, "penalty")


def train(ds: EncodedDataset, cfg: TrainConfig = TrainConfig(), specs=DEFAULT_HEADS,
          progress=None) -> tuple[MlpModel, TrainHistory]:
    """Mini-batch Adam with plateau LR decay and early stopping on validation loss.

    Returns the parameters from the epoch with the lowest validation loss.
    """
    x_tr, y_tr = ds.part("train")
    x_va, y_va = ds.part("val")
    if len(x_tr) == 0 or len(x_va) == 0:
        raise ValueError("train and validation splits must be non-empty")

    model = init_model(specs, cfg.seed)
    state = AdamState.zeros(model.theta.size)
    schedule = PlateauSchedule(cfg.lr, cfg.lr_factor, cfg.lr_patience, cfg.min_lr, cfg.min_delta)
    history = TrainHistory()
    best_theta = model.theta.copy()
    stale = 0
    step = 0
    n = len(x_tr)

    for epoch in range(1, cfg.max_epochs + 1):
        lr = schedule.lr
        order = np.argsort(SplitMix64(derive_seed(cfg.seed, 1, epoch)).u64(n), kind="stable")
        for b, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            batch_loss, grad = backward(model, x_tr[idx], y_tr[idx], cfg.huber_delta)
            if not math.isfinite(batch_loss):
                _check_finite(model, x_tr[idx], y_tr[idx], cfg, epoch, b)
            step += 1
            adam_step(model.theta, grad, state, step, lr, cfg.beta1, cfg.beta2, cfg.eps)

        tr = loss(model, x_tr, y_tr, cfg.huber_delta)
        va = loss(model, x_va, y_va, cfg.huber_delta)
        if not (math.isfinite(tr) and math.isfinite(va)):
            _check_finite(model, x_tr, y_tr, cfg, epoch, -1)
        history.train_loss.append(tr)
        history.val_loss.append(va)
        history.lr.append(lr)

        if schedule.update(va):
            best_theta = model.theta.copy()
            history.best_epoch = epoch
            stale = 0
        else:
            stale += 1
        if progress is not None:
            progress(epoch, tr, va, lr)
        if stale >= cfg.early_stop_patience:
            log.info("early stop at epoch %d (best %d)", epoch, history.best_epoch)
            break

    model.theta[...] = best_theta
    return model, history


def predict(model: MlpModel, scaler: Scaler, params: DeviceParams, reads: float, writes: float) -> tuple[float, float, float]:
    """(write energy pJ, write latency ns, endurance writes) in physical units."""
    x = encode_features(params, reads, writes, scaler)
    z = forward(model, x)
    phys = scaler.inverse_targets(z)[0]
    return float(phys[0]), float(phys[1]), float(phys[2])


def _fmt_row(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def write_model(model: MlpModel, path) -> None:
    lines = [f"{MODEL_MAGIC} seed={model.seed}"]
    for spec, layers in zip(model.specs, model.layers):
        lines.append(f"head {spec.name} layers={len(layers)}")
        for i, (w, b) in enumerate(layers):
            lines.append(f"layer {i} {w.shape[0]} {w.shape[1]}")
            lines.extend(_fmt_row(row) for row in w.tolist())
            lines.append(_fmt_row(b.tolist()))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_model(path) -> MlpModel:
    """Load a model file; head names must be among the default heads."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    pos = 0

    def fail(msg):
        raise TraceParseError(msg, line=pos + 1, path=path)

    def floats(expected):
        nonlocal pos
        if pos >= len(lines):
            fail("unexpected end of file")
        try:
            vals = [float(t) for t in lines[pos].split(" ")]
        except ValueError:
            fail(f"bad number in {lines[pos]!r}")
        if len(vals) != expected:
            fail(f"expected {expected} values, got {len(vals)}")
        pos += 1
        return vals

    if not lines or not lines[0].startswith(MODEL_MAGIC + " seed="):
        fail("missing model header")
    try:
        seed = int(lines[0].split("seed=", 1)[1])
    except ValueError:
        fail("bad seed")
    pos = 1
    known = {s.name: s for s in DEFAULT_HEADS}
    specs, values = [], []
    while pos < len(lines):
        parts = lines[pos].split(" ")
        if len(parts) != 3 or parts[0] != "head" or not parts[2].startswith("layers="):
            fail(f"expected head line, got {lines[pos]!r}")
        name, n_layers = parts[1], int(parts[2][len("layers="):])
        if name not in known:
            fail(f"unknown head {name!r}")
        spec = known[name]
        shapes = spec.layer_shapes()
        if n_layers != len(shapes):
            fail(f"head {name} must have {len(shapes)} layers, file has {n_layers}")
        pos += 1
        for i, (rows, cols) in enumerate(shapes):
            if lines[pos:pos + 1] != [f"layer {i} {rows} {cols}"]:
                fail(f"expected 'layer {i} {rows} {cols}'")
            pos += 1
            for _ in range(rows):
                values.extend(floats(cols))
            values.extend(floats(rows))
        specs.append(spec)
    if not specs:
        fail("no heads in model file")
    return MlpModel(specs, seed, np.array(values), n_features=N_FEATURES)


def write_history(history: TrainHistory, path) -> None:
    history.write_csv(path)

