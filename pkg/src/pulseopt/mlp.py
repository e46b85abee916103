"""Fixed-architecture feed-forward regressor trained with Adam on squared error.

Layers ``input -> 64 -> 128 -> 256 -> 128 -> 64 -> 1`` with activations
ReLU, tanh, tanh, tanh, ReLU, sigmoid. Weights are stored as
``(fan_in, fan_out)`` matrices so a layer computes ``a @ W + b``. Everything
runs in float64 numpy.

Amplitudes enter the first layer as ``(x - input_offset) * input_scale``.
The mapping is fixed at construction, not learned, and is saved with the
weights.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset, split_train_val
from .linalg import rng_stream

HIDDEN_SIZES = (64, 128, 256, 128, 64)
ACTIVATIONS = ("relu", "tanh", "tanh", "tanh", "relu", "sigmoid")
SCHEMA_VERSION = 1
# maps [0, 1] onto [-5, 5]
INPUT_OFFSET = 0.5
INPUT_SCALE = 10.0


def layer_sizes(input_dim: int) -> tuple[int, ...]:
    return (input_dim, *HIDDEN_SIZES, 1)


@dataclass(eq=False)
class MlpModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: tuple[str, ...] = ACTIVATIONS
    input_offset: float = INPUT_OFFSET
    input_scale: float = INPUT_SCALE

    def __post_init__(self):
        if not (math.isfinite(self.input_offset) and math.isfinite(self.input_scale)
                and self.input_scale != 0):
            raise ValueError("input_offset must be finite and input_scale finite and non-zero")
        if len(self.weights) != len(self.biases) or len(self.weights) != len(self.activations):
            raise ValueError("weights, biases and activations must have one entry per layer")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError(f"layer {k}: weight {w.shape} and bias {b.shape} are inconsistent")
            if k and w.shape[0] != self.weights[k - 1].shape[1]:
                raise ValueError(f"layer {k}: fan-in {w.shape[0]} does not match previous layer")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.input_dim, *(w.shape[1] for w in self.weights))

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "MlpModel":
        return MlpModel([w.copy() for w in self.weights], [b.copy() for b in self.biases],
                        self.activations, self.input_offset, self.input_scale)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MlpModel):
            return NotImplemented
        return (
            self.activations == other.activations
            and self.input_offset == other.input_offset
            and self.input_scale == other.input_scale
            and len(self.weights) == len(other.weights)
            and all(np.array_equal(a, b) for a, b in zip(self.weights, other.weights))
            and all(np.array_equal(a, b) for a, b in zip(self.biases, other.biases))
        )


def init_model(input_dim: int, seed: int = 0) -> MlpModel:
    """Glorot-uniform weights, zero biases."""
    if input_dim not in (1, 3):
        raise ValueError(f"input_dim must be 1 or 3, got {input_dim}")
    rng = rng_stream(seed)
    sizes = layer_sizes(input_dim)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights, biases)


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    if name == "sigmoid":
        # split form avoids overflow in exp for large |z|
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    raise ValueError(f"unknown activation {name!r}")


def _act_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if name == "relu":
        return (z > 0).astype(float)  # subgradient 0 at z == 0
    if name == "tanh":
        return 1.0 - a * a
    if name == "sigmoid":
        return a * (1.0 - a)
    raise ValueError(f"unknown activation {name!r}")


def _as_batch(m: MlpModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        # 1-D means n scalars for a 1-input model, one vector otherwise
        x = x.reshape(-1, 1) if m.input_dim == 1 else x.reshape(1, -1)
    if x.ndim != 2 or x.shape[1] != m.input_dim:
        raise ValueError(f"expected inputs with {m.input_dim} feature(s), got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input")
    return (x - m.input_offset) * m.input_scale


def _forward_cache(m: MlpModel, x: np.ndarray):
    zs, acts = [], [x]
    a = x
    for w, b, name in zip(m.weights, m.biases, m.activations):
        z = a @ w + b
        a = _act(name, z)
        zs.append(z)
        acts.append(a)
    return zs, acts


def predict(m: MlpModel, x) -> np.ndarray:
    """Batched forward pass: ``x`` of shape (n, input_dim) -> (n,) predictions."""
    x = _as_batch(m, x)
    a = x
    for w, b, name in zip(m.weights, m.biases, m.activations):
        a = _act(name, a @ w + b)
    return a[:, 0]


def forward(m: MlpModel, x) -> float:
    """Prediction for a single input vector (a bare float is fine when input_dim is 1)."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return float(predict(m, x)[0])


def loss(pred, target) -> float:
    """Mean squared error over a batch (a single pair gives the squared error)."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    return float(np.mean((pred - target) ** 2))


def backward(m: MlpModel, x, y) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Mean batch loss and its gradients ``(loss, dW per layer, db per layer)``."""
    x = _as_batch(m, x)
    y = np.asarray(y, dtype=float).reshape(-1)
    if len(x) == 0 or len(x) != len(y):
        raise ValueError("batch must be non-empty with one target per input")
    zs, acts = _forward_cache(m, x)
    pred = acts[-1][:, 0]
    n = len(y)
    delta = (2.0 / n) * (pred - y)[:, None]
    grad_w: list[np.ndarray] = [None] * len(m.weights)  # type: ignore[list-item]
    grad_b: list[np.ndarray] = [None] * len(m.weights)  # type: ignore[list-item]
    for k in reversed(range(len(m.weights))):
        delta = delta * _act_grad(m.activations[k], zs[k], acts[k + 1])
        grad_w[k] = acts[k].T @ delta
        grad_b[k] = delta.sum(axis=0)
        if k:
            delta = delta @ m.weights[k].T
    return float(np.mean((pred - y) ** 2)), grad_w, grad_b


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    epochs: int = 60
    batch_size: int = 8
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    val_fraction: float = 0.2

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not (0.0 < self.val_fraction < 1.0):
            raise ValueError("val_fraction must lie in (0, 1)")


@dataclass
class AdamState:
    m_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_w: list[np.ndarray]
    v_b: list[np.ndarray]

    @classmethod
    def zeros_like(cls, model: MlpModel) -> "AdamState":
        z = lambda arrs: [np.zeros_like(a) for a in arrs]  # noqa: E731
        return cls(z(model.weights), z(model.biases), z(model.weights), z(model.biases))


def adam_step(m: MlpModel, grads: tuple[list[np.ndarray], list[np.ndarray]], state: AdamState,
              t: int, config: TrainConfig) -> MlpModel:
    """One bias-corrected Adam update, applied to ``m`` and ``state`` in place."""
    if t < 1:
        raise ValueError("Adam step counter starts at 1")
    b1, b2, lr, eps = config.adam_beta1, config.adam_beta2, config.learning_rate, config.adam_eps
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    grad_w, grad_b = grads
    for params, grads_k, ms, vs in ((m.weights, grad_w, state.m_w, state.v_w),
                                    (m.biases, grad_b, state.m_b, state.v_b)):
        for p, g, mom, vel in zip(params, grads_k, ms, vs):
            mom *= b1
            mom += (1.0 - b1) * g
            vel *= b2
            vel += (1.0 - b2) * g * g
            p -= lr * (mom / c1) / (np.sqrt(vel / c2) + eps)
    return m


@dataclass
class TrainReport:
    train_loss: list[float]
    val_loss: list[float]
    final_model: MlpModel = field(repr=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrainReport):
            return NotImplemented
        return (self.train_loss == other.train_loss and self.val_loss == other.val_loss
                and self.final_model == other.final_model)


def train(dataset: Dataset, config: TrainConfig | None = None, callback=None) -> TrainReport:
    """Fit a fresh model to ``dataset``.

    The dataset is split once with ``split_train_val(dataset, val_fraction, seed)``;
    training batches are reshuffled every epoch from a stream derived from
    ``seed``. Losses are the full-set mean squared errors measured after each
    epoch. Batches larger than the training set are clamped to it.
    ``callback(epoch, train_loss, val_loss)`` is called after every epoch.
    """
    config = TrainConfig() if config is None else config
    if len(dataset) < 2:
        raise ValueError("need at least 2 records to train with a validation split")
    train_set, val_set = split_train_val(dataset, config.val_fraction, config.seed)
    if len(train_set) == 0:
        raise ValueError("training split is empty")
    x_tr, y_tr = train_set.amplitudes, train_set.chi
    x_va, y_va = val_set.amplitudes, val_set.chi

    model = init_model(dataset.gate.arity, config.seed)
    state = AdamState.zeros_like(model)
    shuffle = rng_stream(config.seed, 1)
    batch = min(config.batch_size, len(x_tr))
    t = 0
    train_curve, val_curve = [], []
    for epoch in range(1, config.epochs + 1):
        order = shuffle.permutation(len(x_tr))
        for start in range(0, len(order), batch):
            idx = order[start:start + batch]
            _, gw, gb = backward(model, x_tr[idx], y_tr[idx])
            t += 1
            adam_step(model, (gw, gb), state, t, config)
        train_curve.append(loss(predict(model, x_tr), y_tr))
        val_curve.append(loss(predict(model, x_va), y_va) if len(x_va) else float("nan"))
        if callback is not None:
            callback(epoch, train_curve[-1], val_curve[-1])
    return TrainReport(train_curve, val_curve, model)


def model_to_dict(m: MlpModel) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "layer_sizes": list(m.layer_sizes),
        "activations": list(m.activations),
        "input_offset": m.input_offset,
        "input_scale": m.input_scale,
        "weights": [w.tolist() for w in m.weights],
        "biases": [b.tolist() for b in m.biases],
    }


def model_from_dict(d: dict) -> MlpModel:
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"model schema_version {d.get('schema_version')!r} is not {SCHEMA_VERSION}")
    weights = [np.array(w, dtype=float).reshape(len(w), -1) for w in d["weights"]]
    biases = [np.array(b, dtype=float) for b in d["biases"]]
    m = MlpModel(weights, biases, tuple(d["activations"]),
                 float(d["input_offset"]), float(d["input_scale"]))
    if list(m.layer_sizes) != list(d["layer_sizes"]):
        raise ValueError(f"layer_sizes {d['layer_sizes']} do not match weight shapes {m.layer_sizes}")
    for arr in (*weights, *biases):
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite parameter in model file")
    return m


def save_model(m: MlpModel, path) -> None:
    # json writes floats with repr, which round-trips float64 exactly
    Path(path).write_text(json.dumps(model_to_dict(m)) + "\n")


def load_model(path) -> MlpModel:
    return model_from_dict(json.loads(Path(path).read_text()))
