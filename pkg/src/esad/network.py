"""Dense binary classifier: initialization, forward/backward, Adam, training loop.

The default architecture is 416 -> 128 -> 64 -> 1 (ReLU hidden layers,
sigmoid output), 61,825 trainable parameters, trained with mini-batch Adam
on binary cross-entropy with inverted dropout, a reduce-on-plateau learning
rate schedule, and early stopping that restores the best epoch's weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .features import MfccConfig, NormStats

DEFAULT_LAYER_SIZES = (416, 128, 64, 1)
BCE_EPS = 1e-7


@dataclass(eq=False)
class DenseModel:
    weights: list  # per layer: (out, in) float32
    biases: list  # per layer: (out,) float32
    norm_stats: NormStats | None = None
    mfcc: MfccConfig | None = None

    @property
    def layer_sizes(self) -> tuple:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    @property
    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy_params(self):
        return [w.copy() for w in self.weights], [b.copy() for b in self.biases]


def init_model(seed: int, layer_sizes=DEFAULT_LAYER_SIZES, dtype=np.float32) -> DenseModel:
    """Glorot-uniform weights, zero biases; deterministic for a given seed."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)).astype(dtype))
        biases.append(np.zeros(fan_out, dtype=dtype))
    return DenseModel(weights, biases)


def sigmoid(z):
    z = np.asarray(z)
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward(model: DenseModel, x, dropout_rate: float = 0.0, rng=None, want_cache: bool = False):
    """Probability of the anomalous class for one vector or a batch.

    Inverted dropout is applied to the hidden activations when a rate and
    rng are given (training mode); kept units are scaled by 1/(1 - rate) so
    inference needs no rescaling. With dropout off the pass is deterministic.
    Returns probs, or (probs, cache) when want_cache is set.
    """
    x = np.asarray(x)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    if batch.shape[1] != model.weights[0].shape[1]:
        raise ValueError(
            f"input dimension {batch.shape[1]} != model input {model.weights[0].shape[1]}"
        )
    if not np.all(np.isfinite(batch)):
        raise ValueError("non-finite values in model input")
    if dropout_rate and rng is None:
        raise ValueError("dropout needs an rng")

    acts = [batch.astype(model.weights[0].dtype, copy=False)]
    pre_acts, masks = [], []
    n_layers = len(model.weights)
    for li, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = acts[-1] @ w.T + b
        pre_acts.append(z)
        if li < n_layers - 1:
            a = np.maximum(z, 0)
            if dropout_rate:
                keep = (rng.random(a.shape) >= dropout_rate).astype(a.dtype)
                scaled_mask = keep / np.asarray(1.0 - dropout_rate, dtype=a.dtype)
                a = a * scaled_mask
                masks.append(scaled_mask)
            else:
                masks.append(None)
            acts.append(a)
    logits = pre_acts[-1][:, 0]
    probs = sigmoid(logits)
    if single:
        probs = probs[0]
    if not want_cache:
        return probs
    cache = {"acts": acts, "pre_acts": pre_acts, "masks": masks, "probs": np.atleast_1d(probs)}
    return probs, cache


def bce_loss(probs, labels) -> float:
    """Mean binary cross-entropy with probabilities clamped to [1e-7, 1-1e-7]."""
    p = np.clip(np.asarray(probs, dtype=np.float64), BCE_EPS, 1.0 - BCE_EPS)
    y = np.asarray(labels, dtype=np.float64)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))))


def accuracy(probs, labels, threshold: float = 0.5) -> float:
    pred = np.asarray(probs) >= threshold
    return float(np.mean(pred == (np.asarray(labels) == 1)))


def backward(model: DenseModel, cache, labels):
    """Exact gradients of the mean BCE loss w.r.t. every weight and bias.

    Uses the fused sigmoid+BCE output gradient (p - y) and replays the
    dropout masks captured by the forward pass.
    """
    acts, pre_acts, masks = cache["acts"], cache["pre_acts"], cache["masks"]
    if len(acts) != len(model.weights) or acts[0].shape[1] != model.weights[0].shape[1]:
        raise ValueError("cache does not match model architecture")
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    n = y.size
    if cache["probs"].shape[0] != n:
        raise ValueError("cache batch size does not match labels")

    dtype = model.weights[0].dtype
    delta = ((cache["probs"] - y) / n).astype(dtype)[:, None]
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.weights)
    for li in range(len(model.weights) - 1, -1, -1):
        grads_w[li] = delta.T @ acts[li]
        grads_b[li] = delta.sum(axis=0)
        if li > 0:
            delta = delta @ model.weights[li]
            if masks[li - 1] is not None:
                delta = delta * masks[li - 1]
            delta = delta * (pre_acts[li - 1] > 0)
    return grads_w, grads_b


@dataclass
class AdamState:
    m_w: list
    v_w: list
    m_b: list
    v_b: list
    t: int = 0


def adam_init(model: DenseModel) -> AdamState:
    return AdamState(
        m_w=[np.zeros_like(w) for w in model.weights],
        v_w=[np.zeros_like(w) for w in model.weights],
        m_b=[np.zeros_like(b) for b in model.biases],
        v_b=[np.zeros_like(b) for b in model.biases],
    )


def adam_step(model: DenseModel, grads_w, grads_b, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-7) -> AdamState:
    """One bias-corrected Adam update, in place; returns the advanced state."""
    for li, g in enumerate(grads_w):
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for weights of layer {li}")
    for li, g in enumerate(grads_b):
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for biases of layer {li}")
    state.t += 1
    correction1 = 1.0 - beta1**state.t
    correction2 = 1.0 - beta2**state.t
    for params, grads, ms, vs in (
        (model.weights, grads_w, state.m_w, state.v_w),
        (model.biases, grads_b, state.m_b, state.v_b),
    ):
        for p, g, m, v in zip(params, grads, ms, vs):
            g = g.astype(p.dtype, copy=False)
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * (g * g)
            m_hat = m / correction1
            v_hat = v / correction2
            p -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.dtype, copy=False)
    return state


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-7
    batch_size: int = 32
    max_epochs: int = 50
    dropout_rate: float = 0.2
    early_stopping_patience: int = 5
    restore_best: bool = True
    plateau_factor: float = 0.5
    plateau_patience: int = 3
    min_lr: float = 1e-5
    monitor: str = "val_loss"  # or "val_acc"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.early_stopping_patience < 1 or self.plateau_patience < 1:
            raise ValueError("patience values must be >= 1")
        if self.monitor not in ("val_loss", "val_acc"):
            raise ValueError("monitor must be val_loss or val_acc")


@dataclass
class TrainHistory:
    epochs: list = field(default_factory=list)

    COLUMNS = ("epoch", "train_loss", "train_acc", "val_loss", "val_acc", "lr")

    def append(self, **row):
        self.epochs.append({k: row[k] for k in self.COLUMNS})

    def __len__(self):
        return len(self.epochs)

    def column(self, name):
        return [row[name] for row in self.epochs]

    def to_csv(self) -> str:
        lines = [",".join(self.COLUMNS)]
        for row in self.epochs:
            lines.append(
                f"{row['epoch']},{row['train_loss']:.9g},{row['train_acc']:.9g},"
                f"{row['val_loss']:.9g},{row['val_acc']:.9g},{row['lr']:.9g}"
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "TrainHistory":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].split(",") != list(cls.COLUMNS):
            raise ValueError("unrecognized training history header")
        hist = cls()
        for ln in lines[1:]:
            vals = ln.split(",")
            if len(vals) != len(cls.COLUMNS):
                raise ValueError("malformed training history row")
            hist.append(
                epoch=int(vals[0]),
                train_loss=float(vals[1]),
                train_acc=float(vals[2]),
                val_loss=float(vals[3]),
                val_acc=float(vals[4]),
                lr=float(vals[5]),
            )
        return hist


def train(x_train, y_train, x_val, y_val, cfg: TrainConfig,
          layer_sizes=DEFAULT_LAYER_SIZES, epoch_callback=None):
    """Train a fresh model; returns (model, history, best_epoch).

    Per epoch: seeded shuffle, mini-batch Adam updates with dropout, then a
    dropout-free evaluation on the train and validation sets. The monitored
    validation metric drives both the plateau scheduler (halve the learning
    rate, floored at min_lr) and early stopping (halt and restore the best
    epoch's weights). Identical data + config give identical results.
    """
    x_train = np.asarray(x_train, dtype=np.float32)
    x_val = np.asarray(x_val, dtype=np.float32)
    y_train = np.asarray(y_train, dtype=np.float64).reshape(-1)
    y_val = np.asarray(y_val, dtype=np.float64).reshape(-1)
    if x_train.shape[0] == 0 or x_val.shape[0] == 0:
        raise ValueError("train and validation partitions must be non-empty")

    seeds = np.random.SeedSequence(cfg.seed).spawn(2)
    model = init_model(cfg.seed, layer_sizes)
    shuffle_rng = np.random.default_rng(seeds[0])
    dropout_rng = np.random.default_rng(seeds[1])

    state = adam_init(model)
    history = TrainHistory()
    lr = cfg.learning_rate
    sign = 1.0 if cfg.monitor == "val_loss" else -1.0
    best_value = np.inf
    best_params = None
    best_epoch = -1
    stall_stop = 0
    stall_plateau = 0

    n = x_train.shape[0]
    for epoch in range(1, cfg.max_epochs + 1):
        order = shuffle_rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            _, cache = forward(
                model, x_train[batch], dropout_rate=cfg.dropout_rate,
                rng=dropout_rng, want_cache=True,
            )
            grads_w, grads_b = backward(model, cache, y_train[batch])
            adam_step(model, grads_w, grads_b, state, lr,
                      beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.adam_eps)

        train_probs = forward(model, x_train)
        val_probs = forward(model, x_val)
        train_loss = bce_loss(train_probs, y_train)
        val_loss = bce_loss(val_probs, y_val)
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise FloatingPointError(f"training diverged at epoch {epoch}")
        val_acc = accuracy(val_probs, y_val)
        history.append(
            epoch=epoch,
            train_loss=train_loss,
            train_acc=accuracy(train_probs, y_train),
            val_loss=val_loss,
            val_acc=val_acc,
            lr=lr,
        )
        if epoch_callback is not None:
            epoch_callback(epoch, model, history.epochs[-1])

        monitored = sign * (val_loss if cfg.monitor == "val_loss" else val_acc)
        if monitored < best_value:
            best_value = monitored
            best_params = model.copy_params()
            best_epoch = epoch
            stall_stop = 0
            stall_plateau = 0
        else:
            stall_stop += 1
            stall_plateau += 1
            if stall_plateau >= cfg.plateau_patience and lr > cfg.min_lr:
                lr = max(lr * cfg.plateau_factor, cfg.min_lr)
                stall_plateau = 0
            if stall_stop >= cfg.early_stopping_patience:
                break

    if cfg.restore_best and best_params is not None:
        model.weights, model.biases = best_params
    return model, history, best_epoch
