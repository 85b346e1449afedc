"""Feed-forward ReLU networks in plain numpy: forward, exact backprop for
parameters and inputs, Adam, MSE/softmax cross-entropy, early stopping, and
minibatch training with optional fresh-mask ablation per step.

Everything is seeded and single-threaded over the optimizer state, so a
fixed seed reproduces training bit-for-bit on one platform.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from . import _streams
from .augment import AugmentSpec, ablated_copy, batch_masks
from .dataset import CLASSIFICATION, REGRESSION, Dataset


class TrainingDivergedError(RuntimeError):
    """Training hit a non-finite loss; carries the step where it happened."""


@dataclass
class MlpModel:
    """An affine -> ReLU stack with a final affine layer (logits or raw
    regression output).  Depth 0 means a single affine map."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    task: str

    def __post_init__(self):
        if len(self.weights) != len(self.biases):
            raise ValueError("need one bias vector per weight matrix")
        if not self.weights:
            raise ValueError("model needs at least one layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.ndim != 1 or w.shape[1] != b.shape[0]:
                raise ValueError(f"layer {i}: weight/bias shapes are inconsistent")
            if i > 0 and self.weights[i - 1].shape[1] != w.shape[0]:
                raise ValueError(f"layer {i}: input dim does not match previous layer")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {i}: non-finite parameters")
        if self.task not in (REGRESSION, CLASSIFICATION):
            raise ValueError(f"unknown task {self.task!r}")

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    @property
    def depth(self) -> int:
        """Number of hidden layers."""
        return len(self.weights) - 1

    @property
    def n_outputs(self) -> int:
        return self.weights[-1].shape[1]

    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 200
    batch_size: int = 256
    early_stop_patience: int = 3
    augment: AugmentSpec | None = None
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.early_stop_patience < 1:
            raise ValueError("early_stop_patience must be >= 1")


@dataclass(frozen=True)
class Checkpoint:
    model: MlpModel
    epoch: int
    val_loss: float


@dataclass
class TrainLog:
    epochs: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_val_loss: float = float("inf")
    stopped_early: bool = False


def init(layer_dims, seed: int, task: str = REGRESSION) -> MlpModel:
    """He-scaled random weights (suited to ReLU stacks) and zero biases."""
    dims = [int(v) for v in layer_dims]
    if len(dims) < 2 or any(v < 1 for v in dims):
        raise ValueError(f"layer_dims needs >= 2 positive entries, got {layer_dims}")
    rng = _streams.stream(seed, _streams.INIT)
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights=weights, biases=biases, task=task)


def forward(m: MlpModel, X) -> tuple[np.ndarray, dict]:
    """Run the network; returns (outputs, cache) where the cache holds the
    per-layer inputs and hidden pre-activations for backprop."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != m.weights[0].shape[0]:
        raise ValueError(f"X has {X.shape[1]} columns, model expects {m.weights[0].shape[0]}")
    act = X
    inputs = [X]
    preacts = []
    for w, b in zip(m.weights[:-1], m.biases[:-1]):
        z = act @ w + b
        preacts.append(z)
        act = np.maximum(z, 0.0)
        inputs.append(act)
    outputs = act @ m.weights[-1] + m.biases[-1]
    return outputs, {"inputs": inputs, "preacts": preacts}


def loss(outputs, targets, task: str) -> float:
    """Mean squared error for regression; mean softmax cross-entropy over
    logits for classification (targets are integer class indices)."""
    outputs = np.asarray(outputs, dtype=np.float64)
    if task == REGRESSION:
        resid = outputs.ravel() - np.asarray(targets, dtype=np.float64).ravel()
        return float(np.mean(resid**2))
    if task == CLASSIFICATION:
        t = np.asarray(targets)
        t_int = t.astype(np.int64)
        if np.any(t_int != t) or t_int.min() < 0 or t_int.max() >= outputs.shape[1]:
            raise ValueError("classification targets must be valid class indices")
        shift = outputs - outputs.max(axis=1, keepdims=True)
        lse = np.log(np.exp(shift).sum(axis=1)) + outputs.max(axis=1)
        return float(np.mean(lse - outputs[np.arange(outputs.shape[0]), t_int]))
    raise ValueError(f"unknown task {task!r}")


def _loss_output_grad(outputs: np.ndarray, targets, task: str) -> np.ndarray:
    n = outputs.shape[0]
    if task == REGRESSION:
        y = np.asarray(targets, dtype=np.float64).reshape(outputs.shape)
        return 2.0 * (outputs - y) / n
    t = np.asarray(targets).astype(np.int64)
    shift = np.exp(outputs - outputs.max(axis=1, keepdims=True))
    probs = shift / shift.sum(axis=1, keepdims=True)
    probs[np.arange(n), t] -= 1.0
    return probs / n


def _backprop(m: MlpModel, cache: dict, out_grad: np.ndarray, want_input_grad: bool):
    inputs = cache["inputs"]
    preacts = cache["preacts"]
    grads_w = [None] * len(m.weights)
    grads_b = [None] * len(m.biases)
    g = out_grad
    for layer in range(len(m.weights) - 1, -1, -1):
        grads_w[layer] = inputs[layer].T @ g
        grads_b[layer] = g.sum(axis=0)
        if layer > 0:
            g = (g @ m.weights[layer].T) * (preacts[layer - 1] > 0)
        elif want_input_grad:
            g = g @ m.weights[0].T
    return grads_w, grads_b, g


def param_gradients(m: MlpModel, X, targets, task: str):
    """Exact gradients of the mean loss w.r.t. every weight and bias."""
    outputs, cache = forward(m, X)
    value = loss(outputs, targets, task)
    if not np.isfinite(value):
        raise TrainingDivergedError(f"non-finite loss {value}")
    out_grad = _loss_output_grad(outputs, targets, task)
    grads_w, grads_b, _ = _backprop(m, cache, out_grad, want_input_grad=False)
    return grads_w, grads_b


def input_gradients(m: MlpModel, X, output_index: int = 0) -> np.ndarray:
    """Row-wise gradient of the selected output component w.r.t. the input.

    For a depth-0 model every row equals the output's weight column.
    """
    outputs, cache = forward(m, X)
    if not 0 <= output_index < outputs.shape[1]:
        raise ValueError(f"output_index {output_index} out of range")
    out_grad = np.zeros_like(outputs)
    out_grad[:, output_index] = 1.0
    _, _, g_in = _backprop(m, cache, out_grad, want_input_grad=True)
    return g_in


def _snapshot(weights, biases, task) -> MlpModel:
    return MlpModel(
        weights=[w.copy() for w in weights],
        biases=[b.copy() for b in biases],
        task=task,
    )


def train(model: MlpModel, d_train: Dataset, d_val: Dataset, cfg: TrainConfig):
    """Minibatch Adam with seeded shuffling, optional per-step ablation of
    each batch, and early stopping on validation loss (patience in epochs,
    strict-decrease improvement).  Returns (best checkpoint model, log).

    Ablation masks are drawn from the augmentation spec's own stream keyed by
    the global step, so a lam=0 spec reproduces unaugmented training exactly.
    When augmenting with lam > 0, the validation loss is measured on a
    fixed-mask ablated replication of the validation set: checkpoint
    selection then tracks the same augmented risk that training minimizes,
    instead of silently undoing the regularization.
    """
    if d_train.n == 0 or d_val.n == 0:
        raise ValueError("train and validation splits must be non-empty")
    X_tr, y_tr = d_train.features, d_train.response
    task = model.task
    train_means = X_tr.mean(axis=0)  # frozen for mean ablation
    if cfg.augment is not None and cfg.augment.lam > 0:
        d_val = ablated_copy(d_val, cfg.augment, means=train_means, replicas=4)
    X_val, y_val = d_val.features, d_val.response

    weights = [w.copy() for w in model.weights]
    biases = [b.copy() for b in model.biases]
    work = MlpModel(weights=weights, biases=biases, task=task)
    m_w = [np.zeros_like(w) for w in weights]
    v_w = [np.zeros_like(w) for w in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]

    rng = _streams.stream(cfg.seed, _streams.SHUFFLE)
    log = TrainLog()
    best: Checkpoint | None = None
    since_best = 0
    step = 0

    for epoch in range(cfg.epochs):
        perm = rng.permutation(d_train.n)
        for start in range(0, d_train.n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            xb = X_tr[idx]
            if cfg.augment is not None:
                xb = batch_masks(xb, cfg.augment, step=step, means=train_means)
            try:
                grads_w, grads_b = param_gradients(work, xb, y_tr[idx], task)
            except TrainingDivergedError as err:
                raise TrainingDivergedError(
                    f"diverged at epoch {epoch}, step {step}: {err}"
                ) from None
            step += 1
            lr, b1, b2 = cfg.learning_rate, cfg.beta1, cfg.beta2
            corr1 = 1.0 - b1**step
            corr2 = 1.0 - b2**step
            for i in range(len(weights)):
                m_w[i] = b1 * m_w[i] + (1 - b1) * grads_w[i]
                v_w[i] = b2 * v_w[i] + (1 - b2) * grads_w[i] ** 2
                weights[i] -= lr * (m_w[i] / corr1) / (np.sqrt(v_w[i] / corr2) + cfg.eps)
                m_b[i] = b1 * m_b[i] + (1 - b1) * grads_b[i]
                v_b[i] = b2 * v_b[i] + (1 - b2) * grads_b[i] ** 2
                biases[i] -= lr * (m_b[i] / corr1) / (np.sqrt(v_b[i] / corr2) + cfg.eps)

        train_loss = loss(forward(work, X_tr)[0], y_tr, task)
        val_loss = loss(forward(work, X_val)[0], y_val, task)
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise TrainingDivergedError(f"non-finite epoch loss at epoch {epoch}")
        log.epochs.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})

        if best is None or val_loss < best.val_loss:
            best = Checkpoint(model=_snapshot(weights, biases, task), epoch=epoch, val_loss=val_loss)
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.early_stop_patience:
                log.stopped_early = True
                break

    log.best_epoch = best.epoch
    log.best_val_loss = best.val_loss
    return best.model, log


def evaluate(m: MlpModel, d_test: Dataset) -> dict:
    """Held-out metrics: MSE for regression, accuracy for classification."""
    outputs, _ = forward(m, d_test.features)
    if m.task == REGRESSION:
        return {"mse": loss(outputs, d_test.response, REGRESSION)}
    predicted = outputs.argmax(axis=1)
    return {"accuracy": float(np.mean(predicted == d_test.response.astype(np.int64)))}


def linear_as_mlp(beta, intercept: float, task: str = REGRESSION) -> MlpModel:
    """Wrap a linear model as a depth-0 network so the attribution and
    penalty machinery can treat both uniformly."""
    beta = np.asarray(beta, dtype=np.float64).ravel()
    return MlpModel(weights=[beta[:, None].copy()], biases=[np.array([float(intercept)])], task=task)


def clone(m: MlpModel) -> MlpModel:
    return copy.deepcopy(m)
