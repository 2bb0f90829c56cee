"""Dense feed-forward networks trained with mini-batch gradient descent.

The network shape is driven by two genes: the hidden layer count and a
single node width shared by all non-output layers. A network with H
hidden layers has H + 2 weighted layers (input projection, H hidden,
one sigmoid output unit) and therefore H + 2 activation entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SUPPORTED_ACTIVATIONS = ("relu", "sigmoid", "tanh", "linear")
SUPPORTED_OPTIMIZERS = ("sgd", "adam", "adamax", "rmsprop")

# Framework-style defaults: plain SGD steps at 0.01, moment-based
# optimizers at 0.001 with canonical moment constants.
DEFAULT_LEARNING_RATES = {"sgd": 0.01, "adam": 0.001, "adamax": 0.001, "rmsprop": 0.001}
BETA_1 = 0.9
BETA_2 = 0.999
RMS_RHO = 0.9
OPT_EPS = 1e-7

LOSS_EPS = 1e-7
EARLY_STOP_PATIENCE = 5
EARLY_STOP_MIN_DELTA = 1e-4


class TrainingError(ValueError):
    """Invalid network configuration or incompatible training inputs."""


class EarlyStopper:
    """Patience rule on the epoch loss.

    Training stops at the first epoch for which none of the last
    `patience` epochs improved the best loss seen so far by more than
    `min_delta`.
    """

    def __init__(self, patience: int = EARLY_STOP_PATIENCE, min_delta: float = EARLY_STOP_MIN_DELTA):
        self.patience = patience
        self.min_delta = min_delta
        self.best = math.inf
        self.stale = 0

    def update(self, loss: float) -> bool:
        """Record one epoch loss; True means stop now."""
        if self.best - loss > self.min_delta:
            self.best = loss
            self.stale = 0
            return False
        self.stale += 1
        return self.stale >= self.patience


@dataclass(frozen=True)
class MLPConfig:
    """Architecture and training settings for one network."""

    hidden_layers: int
    nodes_per_hidden: int
    activations: tuple[str, ...]
    optimizer: str
    epochs: int
    batch_size: int
    seed: int = 0
    learning_rate: float | None = None  # None = optimizer default

    def __post_init__(self) -> None:
        if self.hidden_layers < 1 or self.nodes_per_hidden < 1:
            raise TrainingError("hidden_layers and nodes_per_hidden must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise TrainingError("epochs and batch_size must be positive")
        if len(self.activations) != self.hidden_layers + 2:
            raise TrainingError(
                f"expected {self.hidden_layers + 2} activations for "
                f"{self.hidden_layers} hidden layers, got {len(self.activations)}"
            )
        if self.activations[-1] != "sigmoid":
            raise TrainingError("the output activation must be sigmoid")
        for name in self.activations:
            if name not in SUPPORTED_ACTIVATIONS:
                raise TrainingError(f"unsupported activation {name!r}")
        if self.optimizer not in SUPPORTED_OPTIMIZERS:
            raise TrainingError(f"unsupported optimizer {self.optimizer!r}")


@dataclass
class TrainedModel:
    """Weights plus the training trace that produced them."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: tuple[str, ...]
    loss_history: list[float] = field(default_factory=list)
    stopped_early: bool = False
    epochs_run: int = 0
    diverged: bool = False

    @property
    def input_width(self) -> int:
        return int(self.weights[0].shape[0])

    def to_doc(self) -> dict:
        """JSON-compatible dump of layer shapes and parameters (debug aid)."""
        return {
            "input_width": self.input_width,
            "layers": [
                {
                    "weights": w.tolist(),
                    "bias": b.tolist(),
                    "activation": act,
                }
                for w, b, act in zip(self.weights, self.biases, self.activations)
            ],
            "loss_history": list(self.loss_history),
            "stopped_early": self.stopped_early,
            "epochs_run": self.epochs_run,
            "diverged": self.diverged,
        }


def glorot_uniform(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    """Weight matrix with entries uniform on [-L, L], L = sqrt(6/(fan_in+fan_out))."""
    if fan_in < 1 or fan_out < 1:
        raise ValueError("fan_in and fan_out must be positive")
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def _activate(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        # Split by sign so exp never overflows.
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    if name == "tanh":
        return np.tanh(z)
    if name == "linear":
        return z
    raise TrainingError(f"unsupported activation {name!r}")


def _activation_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if name == "relu":
        return (z > 0).astype(z.dtype)
    if name == "sigmoid":
        return a * (1.0 - a)
    if name == "tanh":
        return 1.0 - a * a
    if name == "linear":
        return np.ones_like(z)
    raise TrainingError(f"unsupported activation {name!r}")


def layer_dims(input_width: int, config: MLPConfig) -> list[int]:
    """Unit counts per layer: input, H+1 hidden-width layers, 1 output."""
    return [input_width] + [config.nodes_per_hidden] * (config.hidden_layers + 1) + [1]


def init_params(
    config: MLPConfig, input_width: int, rng: np.random.Generator
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    dims = layer_dims(input_width, config)
    weights = [glorot_uniform(dims[i], dims[i + 1], rng) for i in range(len(dims) - 1)]
    biases = [np.zeros(dims[i + 1]) for i in range(len(dims) - 1)]
    return weights, biases


def _forward_chain(
    weights: list[np.ndarray],
    biases: list[np.ndarray],
    activations: tuple[str, ...],
    batch: np.ndarray,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Pre-activations and activations per layer; batch is (rows, input_width)."""
    zs: list[np.ndarray] = []
    outs: list[np.ndarray] = [batch]
    for w, b, act in zip(weights, biases, activations):
        z = outs[-1] @ w + b
        zs.append(z)
        outs.append(_activate(act, z))
    return zs, outs


def forward(model: TrainedModel, batch: np.ndarray) -> np.ndarray:
    """Predicted positive-class probabilities, strictly inside (0, 1)."""
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    if batch.shape[1] != model.input_width:
        raise TrainingError(
            f"batch has {batch.shape[1]} columns, model expects {model.input_width}"
        )
    _, outs = _forward_chain(model.weights, model.biases, model.activations, batch)
    return np.clip(outs[-1].ravel(), LOSS_EPS, 1.0 - LOSS_EPS)


def predict(model: TrainedModel, batch: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Hard 0/1 labels at the given probability threshold."""
    return (forward(model, batch) >= threshold).astype(np.int64)


def binary_cross_entropy(predictions: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-likelihood with predictions clipped away from 0/1."""
    p = np.asarray(predictions, dtype=np.float64).ravel()
    y = np.asarray(labels, dtype=np.float64).ravel()
    if p.shape != y.shape:
        raise TrainingError(f"length mismatch: {p.shape} vs {y.shape}")
    p = np.clip(p, LOSS_EPS, 1.0 - LOSS_EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def loss_and_gradients(
    weights: list[np.ndarray],
    biases: list[np.ndarray],
    activations: tuple[str, ...],
    batch: np.ndarray,
    labels: np.ndarray,
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Mean BCE over the batch and its gradients w.r.t. every parameter.

    The output delta folds the sigmoid and the cross-entropy together,
    which is exact as long as the loss clipping is inactive.
    """
    if activations[-1] != "sigmoid":
        raise TrainingError("gradients require a sigmoid output unit")
    zs, outs = _forward_chain(weights, biases, activations, batch)
    p = outs[-1].ravel()
    y = np.asarray(labels, dtype=np.float64).ravel()
    loss = binary_cross_entropy(p, y)

    n = batch.shape[0]
    delta = ((p - y) / n).reshape(-1, 1)
    grad_w: list[np.ndarray] = [np.empty(0)] * len(weights)
    grad_b: list[np.ndarray] = [np.empty(0)] * len(weights)
    for layer in range(len(weights) - 1, -1, -1):
        grad_w[layer] = outs[layer].T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ weights[layer].T) * _activation_grad(
                activations[layer - 1], zs[layer - 1], outs[layer]
            )
    return loss, grad_w, grad_b


def _init_optimizer_state(kind: str, param: np.ndarray) -> dict:
    if kind == "sgd":
        return {}
    state: dict = {"t": 0}
    if kind in ("adam", "rmsprop"):
        state["v"] = np.zeros_like(param)
    if kind in ("adam", "adamax"):
        state["m"] = np.zeros_like(param)
    if kind == "adamax":
        state["u"] = np.zeros_like(param)
    return state


def _apply_update(kind: str, param: np.ndarray, grad: np.ndarray, state: dict, lr: float) -> None:
    """Update one parameter tensor and its optimizer state, both in place."""
    if kind == "sgd":
        param -= lr * grad
        return
    t = state["t"] = state["t"] + 1
    if kind == "adam":
        m, v = state["m"], state["v"]
        m *= BETA_1
        m += (1.0 - BETA_1) * grad
        v *= BETA_2
        v += (1.0 - BETA_2) * grad * grad
        m_hat = m / (1.0 - BETA_1**t)
        v_hat = v / (1.0 - BETA_2**t)
        param -= lr * m_hat / (np.sqrt(v_hat) + OPT_EPS)
    elif kind == "adamax":
        m, u = state["m"], state["u"]
        m *= BETA_1
        m += (1.0 - BETA_1) * grad
        np.maximum(BETA_2 * u, np.abs(grad), out=u)
        param -= (lr / (1.0 - BETA_1**t)) * m / (u + OPT_EPS)
    else:  # rmsprop
        v = state["v"]
        v *= RMS_RHO
        v += (1.0 - RMS_RHO) * grad * grad
        param -= lr * grad / (np.sqrt(v) + OPT_EPS)


def optimizer_step(
    kind: str,
    param: np.ndarray,
    grad: np.ndarray,
    state: dict | None,
    learning_rate: float | None = None,
) -> tuple[np.ndarray, dict]:
    """One update of a single parameter tensor; returns (new_param, new_state).

    Functional wrapper over the in-place core the training loop uses, so
    both produce bit-identical arithmetic.
    """
    if kind not in SUPPORTED_OPTIMIZERS:
        raise TrainingError(f"unsupported optimizer {kind!r}")
    lr = DEFAULT_LEARNING_RATES[kind] if learning_rate is None else learning_rate
    param = np.array(param, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if state is None:
        state = _init_optimizer_state(kind, param)
    else:
        state = {k: (np.array(v) if isinstance(v, np.ndarray) else v) for k, v in state.items()}
        for key, value in _init_optimizer_state(kind, param).items():
            state.setdefault(key, value)
    _apply_update(kind, param, grad, state, lr)
    return param, state


def train(
    config: MLPConfig,
    train_features: np.ndarray,
    train_labels: np.ndarray,
    rng: np.random.Generator | None = None,
) -> TrainedModel:
    """Mini-batch gradient descent on binary cross-entropy.

    Stops at the configured epoch count, or earlier once the best epoch
    loss has not improved by more than the minimum delta for 5 epochs
    in a row. A non-finite epoch loss aborts training and flags the
    model as diverged.
    """
    x = np.asarray(train_features, dtype=np.float64)
    y = np.asarray(train_labels, dtype=np.float64).ravel()
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise TrainingError("features and labels disagree on the instance count")
    if not np.isin(y, (0.0, 1.0)).all():
        raise TrainingError("training labels must be 0 or 1")
    if rng is None:
        rng = np.random.default_rng(config.seed)

    weights, biases = init_params(config, x.shape[1], rng)
    kind = config.optimizer
    lr = DEFAULT_LEARNING_RATES[kind] if config.learning_rate is None else config.learning_rate
    w_states = [_init_optimizer_state(kind, w) for w in weights]
    b_states = [_init_optimizer_state(kind, b) for b in biases]

    model = TrainedModel(weights=weights, biases=biases, activations=config.activations)
    n = x.shape[0]
    stopper = EarlyStopper()

    for _ in range(config.epochs):
        order = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            loss, grad_w, grad_b = loss_and_gradients(
                weights, biases, config.activations, x[idx], y[idx]
            )
            loss_sum += loss * idx.size
            for i in range(len(weights)):
                _apply_update(kind, weights[i], grad_w[i], w_states[i], lr)
                _apply_update(kind, biases[i], grad_b[i], b_states[i], lr)
        epoch_loss = loss_sum / n
        model.loss_history.append(epoch_loss)
        model.epochs_run += 1
        model.weights, model.biases = weights, biases

        if not math.isfinite(epoch_loss):
            model.diverged = True
            break
        if stopper.update(epoch_loss):
            model.stopped_early = True
            break

    return model
