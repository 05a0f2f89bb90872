"""Dense autoencoder trained with hand-rolled backpropagation.

Architecture and training follow the plainest stable recipe: ReLU hidden
units, linear output, mean squared reconstruction loss, SGD with momentum,
Glorot-uniform weight init, and seed-driven batch shuffling. Everything is
deterministic given (config, data, seed). A finite-difference gradient check
is provided to validate the backward pass on small configurations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DataError, NumericError
from .residuals import residual_stats, residual_vector

ACTIVATIONS = ("relu", "linear")


@dataclass(frozen=True)
class AutoencoderConfig:
    """Layer widths run input -> ... -> latent -> ... -> output."""

    layer_dims: tuple[int, ...]
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 1e-3
    momentum: float = 0.9
    seed: int = 0
    activation: str = "relu"
    reduction: str = "mae"

    def __post_init__(self):
        object.__setattr__(self, "layer_dims", tuple(int(v) for v in self.layer_dims))


@dataclass(frozen=True)
class FittedAutoencoder:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    activation: str
    mu: float
    sigma: float
    reduction: str
    loss_history: tuple[float, ...] = field(default=())

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    @property
    def n_features(self) -> int:
        return self.weights[0].shape[0]

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DataError(
                f"expected input with {self.n_features} features, got shape {X.shape}"
            )
        acts, _ = _forward(X, self.weights, self.biases, self.activation)
        return acts[-1]


def _validate_config(config: AutoencoderConfig, d_in: int) -> None:
    dims = config.layer_dims
    if len(dims) < 3:
        raise ConfigError(f"autoencoder needs at least 3 layers, got {dims}")
    if any(v < 1 for v in dims):
        raise ConfigError(f"all layer widths must be >= 1, got {dims}")
    if dims[0] != d_in or dims[-1] != d_in:
        raise ConfigError(
            f"reconstruction autoencoder needs first and last width == {d_in}, got {dims}"
        )
    if config.learning_rate <= 0:
        raise ConfigError(f"learning_rate must be > 0, got {config.learning_rate}")
    if config.epochs < 1:
        raise ConfigError(f"epochs must be >= 1, got {config.epochs}")
    if config.batch_size < 1:
        raise ConfigError(f"batch_size must be >= 1, got {config.batch_size}")
    if config.activation not in ACTIVATIONS:
        raise ConfigError(f"activation must be one of {ACTIVATIONS}, got {config.activation!r}")


def _init_params(config: AutoencoderConfig):
    rng = np.random.default_rng(config.seed)
    weights, biases = [], []
    dims = config.layer_dims
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases, rng


def _forward(X, weights, biases, activation):
    acts = [X]
    pre = []
    last = len(weights) - 1
    a = X
    for l, (W, b) in enumerate(zip(weights, biases)):
        z = a @ W + b
        pre.append(z)
        if l < last and activation == "relu":
            a = np.maximum(z, 0.0)
        else:
            a = z
        acts.append(a)
    return acts, pre


def _loss(output, Y) -> float:
    diff = output - Y
    return float(np.mean(diff * diff))


def _backward(Y, weights, acts, pre, activation):
    n, d_out = Y.shape
    grads_w = [None] * len(weights)
    grads_b = [None] * len(weights)
    dz = 2.0 * (acts[-1] - Y) / (n * d_out)
    for l in range(len(weights) - 1, -1, -1):
        grads_w[l] = acts[l].T @ dz
        grads_b[l] = dz.sum(axis=0)
        if l > 0:
            da = dz @ weights[l].T
            if activation == "relu":
                dz = da * (pre[l - 1] > 0)
            else:
                dz = da
    return grads_w, grads_b


def fit_autoencoder(config: AutoencoderConfig, X, Y) -> FittedAutoencoder:
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DataError(f"autoencoder needs a 2-D matrix with >= 2 rows, got shape {X.shape}")
    if Y.shape != X.shape or not np.array_equal(Y, X):
        raise DataError("shipped autoencoders are reconstruction models: targets must equal inputs")
    _validate_config(config, X.shape[1])

    weights, biases, rng = _init_params(config)
    vel_w = [np.zeros_like(w) for w in weights]
    vel_b = [np.zeros_like(b) for b in biases]

    acts, _ = _forward(X, weights, biases, config.activation)
    history = [_loss(acts[-1], Y)]

    n = X.shape[0]
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for bi, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start : start + config.batch_size]
            xb, yb = X[idx], Y[idx]
            acts, pre = _forward(xb, weights, biases, config.activation)
            batch_loss = _loss(acts[-1], yb)
            if not np.isfinite(batch_loss):
                raise NumericError(
                    f"non-finite training loss at epoch {epoch}, batch {bi}; "
                    "lower the learning rate"
                )
            grads_w, grads_b = _backward(yb, weights, acts, pre, config.activation)
            for l in range(len(weights)):
                vel_w[l] = config.momentum * vel_w[l] - config.learning_rate * grads_w[l]
                vel_b[l] = config.momentum * vel_b[l] - config.learning_rate * grads_b[l]
                weights[l] = weights[l] + vel_w[l]
                biases[l] = biases[l] + vel_b[l]
        acts, _ = _forward(X, weights, biases, config.activation)
        history.append(_loss(acts[-1], Y))

    for arr in weights + biases:
        arr.flags.writeable = False
    model = FittedAutoencoder(
        weights=tuple(weights),
        biases=tuple(biases),
        activation=config.activation,
        mu=0.0,
        sigma=1.0,
        reduction=config.reduction,
        loss_history=tuple(history),
    )
    res = residual_vector(Y, model.predict(X), config.reduction)
    mu, sigma = residual_stats(res)
    return FittedAutoencoder(
        weights=model.weights,
        biases=model.biases,
        activation=config.activation,
        mu=mu,
        sigma=sigma,
        reduction=config.reduction,
        loss_history=tuple(history),
    )


def gradient_check(config: AutoencoderConfig, X, step: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    Evaluated at the seeded initial parameters on the full batch X. Meant for
    small problems only (X at most 8x8, at most 3 hidden layers).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] > 8 or X.shape[1] > 8:
        raise ConfigError(f"gradient check expects a matrix no larger than 8x8, got {X.shape}")
    _validate_config(config, X.shape[1])
    if len(config.layer_dims) - 2 > 3:
        raise ConfigError("gradient check expects at most 3 hidden layers")

    weights, biases, _ = _init_params(config)
    Y = X
    acts, pre = _forward(X, weights, biases, config.activation)
    grads_w, grads_b = _backward(Y, weights, acts, pre, config.activation)

    def loss_at() -> float:
        acts, _ = _forward(X, weights, biases, config.activation)
        return _loss(acts[-1], Y)

    max_rel = 0.0
    for params, grads in ((weights, grads_w), (biases, grads_b)):
        for arr, grad in zip(params, grads):
            flat = arr.ravel()
            gflat = grad.ravel()
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + step
                up = loss_at()
                flat[i] = orig - step
                down = loss_at()
                flat[i] = orig
                numeric = (up - down) / (2.0 * step)
                rel = abs(gflat[i] - numeric) / max(abs(gflat[i]) + abs(numeric), 1e-6)
                max_rel = max(max_rel, rel)
    return max_rel
