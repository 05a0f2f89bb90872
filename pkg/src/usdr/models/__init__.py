"""Residual-based prediction models behind a single fit/predict interface.

Two reconstruction variants ship: PCA and a dense autoencoder. Both carry
the mean/std of their raw training residuals (mu, sigma), computed on their
own training rows, which downstream scoring uses to rescale residuals.
Fitted models serialize to a versioned JSON document for reproducibility.
"""

from __future__ import annotations

import json
from typing import Union

import numpy as np

from ..errors import ConfigError, DataError
from .autoencoder import (
    AutoencoderConfig,
    FittedAutoencoder,
    fit_autoencoder,
    gradient_check,
)
from .pca import FittedPCA, PCAConfig, fit_pca
from .residuals import SIGMA_FLOOR, raw_residual, residual_stats, residual_vector

__all__ = [
    "AutoencoderConfig",
    "FittedAutoencoder",
    "FittedPCA",
    "ModelConfig",
    "FittedModel",
    "MODEL_PRESETS",
    "PCAConfig",
    "SIGMA_FLOOR",
    "autoencoder_dims",
    "model_preset",
    "config_from_dict",
    "config_to_dict",
    "fit",
    "gradient_check",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "predict",
    "raw_residual",
    "residual_stats",
    "residual_vector",
    "save_model",
]

ModelConfig = Union[PCAConfig, AutoencoderConfig]
FittedModel = Union[FittedPCA, FittedAutoencoder]

MODEL_FORMAT = "usdr.model"
MODEL_VERSION = 1


def fit(config: ModelConfig, X, Y) -> FittedModel:
    """Train a model on (X, Y); deterministic given config (incl. seed)."""
    if isinstance(config, PCAConfig):
        return fit_pca(config, X, Y)
    if isinstance(config, AutoencoderConfig):
        return fit_autoencoder(config, X, Y)
    raise ConfigError(f"unknown model config type: {type(config).__name__}")


def predict(model: FittedModel, X) -> np.ndarray:
    return model.predict(X)


def autoencoder_dims(d_in: int, n_layers: int, latent: int) -> tuple[int, ...]:
    """Symmetric layer widths for a given depth and bottleneck.

    n_layers counts all layers including input and output and must be odd
    (encoder and decoder mirror each other). Hidden widths between d_in and
    the latent width are geometrically interpolated; only the depth and
    bottleneck are pinned, so the parameter count scales with d_in.
    """
    if n_layers < 3 or n_layers % 2 == 0:
        raise ConfigError(f"n_layers must be an odd number >= 3, got {n_layers}")
    half = n_layers // 2
    # log-space ramp d_in -> latent over `half` steps, mirrored on the way out
    widths = np.exp(np.linspace(np.log(d_in), np.log(latent), half + 1))
    encoder = [max(1, int(round(v))) for v in widths]
    encoder[0], encoder[-1] = d_in, latent
    return tuple(encoder + encoder[-2::-1])


# Published reference shapes: depth and latent width are fixed, hidden
# widths (and so the parameter count) follow the input width.
MODEL_PRESETS = ("pca-5", "pca-15", "ae-deep-80", "ae-shallow-20")


def model_preset(name: str, d_in: int, **overrides) -> ModelConfig:
    """Named model config for a given input width.

    pca-5 / pca-15 fix the component count; ae-deep-80 is 7 dense layers
    with an 80-wide bottleneck, ae-shallow-20 is 5 layers with a 20-wide
    one. Keyword overrides are forwarded to the config.
    """
    if name == "pca-5":
        return PCAConfig(k=5, **overrides)
    if name == "pca-15":
        return PCAConfig(k=15, **overrides)
    if name == "ae-deep-80":
        return AutoencoderConfig(layer_dims=autoencoder_dims(d_in, 7, 80), **overrides)
    if name == "ae-shallow-20":
        return AutoencoderConfig(layer_dims=autoencoder_dims(d_in, 5, 20), **overrides)
    raise ConfigError(f"unknown model preset {name!r}; valid: {MODEL_PRESETS}")


def _encode_array(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": [float(v) for v in np.ravel(a)]}


def _decode_array(d: dict) -> np.ndarray:
    return np.asarray(d["data"], dtype=np.float64).reshape(d["shape"])


def config_to_dict(config: ModelConfig) -> dict:
    if isinstance(config, PCAConfig):
        return {
            "kind": "pca",
            "k": config.k,
            "standardize": config.standardize,
            "reduction": config.reduction,
        }
    if isinstance(config, AutoencoderConfig):
        return {
            "kind": "autoencoder",
            "layer_dims": list(config.layer_dims),
            "epochs": config.epochs,
            "batch_size": config.batch_size,
            "learning_rate": config.learning_rate,
            "momentum": config.momentum,
            "seed": config.seed,
            "activation": config.activation,
            "reduction": config.reduction,
        }
    raise ConfigError(f"unknown model config type: {type(config).__name__}")


def config_from_dict(doc: dict) -> ModelConfig:
    kind = doc.get("kind")
    fields = {k: v for k, v in doc.items() if k != "kind"}
    try:
        if kind == "pca":
            return PCAConfig(**fields)
        if kind == "autoencoder":
            fields["layer_dims"] = tuple(fields["layer_dims"])
            return AutoencoderConfig(**fields)
    except TypeError as exc:
        raise ConfigError(f"bad model config: {exc}") from None
    raise ConfigError(f"model config needs kind 'pca' or 'autoencoder', got {kind!r}")


def model_to_dict(model: FittedModel) -> dict:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "mu": model.mu,
        "sigma": model.sigma,
        "reduction": model.reduction,
    }
    if isinstance(model, FittedPCA):
        doc.update(
            kind="pca",
            mean=_encode_array(model.mean),
            scale=_encode_array(model.scale),
            components=_encode_array(model.components),
        )
    elif isinstance(model, FittedAutoencoder):
        doc.update(
            kind="autoencoder",
            activation=model.activation,
            weights=[_encode_array(w) for w in model.weights],
            biases=[_encode_array(b) for b in model.biases],
            loss_history=list(model.loss_history),
        )
    else:
        raise ConfigError(f"unknown model type: {type(model).__name__}")
    return doc


def model_from_dict(doc: dict) -> FittedModel:
    if doc.get("format") != MODEL_FORMAT:
        raise DataError(f"not a serialized model document: format={doc.get('format')!r}")
    if doc.get("version") != MODEL_VERSION:
        raise DataError(f"unsupported model document version {doc.get('version')!r}")
    kind = doc.get("kind")
    if kind == "pca":
        return FittedPCA(
            mean=_decode_array(doc["mean"]),
            scale=_decode_array(doc["scale"]),
            components=_decode_array(doc["components"]),
            mu=float(doc["mu"]),
            sigma=float(doc["sigma"]),
            reduction=doc["reduction"],
        )
    if kind == "autoencoder":
        return FittedAutoencoder(
            weights=tuple(_decode_array(w) for w in doc["weights"]),
            biases=tuple(_decode_array(b) for b in doc["biases"]),
            activation=doc["activation"],
            mu=float(doc["mu"]),
            sigma=float(doc["sigma"]),
            reduction=doc["reduction"],
            loss_history=tuple(doc.get("loss_history", ())),
        )
    raise DataError(f"unknown serialized model kind {kind!r}")


def save_model(model: FittedModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path) -> FittedModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
