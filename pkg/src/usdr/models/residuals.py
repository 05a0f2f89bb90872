"""Per-sample residual reduction shared by all residual-based models.

Targets are multivariate, so the absolute prediction error must be reduced
to a scalar per sample. The default reduction is the mean absolute error
over output dimensions, which is scale-balanced across features; an
RMSE-per-sample alternative is available through model configs.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, DataError

# Floor applied to residual standard deviations: constant residuals carry no
# ranking signal and must normalize to 0 rather than NaN.
SIGMA_FLOOR = 1e-12

REDUCTIONS = ("mae", "rmse")


def raw_residual(y, y_hat) -> float:
    """Mean absolute error between one target row and its prediction."""
    y = np.asarray(y, dtype=np.float64).ravel()
    y_hat = np.asarray(y_hat, dtype=np.float64).ravel()
    if y.shape != y_hat.shape:
        raise DataError(f"residual shapes differ: {y.shape} vs {y_hat.shape}")
    return float(np.mean(np.abs(y - y_hat)))


def residual_vector(Y, Y_hat, reduction: str = "mae") -> np.ndarray:
    """Reduce prediction errors to one non-negative scalar per sample."""
    Y = np.asarray(Y, dtype=np.float64)
    Y_hat = np.asarray(Y_hat, dtype=np.float64)
    if Y.shape != Y_hat.shape:
        raise DataError(f"residual shapes differ: {Y.shape} vs {Y_hat.shape}")
    err = Y - Y_hat
    if reduction == "mae":
        return np.mean(np.abs(err), axis=1)
    if reduction == "rmse":
        return np.sqrt(np.mean(err * err, axis=1))
    raise ConfigError(f"unknown residual reduction {reduction!r}; use one of {REDUCTIONS}")


def residual_stats(residuals: np.ndarray) -> tuple[float, float]:
    """Mean and floored population std of a training residual vector."""
    mu = float(np.mean(residuals))
    sigma = float(np.std(residuals))
    return mu, max(sigma, SIGMA_FLOOR)
