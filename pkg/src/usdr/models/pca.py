"""PCA reconstruction model.

Fits by economy SVD of the (optionally) standardized training matrix and
reconstructs through the top-k principal subspace. Centering and per-feature
scaling use training statistics only, so no information leaks across subset
boundaries. Component signs follow the largest-magnitude-loading convention,
which makes the fitted parameters invariant to sample order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DataError
from .residuals import residual_stats, residual_vector


@dataclass(frozen=True)
class PCAConfig:
    k: int
    standardize: bool = True
    reduction: str = "mae"


@dataclass(frozen=True)
class FittedPCA:
    """Learned PCA parameters plus training residual statistics (mu, sigma)."""

    mean: np.ndarray          # (D,) training mean
    scale: np.ndarray         # (D,) training std (ones when not standardized)
    components: np.ndarray    # (D, k), orthonormal columns
    mu: float
    sigma: float
    reduction: str

    @property
    def k(self) -> int:
        return self.components.shape[1]

    @property
    def n_features(self) -> int:
        return self.components.shape[0]

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DataError(
                f"expected input with {self.n_features} features, got shape {X.shape}"
            )
        Z = (X - self.mean) / self.scale
        Z_hat = (Z @ self.components) @ self.components.T
        return Z_hat * self.scale + self.mean


def _orient_components(components: np.ndarray) -> np.ndarray:
    # Flip each column so its largest-magnitude entry is positive; removes
    # the SVD sign ambiguity and keeps fits permutation-invariant.
    idx = np.argmax(np.abs(components), axis=0)
    signs = np.sign(components[idx, np.arange(components.shape[1])])
    signs[signs == 0] = 1.0
    return components * signs


def fit_pca(config: PCAConfig, X, Y) -> FittedPCA:
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DataError(f"PCA needs a 2-D matrix with at least 2 rows, got shape {X.shape}")
    if Y.shape != X.shape or not np.array_equal(Y, X):
        raise DataError("PCA is a reconstruction model: targets must equal inputs")
    d = X.shape[1]
    if not 1 <= config.k <= d:
        raise ConfigError(f"PCA k={config.k} must satisfy 1 <= k <= {d}")

    mean = X.mean(axis=0)
    if config.standardize:
        scale = np.maximum(X.std(axis=0), 1e-12)
    else:
        scale = np.ones(d)
    Z = (X - mean) / scale
    _, _, vt = np.linalg.svd(Z, full_matrices=False)
    components = _orient_components(vt[: config.k].T)

    model = FittedPCA(
        mean=mean, scale=scale, components=components, mu=0.0, sigma=1.0,
        reduction=config.reduction,
    )
    res = residual_vector(Y, model.predict(X), config.reduction)
    mu, sigma = residual_stats(res)
    return FittedPCA(
        mean=mean, scale=scale, components=components, mu=mu, sigma=sigma,
        reduction=config.reduction,
    )
