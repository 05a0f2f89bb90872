"""Refinement core: ensemble training, residual normalization, and scoring.

The pipeline trains one model per subset of the plan, rescales every
(sample, model) residual by that model's training-residual statistics, and
contrasts each sample's mean residual under models that excluded it with
the mean under models that included it. A large gap means the sample
carried information the rest of the data could not supply, the signature
of an anomaly.

Baselines produced on the same machinery:

* blind_all      - one model trained on everything, raw residual as score
* blind_ensemble - mean normalized residual over all ensemble members
* clean          - the ideal reference trained on known-normal data only

All score reductions run serially in ascending index order so runs stay
bit-reproducible however the ensemble was trained; training itself is
embarrassingly parallel over subsets (independent fits gathered by index).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .dataset import Dataset
from .errors import (
    ConfigError,
    DataError,
    NoCleanSubsetError,
    NumericError,
)
from .models import (
    SIGMA_FLOOR,
    AutoencoderConfig,
    FittedModel,
    ModelConfig,
    fit,
    residual_vector,
)
from .subsetting import SubsetPlan

METHODS = ("usdr", "blind_all", "blind_ensemble", "clean")

# Tolerances for the per-column standardization identity, asserted on every
# residual-matrix construction.
MEAN_TOL = 1e-9
STD_TOL = 1e-6


@dataclass(frozen=True)
class ResidualMatrix:
    """Normalized residuals r[i, j] for every sample i and model j.

    in_training[i, j] is True iff sample i was in model j's training subset.
    Columns are standardized so their training rows have mean 0 and std 1,
    except sigma-clamped columns which are identically zero.
    """

    r: np.ndarray
    in_training: np.ndarray

    @property
    def n(self) -> int:
        return self.r.shape[0]

    @property
    def m(self) -> int:
        return self.r.shape[1]


@dataclass(frozen=True)
class ScoreSeries:
    """Postprocessed per-sample scores in [0, 1] for one method."""

    values: np.ndarray
    method: str
    smoothing_window: int
    provenance: Mapping = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def derive_seed(base_seed: int, j: int) -> int:
    """Deterministic, decorrelated per-model seed from (base seed, subset id)."""
    return int(np.random.SeedSequence([int(base_seed), int(j)]).generate_state(1)[0])


def _config_for_subset(config: ModelConfig, base_seed: int, j: int) -> ModelConfig:
    if isinstance(config, AutoencoderConfig):
        return dataclasses.replace(config, seed=derive_seed(base_seed, j))
    return config


def train_ensemble(
    data: Dataset, plan: SubsetPlan, config: ModelConfig, base_seed: int = 0
) -> list[FittedModel]:
    """Fit one model per subset; model j sees exactly the rows of window j."""
    if plan.n != data.n:
        raise DataError(f"plan covers {plan.n} samples but dataset has {data.n}")
    models = []
    for j, window in enumerate(plan.windows):
        rows = np.asarray(window, dtype=np.intp)
        cfg_j = _config_for_subset(config, base_seed, j)
        try:
            models.append(fit(cfg_j, data.inputs[rows], data.targets[rows]))
        except (ConfigError, DataError, NumericError) as exc:
            raise type(exc)(f"subset {j}: {exc}") from exc
    return models


def residual_matrix(
    data: Dataset, plan: SubsetPlan, ensemble: list[FittedModel]
) -> ResidualMatrix:
    """Infer with every ensemble member on the whole series and rescale.

    r[i, j] = (raw residual of sample i under model j - mu_j) / sigma_j.
    Sigma-clamped columns (constant training residuals) are zeroed instead.
    """
    if len(ensemble) != plan.m:
        raise DataError(f"ensemble has {len(ensemble)} models but plan expects {plan.m}")
    if plan.n != data.n:
        raise DataError(f"plan covers {plan.n} samples but dataset has {data.n}")
    r = np.empty((data.n, plan.m))
    flags = np.zeros((data.n, plan.m), dtype=bool)
    for j, model in enumerate(ensemble):
        raw = residual_vector(data.targets, model.predict(data.inputs), model.reduction)
        if model.sigma <= SIGMA_FLOOR:
            r[:, j] = 0.0
        else:
            r[:, j] = (raw - model.mu) / model.sigma
        flags[np.asarray(plan.windows[j], dtype=np.intp), j] = True
    rm = ResidualMatrix(r=r, in_training=flags)
    _check_standardization(rm, ensemble)
    return rm


def _check_standardization(rm: ResidualMatrix, ensemble: list[FittedModel]) -> None:
    # The defining identity of the rescaling; a violation means mu/sigma and
    # the inference path disagree, which would silently corrupt all scores.
    for j in range(rm.m):
        col = rm.r[rm.in_training[:, j], j]
        if ensemble[j].sigma <= SIGMA_FLOOR:
            if np.any(rm.r[:, j] != 0.0):
                raise NumericError(f"sigma-clamped column {j} is not all zero")
            continue
        mean = float(np.mean(col))
        std = float(np.std(col))
        if abs(mean) > MEAN_TOL or abs(std - 1.0) > STD_TOL:
            raise NumericError(
                f"column {j} training rows standardize to mean={mean:.3e}, std={std:.9f}"
            )


def usdr_scores(rm: ResidualMatrix, plan: SubsetPlan) -> np.ndarray:
    """Refinement score: mean out-of-training residual minus mean in-training."""
    if rm.n != plan.n or rm.m != plan.m:
        raise DataError("residual matrix is inconsistent with the plan")
    flags = rm.in_training
    if not np.all(flags.sum(axis=1) == plan.m_train):
        raise DataError("every sample must be in exactly M_train training subsets")
    n_out = plan.m - plan.m_train
    z_train = (rm.r * flags).sum(axis=1) / plan.m_train
    z_infer = (rm.r * ~flags).sum(axis=1) / n_out
    return z_infer - z_train


def blind_all_scores(data: Dataset, config: ModelConfig, base_seed: int = 0) -> np.ndarray:
    """Naive baseline: one model on everything, absolute residual as score."""
    cfg = _config_for_subset(config, base_seed, 0)
    model = fit(cfg, data.inputs, data.targets)
    return residual_vector(data.targets, model.predict(data.inputs), model.reduction)


def blind_ensemble_scores(rm: ResidualMatrix) -> np.ndarray:
    """Ensemble-mean normalized residual over all M models, in-training included."""
    return rm.r.mean(axis=1)


def clean_scores(
    data: Dataset,
    plan: SubsetPlan,
    config: ModelConfig,
    normal_mask,
    mode: str = "ensemble",
    base_seed: int = 0,
) -> np.ndarray:
    """Ideal reference trained on known-normal samples only.

    ensemble mode trains the subsets lying entirely inside the mask and
    averages their normalized residuals; prefix mode trains a single model
    on the leading run of normal samples and scores by raw residual.
    """
    mask = np.asarray(normal_mask, dtype=bool)
    if mask.shape != (data.n,):
        raise DataError(f"normal mask length {mask.shape} does not match n={data.n}")
    if mode == "ensemble":
        clean_js = [
            j for j, window in enumerate(plan.windows)
            if mask[np.asarray(window, dtype=np.intp)].all()
        ]
        if not clean_js:
            raise NoCleanSubsetError("no training subset lies entirely inside the normal mask")
        cols = []
        for j in clean_js:
            rows = np.asarray(plan.windows[j], dtype=np.intp)
            cfg_j = _config_for_subset(config, base_seed, j)
            model = fit(cfg_j, data.inputs[rows], data.targets[rows])
            raw = residual_vector(data.targets, model.predict(data.inputs), model.reduction)
            if model.sigma <= SIGMA_FLOOR:
                cols.append(np.zeros(data.n))
            else:
                cols.append((raw - model.mu) / model.sigma)
        return np.stack(cols, axis=1).mean(axis=1)
    if mode == "prefix":
        prefix = data.n if mask.all() else int(np.argmin(mask))
        if prefix < 2:
            raise NoCleanSubsetError(
                f"normal prefix has {prefix} samples; at least 2 are required"
            )
        cfg = _config_for_subset(config, base_seed, 0)
        model = fit(cfg, data.inputs[:prefix], data.targets[:prefix])
        return residual_vector(data.targets, model.predict(data.inputs), model.reduction)
    raise ConfigError(f"clean mode must be 'ensemble' or 'prefix', got {mode!r}")


def moving_mean(raw: np.ndarray, window: int) -> np.ndarray:
    """Trailing moving mean with a growing head window."""
    if window < 1:
        raise ConfigError(f"smoothing window must be >= 1, got {window}")
    raw = np.asarray(raw, dtype=np.float64)
    if window == 1 or np.all(raw == raw[0]):
        return raw.copy()
    csum = np.concatenate([[0.0], np.cumsum(raw)])
    idx = np.arange(raw.size)
    lo = np.maximum(0, idx - window + 1)
    return (csum[idx + 1] - csum[lo]) / (idx - lo + 1)


def rescale_unit(values: np.ndarray) -> np.ndarray:
    """Min-max rescale to [0, 1]; a constant series maps to all zeros.

    Degeneracy is judged with a relative tolerance so that pure float noise
    on an otherwise constant series does not get blown up into fake signal.
    """
    values = np.asarray(values, dtype=np.float64)
    lo, hi = float(values.min()), float(values.max())
    if hi - lo <= 1e-12 * max(1.0, abs(lo), abs(hi)):
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def postprocess(
    raw,
    smooth_window: int = 1,
    method: str = "",
    provenance: Optional[Mapping] = None,
) -> ScoreSeries:
    """Smooth with a trailing moving mean, then min-max rescale to [0, 1].

    Smoothing precedes rescaling so the output always spans the full unit
    interval (degenerate constant series map to zeros).
    """
    smoothed = moving_mean(np.asarray(raw, dtype=np.float64), smooth_window)
    return ScoreSeries(
        values=rescale_unit(smoothed),
        method=method,
        smoothing_window=smooth_window,
        provenance=dict(provenance or {}),
    )


@dataclass(frozen=True)
class CleanSpec:
    """How to obtain the normal mask for the clean baseline."""

    mode: str = "ensemble"                     # how to train: ensemble | prefix
    mask: Optional[np.ndarray] = None          # explicit normal mask
    prefix_fraction: Optional[float] = None    # or: leading fraction assumed normal

    def resolve_mask(self, n: int) -> np.ndarray:
        if self.mask is not None:
            return np.asarray(self.mask, dtype=bool)
        if self.prefix_fraction is not None:
            if not 0 < self.prefix_fraction <= 1:
                raise ConfigError(
                    f"prefix_fraction must be in (0, 1], got {self.prefix_fraction}"
                )
            mask = np.zeros(n, dtype=bool)
            mask[: int(round(self.prefix_fraction * n))] = True
            return mask
        raise ConfigError("clean spec needs either a mask or a prefix_fraction")


@dataclass(frozen=True)
class RefinementResult:
    scores: dict
    raw_scores: dict
    model_seeds: list
    mu: list
    sigma: list


def run_refinement(
    data: Dataset,
    plan: SubsetPlan,
    config: ModelConfig,
    methods=METHODS,
    base_seed: int = 0,
    smooth_window: int = 10,
    clean_spec: Optional[CleanSpec] = None,
) -> RefinementResult:
    """Produce postprocessed score series for every requested method.

    The subset ensemble is trained once and shared by usdr, blind_ensemble
    and (when its subsets qualify) the clean ensemble; per-model seeds are
    derived from (base_seed, subset id), so the shared models are identical
    to what standalone calls would train.
    """
    methods = list(methods)
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ConfigError(f"unknown methods {unknown}; valid: {list(METHODS)}")
    if not methods:
        raise ConfigError("at least one method is required")

    raw: dict[str, np.ndarray] = {}
    mu: list[float] = []
    sigma: list[float] = []
    needs_ensemble = any(m in methods for m in ("usdr", "blind_ensemble"))

    rm = None
    if needs_ensemble:
        ensemble = train_ensemble(data, plan, config, base_seed)
        mu = [m.mu for m in ensemble]
        sigma = [m.sigma for m in ensemble]
        rm = residual_matrix(data, plan, ensemble)
    if "usdr" in methods:
        raw["usdr"] = usdr_scores(rm, plan)
    if "blind_ensemble" in methods:
        raw["blind_ensemble"] = blind_ensemble_scores(rm)
    if "blind_all" in methods:
        raw["blind_all"] = blind_all_scores(data, config, base_seed)
    if "clean" in methods:
        if clean_spec is None:
            raise ConfigError("clean method requested without a clean spec")
        mask = clean_spec.resolve_mask(data.n)
        if clean_spec.mode == "ensemble" and rm is not None:
            # per-subset seeds match train_ensemble, so reuse its columns
            clean_js = [
                j for j, window in enumerate(plan.windows)
                if mask[np.asarray(window, dtype=np.intp)].all()
            ]
            if not clean_js:
                raise NoCleanSubsetError(
                    "no training subset lies entirely inside the normal mask"
                )
            raw["clean"] = rm.r[:, clean_js].mean(axis=1)
        else:
            raw["clean"] = clean_scores(
                data, plan, config, mask, mode=clean_spec.mode, base_seed=base_seed
            )

    scores = {
        name: postprocess(raw[name], smooth_window, method=name)
        for name in methods
    }
    return RefinementResult(
        scores=scores,
        raw_scores={name: raw[name] for name in methods},
        model_seeds=[derive_seed(base_seed, j) for j in range(plan.m)] if needs_ensemble else [],
        mu=mu,
        sigma=sigma,
    )
