"""Unsupervised refinement of anomaly-contaminated time series.

Trains an ensemble of residual-based models on partially overlapping
circular subsets of an unlabeled series and scores every sample by how much
its residual drops when it is part of the training data, separating normal
from abnormal samples without labels.
"""

from .dataset import Dataset, as_reconstruction, load_csv, save_csv
from .errors import (
    ConfigError,
    DataError,
    DegeneratePlanError,
    NoCleanSpecError,
    NoCleanSubsetError,
    NonDivisibleError,
    NumericError,
    UsdrError,
    WindowTooLargeError,
)
from .evaluation import PRCurve, average_precision, degradation_target, pr_curve, rmse
from .models import (
    AutoencoderConfig,
    FittedAutoencoder,
    FittedPCA,
    PCAConfig,
    autoencoder_dims,
    fit,
    gradient_check,
    load_model,
    model_preset,
    predict,
    raw_residual,
    save_model,
)
from .refine import (
    CleanSpec,
    ResidualMatrix,
    ScoreSeries,
    blind_all_scores,
    blind_ensemble_scores,
    clean_scores,
    postprocess,
    residual_matrix,
    run_refinement,
    train_ensemble,
    usdr_scores,
)
from .subsetting import SubsetPlan, build_plan, membership, plan_from_fractions
from .synth import (
    AbruptConfig,
    DegradationConfig,
    gen_abrupt,
    gen_degradation,
    health_profile,
    preset,
)

__version__ = "0.1.0"
