"""Gradient-magnitude saliency attribution and recover-and-predict evaluation.

The package splits into array primitives (:mod:`absgrad.core`), classifier
adapters (:mod:`absgrad.models`, :mod:`absgrad.tinycnn`), input modifiers
(:mod:`absgrad.modify`), attribution methods (:mod:`absgrad.methods`),
evaluation metrics (:mod:`absgrad.metrics`), the synthetic validation suite
(:mod:`absgrad.synth`), and a config-driven harness (:mod:`absgrad.runner`)
with a CLI front end (:mod:`absgrad.cli`).
"""

from .core import (
    AreaMasks,
    PartitionScheme,
    build_partitions,
    channel_reduce,
    focus_noise_split,
    is_normalized,
    normalize_map,
    percentile_value,
    threshold_mask,
)
from .methods import (
    METHOD_IDS,
    MethodConfig,
    ReversalParams,
    aggregate_mean,
    aggregate_variance,
    collect_gradients,
    guided_absolute_grad,
    integrated_gradients,
    interpret,
    parse_method_id,
    reversed_variant,
    run_method,
    variance_guide,
)
from .metrics import (
    METRIC_DIRECTIONS,
    RcapResult,
    dauc,
    iauc,
    log_cosh_dice,
    mae,
    rcap,
    recover_image,
    saliency_ratio,
)
from .models import (
    ClassifierAdapter,
    ConstantModel,
    CoverageOracleModel,
    FixedConfidenceModel,
    LinearModel,
    QuadraticModel,
    coverage_oracle_confidence,
    create_adapter,
    register_adapter,
    softmax,
)
from .modify import (
    ModifierSpec,
    blur_path_modifier,
    gaussian_modifier,
    linear_path_modifier,
)
from .synth import (
    SyntheticSuite,
    build_suite,
    check_propositions,
    gaussian_saliency,
    reversed_validation,
)

__version__ = "0.1.0"

__all__ = [
    "AreaMasks",
    "ClassifierAdapter",
    "ConstantModel",
    "CoverageOracleModel",
    "FixedConfidenceModel",
    "LinearModel",
    "METHOD_IDS",
    "METRIC_DIRECTIONS",
    "MethodConfig",
    "ModifierSpec",
    "PartitionScheme",
    "QuadraticModel",
    "RcapResult",
    "ReversalParams",
    "SyntheticSuite",
    "aggregate_mean",
    "aggregate_variance",
    "build_partitions",
    "build_suite",
    "channel_reduce",
    "check_propositions",
    "collect_gradients",
    "coverage_oracle_confidence",
    "create_adapter",
    "dauc",
    "focus_noise_split",
    "gaussian_modifier",
    "gaussian_saliency",
    "guided_absolute_grad",
    "iauc",
    "integrated_gradients",
    "interpret",
    "is_normalized",
    "linear_path_modifier",
    "log_cosh_dice",
    "mae",
    "normalize_map",
    "parse_method_id",
    "percentile_value",
    "rcap",
    "recover_image",
    "register_adapter",
    "reversed_validation",
    "reversed_variant",
    "run_method",
    "saliency_ratio",
    "softmax",
    "threshold_mask",
    "variance_guide",
    "blur_path_modifier",
]
