"""Classifier adapters: a uniform scores/confidence/gradient interface.

Gradients are taken on the pre-softmax class score; confidences apply
softmax. Test-grade adapters (closed-form toys, a coverage oracle, a tiny
trained CNN) live here or register themselves into :data:`ADAPTER_REGISTRY`;
real deep-learning backends plug in through the same interface, gated by
capability flags.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

CAP_INPUT_GRADIENT = "input_gradient"
CAP_FEATURE_MAP_ACCESS = "feature_map_access"
CAP_RECTIFIED_BACKPROP = "rectified_backprop"

__all__ = [
    "ADAPTER_REGISTRY",
    "CAP_FEATURE_MAP_ACCESS",
    "CAP_INPUT_GRADIENT",
    "CAP_RECTIFIED_BACKPROP",
    "CapabilityError",
    "ClassifierAdapter",
    "ConstantModel",
    "CoverageOracleModel",
    "FixedConfidenceModel",
    "LinearModel",
    "Prediction",
    "QuadraticModel",
    "coverage_oracle_confidence",
    "create_adapter",
    "register_adapter",
    "softmax",
]


class CapabilityError(RuntimeError):
    """The adapter does not support the requested operation."""


def softmax(scores) -> np.ndarray:
    """Numerically stable softmax over a 1-D score vector."""
    s = np.asarray(scores, dtype=np.float64)
    z = s - s.max()
    e = np.exp(z)
    return e / e.sum()


@dataclass(frozen=True)
class Prediction:
    """Pre-softmax scores paired with their softmax probabilities."""

    scores: np.ndarray
    probs: np.ndarray


class ClassifierAdapter(ABC):
    """Base class for everything the toolkit treats as a classifier.

    Subclasses must be deterministic: identical input implies identical
    scores and gradients. ``single_threaded`` advertises adapters whose
    calls must not run concurrently; the evaluation harness is sequential
    either way.
    """

    num_classes: int
    input_shape: tuple[int, int, int]
    capabilities: frozenset = frozenset()
    single_threaded: bool = False

    def check_image(self, image) -> np.ndarray:
        arr = np.asarray(image, dtype=np.float64)
        if arr.shape != tuple(self.input_shape):
            raise ValueError(
                f"image shape {arr.shape} does not match adapter input shape "
                f"{tuple(self.input_shape)}"
            )
        return arr

    def check_class(self, c: int) -> int:
        if not 0 <= int(c) < self.num_classes:
            raise ValueError(f"class index {c} out of range [0, {self.num_classes})")
        return int(c)

    @abstractmethod
    def class_scores(self, image) -> np.ndarray:
        """Pre-softmax score vector, one entry per class."""

    def predict(self, image) -> Prediction:
        scores = np.asarray(self.class_scores(image), dtype=np.float64)
        return Prediction(scores=scores, probs=softmax(scores))

    def predict_confidence(self, image, c: int) -> float:
        """Softmax probability of class c for the given image."""
        self.check_class(c)
        return float(self.predict(image).probs[c])

    def input_gradient(self, image, c: int) -> np.ndarray:
        """Gradient of the class-c pre-softmax score w.r.t. every input element."""
        raise CapabilityError("gradients unsupported")


class ConstantModel(ClassifierAdapter):
    """Fixed pre-softmax scores regardless of input; zero gradients."""

    capabilities = frozenset({CAP_INPUT_GRADIENT})

    def __init__(self, scores, input_shape=(1, 8, 8)):
        self.scores = np.asarray(scores, dtype=np.float64)
        self.num_classes = self.scores.size
        self.input_shape = tuple(input_shape)

    def class_scores(self, image) -> np.ndarray:
        self.check_image(image)
        return self.scores.copy()

    def input_gradient(self, image, c: int) -> np.ndarray:
        arr = self.check_image(image)
        self.check_class(c)
        return np.zeros_like(arr)


class FixedConfidenceModel(ClassifierAdapter):
    """Returns caller-specified probabilities exactly, even 0 or 1.

    Softmax of finite scores can never reach the endpoints of [0, 1], so this
    adapter overrides ``predict_confidence`` to hand back the configured
    probability vector verbatim. Useful for metric tests that pin confidence
    to a constant.
    """

    def __init__(self, probs, input_shape=(1, 8, 8)):
        p = np.asarray(probs, dtype=np.float64)
        if p.min() < 0 or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("probabilities must be non-negative and sum to 1")
        self.probs = p
        self.num_classes = p.size
        self.input_shape = tuple(input_shape)

    def class_scores(self, image) -> np.ndarray:
        self.check_image(image)
        return np.log(np.maximum(self.probs, 1e-300))

    def predict_confidence(self, image, c: int) -> float:
        self.check_image(image)
        self.check_class(c)
        return float(self.probs[c])


class LinearModel(ClassifierAdapter):
    """Closed-form toy: score_c = sum(w_c * x); gradient is w_c everywhere."""

    capabilities = frozenset({CAP_INPUT_GRADIENT})

    def __init__(self, weights):
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 4:
            raise ValueError("weights must have shape (num_classes, C, H, W)")
        self.weights = w
        self.num_classes = w.shape[0]
        self.input_shape = w.shape[1:]

    def class_scores(self, image) -> np.ndarray:
        arr = self.check_image(image)
        return np.tensordot(self.weights, arr, axes=3)

    def input_gradient(self, image, c: int) -> np.ndarray:
        self.check_image(image)
        return self.weights[self.check_class(c)].copy()


class QuadraticModel(ClassifierAdapter):
    """Closed-form toy: score_c = -sum((x - t_c)^2); gradient is -2(x - t_c)."""

    capabilities = frozenset({CAP_INPUT_GRADIENT})

    def __init__(self, templates):
        t = np.asarray(templates, dtype=np.float64)
        if t.ndim != 4:
            raise ValueError("templates must have shape (num_classes, C, H, W)")
        self.templates = t
        self.num_classes = t.shape[0]
        self.input_shape = t.shape[1:]

    def class_scores(self, image) -> np.ndarray:
        arr = self.check_image(image)
        diff = arr[None, ...] - self.templates
        return -np.sum(diff * diff, axis=(1, 2, 3))

    def input_gradient(self, image, c: int) -> np.ndarray:
        arr = self.check_image(image)
        return -2.0 * (arr - self.templates[self.check_class(c)])


def coverage_oracle_confidence(recovered_mask, gt) -> float:
    """Fraction of the ground-truth region covered by a recovered mask."""
    rec = np.asarray(recovered_mask, dtype=bool)
    gt_arr = np.asarray(gt, dtype=bool)
    if rec.shape != gt_arr.shape:
        raise ValueError(f"mask shapes differ: {rec.shape} vs {gt_arr.shape}")
    gt_count = int(gt_arr.sum())
    if gt_count == 0:
        raise ValueError("empty ground-truth mask")
    return float(np.logical_and(rec, gt_arr).sum() / gt_count)


class CoverageOracleModel(ClassifierAdapter):
    """Synthetic two-class model whose class-0 confidence IS ground-truth coverage.

    Given an image recovered onto a known baseline, the set of pixels that
    differ from the baseline in any channel is taken as the recovered mask,
    and the class-0 confidence equals the fraction of the ground-truth region
    that mask covers. This turns coverage reasoning into an exact, model-free
    confidence signal for desk-scale validation; feed it images whose
    non-baseline content is nonzero everywhere.
    """

    def __init__(self, gt, baseline=0.0, num_channels: int = 1):
        self.gt = np.asarray(gt, dtype=bool)
        if self.gt.ndim != 2 or not self.gt.any():
            raise ValueError("ground truth must be a non-empty 2-D mask")
        self.baseline = baseline
        self.num_classes = 2
        self.input_shape = (num_channels, *self.gt.shape)

    def class_scores(self, image) -> np.ndarray:
        raise CapabilityError("coverage oracle exposes confidences only")

    def recovered_mask(self, image) -> np.ndarray:
        arr = self.check_image(image)
        base = np.broadcast_to(np.asarray(self.baseline, dtype=np.float64), arr.shape)
        return np.any(arr != base, axis=0)

    def predict_confidence(self, image, c: int) -> float:
        self.check_class(c)
        cov = coverage_oracle_confidence(self.recovered_mask(image), self.gt)
        return cov if c == 0 else 1.0 - cov


ADAPTER_REGISTRY: dict = {}


def register_adapter(adapter_id: str, factory) -> None:
    """Register a factory taking keyword params and returning an adapter."""
    ADAPTER_REGISTRY[adapter_id] = factory


def create_adapter(adapter_id: str, **params) -> ClassifierAdapter:
    if adapter_id not in ADAPTER_REGISTRY:
        raise KeyError(
            f"unknown adapter id {adapter_id!r}; registered: {sorted(ADAPTER_REGISTRY)}"
        )
    return ADAPTER_REGISTRY[adapter_id](**params)


def _make_constant(scores=(0.0, 0.0), input_shape=(1, 8, 8)):
    return ConstantModel(scores, input_shape=input_shape)


def _make_fixed_confidence(probs=(1.0, 0.0), input_shape=(1, 8, 8)):
    return FixedConfidenceModel(probs, input_shape=input_shape)


def _make_linear_toy(num_classes=2, input_shape=(1, 8, 8), seed=0):
    rng = np.random.default_rng(seed)
    return LinearModel(rng.normal(size=(num_classes, *input_shape)))


def _make_quadratic_toy(num_classes=2, input_shape=(1, 8, 8), seed=0):
    rng = np.random.default_rng(seed)
    return QuadraticModel(rng.normal(size=(num_classes, *input_shape)))


register_adapter("constant", _make_constant)
register_adapter("fixed_confidence", _make_fixed_confidence)
register_adapter("linear_toy", _make_linear_toy)
register_adapter("quadratic_toy", _make_quadratic_toy)
