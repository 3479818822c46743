"""Saliency evaluation metrics: recover-and-predict, deletion/insertion
curves, ground-truth agreement, and the model-free noise ratio.

The recover-and-predict score walks nested percentile partitions of a
normalized map from the top down. For each partition k it recovers the
pixels at or above the k-th threshold onto a baseline image, then multiplies
the partition's saliency-mass ratio (how little mass is left outside) by the
classifier's softmax confidence on the recovered image (how well the
recovered area hits the evidence). The score is the mean of those products;
the mass ratio reads the map's visual noise level and the confidence its
localization, which is what distinguishes this score from purely
rank-driven deletion/insertion areas.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PartitionScheme, build_partitions, focus_noise_split
from .models import ClassifierAdapter

DEFAULT_LOWER_BOUND = 60.0
DEFAULT_INTERVAL = 10.0
DEFAULT_CURVE_STEPS = 100

METRIC_IDS = ("rcap", "dauc", "iauc", "mae", "lcdice", "sratio")

# Direction metadata is data, not code: report consumers rank with it.
METRIC_DIRECTIONS = {
    "rcap": "higher",
    "dauc": "lower",
    "iauc": "higher",
    "mae": "lower",
    "lcdice": "lower",
    "sratio": "higher",
}

__all__ = [
    "DEFAULT_CURVE_STEPS",
    "DEFAULT_INTERVAL",
    "DEFAULT_LOWER_BOUND",
    "METRIC_DIRECTIONS",
    "METRIC_IDS",
    "RcapResult",
    "RecoveredImage",
    "dauc",
    "iauc",
    "log_cosh_dice",
    "mae",
    "rcap",
    "recover_image",
    "saliency_ratio",
]


@dataclass(frozen=True)
class RecoveredImage:
    """An image restored onto a baseline wherever saliency reaches a threshold."""

    pixels: np.ndarray
    recovered_mask: np.ndarray
    threshold: float


@dataclass(frozen=True)
class RcapResult:
    """Partition scheme with per-partition mass ratios, confidences, and score."""

    scheme: PartitionScheme
    ratios: tuple[float, ...]
    confidences: tuple[float, ...]
    score: float


def _image_and_baseline(x, baseline) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(x, dtype=np.float64)
    base = np.asarray(baseline, dtype=np.float64)
    if base.ndim == 0:
        base = np.full_like(arr, float(base))
    if base.shape != arr.shape:
        raise ValueError(f"baseline shape {base.shape} does not match image {arr.shape}")
    return arr, base


def _check_map_shape(arr: np.ndarray, saliency: np.ndarray) -> None:
    if saliency.shape != arr.shape[-2:]:
        raise ValueError(
            f"saliency shape {saliency.shape} does not match image plane {arr.shape[-2:]}"
        )


def recover_image(x, baseline, saliency, t: float) -> RecoveredImage:
    """Keep pixels whose saliency is >= t, fall back to the baseline elsewhere.

    The mask applies uniformly across channels.
    """
    arr, base = _image_and_baseline(x, baseline)
    m = np.asarray(saliency, dtype=np.float64)
    _check_map_shape(arr, m)
    mask = m >= t
    pixels = np.where(mask, arr, base) if arr.ndim == 2 else np.where(mask[None, ...], arr, base)
    return RecoveredImage(pixels=pixels, recovered_mask=mask, threshold=float(t))


def rcap(
    model: ClassifierAdapter,
    x,
    c: int,
    saliency,
    baseline=0.0,
    lower_bound: float = DEFAULT_LOWER_BOUND,
    interval: float = DEFAULT_INTERVAL,
) -> RcapResult:
    """Recover-and-predict score of a normalized saliency map.

    Builds the percentile partitions, recovers each cumulative top-value set
    onto the baseline, and averages mass-ratio x confidence over partitions.
    """
    m = np.asarray(saliency, dtype=np.float64)
    total = float(m.sum())
    if total <= 0.0:
        raise ValueError("saliency map has no positive mass")
    scheme = build_partitions(m, lower_bound, interval)
    ratios = []
    confidences = []
    for t in scheme.thresholds:
        rec = recover_image(x, baseline, m, t)
        ratios.append(float(m[rec.recovered_mask].sum()) / total)
        confidences.append(float(model.predict_confidence(rec.pixels, c)))
    score = float(np.mean([r * s for r, s in zip(ratios, confidences)]))
    return RcapResult(
        scheme=scheme, ratios=tuple(ratios), confidences=tuple(confidences), score=score
    )


def _ranked_pixels(saliency: np.ndarray) -> np.ndarray:
    """Flat pixel indices by descending saliency; ties broken by flat index."""
    return np.argsort(-saliency.ravel(), kind="stable")


def _curve_area(model, c, images) -> float:
    fractions = np.linspace(0.0, 1.0, len(images))
    confs = np.array([model.predict_confidence(img, c) for img in images])
    return float(np.trapezoid(confs, fractions))


def dauc(model, x, c: int, saliency, steps: int = DEFAULT_CURVE_STEPS, baseline=0.0) -> float:
    """Deletion area under the confidence curve; lower is better.

    Step s of `steps` replaces the top s/steps fraction of pixels by saliency
    rank with the baseline. Depends on pixel ranks only, so maps with the
    same rank order score identically bit for bit.
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    arr, base = _image_and_baseline(x, baseline)
    m = np.asarray(saliency, dtype=np.float64)
    _check_map_shape(arr, m)
    order = _ranked_pixels(m)
    n_pix = order.size
    plane = arr.reshape(-1, n_pix) if arr.ndim == 3 else arr.reshape(1, n_pix)
    base_plane = base.reshape(plane.shape)
    images = []
    for s in range(steps + 1):
        k = (s * n_pix) // steps
        img = plane.copy()
        img[:, order[:k]] = base_plane[:, order[:k]]
        images.append(img.reshape(arr.shape))
    return _curve_area(model, c, images)


def iauc(model, x, c: int, saliency, steps: int = DEFAULT_CURVE_STEPS, baseline=0.0) -> float:
    """Insertion area under the confidence curve; higher is better.

    Step s recovers the top s/steps fraction of pixels onto the baseline;
    the final step restores the full image.
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    arr, base = _image_and_baseline(x, baseline)
    m = np.asarray(saliency, dtype=np.float64)
    _check_map_shape(arr, m)
    order = _ranked_pixels(m)
    n_pix = order.size
    plane = arr.reshape(-1, n_pix) if arr.ndim == 3 else arr.reshape(1, n_pix)
    base_plane = base.reshape(plane.shape)
    images = []
    for s in range(steps + 1):
        k = (s * n_pix) // steps
        img = base_plane.copy()
        img[:, order[:k]] = plane[:, order[:k]]
        images.append(img.reshape(arr.shape))
    return _curve_area(model, c, images)


def mae(saliency, gt_mask) -> float:
    """Mean absolute difference between a normalized map and a binary mask."""
    m = np.asarray(saliency, dtype=np.float64)
    t = np.asarray(gt_mask, dtype=np.float64)
    if m.shape != t.shape:
        raise ValueError(f"shapes differ: {m.shape} vs {t.shape}")
    return float(np.abs(m - t).mean())


def log_cosh_dice(saliency, gt_mask) -> float:
    """log(cosh(1 - soft Dice)) loss against a binary ground-truth mask."""
    m = np.asarray(saliency, dtype=np.float64)
    t = np.asarray(gt_mask, dtype=np.float64)
    if m.shape != t.shape:
        raise ValueError(f"shapes differ: {m.shape} vs {t.shape}")
    denom = float(m.sum() + t.sum())
    if denom <= 0.0:
        raise ValueError("both map and mask are empty")
    dice = 2.0 * float((m * t).sum()) / denom
    return float(np.log(np.cosh(1.0 - dice)))


def saliency_ratio(saliency, lower_bound: float = DEFAULT_LOWER_BOUND) -> float:
    """Fraction of total saliency mass inside the focus area.

    A model-free visual-noise measure: 1.0 means every unit of saliency sits
    at or above the lower_bound percentile value.
    """
    m = np.asarray(saliency, dtype=np.float64)
    total = float(m.sum())
    if total <= 0.0:
        raise ValueError("saliency map has no positive mass")
    areas = focus_noise_split(m, lower_bound)
    return float(m[areas.focus].sum()) / total
