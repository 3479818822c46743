"""Array-level saliency primitives: percentiles, normalization, masks, partitions.

All saliency maps are plain 2-D float arrays. A map is "normalized" when its
values lie in [0, 1] with min exactly 0 and max exactly 1; every attribution
method in this package returns maps in that form.

Percentile convention
---------------------
Percentiles are nearest-rank order statistics with no interpolation: the q-th
percentile of N sorted values is the element at 1-based index
``max(1, ceil(q/100 * N))``, and ``q = 0`` returns the minimum. Threshold
membership is inclusive (``value >= threshold``), so ties can push a mask
above its nominal pixel fraction. Returned thresholds are always values that
occur in the map, which keeps masks reproducible across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AreaMasks",
    "PartitionScheme",
    "build_partitions",
    "channel_reduce",
    "focus_noise_split",
    "is_normalized",
    "nearest_rank",
    "normalize_map",
    "partition_count",
    "percentile_value",
    "threshold_mask",
]


def _as_finite_array(values, name: str = "map") -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def nearest_rank(q: float, n: int) -> int:
    """1-based nearest-rank index of the q-th percentile among n sorted values.

    Computed as ``max(1, ceil(q/100 * n))``, with exact integer arithmetic for
    integral q so that grid points like q=60, n=10 never fall victim to
    floating-point round-off.
    """
    if not 0 <= q <= 100:
        raise ValueError(f"percentile out of range: {q}")
    if n < 1:
        raise ValueError("empty value set")
    if q == 0:
        return 1
    if float(q).is_integer():
        rank = -((-int(q) * n) // 100)  # ceil division
    else:
        rank = math.ceil(q * n / 100.0 - 1e-12)
    return min(max(rank, 1), n)


def percentile_value(values, q: float) -> float:
    """Nearest-rank q-th percentile of a value multiset.

    Raises ValueError on an empty input.
    """
    arr = _as_finite_array(values, "values").ravel()
    if arr.size == 0:
        raise ValueError("empty value set")
    order = np.sort(arr)
    return float(order[nearest_rank(q, arr.size) - 1])


def normalize_map(values) -> np.ndarray:
    """Affinely rescale a map to [0, 1] with min -> 0 and max -> 1.

    A constant map cannot be normalized (and would break every ratio-based
    metric downstream), so it raises instead of silently returning zeros.
    """
    arr = _as_finite_array(values)
    lo = float(arr.min())
    hi = float(arr.max())
    if hi == lo:
        raise ValueError("degenerate constant map")
    return (arr - lo) / (hi - lo)


def is_normalized(values) -> bool:
    """True when all values are in [0, 1] and at least one value is positive."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        return False
    return bool(arr.min() >= 0.0 and arr.max() <= 1.0 and arr.max() > 0.0)


def threshold_mask(values, t: float) -> np.ndarray:
    """Boolean mask of pixels whose saliency is >= t (ties included)."""
    arr = _as_finite_array(values)
    return arr >= t


@dataclass(frozen=True)
class PartitionScheme:
    """Percentile thresholds cutting a map into nested top-value sets.

    ``thresholds[k-1]`` is the (100 - k*interval)-th percentile value for
    k = 1..j, so thresholds are non-increasing and each one admits a superset
    of the pixels admitted by the previous.
    """

    lower_bound: float
    interval: float
    thresholds: tuple[float, ...]

    @property
    def j(self) -> int:
        return len(self.thresholds)

    def percentile_ranks(self) -> tuple[float, ...]:
        return tuple(100.0 - (k + 1) * self.interval for k in range(self.j))


def partition_count(lower_bound: float, interval: float) -> int:
    """Number of partitions j = (100 - lower_bound) / interval, validated."""
    if not 0 <= lower_bound < 100:
        raise ValueError("invalid partition grid: lower_bound must be in [0, 100)")
    if interval <= 0:
        raise ValueError("invalid partition grid: interval must be positive")
    j = (100.0 - lower_bound) / interval
    if abs(j - round(j)) > 1e-9 or round(j) < 1:
        raise ValueError(
            f"invalid partition grid: interval {interval} does not divide "
            f"{100.0 - lower_bound} evenly"
        )
    return int(round(j))


def build_partitions(values, lower_bound: float, interval: float) -> PartitionScheme:
    """Build the percentile partition scheme for a normalized map."""
    j = partition_count(lower_bound, interval)
    arr = _as_finite_array(values).ravel()
    if arr.size == 0:
        raise ValueError("empty value set")
    order = np.sort(arr)
    thresholds = tuple(
        float(order[nearest_rank(100.0 - (k + 1) * interval, arr.size) - 1])
        for k in range(j)
    )
    return PartitionScheme(lower_bound=lower_bound, interval=interval, thresholds=thresholds)


@dataclass(frozen=True)
class AreaMasks:
    """Focus/noise area split, optionally joined by a ground-truth split.

    Focus and noise are disjoint and jointly cover every pixel. When present,
    ground_truth and background partition the image the same way.
    """

    focus: np.ndarray
    noise: np.ndarray
    ground_truth: np.ndarray | None = None
    background: np.ndarray | None = None


def focus_noise_split(values, lower_bound: float, ground_truth=None) -> AreaMasks:
    """Split a map into its focus area (top values) and noise area (the rest).

    The focus area holds pixels at or above the lower_bound percentile value;
    with lower_bound = 60 that is nominally the top 40% of pixels (ties and
    the inclusive rank can push the fraction slightly above nominal).
    """
    arr = _as_finite_array(values)
    cut = percentile_value(arr, lower_bound)
    focus = arr >= cut
    gt = None
    bg = None
    if ground_truth is not None:
        gt = np.asarray(ground_truth, dtype=bool)
        if gt.shape != arr.shape:
            raise ValueError("ground-truth mask shape does not match map shape")
        bg = ~gt
    return AreaMasks(focus=focus, noise=~focus, ground_truth=gt, background=bg)


def channel_reduce(grad, mode: str = "mean") -> np.ndarray:
    """Collapse a (C, H, W) per-channel grid to a 2-D map.

    2-D inputs pass through unchanged. Sign handling (absolute value etc.)
    must happen before this reduction so magnitudes are taken per channel.
    """
    arr = _as_finite_array(grad, "gradient")
    if arr.ndim == 2:
        return arr
    if arr.ndim != 3:
        raise ValueError(f"expected (C, H, W) or (H, W) input, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise ValueError("need at least one channel")
    if mode == "mean":
        return arr.mean(axis=0)
    if mode == "max":
        return arr.max(axis=0)
    raise ValueError(f"unknown channel reduction mode: {mode!r}")
