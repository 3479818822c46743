"""Synthetic Gaussian saliency suite for validating metric behaviour.

Four maps over one image: m1 is a tight Gaussian on the ground-truth center,
m2 the same center with a wider spread (noisier), m3 the tight spread moved
30% of the width and height toward the lower right (off target), and m4 the
wide spread at m3's center (worst). The ground truth is a centered square
holding ~20% of the pixels.

Because m1/m2 share a center they have identical pixel rank orders, so any
rank-only metric scores them identically, while the recover-and-predict
score separates them through the mass ratios. m3/m4 pair the same way at
the offset center. The coverage-oracle model makes the confidence term equal
ground-truth coverage exactly, so every check here is deterministic and
model-free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import is_normalized, normalize_map
from .methods import ReversalParams, reversed_variant
from .metrics import RcapResult, dauc, iauc, rcap
from .models import ClassifierAdapter, CoverageOracleModel

MAP_NAMES = ("m1", "m2", "m3", "m4")

__all__ = [
    "MAP_NAMES",
    "PropositionReport",
    "ReversalReport",
    "SyntheticSuite",
    "build_suite",
    "check_propositions",
    "gaussian_saliency",
    "reversed_validation",
]


def gaussian_saliency(width: int, height: int, center: tuple[float, float], std: float) -> np.ndarray:
    """Normalized radial Gaussian map; center is (cx, cy) in pixel coordinates."""
    if std <= 0:
        raise ValueError("std must be positive")
    cx, cy = center
    ys = np.arange(height, dtype=np.float64)[:, None]
    xs = np.arange(width, dtype=np.float64)[None, :]
    r2 = (xs - cx) ** 2 + (ys - cy) ** 2
    return normalize_map(np.exp(-r2 / (2.0 * std * std)))


@dataclass(frozen=True)
class SyntheticSuite:
    """The four-map construction plus its ground-truth square."""

    width: int
    height: int
    gt: np.ndarray
    maps: dict[str, np.ndarray]
    params: dict[str, dict]


def _centered_square(width: int, height: int, area_fraction: float = 0.20) -> np.ndarray:
    side = int(round(np.sqrt(area_fraction * width * height)))
    side = max(1, min(side, width, height))
    top = (height - side) // 2
    left = (width - side) // 2
    mask = np.zeros((height, width), dtype=bool)
    mask[top : top + side, left : left + side] = True
    return mask


def build_suite(
    width: int = 100,
    height: int = 100,
    s1: float | None = None,
    s2: float | None = None,
) -> SyntheticSuite:
    """Construct the four-Gaussian suite; defaults s1 = 0.12*W, s2 = 0.30*W."""
    s1 = 0.12 * width if s1 is None else float(s1)
    s2 = 0.30 * width if s2 is None else float(s2)
    if not 0 < s1 < s2:
        raise ValueError(f"need 0 < s1 < s2, got s1={s1}, s2={s2}")
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    off = (cx + 0.3 * width, cy + 0.3 * height)
    params = {
        "m1": {"center": (cx, cy), "std": s1},
        "m2": {"center": (cx, cy), "std": s2},
        "m3": {"center": off, "std": s1},
        "m4": {"center": off, "std": s2},
    }
    maps = {
        name: gaussian_saliency(width, height, p["center"], p["std"])
        for name, p in params.items()
    }
    return SyntheticSuite(
        width=width,
        height=height,
        gt=_centered_square(width, height),
        maps=maps,
        params=params,
    )


def oracle_inputs(suite: SyntheticSuite) -> tuple[ClassifierAdapter, np.ndarray]:
    """Coverage-oracle model plus the all-ones probe image it scores."""
    model = CoverageOracleModel(suite.gt, baseline=0.0)
    probe = np.ones((1, suite.height, suite.width), dtype=np.float64)
    return model, probe


@dataclass(frozen=True)
class PropositionReport:
    """Metric values for all four maps plus the ordering checks they imply."""

    lower_bound: float
    interval: float
    rcap_scores: dict[str, float]
    dauc_scores: dict[str, float]
    iauc_scores: dict[str, float]
    orderings: dict[str, bool]
    margins: dict[str, float]

    def all_hold(self) -> bool:
        return all(self.orderings.values())

    def to_dict(self) -> dict:
        return {
            "lower_bound": self.lower_bound,
            "interval": self.interval,
            "rcap": self.rcap_scores,
            "dauc": self.dauc_scores,
            "iauc": self.iauc_scores,
            "orderings": self.orderings,
            "margins": self.margins,
        }


def check_propositions(
    suite: SyntheticSuite,
    lower_bound: float = 60.0,
    interval: float = 20.0,
    curve_steps: int = 100,
    min_gap: float = 1e-6,
) -> PropositionReport:
    """Score all four maps with the coverage oracle and check the orderings.

    The tight on-target map must beat the wide one and the off-target ones
    on recover-and-predict, while deletion/insertion areas must be unable to
    tell rank-identical pairs apart.
    """
    model, probe = oracle_inputs(suite)
    rcap_scores = {
        name: rcap(model, probe, 0, m, 0.0, lower_bound, interval).score
        for name, m in suite.maps.items()
    }
    dauc_scores = {name: dauc(model, probe, 0, m, curve_steps, 0.0) for name, m in suite.maps.items()}
    iauc_scores = {name: iauc(model, probe, 0, m, curve_steps, 0.0) for name, m in suite.maps.items()}

    gaps = {
        "rcap_m1_gt_m2": rcap_scores["m1"] - rcap_scores["m2"],
        "rcap_m2_gt_m4": rcap_scores["m2"] - rcap_scores["m4"],
        "rcap_m1_gt_m3": rcap_scores["m1"] - rcap_scores["m3"],
        "rcap_m3_gt_m4": rcap_scores["m3"] - rcap_scores["m4"],
    }
    orderings = {name: gap >= min_gap for name, gap in gaps.items()}
    rank_gaps = {
        "dauc_m1_eq_m2": abs(dauc_scores["m1"] - dauc_scores["m2"]),
        "iauc_m1_eq_m2": abs(iauc_scores["m1"] - iauc_scores["m2"]),
        "dauc_m3_eq_m4": abs(dauc_scores["m3"] - dauc_scores["m4"]),
        "iauc_m3_eq_m4": abs(iauc_scores["m3"] - iauc_scores["m4"]),
    }
    for name, gap in rank_gaps.items():
        orderings[name] = gap < 1e-9
    return PropositionReport(
        lower_bound=lower_bound,
        interval=interval,
        rcap_scores=rcap_scores,
        dauc_scores=dauc_scores,
        iauc_scores=iauc_scores,
        orderings=orderings,
        margins={**gaps, **rank_gaps},
    )


@dataclass(frozen=True)
class ReversalReport:
    """Recover-and-predict before/after the rank-band reversal."""

    original: RcapResult
    reversed: RcapResult
    delta: float
    confidence_drops: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "original_score": self.original.score,
            "reversed_score": self.reversed.score,
            "delta": self.delta,
            "confidence_drops": list(self.confidence_drops),
        }


def reversed_validation(
    saliency,
    model: ClassifierAdapter,
    x,
    c: int,
    l: float = 20.0,
    m: float = 30.0,
    lower_bound: float = 60.0,
    interval: float = 10.0,
    baseline=0.0,
) -> ReversalReport:
    """Compare a map against its reversed variant under the same partitions."""
    arr = np.asarray(saliency, dtype=np.float64)
    if not is_normalized(arr):
        raise ValueError("reversed validation expects a normalized map")
    original = rcap(model, x, c, arr, baseline, lower_bound, interval)
    flipped = reversed_variant(arr, ReversalParams(l, m))
    flipped_res = rcap(model, x, c, flipped, baseline, lower_bound, interval)
    drops = tuple(
        o - r for o, r in zip(original.confidences, flipped_res.confidences)
    )
    return ReversalReport(
        original=original,
        reversed=flipped_res,
        delta=original.score - flipped_res.score,
        confidence_drops=drops,
    )
