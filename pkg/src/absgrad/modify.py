"""Input modification functions feeding the gradient methods.

Each modifier maps (image, spec, i) to the i-th perturbed input, i = 1..n,
deterministically: the Gaussian modifier draws from a generator seeded by
(seed, i), so the sequence is byte-identical across runs and independent of
call order. Linear and blur paths interpolate between the image and a
baseline (zeros, or maximal blur).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

MODIFIER_KINDS = ("gaussian_noise", "linear_path", "blur_path")

__all__ = [
    "MODIFIER_KINDS",
    "ModifierSpec",
    "apply_modifier",
    "blur_path_modifier",
    "gaussian_modifier",
    "linear_path_modifier",
]


@dataclass(frozen=True)
class ModifierSpec:
    """Configuration for one family of input modifications.

    sigma_fraction scales Gaussian noise by the input's value range;
    max_blur bounds the blur-path radius in pixels; baseline is the
    linear-path anchor (scalar or image-shaped, default black).
    """

    kind: str = "gaussian_noise"
    n: int = 20
    sigma_fraction: float = 0.15
    baseline: float = 0.0
    max_blur: float = 8.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODIFIER_KINDS:
            raise ValueError(f"unknown modifier kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("modification count n must be >= 1")
        if self.sigma_fraction < 0:
            raise ValueError("sigma_fraction must be non-negative")

    def to_dict(self) -> dict:
        base = self.baseline
        if isinstance(base, np.ndarray):
            base = base.tolist()
        return {
            "kind": self.kind,
            "n": self.n,
            "sigma_fraction": self.sigma_fraction,
            "baseline": base,
            "max_blur": self.max_blur,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModifierSpec":
        return cls(
            kind=d.get("kind", "gaussian_noise"),
            n=int(d.get("n", 20)),
            sigma_fraction=float(d.get("sigma_fraction", 0.15)),
            baseline=d.get("baseline", 0.0),
            max_blur=float(d.get("max_blur", 8.0)),
            seed=int(d.get("seed", 0)),
        )


def _check_index(spec: ModifierSpec, i: int) -> None:
    if not 1 <= i <= spec.n:
        raise ValueError(f"modification index {i} out of range [1, {spec.n}]")


def _baseline_like(x: np.ndarray, baseline) -> np.ndarray:
    base = np.asarray(baseline, dtype=np.float64)
    if base.ndim == 0:
        return np.full_like(x, float(base))
    if base.shape != x.shape:
        raise ValueError(f"baseline shape {base.shape} does not match image {x.shape}")
    return base


def gaussian_modifier(x, spec: ModifierSpec, i: int) -> np.ndarray:
    """Add zero-mean Gaussian noise with std sigma_fraction * range(x)."""
    _check_index(spec, i)
    arr = np.asarray(x, dtype=np.float64)
    sigma = spec.sigma_fraction * float(arr.max() - arr.min())
    if sigma == 0.0:
        return arr.copy()
    rng = np.random.default_rng([spec.seed, i])
    return arr + rng.normal(0.0, sigma, size=arr.shape)


def linear_path_modifier(x, spec: ModifierSpec, i: int) -> np.ndarray:
    """Point i/n along the straight path from the baseline to the image."""
    _check_index(spec, i)
    arr = np.asarray(x, dtype=np.float64)
    base = _baseline_like(arr, spec.baseline)
    return base + (i / spec.n) * (arr - base)


def blur_path_modifier(x, spec: ModifierSpec, i: int) -> np.ndarray:
    """Gaussian blur with radius max_blur * (n - i) / n; i = n is the image itself.

    Spatial axes only; truncated kernels with reflective padding, which
    preserves total mass.
    """
    _check_index(spec, i)
    arr = np.asarray(x, dtype=np.float64)
    radius = spec.max_blur * (spec.n - i) / spec.n
    if radius == 0.0:
        return arr.copy()
    sigma = (0.0, radius, radius) if arr.ndim == 3 else radius
    return ndimage.gaussian_filter(arr, sigma=sigma, mode="reflect")


_MODIFIER_FUNCS = {
    "gaussian_noise": gaussian_modifier,
    "linear_path": linear_path_modifier,
    "blur_path": blur_path_modifier,
}


def apply_modifier(x, spec: ModifierSpec, i: int) -> np.ndarray:
    """Dispatch to the modifier named by spec.kind."""
    return _MODIFIER_FUNCS[spec.kind](x, spec, i)
