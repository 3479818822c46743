"""Gradient attribution methods: collection, interpretation, aggregation.

Every method here follows the same three-step shape: perturb the input n
times, take the class-score gradient at each perturbed input, then interpret
(sign handling) and aggregate the stack into one 2-D map. The guided
absolute-gradient method additionally weights the aggregated magnitudes by a
variance-derived guide before the final normalization:

    guide = 1 where the per-pixel variance of the signed gradients reaches
    the p-th percentile, the raw variance elsewhere;
    output = normalize(sum_i |grad_i| * guide).

Method ids are stable strings: vg, sg, vargrad, ag, gag, ig, blurig, with
variant suffixes (+, -, a, g, ga) and the reversal suffix .rev, e.g. "sg+",
"igga", "gag.rev".

Variant semantics: +, - and a replace the gradient interpretation (positive
part, magnitude of the negative part, absolute value); g multiplies the
method's normalized output by the variance guide and renormalizes; ga runs
the guided pipeline itself (absolute interpretation and guide applied before
the single final normalization), so "sgga" is bit-identical to "gag" under
the same modifier. All aggregation happens after per-channel interpretation
and channel reduction.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import channel_reduce, normalize_map, percentile_value
from .models import CAP_INPUT_GRADIENT, CapabilityError, ClassifierAdapter
from .modify import ModifierSpec, apply_modifier

METHOD_IDS = ("vg", "sg", "vargrad", "ag", "gag", "ig", "blurig")
VARIANTS = ("", "+", "-", "a", "g", "ga")
INTERPRETATIONS = ("signed", "positive", "negative", "absolute")

# Ids held for methods that need model internals beyond input gradients.
RESERVED_METHOD_IDS = {
    "gb": "rectified_backprop",
    "guidedig": "adaptive path selection",
    "gradcam": "feature_map_access",
}

_DEFAULT_INTERPRETATION = {
    "vg": "signed",
    "sg": "signed",
    "vargrad": "signed",
    "ag": "absolute",
    "gag": "absolute",
    "ig": "signed",
    "blurig": "signed",
}

_DEFAULT_MODIFIER_KIND = {
    "sg": "gaussian_noise",
    "vargrad": "gaussian_noise",
    "ag": "gaussian_noise",
    "gag": "gaussian_noise",
    "ig": "linear_path",
    "blurig": "blur_path",
}

_VARIANT_INTERPRETATION = {"+": "positive", "-": "negative", "a": "absolute", "ga": "absolute"}

__all__ = [
    "METHOD_IDS",
    "RESERVED_METHOD_IDS",
    "VARIANTS",
    "MethodConfig",
    "ReversalParams",
    "aggregate_mean",
    "aggregate_variance",
    "collect_gradients",
    "guided_absolute_grad",
    "integrated_gradients",
    "interpret",
    "parse_method_id",
    "reduce_stack",
    "reversed_variant",
    "run_method",
    "variance_guide",
]


@dataclass(frozen=True)
class ReversalParams:
    """Rank bands for the reversed-map transform.

    The bottom band covers ascending-rank quantiles [0, m); the swap band
    covers [100-l-m, 100-l). The top l percent is retained untouched, so the
    bands can never overlap when l + 2m <= 100.
    """

    l: float
    m: float

    def __post_init__(self):
        if self.l < 0 or self.m <= 0 or self.l + 2 * self.m > 100:
            raise ValueError(
                f"invalid reversal params l={self.l}, m={self.m}: "
                "need l >= 0, m > 0, l + 2m <= 100"
            )


@dataclass(frozen=True)
class MethodConfig:
    """Everything needed to reproduce one attribution map.

    n is the modification count; left unset it falls back to the explicit
    modifier's n, or 20. An explicit n wins over a conflicting modifier. p
    is the guide percentile; interpretation overrides the method default;
    modifier overrides the method's default modification family. reversal,
    when set, appends the .rev transform to the pipeline and the method id.
    """

    method: str
    n: int | None = None
    p: float = 85.0
    interpretation: str | None = None
    variant: str = ""
    modifier: ModifierSpec | None = None
    channel_mode: str = "mean"
    reversal: tuple[float, float] | None = None

    def __post_init__(self):
        if self.method in RESERVED_METHOD_IDS:
            raise ValueError(
                f"method id {self.method!r} is reserved but unimplemented "
                f"(needs {RESERVED_METHOD_IDS[self.method]})"
            )
        if self.method not in METHOD_IDS:
            raise ValueError(f"unknown method id {self.method!r}")
        if self.n is not None and self.n < 1:
            raise ValueError("modification count n must be >= 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.method == "gag" and self.variant:
            raise ValueError("gag does not take variant suffixes")
        if self.interpretation is not None and self.interpretation not in INTERPRETATIONS:
            raise ValueError(f"unknown interpretation {self.interpretation!r}")
        if self.method == "gag" and self.interpretation not in (None, "absolute"):
            raise ValueError("gag requires absolute interpretation")
        if not 0 <= self.p <= 100:
            raise ValueError(f"guide percentile out of range: {self.p}")
        if self.reversal is not None:
            ReversalParams(*self.reversal)

    @property
    def method_id(self) -> str:
        base = self.method + self.variant
        return base + ".rev" if self.reversal is not None else base

    @property
    def resolved_n(self) -> int:
        if self.n is not None:
            return self.n
        if self.modifier is not None:
            return self.modifier.n
        return 20

    def effective_modifier(self, seed: int = 0) -> ModifierSpec | None:
        """Resolve the modifier, building the method default when unset."""
        n = self.resolved_n
        if self.modifier is not None:
            mod = self.modifier
            return replace(mod, n=n) if mod.n != n else mod
        kind = _DEFAULT_MODIFIER_KIND.get(self.method)
        if kind is None:
            return None
        return ModifierSpec(kind=kind, n=n, seed=seed)

    def effective_interpretation(self) -> str:
        if self.variant in _VARIANT_INTERPRETATION:
            return _VARIANT_INTERPRETATION[self.variant]
        if self.interpretation is not None:
            return self.interpretation
        return _DEFAULT_INTERPRETATION[self.method]

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "n": self.resolved_n,
            "p": self.p,
            "interpretation": self.interpretation,
            "variant": self.variant,
            "modifier": None if self.modifier is None else self.modifier.to_dict(),
            "channel_mode": self.channel_mode,
            "reversal": None if self.reversal is None else list(self.reversal),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MethodConfig":
        mod = d.get("modifier")
        rev = d.get("reversal")
        n = d.get("n")
        return cls(
            method=d["method"],
            n=None if n is None else int(n),
            p=float(d.get("p", 85.0)),
            interpretation=d.get("interpretation"),
            variant=d.get("variant", ""),
            modifier=None if mod is None else ModifierSpec.from_dict(mod),
            channel_mode=d.get("channel_mode", "mean"),
            reversal=None if rev is None else (float(rev[0]), float(rev[1])),
        )


def parse_method_id(method_id: str) -> tuple[str, str, bool]:
    """Split an id like 'sgga' or 'ig+.rev' into (method, variant, reversed)."""
    reversed_flag = method_id.endswith(".rev")
    stem = method_id[:-4] if reversed_flag else method_id
    for base in sorted(METHOD_IDS, key=len, reverse=True):
        if stem.startswith(base) and stem[len(base) :] in VARIANTS:
            return base, stem[len(base) :], reversed_flag
    if stem in RESERVED_METHOD_IDS:
        raise ValueError(
            f"method id {stem!r} is reserved but unimplemented "
            f"(needs {RESERVED_METHOD_IDS[stem]})"
        )
    raise ValueError(f"unparseable method id {method_id!r}")


def collect_gradients(
    model: ClassifierAdapter, x, c: int, modifier: ModifierSpec | None, n: int | None = None
) -> np.ndarray:
    """Stack of signed input gradients, one per modified input, shape (n, C, H, W).

    A None modifier means a single gradient pass on the unmodified input.
    """
    if CAP_INPUT_GRADIENT not in model.capabilities:
        raise CapabilityError("gradients unsupported")
    arr = np.asarray(x, dtype=np.float64)
    if modifier is None:
        return np.stack([model.input_gradient(arr, c)])
    if n is not None and n != modifier.n:
        modifier = replace(modifier, n=n)
    return np.stack(
        [model.input_gradient(apply_modifier(arr, modifier, i), c) for i in range(1, modifier.n + 1)]
    )


def interpret(stack, mode: str) -> np.ndarray:
    """Sign handling: signed (identity), positive, negative (its magnitude), absolute."""
    arr = np.asarray(stack, dtype=np.float64)
    if mode == "signed":
        return arr
    if mode == "positive":
        return np.maximum(arr, 0.0)
    if mode == "negative":
        return np.maximum(-arr, 0.0)
    if mode == "absolute":
        return np.abs(arr)
    raise ValueError(f"unknown interpretation mode {mode!r}")


def reduce_stack(stack, channel_mode: str = "mean") -> np.ndarray:
    """(n, C, H, W) -> (n, H, W) by per-entry channel reduction."""
    arr = np.asarray(stack, dtype=np.float64)
    if arr.ndim == 3:
        return arr
    if arr.ndim != 4:
        raise ValueError(f"expected (n, C, H, W) stack, got shape {arr.shape}")
    if channel_mode == "mean":
        return arr.mean(axis=1)
    if channel_mode == "max":
        return arr.max(axis=1)
    raise ValueError(f"unknown channel reduction mode: {channel_mode!r}")


def aggregate_mean(stack) -> np.ndarray:
    """Element-wise mean over a channel-reduced stack."""
    arr = np.asarray(stack, dtype=np.float64)
    return arr.mean(axis=0)


def aggregate_variance(stack) -> np.ndarray:
    """Element-wise sample variance (denominator n - 1) over a stack."""
    arr = np.asarray(stack, dtype=np.float64)
    if arr.shape[0] < 2:
        raise ValueError("variance needs n >= 2")
    return arr.var(axis=0, ddof=1)


def variance_guide(stack, p: float, channel_mode: str = "mean") -> np.ndarray:
    """Variance-based gate from a SIGNED gradient stack.

    Pixels whose gradient variance reaches the p-th percentile get weight
    exactly 1; the rest keep their raw variance. p = 0 yields an all-ones
    guide, which turns the guided method into plain absolute-gradient
    aggregation.
    """
    v = aggregate_variance(reduce_stack(stack, channel_mode))
    return np.where(v >= percentile_value(v, p), 1.0, v)


def _guide_or_ones(stack, p: float, channel_mode: str) -> np.ndarray:
    """Variance guide, except p = 0 disables it (all-ones) without needing n >= 2.

    For n >= 2 the two paths agree exactly: every variance is >= the 0th
    percentile, so the guide is all ones either way.
    """
    if p == 0:
        reduced = reduce_stack(stack, channel_mode)
        return np.ones(reduced.shape[1:], dtype=np.float64)
    return variance_guide(stack, p, channel_mode)


def _guided_from_stack(stack, p: float, channel_mode: str) -> np.ndarray:
    """Shared guided pipeline: normalize(sum|grads| * guide). Single normalize."""
    guide = _guide_or_ones(stack, p, channel_mode)
    accumulated = reduce_stack(np.abs(np.asarray(stack, dtype=np.float64)), channel_mode).sum(axis=0)
    return normalize_map(accumulated * guide)


def guided_absolute_grad(model: ClassifierAdapter, x, c: int, config: MethodConfig, seed: int = 0) -> np.ndarray:
    """Guided absolute-gradient attribution, normalized to [0, 1]."""
    if config.method != "gag":
        raise ValueError(f"expected a gag config, got {config.method!r}")
    stack = collect_gradients(model, x, c, config.effective_modifier(seed))
    return _guided_from_stack(stack, config.p, config.channel_mode)


def _ig_stack(model: ClassifierAdapter, x, c: int, modifier: ModifierSpec) -> np.ndarray:
    """Path gradients at midpoint fractions (i - 1/2) / n along the straight path.

    Midpoint sampling integrates exactly when the gradient is linear along
    the path, so completeness holds to second order in 1/n; endpoint rules
    leave a first-order bias.
    """
    if CAP_INPUT_GRADIENT not in model.capabilities:
        raise CapabilityError("gradients unsupported")
    arr = np.asarray(x, dtype=np.float64)
    base = np.asarray(modifier.baseline, dtype=np.float64)
    if base.ndim == 0:
        base = np.full_like(arr, float(base))
    if base.shape != arr.shape:
        raise ValueError(f"baseline shape {base.shape} does not match image {arr.shape}")
    n = modifier.n
    return np.stack(
        [model.input_gradient(base + ((i - 0.5) / n) * (arr - base), c) for i in range(1, n + 1)]
    )


def integrated_gradients(
    model: ClassifierAdapter, x, c: int, baseline=0.0, n: int = 20, channel_mode: str = "mean"
) -> np.ndarray:
    """Path-integral attribution (x - baseline) * mean of path gradients.

    The returned map is channel-reduced but NOT normalized, so the
    completeness identity sum(attributions) ~ f_c(x) - f_c(baseline) holds
    for single-channel inputs.
    """
    spec = ModifierSpec(kind="linear_path", n=n, baseline=baseline)
    stack = _ig_stack(model, x, c, spec)
    return _ig_raw_map(stack, x, spec, "signed", channel_mode)


def _ig_raw_map(stack, x, modifier: ModifierSpec, interpretation: str, channel_mode: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    base = np.asarray(modifier.baseline, dtype=np.float64)
    if base.ndim == 0:
        base = np.full_like(arr, float(base))
    mean_grads = aggregate_mean(interpret(stack, interpretation))
    return channel_reduce((arr - base) * mean_grads, channel_mode)


def _raw_map(method: str, stack, x, modifier, interpretation: str, channel_mode: str) -> np.ndarray:
    if method == "ig":
        return _ig_raw_map(stack, x, modifier, interpretation, channel_mode)
    reduced = reduce_stack(interpret(stack, interpretation), channel_mode)
    if method == "vargrad":
        return aggregate_variance(reduced)
    return aggregate_mean(reduced)


def run_method(model: ClassifierAdapter, x, c: int, config: MethodConfig, seed: int = 0) -> np.ndarray:
    """Run a configured attribution method; returns a normalized 2-D map."""
    modifier = config.effective_modifier(seed)
    if config.method == "ig":
        stack = _ig_stack(model, x, c, modifier)
    else:
        stack = collect_gradients(model, x, c, modifier)
    interpretation = config.effective_interpretation()

    if config.method == "gag" or config.variant == "ga":
        if config.method == "ig":
            raw = _ig_raw_map(stack, x, modifier, "absolute", config.channel_mode)
            out = normalize_map(raw * _guide_or_ones(stack, config.p, config.channel_mode))
        else:
            out = _guided_from_stack(stack, config.p, config.channel_mode)
    else:
        raw = _raw_map(config.method, stack, x, modifier, interpretation, config.channel_mode)
        if config.variant == "g":
            out = normalize_map(
                normalize_map(raw) * _guide_or_ones(stack, config.p, config.channel_mode)
            )
        else:
            out = normalize_map(raw)

    if config.reversal is not None:
        out = reversed_variant(out, ReversalParams(*config.reversal))
    return out


def _band_bound(pct: float, n: int) -> int:
    """floor(pct/100 * n), exact for integral pct."""
    if float(pct).is_integer():
        return (int(pct) * n) // 100
    return int(np.floor(pct * n / 100.0 + 1e-12))


def reversed_variant(values, params: ReversalParams) -> np.ndarray:
    """Swap the lowest-rank value band with the band just under the retained top.

    Pixels are ranked ascending (ties broken by flat index); the i-th
    smallest value in the bottom band [0, m) exchanges positions with the
    i-th smallest in [100-l-m, 100-l). The top l percent and the middle are
    untouched, the value multiset is preserved exactly, and applying the
    transform twice restores the input.
    """
    arr = np.asarray(values, dtype=np.float64)
    flat = arr.ravel().copy()
    n = flat.size
    order = np.argsort(flat, kind="stable")
    hi_a = _band_bound(params.m, n)
    lo_b = _band_bound(100.0 - params.l - params.m, n)
    hi_b = _band_bound(100.0 - params.l, n)
    band_a = order[0:hi_a]
    band_b = order[lo_b:hi_b]
    size = min(band_a.size, band_b.size)
    band_a = band_a[:size]
    band_b = band_b[:size]
    if size:
        tmp = flat[band_a].copy()
        flat[band_a] = flat[band_b]
        flat[band_b] = tmp
    return flat.reshape(arr.shape)
