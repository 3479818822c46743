"""Config-driven evaluation harness: manifests, caching, reports, ratios.

A run is described by one JSON config file::

    {
      "adapter":  {"id": "tiny_cnn", "params": {}},
      "dataset":  "manifest.json",          # relative to the config file
      "cache_dir": "cache",
      "seed": 0,
      "methods": [{"method": "gag", "n": 20, "p": 85.0}, ...],
      "metrics": {
        "ids": ["rcap", "dauc", "iauc", "mae", "lcdice", "sratio"],
        "lower_bound": 60.0, "interval": 10.0,
        "steps": 100, "baseline": 0.0
      }
    }

The dataset manifest lists entries ``{"id", "image", "mask"?, "class_index"}``
with paths relative to the manifest, plus an optional ``preprocess`` block
``{"resize": [H, W], "value_range": [lo, hi]}``. Masks are binarized at 0.5.

Saliency maps are cached one file per (image, method) pair, keyed by a hash
of every semantic input (image id, method id, full method config, adapter
id, seed), so reruns reuse work and any config change recomputes. Metric
evaluation always reads maps back from the cache files, which makes repeated
runs byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image

from . import arrayio
from .core import focus_noise_split, partition_count
from .methods import MethodConfig, run_method
from .metrics import (
    DEFAULT_CURVE_STEPS,
    DEFAULT_INTERVAL,
    DEFAULT_LOWER_BOUND,
    METRIC_DIRECTIONS,
    METRIC_IDS,
    dauc,
    iauc,
    log_cosh_dice,
    mae,
    rcap,
    saliency_ratio,
)
from .models import ClassifierAdapter, create_adapter

__all__ = [
    "DatasetEntry",
    "DatasetManifest",
    "ExplainSummary",
    "LoadedSample",
    "MetricReport",
    "RunConfig",
    "cache_key",
    "cache_path",
    "emit_report",
    "improvement_ratio_table",
    "improvement_ratios",
    "load_dataset",
    "run_evaluate",
    "run_explain",
]


@dataclass(frozen=True)
class DatasetEntry:
    id: str
    image: Path
    mask: Path | None
    class_index: int


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[DatasetEntry, ...]
    resize: tuple[int, int] | None = None
    value_range: tuple[float, float] = (0.0, 1.0)

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        path = Path(path)
        raw = json.loads(path.read_text(encoding="utf-8"))
        pre = raw.get("preprocess", {})
        resize = pre.get("resize")
        value_range = tuple(pre.get("value_range", (0.0, 1.0)))
        entries = []
        for pos, e in enumerate(raw.get("entries", [])):
            entry_id = e.get("id", f"entry_{pos:04d}")
            image = path.parent / e["image"]
            if not image.exists():
                raise FileNotFoundError(f"dataset entry {entry_id!r}: missing image {image}")
            mask = None
            if e.get("mask") is not None:
                mask = path.parent / e["mask"]
                if not mask.exists():
                    raise FileNotFoundError(f"dataset entry {entry_id!r}: missing mask {mask}")
            entries.append(
                DatasetEntry(id=entry_id, image=image, mask=mask, class_index=int(e["class_index"]))
            )
        return cls(
            entries=tuple(entries),
            resize=None if resize is None else (int(resize[0]), int(resize[1])),
            value_range=(float(value_range[0]), float(value_range[1])),
        )


@dataclass(frozen=True)
class LoadedSample:
    id: str
    image: np.ndarray
    mask: np.ndarray | None
    class_index: int


def _load_image(path: Path, resize) -> np.ndarray:
    img = Image.open(path)
    if img.mode not in ("L", "RGB"):
        img = img.convert("RGB") if len(img.getbands()) >= 3 else img.convert("L")
    if resize is not None:
        img = img.resize((resize[1], resize[0]), Image.BILINEAR)
    arr = np.asarray(img, dtype=np.float64) / 255.0
    if arr.ndim == 2:
        return arr[None, :, :]
    return np.moveaxis(arr, -1, 0)


def _load_mask(path: Path, resize) -> np.ndarray:
    img = Image.open(path).convert("L")
    if resize is not None:
        img = img.resize((resize[1], resize[0]), Image.NEAREST)
    return (np.asarray(img, dtype=np.float64) / 255.0) >= 0.5


def load_dataset(manifest: DatasetManifest):
    """Yield LoadedSamples in manifest order, preprocessing applied."""
    lo, hi = manifest.value_range
    for entry in manifest.entries:
        image = _load_image(entry.image, manifest.resize)
        if (lo, hi) != (0.0, 1.0):
            image = image * (hi - lo) + lo
        mask = None
        if entry.mask is not None:
            mask = _load_mask(entry.mask, manifest.resize)
            if mask.shape != image.shape[-2:]:
                raise ValueError(
                    f"dataset entry {entry.id!r}: mask shape {mask.shape} does not match "
                    f"image plane {image.shape[-2:]}"
                )
        yield LoadedSample(id=entry.id, image=image, mask=mask, class_index=entry.class_index)


@dataclass(frozen=True)
class RunConfig:
    adapter_id: str
    dataset: Path
    cache_dir: Path
    methods: tuple[MethodConfig, ...]
    metric_ids: tuple[str, ...] = METRIC_IDS
    adapter_params: dict = field(default_factory=dict)
    lower_bound: float = DEFAULT_LOWER_BOUND
    interval: float = DEFAULT_INTERVAL
    steps: int = DEFAULT_CURVE_STEPS
    baseline: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for mid in self.metric_ids:
            if mid not in METRIC_IDS:
                raise ValueError(f"unknown metric id {mid!r}; known: {METRIC_IDS}")
        seen: set[str] = set()
        for method in self.methods:
            if method.method_id in seen:
                raise ValueError(
                    f"duplicate method id {method.method_id!r}: one run cannot hold two "
                    "configs for the same id (report rows would collide); use separate "
                    "runs, the cache is shared"
                )
            seen.add(method.method_id)
        if "rcap" in self.metric_ids or "sratio" in self.metric_ids:
            partition_count(self.lower_bound, self.interval)

    def to_dict(self) -> dict:
        return {
            "adapter": {"id": self.adapter_id, "params": self.adapter_params},
            "dataset": str(self.dataset),
            "cache_dir": str(self.cache_dir),
            "seed": self.seed,
            "methods": [m.to_dict() for m in self.methods],
            "metrics": {
                "ids": list(self.metric_ids),
                "lower_bound": self.lower_bound,
                "interval": self.interval,
                "steps": self.steps,
                "baseline": self.baseline,
            },
        }

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path | None = None) -> "RunConfig":
        base = Path(base_dir) if base_dir is not None else Path(".")
        adapter = raw.get("adapter", {})
        metrics = raw.get("metrics", {})
        return cls(
            adapter_id=adapter["id"],
            adapter_params=dict(adapter.get("params", {})),
            dataset=base / raw["dataset"],
            cache_dir=base / raw.get("cache_dir", "cache"),
            seed=int(raw.get("seed", 0)),
            methods=tuple(MethodConfig.from_dict(m) for m in raw.get("methods", [])),
            metric_ids=tuple(metrics.get("ids", METRIC_IDS)),
            lower_bound=float(metrics.get("lower_bound", DEFAULT_LOWER_BOUND)),
            interval=float(metrics.get("interval", DEFAULT_INTERVAL)),
            steps=int(metrics.get("steps", DEFAULT_CURVE_STEPS)),
            baseline=float(metrics.get("baseline", 0.0)),
        )

    @classmethod
    def load(cls, path) -> "RunConfig":
        """Read a config file; ABSGRAD_CACHE_DIR, when set, overrides cache_dir.

        The environment override is the only env-var configuration the
        harness honours.
        """
        path = Path(path)
        config = cls.from_dict(json.loads(path.read_text(encoding="utf-8")), path.parent)
        env_cache = os.environ.get("ABSGRAD_CACHE_DIR")
        if env_cache:
            config = replace(config, cache_dir=Path(env_cache))
        return config

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    def make_adapter(self) -> ClassifierAdapter:
        return create_adapter(self.adapter_id, **self.adapter_params)


def cache_key(
    image_id: str, method: MethodConfig, adapter_id: str, seed: int, adapter_params: dict | None = None
) -> str:
    """Hash of every input that determines a saliency map."""
    blob = json.dumps(
        {
            "image_id": image_id,
            "method_id": method.method_id,
            "config": method.to_dict(),
            "adapter_id": adapter_id,
            "adapter_params": adapter_params or {},
            "seed": seed,
        },
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def cache_path(
    cache_dir,
    image_id: str,
    method: MethodConfig,
    adapter_id: str,
    seed: int,
    adapter_params: dict | None = None,
) -> Path:
    key = cache_key(image_id, method, adapter_id, seed, adapter_params)
    return Path(cache_dir) / f"{image_id}__{method.method_id}__{key[:16]}.f32"


def _config_cache_path(config: RunConfig, image_id: str, method: MethodConfig) -> Path:
    return cache_path(
        config.cache_dir, image_id, method, config.adapter_id, config.seed, config.adapter_params
    )


@dataclass
class ExplainSummary:
    computed: int = 0
    reused: int = 0
    failed: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"computed": self.computed, "reused": self.reused, "failed": self.failed}


def run_explain(config: RunConfig) -> ExplainSummary:
    """Populate the saliency cache for every (image, method) pair."""
    manifest = DatasetManifest.load(config.dataset)
    model = config.make_adapter()
    Path(config.cache_dir).mkdir(parents=True, exist_ok=True)
    summary = ExplainSummary()
    for sample in load_dataset(manifest):
        for method in config.methods:
            target = _config_cache_path(config, sample.id, method)
            if target.exists():
                summary.reused += 1
                continue
            try:
                saliency = run_method(model, sample.image, sample.class_index, method, config.seed)
            except Exception as exc:  # record and keep going
                summary.failed.append([sample.id, method.method_id, str(exc)])
                continue
            arrayio.save_map(target, saliency, normalized=True)
            summary.computed += 1
    return summary


@dataclass
class MetricReport:
    """Per-image metric values plus per-method arithmetic means."""

    per_image: dict
    means: dict
    directions: dict
    missing: list = field(default_factory=list)

    def methods(self) -> list[str]:
        return sorted(self.per_image)

    def metric_ids(self) -> list[str]:
        ids: set[str] = set()
        for images in self.per_image.values():
            for values in images.values():
                ids.update(values)
        return sorted(ids)

    def to_dict(self) -> dict:
        best = {}
        for metric, direction in sorted(self.directions.items()):
            scored = [
                (vals[metric], method)
                for method, vals in self.means.items()
                if metric in vals
            ]
            if scored:
                pick = min(scored) if direction == "lower" else max(scored)
                best[metric] = pick[1]
        return {
            "directions": self.directions,
            "best": best,
            "means": self.means,
            "per_image": self.per_image,
            "missing": self.missing,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "MetricReport":
        return cls(
            per_image=raw["per_image"],
            means=raw["means"],
            directions=raw["directions"],
            missing=raw.get("missing", []),
        )


def _evaluate_sample(model, sample: LoadedSample, saliency, config: RunConfig) -> dict:
    values: dict[str, float] = {}
    for metric in config.metric_ids:
        if metric == "rcap":
            values[metric] = rcap(
                model,
                sample.image,
                sample.class_index,
                saliency,
                config.baseline,
                config.lower_bound,
                config.interval,
            ).score
        elif metric == "dauc":
            values[metric] = dauc(
                model, sample.image, sample.class_index, saliency, config.steps, config.baseline
            )
        elif metric == "iauc":
            values[metric] = iauc(
                model, sample.image, sample.class_index, saliency, config.steps, config.baseline
            )
        elif metric == "sratio":
            values[metric] = saliency_ratio(saliency, config.lower_bound)
        elif metric in ("mae", "lcdice") and sample.mask is not None:
            fn = mae if metric == "mae" else log_cosh_dice
            values[metric] = fn(saliency, sample.mask)
    return values


def run_evaluate(config: RunConfig) -> MetricReport:
    """Score every cached (image, method) pair with the configured metrics.

    Missing cache entries are listed in the report and skipped; mask-less
    entries simply have no ground-truth metrics.
    """
    manifest = DatasetManifest.load(config.dataset)
    model = config.make_adapter()
    per_image: dict = {m.method_id: {} for m in config.methods}
    missing: list = []
    for sample in load_dataset(manifest):
        for method in config.methods:
            target = _config_cache_path(config, sample.id, method)
            if not target.exists():
                missing.append([sample.id, method.method_id])
                continue
            saliency, _ = arrayio.load_map(target)
            per_image[method.method_id][sample.id] = _evaluate_sample(
                model, sample, saliency, config
            )
    means: dict = {}
    for method_id, images in per_image.items():
        acc: dict[str, list[float]] = {}
        for values in images.values():
            for metric, value in values.items():
                acc.setdefault(metric, []).append(value)
        means[method_id] = {metric: float(np.mean(vals)) for metric, vals in sorted(acc.items())}
    directions = {m: METRIC_DIRECTIONS[m] for m in config.metric_ids}
    return MetricReport(per_image=per_image, means=means, directions=directions, missing=missing)


def improvement_ratios(
    report: MetricReport, base_method: str, variant_methods: list[str]
) -> dict:
    """Per-metric mean ratios variant/base; 1.0 means unchanged, None undefined."""
    if base_method not in report.means:
        raise KeyError(f"base method {base_method!r} not in report")
    base = report.means[base_method]
    table: dict = {}
    for variant in variant_methods:
        if variant not in report.means:
            raise KeyError(f"variant method {variant!r} not in report")
        row = {}
        for metric, base_value in base.items():
            if metric not in report.means[variant]:
                continue
            row[metric] = (
                None if base_value == 0.0 else report.means[variant][metric] / base_value
            )
        table[variant] = row
    return table


def improvement_ratio_table(
    report: MetricReport,
    base_methods: list[str],
    variant_suffixes: list[str] = ("+", "-", "a", "g", "ga"),
) -> dict:
    """Variant-suffix rows averaged across base methods (ablation-table shape).

    For each suffix, the ratio of every base method's suffixed variant to the
    base itself is computed per metric and averaged over the bases that have
    both entries. Undefined ratios (zero base mean) are dropped from the
    average; a suffix row with no defined ratios reports None.
    """
    table: dict = {}
    for suffix in variant_suffixes:
        acc: dict[str, list[float]] = {}
        for base in base_methods:
            variant = base + suffix
            if base not in report.means or variant not in report.means:
                continue
            ratios = improvement_ratios(report, base, [variant])[variant]
            for metric, ratio in ratios.items():
                if ratio is not None:
                    acc.setdefault(metric, []).append(ratio)
        table[suffix] = {metric: float(np.mean(vals)) for metric, vals in sorted(acc.items())}
    return table


def _float_cell(value) -> str:
    return "" if value is None else repr(float(value))


def report_csv_text(report: MetricReport) -> str:
    """One row per image per method, metric columns, deterministic order."""
    metric_ids = report.metric_ids()
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["image_id", "method"] + metric_ids)
    for method_id in report.methods():
        for image_id in sorted(report.per_image[method_id]):
            values = report.per_image[method_id][image_id]
            writer.writerow(
                [image_id, method_id] + [_float_cell(values.get(m)) for m in metric_ids]
            )
    return buf.getvalue()


def means_csv_text(report: MetricReport) -> str:
    metric_ids = report.metric_ids()
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method"] + metric_ids)
    for method_id in sorted(report.means):
        row = report.means[method_id]
        writer.writerow([method_id] + [_float_cell(row.get(m)) for m in metric_ids])
    return buf.getvalue()


def emit_report(
    report: MetricReport,
    out_dir,
    config: RunConfig | None = None,
    heatmaps: bool = False,
    colormap: str = "gray",
    heatmap_scale: int = 8,
) -> list[Path]:
    """Write report.csv, means.csv and report.json; optionally heatmap PNGs.

    Heatmaps need the run config to reload cached maps; each PNG dims the
    noise area and outlines the ground-truth mask when the dataset has one.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    csv_path = out / "report.csv"
    csv_path.write_text(report_csv_text(report), encoding="utf-8")
    written.append(csv_path)

    means_path = out / "means.csv"
    means_path.write_text(means_csv_text(report), encoding="utf-8")
    written.append(means_path)

    json_path = out / "report.json"
    json_path.write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    written.append(json_path)

    if heatmaps and config is not None:
        manifest = DatasetManifest.load(config.dataset)
        for sample in load_dataset(manifest):
            for method in config.methods:
                target = _config_cache_path(config, sample.id, method)
                if not target.exists():
                    continue
                saliency, _ = arrayio.load_map(target)
                areas = focus_noise_split(saliency, config.lower_bound)
                png = out / "heatmaps" / f"{sample.id}__{method.method_id}.png"
                arrayio.render_heatmap(
                    saliency,
                    png,
                    colormap=colormap,
                    focus_mask=areas.focus,
                    gt_mask=sample.mask,
                    scale=heatmap_scale,
                )
                written.append(png)
    return written
