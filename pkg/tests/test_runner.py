import json
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from absgrad import fixtures
from absgrad.methods import MethodConfig
from absgrad.modify import ModifierSpec
from absgrad.runner import (
    DatasetManifest,
    MetricReport,
    RunConfig,
    cache_key,
    cache_path,
    emit_report,
    improvement_ratio_table,
    improvement_ratios,
    load_dataset,
    run_evaluate,
    run_explain,
)


def write_subset_manifest(path: Path, count: int = 4, with_masks: bool = True) -> Path:
    """Manifest in a tmp dir pointing at packaged blob images by absolute path."""
    blob_root = fixtures.blob_manifest_path().parent
    source = json.loads(fixtures.blob_manifest_path().read_text())
    entries = []
    for e in source["entries"][:count]:
        entry = {
            "id": e["id"],
            "image": str(blob_root / e["image"]),
            "class_index": e["class_index"],
        }
        if with_masks:
            entry["mask"] = str(blob_root / e["mask"])
        entries.append(entry)
    manifest = {"preprocess": source["preprocess"], "entries": entries}
    path.write_text(json.dumps(manifest, indent=2))
    return path


def small_config(tmp_path: Path, methods=None, metric_ids=("rcap", "sratio"), **kwargs) -> RunConfig:
    manifest = write_subset_manifest(tmp_path / "manifest.json", **kwargs)
    return RunConfig(
        adapter_id="tiny_cnn",
        dataset=manifest,
        cache_dir=tmp_path / "cache",
        methods=methods or (MethodConfig(method="vg"), MethodConfig(method="gag", n=6)),
        metric_ids=metric_ids,
        steps=16,
    )


class TestManifest:
    def test_empty_manifest_yields_nothing(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"entries": []}))
        manifest = DatasetManifest.load(path)
        assert list(load_dataset(manifest)) == []

    def test_entries_in_listed_order(self, tmp_path):
        manifest = DatasetManifest.load(write_subset_manifest(tmp_path / "m.json", count=2))
        samples = list(load_dataset(manifest))
        assert [s.id for s in samples] == ["blob_000", "blob_001"]
        assert samples[0].image.shape == (1, 16, 16)
        assert samples[0].mask.dtype == bool

    def test_missing_image_reported_with_entry_id(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(
            json.dumps({"entries": [{"id": "ghost", "image": "nope.png", "class_index": 0}]})
        )
        with pytest.raises(FileNotFoundError, match="ghost"):
            DatasetManifest.load(path)

    def test_maskless_entries_supported(self, tmp_path):
        manifest = DatasetManifest.load(
            write_subset_manifest(tmp_path / "m.json", count=2, with_masks=False)
        )
        samples = list(load_dataset(manifest))
        assert all(s.mask is None for s in samples)

    def test_masks_binarized_at_half(self, tmp_path):
        from PIL import Image

        img = Image.fromarray(np.full((4, 4), 120, dtype=np.uint8), mode="L")
        img.save(tmp_path / "img.png")
        gray_mask = np.array([[100, 200], [127, 128]], dtype=np.uint8)
        Image.fromarray(np.repeat(np.repeat(gray_mask, 2, 0), 2, 1), mode="L").save(
            tmp_path / "mask.png"
        )
        (tmp_path / "m.json").write_text(
            json.dumps(
                {"entries": [{"id": "e0", "image": "img.png", "mask": "mask.png", "class_index": 0}]}
            )
        )
        sample = next(load_dataset(DatasetManifest.load(tmp_path / "m.json")))
        # 100/255 and 127/255 fall below 0.5; 200/255 and 128/255 land on or above
        np.testing.assert_array_equal(
            sample.mask[::2, ::2], np.array([[False, True], [False, True]])
        )

    def test_mask_dimension_mismatch_reports_entry_id(self, tmp_path):
        from PIL import Image

        Image.fromarray(np.zeros((4, 4), dtype=np.uint8), mode="L").save(tmp_path / "img.png")
        Image.fromarray(np.zeros((3, 3), dtype=np.uint8), mode="L").save(tmp_path / "mask.png")
        (tmp_path / "m.json").write_text(
            json.dumps(
                {"entries": [{"id": "odd", "image": "img.png", "mask": "mask.png", "class_index": 0}]}
            )
        )
        with pytest.raises(ValueError, match="odd"):
            list(load_dataset(DatasetManifest.load(tmp_path / "m.json")))


class TestRunConfig:
    def test_json_round_trip(self, tmp_path):
        config = small_config(tmp_path)
        config.save(tmp_path / "run.json")
        loaded = RunConfig.load(tmp_path / "run.json")
        assert loaded.to_dict() == config.to_dict()

    def test_unknown_method_rejected_at_load(self, tmp_path):
        config = small_config(tmp_path)
        raw = config.to_dict()
        raw["methods"][0]["method"] = "occlusion"
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(raw))
        with pytest.raises(ValueError, match="unknown method id"):
            RunConfig.load(path)

    def test_reserved_method_rejected_at_load(self, tmp_path):
        config = small_config(tmp_path)
        raw = config.to_dict()
        raw["methods"][0]["method"] = "gradcam"
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(raw))
        with pytest.raises(ValueError, match="reserved but unimplemented"):
            RunConfig.load(path)

    def test_unknown_metric_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="unknown metric id"):
            small_config(tmp_path, metric_ids=("rcap", "roar"))

    def test_duplicate_method_ids_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="duplicate method id"):
            small_config(
                tmp_path,
                methods=(
                    MethodConfig(method="gag", n=6, p=45),
                    MethodConfig(method="gag", n=6, p=85),
                ),
            )

    def test_invalid_partition_grid_rejected_up_front(self, tmp_path):
        with pytest.raises(ValueError, match="invalid partition grid"):
            replace(small_config(tmp_path), lower_bound=60.0, interval=7.0)

    def test_env_var_overrides_cache_dir(self, tmp_path, monkeypatch):
        config = small_config(tmp_path)
        config.save(tmp_path / "run.json")
        monkeypatch.setenv("ABSGRAD_CACHE_DIR", str(tmp_path / "elsewhere"))
        loaded = RunConfig.load(tmp_path / "run.json")
        assert loaded.cache_dir == tmp_path / "elsewhere"
        monkeypatch.delenv("ABSGRAD_CACHE_DIR")
        assert RunConfig.load(tmp_path / "run.json").cache_dir == config.cache_dir


class TestCacheKeys:
    def test_key_changes_with_every_component(self):
        base = MethodConfig(method="gag", n=6, p=85)
        k0 = cache_key("img", base, "tiny_cnn", 0)
        assert cache_key("img2", base, "tiny_cnn", 0) != k0
        assert cache_key("img", replace(base, p=45.0), "tiny_cnn", 0) != k0
        assert cache_key("img", replace(base, n=8), "tiny_cnn", 0) != k0
        assert cache_key("img", base, "linear_toy", 0) != k0
        assert cache_key("img", base, "tiny_cnn", 1) != k0
        assert cache_key("img", base, "tiny_cnn", 0, {"path": "other.f32"}) != k0
        assert cache_key("img", base, "tiny_cnn", 0, {}) == k0
        assert (
            cache_key("img", replace(base, modifier=ModifierSpec(n=6, seed=3)), "tiny_cnn", 0)
            != k0
        )

    def test_key_stable_for_identical_inputs(self):
        a = MethodConfig(method="sg", n=6)
        b = MethodConfig(method="sg", n=6)
        assert cache_key("img", a, "tiny_cnn", 0) == cache_key("img", b, "tiny_cnn", 0)


class TestExplain:
    def test_second_run_fully_reused(self, tmp_path):
        config = small_config(tmp_path)
        first = run_explain(config)
        assert first.computed == 8 and first.reused == 0 and not first.failed
        second = run_explain(config)
        assert second.computed == 0 and second.reused == 8

    def test_changed_guide_percentile_recomputes(self, tmp_path):
        config = small_config(tmp_path, methods=(MethodConfig(method="gag", n=6, p=85),))
        run_explain(config)
        changed = replace(config, methods=(MethodConfig(method="gag", n=6, p=45),))
        summary = run_explain(changed)
        assert summary.computed == 4 and summary.reused == 0

    def test_cached_bytes_identical_to_fresh(self, tmp_path):
        config = small_config(tmp_path, methods=(MethodConfig(method="vg"),))
        run_explain(config)
        method = config.methods[0]
        target = cache_path(config.cache_dir, "blob_000", method, "tiny_cnn", 0)
        original = target.read_bytes()
        target.unlink()
        run_explain(config)
        assert target.read_bytes() == original

    def test_adapter_failure_recorded_and_run_continues(self, tmp_path):
        # fixed-confidence adapter has no gradients: every pair fails, none abort
        manifest = write_subset_manifest(tmp_path / "m.json", count=2)
        config = RunConfig(
            adapter_id="fixed_confidence",
            adapter_params={"probs": [1.0, 0.0], "input_shape": [1, 16, 16]},
            dataset=manifest,
            cache_dir=tmp_path / "cache",
            methods=(MethodConfig(method="vg"),),
            metric_ids=("sratio",),
        )
        summary = run_explain(config)
        assert summary.computed == 0
        assert len(summary.failed) == 2
        assert all("gradients unsupported" in row[2] for row in summary.failed)


class TestEvaluate:
    def test_report_values_and_means(self, tmp_path):
        config = small_config(tmp_path, metric_ids=("rcap", "sratio", "mae", "lcdice"))
        run_explain(config)
        report = run_evaluate(config)
        assert sorted(report.per_image) == ["gag", "vg"]
        for method_id in report.per_image:
            values = [v["rcap"] for v in report.per_image[method_id].values()]
            assert report.means[method_id]["rcap"] == pytest.approx(np.mean(values))
        assert report.directions["rcap"] == "higher"

    def test_maskless_entries_have_no_gt_metrics(self, tmp_path):
        config = small_config(
            tmp_path, metric_ids=("rcap", "mae", "lcdice"), with_masks=False
        )
        run_explain(config)
        report = run_evaluate(config)
        for images in report.per_image.values():
            for values in images.values():
                assert "mae" not in values and "lcdice" not in values
                assert "rcap" in values
        for mean_row in report.means.values():
            assert "mae" not in mean_row

    def test_missing_cache_listed_partial_report(self, tmp_path):
        config = small_config(tmp_path, methods=(MethodConfig(method="vg"),))
        run_explain(config)
        victim = cache_path(config.cache_dir, "blob_001", config.methods[0], "tiny_cnn", 0)
        victim.unlink()
        report = run_evaluate(config)
        assert ["blob_001", "vg"] in report.missing
        assert "blob_001" not in report.per_image["vg"]
        assert "blob_000" in report.per_image["vg"]


class TestRatios:
    def make_report(self):
        return MetricReport(
            per_image={},
            means={
                "sg": {"rcap": 0.2, "dauc": 0.5},
                "sgga": {"rcap": 0.3, "dauc": 0.45},
                "ig": {"rcap": 0.1, "dauc": 0.4},
                "igga": {"rcap": 0.2, "dauc": 0.4},
                "zero": {"rcap": 0.0, "dauc": 0.2},
                "zeroga": {"rcap": 0.1, "dauc": 0.2},
            },
            directions={"rcap": "higher", "dauc": "lower"},
        )

    def test_self_ratio_is_exactly_one(self):
        report = self.make_report()
        assert improvement_ratios(report, "sg", ["sg"])["sg"] == {"rcap": 1.0, "dauc": 1.0}

    def test_arithmetic(self):
        report = self.make_report()
        assert improvement_ratios(report, "sg", ["sgga"])["sgga"]["rcap"] == pytest.approx(1.5)

    def test_zero_base_undefined(self):
        report = self.make_report()
        assert improvement_ratios(report, "zero", ["zeroga"])["zeroga"]["rcap"] is None

    def test_table_averages_across_methods(self):
        report = self.make_report()
        table = improvement_ratio_table(report, ["sg", "ig"], ["ga"])
        assert table["ga"]["rcap"] == pytest.approx(np.mean([0.3 / 0.2, 0.2 / 0.1]))

    def test_unknown_methods_raise(self):
        report = self.make_report()
        with pytest.raises(KeyError):
            improvement_ratios(report, "vg", ["sg"])


class TestPreprocessing:
    def write_manifest(self, tmp_path, preprocess):
        blob_root = fixtures.blob_manifest_path().parent
        source = json.loads(fixtures.blob_manifest_path().read_text())
        entry = dict(source["entries"][0])
        entry["image"] = str(blob_root / entry["image"])
        entry["mask"] = str(blob_root / entry["mask"])
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"preprocess": preprocess, "entries": [entry]}))
        return DatasetManifest.load(path)

    def test_resize_applies_to_image_and_mask(self, tmp_path):
        manifest = self.write_manifest(tmp_path, {"resize": [8, 8], "value_range": [0, 1]})
        sample = next(load_dataset(manifest))
        assert sample.image.shape == (1, 8, 8)
        assert sample.mask.shape == (8, 8)
        assert sample.mask.dtype == bool

    def test_value_range_rescales(self, tmp_path):
        manifest = self.write_manifest(tmp_path, {"value_range": [-1.0, 1.0]})
        sample = next(load_dataset(manifest))
        assert sample.image.min() >= -1.0 and sample.image.max() <= 1.0
        assert sample.image.min() < 0.0  # genuinely rescaled, not clipped


class TestEmitReport:
    def test_best_value_metadata_respects_direction(self):
        report = MetricReport(
            per_image={},
            means={"a": {"rcap": 0.2, "dauc": 0.1}, "b": {"rcap": 0.5, "dauc": 0.4}},
            directions={"rcap": "higher", "dauc": "lower"},
        )
        best = report.to_dict()["best"]
        assert best == {"rcap": "b", "dauc": "a"}

    def test_empty_report_header_only_csv(self, tmp_path):
        report = MetricReport(per_image={}, means={}, directions={})
        files = emit_report(report, tmp_path / "out")
        csv_text = (tmp_path / "out" / "report.csv").read_text()
        assert csv_text == "image_id,method\n"
        assert len(files) == 3

    def test_deterministic_bytes(self, tmp_path):
        config = small_config(tmp_path)
        run_explain(config)
        report = run_evaluate(config)
        emit_report(report, tmp_path / "a")
        emit_report(report, tmp_path / "b")
        for name in ("report.csv", "means.csv", "report.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_heatmap_count_is_images_times_methods(self, tmp_path):
        config = small_config(tmp_path)
        run_explain(config)
        report = run_evaluate(config)
        emit_report(report, tmp_path / "out", config=config, heatmaps=True)
        pngs = list((tmp_path / "out" / "heatmaps").glob("*.png"))
        assert len(pngs) == 4 * 2

    def test_end_to_end_determinism_fresh_caches(self, tmp_path):
        texts = []
        for run_dir in ("run1", "run2"):
            root = tmp_path / run_dir
            root.mkdir()
            config = small_config(root)
            run_explain(config)
            report = run_evaluate(config)
            emit_report(report, root / "out")
            texts.append(
                (
                    (root / "out" / "report.csv").read_bytes(),
                    (root / "out" / "report.json").read_bytes(),
                )
            )
        assert texts[0] == texts[1]
