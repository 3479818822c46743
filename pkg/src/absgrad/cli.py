"""Command-line front end over the evaluation harness.

Subcommands: explain (populate the saliency cache), evaluate (score cached
maps), reverse (derive .rev variants of configured methods), synthval (run
the synthetic-suite ordering checks), report (evaluate plus full file
outputs including heatmaps), ratios (variant improvement tables).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import fixtures  # noqa: F401  (registers the tiny_cnn adapter)
from .arrayio import render_heatmap
from .core import focus_noise_split
from .runner import (
    RunConfig,
    emit_report,
    improvement_ratio_table,
    improvement_ratios,
    run_evaluate,
    run_explain,
)
from .synth import build_suite, check_propositions

__all__ = ["main"]

# flag name -> RunConfig field it overrides
_CONFIG_OVERRIDES = {
    "adapter": "adapter_id",
    "dataset": "dataset",
    "cache_dir": "cache_dir",
    "seed": "seed",
    "steps": "steps",
    "lower_bound": "lower_bound",
    "interval": "interval",
    "baseline": "baseline",
}


def _add_config_flags(parser) -> None:
    parser.add_argument("--config", required=True, help="run config JSON file")
    parser.add_argument("--adapter", help="override the adapter id")
    parser.add_argument("--dataset", type=Path, help="override the dataset manifest path")
    parser.add_argument("--cache-dir", type=Path, dest="cache_dir", help="override the cache directory")
    parser.add_argument("--seed", type=int, help="override the run seed")
    parser.add_argument("--steps", type=int, help="override deletion/insertion curve steps")
    parser.add_argument("--lower-bound", type=float, dest="lower_bound", help="override the partition lower bound")
    parser.add_argument("--interval", type=float, help="override the partition interval")
    parser.add_argument("--baseline", type=float, help="override the recovery baseline value")


def _load_config(args) -> RunConfig:
    config = RunConfig.load(args.config)
    overrides = {
        field: getattr(args, flag)
        for flag, field in _CONFIG_OVERRIDES.items()
        if getattr(args, flag, None) is not None
    }
    return replace(config, **overrides) if overrides else config


def _cmd_explain(args) -> int:
    config = _load_config(args)
    summary = run_explain(config)
    print(json.dumps(summary.to_dict(), indent=2, sort_keys=True))
    return 1 if summary.failed else 0


def _cmd_evaluate(args) -> int:
    config = _load_config(args)
    report = run_evaluate(config)
    if args.out:
        for path in emit_report(report, args.out):
            print(f"wrote {path}")
    else:
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_reverse(args) -> int:
    config = _load_config(args)
    wanted = set(args.methods.split(",")) if args.methods else None
    reversal = (args.l, args.m)
    extra = [
        replace(m, reversal=reversal)
        for m in config.methods
        if m.reversal is None and (wanted is None or m.method_id in wanted)
    ]
    if not extra:
        print("no methods matched; nothing to reverse", file=sys.stderr)
        return 1
    derived = replace(config, methods=tuple(list(config.methods) + extra))
    summary = run_explain(derived)
    out_config = Path(args.out_config) if args.out_config else Path(args.config).with_suffix(".rev.json")
    derived.save(out_config)
    print(json.dumps({"explain": summary.to_dict(), "config": str(out_config)}, indent=2, sort_keys=True))
    return 1 if summary.failed else 0


def _cmd_synthval(args) -> int:
    suite = build_suite(args.width, args.height, args.s1, args.s2)
    report = check_propositions(suite, args.lower_bound, args.interval)
    payload = report.to_dict()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "propositions.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    for name, saliency in suite.maps.items():
        areas = focus_noise_split(saliency, args.lower_bound)
        render_heatmap(
            saliency,
            out / f"{name}.png",
            colormap=args.colormap,
            focus_mask=areas.focus,
            gt_mask=suite.gt,
        )
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0 if report.all_hold() else 1


def _cmd_report(args) -> int:
    config = _load_config(args)
    report = run_evaluate(config)
    for path in emit_report(report, args.out, config=config, heatmaps=True, colormap=args.colormap):
        print(f"wrote {path}")
    return 0


def _cmd_ratios(args) -> int:
    config = _load_config(args)
    report = run_evaluate(config)
    if args.table:
        bases = args.base.split(",")
        payload = improvement_ratio_table(report, bases, args.variants.split(","))
    else:
        payload = improvement_ratios(report, args.base, args.variants.split(","))
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "ratios.json").write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="absgrad", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("explain", help="compute and cache saliency maps for a run config")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_explain)

    p = sub.add_parser("evaluate", help="score cached maps with the configured metrics")
    _add_config_flags(p)
    p.add_argument("--out", help="directory for report.csv / means.csv / report.json")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("reverse", help="build .rev variants of configured methods")
    _add_config_flags(p)
    p.add_argument("--l", type=float, default=20.0, help="retained top percentage")
    p.add_argument("--m", type=float, default=30.0, help="swap band width percentage")
    p.add_argument("--methods", help="comma-separated method ids to reverse (default: all)")
    p.add_argument("--out-config", help="where to write the derived config")
    p.set_defaults(func=_cmd_reverse)

    p = sub.add_parser("synthval", help="synthetic-suite ordering checks and map renders")
    p.add_argument("--width", type=int, default=100)
    p.add_argument("--height", type=int, default=100)
    p.add_argument("--s1", type=float, default=None)
    p.add_argument("--s2", type=float, default=None)
    p.add_argument("--lower-bound", type=float, default=60.0, dest="lower_bound")
    p.add_argument("--interval", type=float, default=20.0)
    p.add_argument("--colormap", default="gray", choices=["gray", "hot"])
    p.add_argument("--out", default="synthval_out")
    p.set_defaults(func=_cmd_synthval)

    p = sub.add_parser("report", help="evaluate and emit CSV/JSON plus overlay heatmaps")
    _add_config_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--colormap", default="gray", choices=["gray", "hot"])
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("ratios", help="variant/base improvement ratios")
    _add_config_flags(p)
    p.add_argument("--base", required=True, help="base method id, or comma list with --table")
    p.add_argument(
        "--variants",
        required=True,
        help="comma list: method ids, or variant suffixes with --table",
    )
    p.add_argument("--table", action="store_true", help="average across base methods")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_ratios)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError) as exc:
        message = exc.args[0] if exc.args else exc
        print(f"error: {message}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
