"""Command line front end.

Verbs:
    run <config>        execute (or resume) an experiment described in YAML
    preset list         show the built-in scenario presets
    validate <config>   parse + validate a config, print its hash
    plot <csv...>       regenerate SVG figures from result tables

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .experiment import (
    OUTPUT_DIR_ENV,
    ConfigError,
    config_hash,
    load_config,
    plot_cardinality,
    plot_ospa,
    plot_tracks,
    run_experiment,
    _read_points_csv,
)
from .simulate import PRESET_NAMES, scenario_preset

_SCHEMA_OSPA = "bnptrack-ospa/1"
_SCHEMA_CARD = "bnptrack-cardinality/1"
_SCHEMA_TRACKS = "bnptrack-tracks/1"
_SCHEMA_TRUTH = "bnptrack-truth/1"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bnptrack",
        description="Bayesian nonparametric multi-object tracking experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute (or resume) an experiment config")
    run_p.add_argument("config", type=Path, help="YAML experiment config")
    run_p.add_argument(
        "--output-dir",
        type=Path,
        default=None,
        help=f"override the config's output_dir (beats ${OUTPUT_DIR_ENV})",
    )
    run_p.add_argument("--workers", type=int, default=None, help="override worker count")

    preset_p = sub.add_parser("preset", help="inspect scenario presets")
    preset_sub = preset_p.add_subparsers(dest="preset_command", required=True)
    preset_sub.add_parser("list", help="list preset names and schedules")

    val_p = sub.add_parser("validate", help="check a config file")
    val_p.add_argument("config", type=Path)

    plot_p = sub.add_parser("plot", help="regenerate SVG plots from result CSVs")
    plot_p.add_argument("csv", type=Path, nargs="+", help="ospa/cardinality/tracks/truth tables")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    out_override = args.output_dir or os.environ.get(OUTPUT_DIR_ENV)
    if out_override:
        from dataclasses import replace

        cfg = replace(cfg, output_dir=str(out_override))
    if args.workers is not None:
        from dataclasses import replace

        cfg = replace(cfg, workers=args.workers)
    result = run_experiment(cfg)
    mean_ospa = float(np.mean(result.scores.total))
    mean_base = float(np.mean(result.baseline.total))
    print(f"wrote {result.output_dir} ({cfg.mc_runs} runs, {result.manifest['resumed_runs']} resumed)")
    print(
        f"mean OSPA {mean_ospa:.3f} vs raw-measurement baseline {mean_base:.3f} "
        f"(p={cfg.metrics.p:g}, c={cfg.metrics.c:g})"
    )
    return 0


def _cmd_preset_list() -> int:
    for name in PRESET_NAMES:
        scen = scenario_preset(name)
        print(
            f"{name:10s} K={scen.n_steps:4d}  objects={scen.n_objects:2d}  "
            f"sensor={scen.sensor}  motion={scen.motion}  "
            f"births={scen.births}  deaths={scen.deaths}"
        )
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    print(f"ok: {args.config} (config hash {config_hash(cfg)[:12]})")
    return 0


def _read_schema(path: Path) -> str:
    with open(path) as fh:
        first = fh.readline().strip()
    if not first.startswith("# schema: "):
        raise ConfigError(str(path), "missing '# schema: ...' header row")
    return first[len("# schema: ") :]


def _read_table(path: Path) -> dict[str, np.ndarray]:
    with open(path) as fh:
        fh.readline()  # schema comment
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        raise ConfigError(str(path), "no data rows")
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}


def _cmd_plot(paths: Sequence[Path]) -> int:
    by_schema: dict[str, Path] = {}
    for path in paths:
        if not path.exists():
            raise ConfigError(str(path), "no such file")
        by_schema[_read_schema(path)] = path

    written: list[Path] = []
    if _SCHEMA_OSPA in by_schema:
        path = by_schema[_SCHEMA_OSPA]
        table = _read_table(path)
        out = path.with_name("ospa_vs_step.svg")
        plot_ospa(out, table["step"], table["ospa_total"], table["stderr"])
        written.append(out)
    if _SCHEMA_CARD in by_schema:
        path = by_schema[_SCHEMA_CARD]
        table = _read_table(path)
        out = path.with_name("cardinality_vs_step.svg")
        plot_cardinality(out, table["step"], table["card_true"], table["card_est_mean"])
        written.append(out)
    if _SCHEMA_TRACKS in by_schema:
        path = by_schema[_SCHEMA_TRACKS]
        truth_path = by_schema.get(_SCHEMA_TRUTH)
        if truth_path is None and (path.parent / "truth.csv").exists():
            truth_path = path.parent / "truth.csv"
        truth = _read_points_csv(truth_path) if truth_path else None
        out = path.with_name("xy_vs_step.svg")
        plot_tracks(out, _read_points_csv(path), truth)
        written.append(out)
    elif _SCHEMA_TRUTH in by_schema:
        path = by_schema[_SCHEMA_TRUTH]
        out = path.with_name("xy_vs_step.svg")
        plot_tracks(out, {}, _read_points_csv(path))
        written.append(out)

    if not written:
        raise ConfigError("plot", "no recognized tables among the given files")
    for out in written:
        print(f"wrote {out}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return 0 if exc.code == 0 else 1
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "preset":
            return _cmd_preset_list()
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "plot":
            return _cmd_plot(args.csv)
        raise AssertionError(f"unhandled command {args.command!r}")
    except ConfigError as exc:
        print(f"config error — {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(f"error — {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
