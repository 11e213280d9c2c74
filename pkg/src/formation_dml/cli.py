"""Command-line entry point: ingest, simulate, estimate, report.

Examples::

    formation-dml simulate --output-dir out/sim --seed 7
    formation-dml ingest --input out/sim/fixtures.csv --output-dir out/clean
    formation-dml estimate --input out/clean/analysis_table.csv --output-dir out/run --target goals
    formation-dml report --input out/clean/analysis_table.csv --run-dir out/run --output-dir out/report

``--output-dir`` defaults to ``$FORMATION_DML_OUTPUT`` (then the current
directory). ``--config FILE`` reads ``key=value`` lines whose values win
over command-line flags; keys are the long flag names (``target``,
``folds``, ``seed``, ``learner``, ...), ``learner.<param>`` for learner
parameters, ``synth.<field>`` for the simulator and ``column.<field>`` for
input column names.

On failure a single line ``error[E_CODE]: message`` goes to stderr and the
exit status is nonzero.
"""
from __future__ import annotations

import argparse
import os
import sys
from collections import defaultdict
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from .dataset import (
    TARGETS,
    AnalysisTable,
    SchemaError,
    UnmappedFormationError,
    filter_stages,
    load_column_mapping,
    load_formation_mapping,
    parse_fixture_table,
    prepare_analysis_table,
    write_fixture_table,
    write_rejects,
)
from .dml import ConfigError, RunConfig, read_grid, run_pipeline, write_run_artifacts
from .dml.crossfit import DegenerateColumnError
from .dml.final_stage import RankDeficiencyError
from .learners import DEFAULT_GRID, LearnerConfigError, LearnerParams, RegressorSpec

OUTPUT_ENV = "FORMATION_DML_OUTPUT"

EXIT_CODES = {
    "E_INPUT": 2,
    "E_SCHEMA": 3,
    "E_CONFIG": 4,
    "E_MAPPING": 5,
    "E_DATA": 6,
    "E_EMPTY": 7,
}


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def read_config(path) -> dict[str, str]:
    if path is None:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError("E_INPUT", f"cannot read config {path}: {exc.strerror}") from None
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError("E_CONFIG", f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _apply_config(args, cfg: dict[str, str]) -> None:
    """Config values override flags (only for options the command has)."""
    aliases = {"folds": "folds", "n_folds": "folds", "output": "output_dir"}
    for key, value in cfg.items():
        if "." in key:
            continue
        name = aliases.get(key, key)
        if not hasattr(args, name):
            continue
        current = getattr(args, name)
        if isinstance(current, bool):
            setattr(args, name, value.lower() in ("1", "true", "yes", "on"))
        elif isinstance(current, int):
            setattr(args, name, int(value))
        else:
            setattr(args, name, value)


def _output_dir(args) -> Path:
    out = Path(args.output_dir or os.environ.get(OUTPUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_mapping(path):
    if path is None:
        return None
    try:
        return load_formation_mapping(path)
    except OSError as exc:
        raise CliError("E_INPUT", f"cannot read mapping {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise CliError("E_MAPPING", str(exc)) from None


def _read_fixtures(path, cfg):
    schema = {k[len("column."):]: v for k, v in cfg.items() if k.startswith("column.")}
    try:
        return parse_fixture_table(path, schema=schema, delimiter=cfg.get("delimiter", ","))
    except FileNotFoundError:
        raise CliError("E_INPUT", f"cannot read input {path}") from None
    except OSError as exc:
        raise CliError("E_INPUT", f"cannot read input {path}: {exc.strerror}") from None
    except SchemaError as exc:
        raise CliError("E_SCHEMA", str(exc)) from None


def _round_summary(fixtures, drop_first, drop_last) -> list[str]:
    max_round = defaultdict(int)
    for f in fixtures:
        max_round[(f.season, f.league)] = max(max_round[(f.season, f.league)], f.round)
    spans = defaultdict(list)
    for comp, r in sorted(max_round.items()):
        spans[(drop_first + 1, r - drop_last, r)].append(comp)
    return [
        f"rounds retained: {lo}-{hi} of {r} ({len(comps)} season-league{'s' if len(comps) != 1 else ''})"
        for (lo, hi, r), comps in sorted(spans.items())
    ]


def _analysis_table(path, cfg, mapping_path, log=print) -> AnalysisTable:
    """Load an analysis table, or build one from a raw fixture file."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline()
    except OSError as exc:
        raise CliError("E_INPUT", f"cannot read input {path}: {exc.strerror or exc}") from None
    if "main_group" in header.split(","):
        try:
            return AnalysisTable.read_csv(path)
        except (ValueError, KeyError) as exc:
            raise CliError("E_SCHEMA", f"{path}: {exc}") from None
    fixtures, rejects = _read_fixtures(path, cfg)
    if rejects:
        log(f"rejected rows: {len(rejects)}")
    try:
        return prepare_analysis_table(fixtures, _load_mapping(mapping_path),
                                      int(cfg.get("drop_first", 2)), int(cfg.get("drop_last", 4)), log=log)
    except UnmappedFormationError as exc:
        raise CliError("E_MAPPING", str(exc)) from None


def cmd_ingest(args, cfg) -> int:
    out = _output_dir(args)
    fixtures, rejects = _read_fixtures(args.input, cfg)
    print(f"parsed: {len(fixtures) + len({r.fixture_id for r in rejects})} rows, "
          f"{len(fixtures)} valid, {len({r.fixture_id for r in rejects})} rejected")
    mapping = _load_mapping(args.mapping)
    drop_first = int(cfg.get("drop_first", 2))
    drop_last = int(cfg.get("drop_last", 4))
    for line in _round_summary(filter_stages(fixtures), drop_first, drop_last):
        print(line)
    try:
        table = prepare_analysis_table(fixtures, mapping, drop_first, drop_last, log=print)
    except UnmappedFormationError as exc:
        raise CliError("E_MAPPING", str(exc)) from None
    table.to_csv(out / "analysis_table.csv")
    write_rejects(rejects, out / "rejects.csv")
    print(f"wrote {out / 'analysis_table.csv'} ({len(table)} rows) and {out / 'rejects.csv'} ({len(rejects)} rejects)")
    return 0


def cmd_simulate(args, cfg) -> int:
    from .synth import SynthConfig, generate, load_synth_config, write_truth

    out = _output_dir(args)
    base = SynthConfig(seed=args.seed)
    if args.config:
        base = load_synth_config(args.config, base)
        base = replace(base, seed=args.seed)
    if args.null:
        base = base.null()
    try:
        fixtures, truth = generate(base)
    except ValueError as exc:
        raise CliError("E_CONFIG", str(exc)) from None
    write_fixture_table(fixtures, out / "fixtures.csv")
    write_truth(truth, out / "truth.txt", base.k)
    beta = truth.true_beta
    print(f"simulated {len(fixtures)} fixtures ({base.n_seasons} seasons x {base.n_leagues} leagues x "
          f"{base.n_teams} teams), seed {base.seed}")
    print(f"truth: home_advantage={truth.home_advantage:g} max|beta|={np.abs(beta).max():g} "
          f"null={'yes' if not beta.any() else 'no'}")
    print(f"wrote {out / 'fixtures.csv'} and {out / 'truth.txt'}")
    return 0


def _learner_spec(args, cfg) -> RegressorSpec:
    names = {f.name for f in fields(LearnerParams)}
    params = {"seed": args.seed}
    for key, value in cfg.items():
        if key.startswith("learner."):
            name = key[len("learner."):]
            if name not in names:
                raise CliError("E_CONFIG", f"unknown learner parameter {name!r}")
            params[name] = type(getattr(LearnerParams(), name))(value)
    return RegressorSpec(args.learner, LearnerParams(**params))


def cmd_estimate(args, cfg) -> int:
    from .report import matrix_heatmap

    out = _output_dir(args)
    config = RunConfig(
        target=args.target,
        n_folds=args.folds,
        seed=args.seed,
        learner=_learner_spec(args, cfg),
        se_variant=cfg.get("se_variant", "HC1"),
        p_reference=cfg.get("p_reference", "normal"),
        n_jobs=int(cfg.get("n_jobs", args.jobs)),
        tune_grid=DEFAULT_GRID if args.tune else None,
    )
    try:
        config.validate()
    except (ConfigError, LearnerConfigError) as exc:
        raise CliError("E_CONFIG", str(exc)) from None
    table = _analysis_table(args.input, cfg, args.mapping)
    if len(table) == 0:
        raise CliError("E_EMPTY", "analysis table has no rows")
    try:
        result = run_pipeline(table, config)
    except (DegenerateColumnError, RankDeficiencyError) as exc:
        raise CliError("E_DATA", str(exc)) from None
    except (ConfigError, ValueError) as exc:
        raise CliError("E_DATA", str(exc)) from None
    write_run_artifacts(result, out)
    matrix_heatmap(result.matrix, out / "heatmap.svg", title=f"{args.target} difference")
    if args.side_adjusted:
        matrix_heatmap(result.matrix, out / "heatmap_side.svg", side_adjusted=True,
                       title=f"{args.target} difference, home side")
    print(result.matrix.render(side_adjusted=args.side_adjusted))
    d = result.diagnostics
    print(f"home effect {result.matrix.home_effect:.4f}; antisymmetry gap {d.antisymmetry_gap:.4f}; "
          f"{d.n_rows} rows; {d.seconds:.1f}s")
    print(f"wrote run artifacts to {out}")
    return 0


def cmd_report(args, cfg) -> int:
    from .report import EmptyTableError, formation_averages, formation_usage, render_heatmap

    out = _output_dir(args)
    table = _analysis_table(args.input, cfg, args.mapping)
    try:
        usage = formation_usage(table)
        averages = formation_averages(table)
    except EmptyTableError as exc:
        raise CliError("E_EMPTY", str(exc)) from None
    usage.to_csv(out / "formation_usage.csv", float_format="%.2f")
    averages.to_csv(out / "formation_averages.csv", float_format="%.4f")
    print("formation usage by league (%)")
    print(usage.round(2).to_string())
    print()
    print("average per-team statistics by formation")
    print(averages.round(3).to_string())

    if args.run_dir:
        run = Path(args.run_dir)
        grid_name = "beta_side.csv" if args.side_adjusted else "beta_display.csv"
        try:
            labels, values = read_grid(run / grid_name)
            _, stars = read_grid(run / "stars.csv")
        except OSError as exc:
            raise CliError("E_INPUT", f"run directory {run}: {exc.strerror or exc}") from None
        omitted = None
        for line in (run / "config.txt").read_text(encoding="utf-8").splitlines():
            if line.startswith("omitted="):
                omitted = tuple(int(v) for v in line.split("=", 1)[1].split(","))
        render_heatmap(values, stars, out / "heatmap.svg", labels, omitted)
        summary = run / "residual_summary.csv"
        if summary.exists():
            import pandas as pd

            fs = pd.read_csv(summary)[["residual", "first_stage_mse", "first_stage_r2"]]
            fs.to_csv(out / "first_stage.csv", index=False, float_format="%.6f")
            y = fs[fs.residual == "Y"].iloc[0]
            d = fs[fs.residual != "Y"]
            print()
            print(f"first stage: Y mse={y.first_stage_mse:.4f} r2={y.first_stage_r2:.4f}; "
                  f"D columns mean mse={d.first_stage_mse.mean():.4f}")
    print(f"wrote report to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="formation-dml",
        description="Formation-versus-formation effects by cross-fitted double machine learning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_input=True):
        if needs_input:
            p.add_argument("--input", required=True, help="fixture file or analysis table (CSV)")
        p.add_argument("--output-dir", default=None, help=f"output directory (default ${OUTPUT_ENV} or .)")
        p.add_argument("--config", default=None, help="key=value file; its values override flags")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("ingest", help="parse, validate and expand a fixture file")
    common(p)
    p.add_argument("--mapping", default=None, help="raw formation -> group file")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("simulate", help="generate synthetic fixtures with known effects")
    common(p, needs_input=False)
    p.add_argument("--null", action="store_true", help="all true effects zero")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate the effect matrix")
    common(p)
    p.add_argument("--target", choices=list(TARGETS), default="goals")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--learner", choices=["boosted", "ridge"], default="boosted")
    p.add_argument("--mapping", default=None, help="raw formation -> group file (raw input only)")
    p.add_argument("--side-adjusted", action="store_true", help="also shift cells by the home effect")
    p.add_argument("--jobs", type=int, default=1, help="parallel first-stage fits")
    p.add_argument("--tune", action="store_true", help="grid-search the outcome model first (slow)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("report", help="descriptive tables and heatmap")
    common(p)
    p.add_argument("--run-dir", default=None, help="estimate output to draw the heatmap from")
    p.add_argument("--mapping", default=None)
    p.add_argument("--side-adjusted", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = read_config(args.config)
        _apply_config(args, cfg)
        if getattr(args, "target", "goals") not in TARGETS:
            raise CliError("E_CONFIG", f"unknown target {args.target!r}; choose from {', '.join(TARGETS)}")
        if getattr(args, "learner", "boosted") not in ("boosted", "ridge"):
            raise CliError("E_CONFIG", f"unknown learner {args.learner!r}")
        return args.func(args, cfg)
    except CliError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_CODES.get(exc.code, 1)
    except (ValueError, LearnerConfigError) as exc:
        print(f"error[E_CONFIG]: {' '.join(str(exc).split())}", file=sys.stderr)
        return EXIT_CODES["E_CONFIG"]


if __name__ == "__main__":
    sys.exit(main())
