"""Run directory layout.

Files written by :func:`write_run_artifacts`:

  config.txt            key=value echo of the run configuration
  beta.csv              raw K x K estimates (diagonal and omitted cell included)
  beta_display.csv      estimates with the diagonal zeroed
  beta_side.csv         display grid shifted by the home effect
  se.csv                standard errors
  pvalue.csv            two-sided p-values
  stars.csv             significance labels (***, **, *, ns)
  cell_counts.csv       analysis rows per (main, rival) cell
  coefficients.csv      long format: main, rival, beta, se, p, stars, n, coded
  residual_summary.csv  per residual vector: mean, sd, first-stage mse and r2,
                        max |corr| with any confounder
  matrix.txt            rendered grid with significance marks
  diagnostics.txt       home effect, antisymmetry gap, raw diagonal, timings

Grids have a header row of rival labels and a leading column of main
labels. Numbers use a period decimal separator.
"""
from __future__ import annotations

import csv
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .matrix import BetaMatrix, side_adjust
from .pipeline import PipelineResult, RunConfig

RUN_FILES = (
    "config.txt", "beta.csv", "beta_display.csv", "beta_side.csv", "se.csv", "pvalue.csv",
    "stars.csv", "cell_counts.csv", "coefficients.csv", "residual_summary.csv",
    "matrix.txt", "diagnostics.txt",
)


def _num(x) -> str:
    return format(float(x), ".10g")


def write_grid(path, grid, labels, fmt=_num) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["main\\rival", *labels])
        for label, row in zip(labels, grid):
            w.writerow([label, *(fmt(v) for v in row)])


def read_grid(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    labels = rows[0][1:]
    body = [r[1:] for r in rows[1:]]
    try:
        return labels, np.array(body, dtype=np.float64)
    except ValueError:
        return labels, np.array(body, dtype=object)


def config_lines(config: RunConfig) -> list[str]:
    lines = [
        f"target={config.target}",
        f"n_folds={config.n_folds}",
        f"seed={config.seed}",
        f"learner={config.learner.kind}",
    ]
    lines += [f"learner.{k}={v}" for k, v in asdict(config.learner.params).items()]
    lines += [
        f"se_variant={config.se_variant}",
        f"p_reference={config.p_reference}",
        f"k={config.k}",
        f"omitted={','.join(map(str, config.omitted or (config.k, config.k)))}",
        f"tune={'default grid' if config.tune_grid is not None else 'off'}",
    ]
    return lines


def write_run_artifacts(result: PipelineResult, outdir: str | Path) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    m: BetaMatrix = result.matrix
    labels = list(m.labels[: m.k])
    diag = result.diagnostics

    (outdir / "config.txt").write_text("\n".join(config_lines(result.config)) + "\n")
    write_grid(outdir / "beta.csv", m.beta, labels)
    write_grid(outdir / "beta_display.csv", m.displayed(), labels)
    write_grid(outdir / "beta_side.csv", side_adjust(m), labels)
    write_grid(outdir / "se.csv", m.se, labels)
    write_grid(outdir / "pvalue.csv", m.p, labels)
    write_grid(outdir / "stars.csv", m.stars, labels, fmt=str)
    write_grid(outdir / "cell_counts.csv", m.cell_counts, labels, fmt=lambda v: str(int(v)))

    with open(outdir / "coefficients.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["main", "rival", "beta", "se", "p", "stars", "n", "coded"])
        for i in range(m.k):
            for j in range(m.k):
                coded = (i + 1, j + 1) != tuple(m.omitted)
                w.writerow([labels[i], labels[j], _num(m.beta[i, j]), _num(m.se[i, j]),
                            _num(m.p[i, j]), m.stars[i, j], int(m.cell_counts[i, j]), int(coded)])

    res = result.residuals
    vectors = {"Y": res.r_Y}
    vectors.update({f"D[{c.i},{c.j}]": res.r_D[:, n] for n, c in enumerate(res.columns)})
    with open(outdir / "residual_summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["residual", "mean", "sd", "first_stage_mse", "first_stage_r2", "max_abs_corr_x"])
        for name, vec in vectors.items():
            rep = diag.first_stage[name]
            r2 = "" if rep.r2 is None else _num(rep.r2)
            w.writerow([name, _num(vec.mean()), _num(vec.std()), _num(rep.mse), r2,
                        _num(diag.orthogonality[name])])

    (outdir / "matrix.txt").write_text(
        m.render() + "\n\n" + m.render(side_adjusted=True) + "\n", encoding="utf-8"
    )
    (outdir / "diagnostics.txt").write_text(diagnostics_text(result), encoding="utf-8")
    return outdir


def diagnostics_text(result: PipelineResult) -> str:
    m, d = result.matrix, result.diagnostics
    y_rep = d.first_stage["Y"]
    d_mse = np.mean([r.mse for name, r in d.first_stage.items() if name != "Y"])
    lines = [
        f"target: {result.config.target}",
        f"rows: {d.n_rows}  fixtures: {d.n_groups}  folds: {result.config.n_folds}",
        f"home effect E(Y_home): {_num(m.home_effect)}",
        f"first stage Y: mse={_num(y_rep.mse)} r2={'undefined' if y_rep.r2 is None else _num(y_rep.r2)}",
        f"first stage D (mean over columns): mse={_num(d_mse)}",
        f"omitted cell: ({m.omitted.i},{m.omitted.j}) beta={_num(m.beta[m.omitted.i - 1, m.omitted.j - 1])}",
        f"antisymmetry gap max|b_ij + b_ji|: {_num(d.antisymmetry_gap)}",
        f"antisymmetry within 2*(se_ij + se_ji): {'yes' if d.antisymmetry_bound_ok else 'no'}",
        "raw diagonal: " + " ".join(_num(v) for v in d.raw_diagonal),
        f"max |corr(confounder, residual)|: {_num(d.max_orthogonality_corr)}",
        f"smallest cell count: {int(d.cell_counts.min())}",
        f"seconds: {d.seconds:.1f}",
    ]
    if d.tuning is not None:
        p = d.learner.params
        lines.append(f"tuned learner: max_depth={p.max_depth} learning_rate={p.learning_rate:g} "
                     f"n_stages={p.n_stages} (cv mse={_num(d.tuning.mse)})")
    return "\n".join(lines) + "\n"
