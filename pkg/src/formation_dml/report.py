"""Descriptive tables and the effect-matrix heatmap."""
from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from .dataset.formations import GROUP_LABELS
from .dataset.table import STAT_NAMES, AnalysisTable
from .dml.matrix import OMITTED_MARK, format_cell


class EmptyTableError(ValueError):
    pass


def _main_groups(table: AnalysisTable, k: int) -> pd.Categorical:
    return pd.Categorical([GROUP_LABELS[i - 1] for i in table.cells[:, 0]], categories=GROUP_LABELS[:k])


def formation_usage(table: AnalysisTable, k: int = 6) -> pd.DataFrame:
    """Percentage of team-matches using each group, one row per league.

    Every analysis row is one team in one match, so both sides of a fixture
    count. Rows sum to 100 up to floating point.
    """
    if len(table) == 0:
        raise EmptyTableError("analysis table has no rows")
    df = pd.DataFrame({"league": table.league, "group": _main_groups(table, k)})
    counts = pd.crosstab(df["league"], df["group"], dropna=False)
    counts = counts.reindex(columns=list(GROUP_LABELS[:k]), fill_value=0)
    pct = counts.div(counts.sum(axis=1), axis=0) * 100.0
    pct.index.name = "league"
    pct.columns.name = None
    return pct


def formation_averages(table: AnalysisTable, k: int = 6) -> pd.DataFrame:
    """Mean per-team match statistics by the team's own formation group."""
    if len(table) == 0:
        raise EmptyTableError("analysis table has no rows")
    missing = [s for s in STAT_NAMES if s not in table.main_stats]
    if missing:
        raise ValueError(f"table lacks per-team statistics: {', '.join(missing)}")
    df = pd.DataFrame({s: table.main_stats[s] for s in STAT_NAMES})
    df["group"] = _main_groups(table, k)
    out = df.groupby("group", observed=False)[list(STAT_NAMES)].mean()
    out["n"] = df.groupby("group", observed=False).size()
    out.index.name = "formation"
    return out


def first_stage_table(first_stage: dict) -> pd.DataFrame:
    rows = [(name, rep.mse, rep.r2) for name, rep in first_stage.items()]
    return pd.DataFrame(rows, columns=["target", "mse", "r2"]).set_index("target")


def render_heatmap(values, stars, path, labels=None, omitted=None, title=None) -> Path:
    """Diverging heatmap centered at 0 with value and star annotations.

    ``stars`` is a K x K array of labels; ``"ns"`` cells are printed bare.
    The omitted cell gets a dagger. Output format follows the file suffix
    (use ``.svg`` for vector output).
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    values = np.asarray(values, dtype=float)
    k = values.shape[0]
    labels = list(labels or GROUP_LABELS[:k])
    vmax = float(np.nanmax(np.abs(values))) or 1.0

    fig, ax = plt.subplots(figsize=(1.1 * k + 2, 1.0 * k + 1.5))
    im = ax.imshow(values, cmap="RdBu_r", vmin=-vmax, vmax=vmax)
    for i in range(k):
        for j in range(k):
            text = format_cell(values[i, j], "ns" if i == j else stars[i][j])
            if omitted is not None and (i + 1, j + 1) == tuple(omitted):
                text += OMITTED_MARK
            dark = abs(values[i, j]) > 0.6 * vmax
            ax.text(j, i, text, ha="center", va="center", fontsize=9, color="white" if dark else "black")
    ax.set_xticks(range(k), labels, rotation=45, ha="right")
    ax.set_yticks(range(k), labels)
    ax.set_xlabel("rival formation")
    ax.set_ylabel("main formation")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04)
    fig.text(0.01, 0.01, "*** p<0.001  ** p<0.01  * p<0.05", fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, metadata={"Date": None} if path.suffix == ".svg" else None)
    plt.close(fig)
    return path


def matrix_heatmap(matrix, path, side_adjusted: bool = False, title=None) -> Path:
    from .dml.matrix import side_adjust

    values = side_adjust(matrix) if side_adjusted else matrix.displayed()
    return render_heatmap(values, matrix.stars, path, matrix.labels[: matrix.k], matrix.omitted, title)
