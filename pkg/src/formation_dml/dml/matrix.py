"""K x K effect matrix: assembly, significance labels, home-side shift."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset.formations import GROUP_LABELS
from ..encoding import TreatmentCell, cell_columns, recover_omitted_beta
from .final_stage import two_sided_p

STAR_LEVELS = ((0.001, "***"), (0.01, "**"), (0.05, "*"))
OMITTED_MARK = "†"


def significance_stars(p: float) -> str:
    """'***' p<0.001, '**' p<0.01, '*' p<0.05, else 'ns' (strict inequalities)."""
    for cut, label in STAR_LEVELS:
        if p < cut:
            return label
    return "ns"


def format_cell(value: float, stars: str, digits: int = 2) -> str:
    text = f"{value:.{digits}f}"
    if text.startswith("-") and float(text) == 0:
        text = text[1:]
    return text if stars == "ns" else text + stars


@dataclass
class BetaMatrix:
    """Effect estimates on the K x K (main, rival) grid.

    ``beta`` holds the raw estimates, including the diagonal cells and the
    omitted cell recovered as minus the sum of the others. ``displayed()``
    zeroes the diagonal for presentation.
    """

    k: int
    beta: np.ndarray
    se: np.ndarray
    p: np.ndarray
    stars: np.ndarray
    cell_counts: np.ndarray
    omitted: TreatmentCell
    home_effect: float | None = None
    labels: tuple[str, ...] = GROUP_LABELS

    @property
    def raw_diagonal(self) -> np.ndarray:
        return np.diag(self.beta).copy()

    def displayed(self) -> np.ndarray:
        out = self.beta.copy()
        np.fill_diagonal(out, 0.0)
        return out

    def antisymmetry_gap(self) -> float:
        gap = np.abs(self.beta + self.beta.T)
        np.fill_diagonal(gap, 0.0)
        return float(gap.max())

    def render(self, side_adjusted: bool = False, digits: int = 2) -> str:
        """Plain-text grid; diagonal shown as 0, omitted cell marked with a dagger."""
        values = side_adjust(self) if side_adjusted else self.displayed()
        labels = list(self.labels[: self.k])
        head = ["main \\ rival"] + labels
        rows = [head]
        for i in range(self.k):
            row = [labels[i]]
            for j in range(self.k):
                stars = "ns" if i == j else self.stars[i, j]
                text = format_cell(values[i, j], stars, digits)
                if (i + 1, j + 1) == tuple(self.omitted):
                    text += OMITTED_MARK
                row.append(text)
            rows.append(row)
        widths = [max(len(r[c]) for r in rows) for c in range(len(head))]
        lines = ["  ".join(cell.rjust(w) for cell, w in zip(r, widths)) for r in rows]
        lines.append("")
        lines.append("*** p<0.001, ** p<0.01, * p<0.05, unmarked: ns (p>=0.05); "
                     f"{OMITTED_MARK} omitted cell recovered as minus the sum of the others")
        if side_adjusted:
            lines.append(f"side-adjusted: every cell shifted by home effect {self.home_effect:.4f}")
        return "\n".join(lines)


def assemble_matrix(
    coef,
    cov,
    k: int,
    home_effect: float | None = None,
    cell_counts=None,
    omitted: tuple[int, int] | None = None,
    p_reference: str = "normal",
    df: int | None = None,
) -> BetaMatrix:
    """Place k*k - 1 coefficients on the grid and recover the omitted cell.

    The omitted cell's standard error is the delta-method one: the variance
    of minus the coefficient sum is the sum of every covariance entry.
    """
    coef = np.asarray(coef, dtype=np.float64)
    cov = np.asarray(cov, dtype=np.float64)
    columns = cell_columns(k, omitted)
    if coef.shape != (len(columns),):
        raise ValueError(f"expected {len(columns)} coefficients for k={k}, got {coef.shape}")
    omitted = TreatmentCell(*(omitted or (k, k)))

    beta = np.zeros((k, k))
    var = np.zeros((k, k))
    for c, cell in enumerate(columns):
        beta[cell.i - 1, cell.j - 1] = coef[c]
        var[cell.i - 1, cell.j - 1] = cov[c, c]
    beta[omitted.i - 1, omitted.j - 1] = recover_omitted_beta(coef)
    var[omitted.i - 1, omitted.j - 1] = cov.sum()
    se = np.sqrt(np.clip(var, 0.0, None))

    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / se, np.where(beta == 0, 0.0, np.sign(beta) * np.inf))
    p = two_sided_p(t, p_reference, df)
    stars = np.array([[significance_stars(v) for v in row] for row in p], dtype=object)
    counts = np.zeros((k, k), dtype=np.int64) if cell_counts is None else np.asarray(cell_counts)
    return BetaMatrix(k, beta, se, p, stars, counts, omitted, home_effect)


def estimate_home_effect(outcome, is_home) -> float:
    """Mean outcome over home-perspective rows."""
    outcome = np.asarray(outcome, dtype=np.float64)
    mask = np.asarray(is_home).astype(bool)
    if not mask.any():
        raise ValueError("no home-perspective rows")
    return float(outcome[mask].mean())


def side_adjust(matrix: BetaMatrix) -> np.ndarray:
    """Displayed grid shifted by the home effect (significance unchanged)."""
    if matrix.home_effect is None:
        raise ValueError("matrix carries no home effect")
    return matrix.displayed() + matrix.home_effect


def cell_count_grid(cells: np.ndarray, k: int) -> np.ndarray:
    cells = np.asarray(cells).reshape(-1, 2)
    flat = (cells[:, 0] - 1) * k + (cells[:, 1] - 1)
    return np.bincount(flat, minlength=k * k).reshape(k, k)
