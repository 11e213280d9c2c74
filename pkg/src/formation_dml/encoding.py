"""Effect coding of the K x K formation-cell treatment."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class TreatmentCell(NamedTuple):
    """(main formation group, rival formation group), both 1-based."""

    i: int
    j: int

    def transposed(self) -> "TreatmentCell":
        return TreatmentCell(self.j, self.i)


def cell_columns(k: int, omitted: tuple[int, int] | None = None) -> list[TreatmentCell]:
    """Row-major list of the k*k - 1 coded cells (the omitted cell is skipped)."""
    if k < 2:
        raise ValueError(f"need at least 2 formation groups, got k={k}")
    omitted = TreatmentCell(*(omitted or (k, k)))
    if not (1 <= omitted.i <= k and 1 <= omitted.j <= k):
        raise ValueError(f"omitted cell {tuple(omitted)} outside a {k}x{k} grid")
    return [TreatmentCell(i, j) for i in range(1, k + 1) for j in range(1, k + 1)
            if (i, j) != tuple(omitted)]


@dataclass(frozen=True)
class EffectCodedMatrix:
    columns: tuple[TreatmentCell, ...]
    values: np.ndarray  # (n, k*k - 1), entries in {-1, 0, 1}
    row_cells: np.ndarray  # (n, 2), 1-based
    k: int
    omitted: TreatmentCell

    def column_index(self, cell) -> int:
        return self.columns.index(TreatmentCell(*cell))

    def to_csv(self, path) -> None:
        header = "main,rival," + ",".join(f"d_{c.i}_{c.j}" for c in self.columns)
        body = np.column_stack([self.row_cells, self.values.astype(int)])
        np.savetxt(path, body, fmt="%d", delimiter=",", header=header, comments="")


def _cell_array(rows) -> np.ndarray:
    if isinstance(rows, np.ndarray):
        arr = rows
    else:
        arr = np.array([tuple(getattr(r, "cell", r)) for r in rows], dtype=np.int64)
    return arr.reshape(-1, 2).astype(np.int64)


def build_effect_coded_matrix(rows, k: int, omitted: tuple[int, int] | None = None) -> EffectCodedMatrix:
    """Effect-code each row's treatment cell.

    ``rows`` may be AnalysisRows, TreatmentCells / ``(i, j)`` pairs, or an
    ``(n, 2)`` integer array. A row in the omitted cell is -1 in every
    column; any other row is +1 in its own column and 0 elsewhere.
    """
    columns = cell_columns(k, omitted)
    omitted = TreatmentCell(*(omitted or (k, k)))
    cells = _cell_array(rows)
    if cells.size and (cells.min() < 1 or cells.max() > k):
        raise ValueError(f"cell index outside 1..{k}")

    flat = (cells[:, 0] - 1) * k + (cells[:, 1] - 1)
    omitted_flat = (omitted.i - 1) * k + (omitted.j - 1)
    # position of each flat cell among the coded columns
    col_of = np.arange(k * k)
    col_of[omitted_flat + 1:] -= 1
    col_of[omitted_flat] = -1

    values = np.zeros((len(cells), k * k - 1), dtype=np.float64)
    is_ref = flat == omitted_flat
    coded = ~is_ref
    values[np.flatnonzero(coded), col_of[flat[coded]]] = 1.0
    values[is_ref] = -1.0
    return EffectCodedMatrix(tuple(columns), values, cells, k, omitted)


def decode_cells(values: np.ndarray, columns: Sequence[TreatmentCell], omitted) -> list[TreatmentCell]:
    """Invert effect coding row by row."""
    out = []
    for row in np.asarray(values):
        if np.all(row == -1):
            out.append(TreatmentCell(*omitted))
        else:
            out.append(columns[int(np.argmax(row))])
    return out


def recover_omitted_beta(betas: Iterable[float]) -> float:
    """Coefficient of the omitted cell: minus the sum of all coded ones."""
    return -float(np.sum(np.asarray(list(betas), dtype=np.float64)))
