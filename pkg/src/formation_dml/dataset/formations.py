"""Formation strings and the six canonical formation groups."""
from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

# Ordered from most defensive to most offensive; index = position + 1.
GROUP_LABELS: tuple[str, ...] = ("5-4-1", "4-4-2", "3-5-2", "4-2-3-1", "4-3-3", "3-4-3")
GROUP_INDEX: dict[str, int] = {label: i + 1 for i, label in enumerate(GROUP_LABELS)}

_FORMATION_RE = re.compile(r"^\d+(-\d+){1,3}$")


class UnmappedFormationError(KeyError):
    """Raised when a raw formation string has no entry in the grouping table."""

    def __init__(self, raw):
        self.raw = raw
        super().__init__(f"unmapped formation {raw!r}")

    def __str__(self):
        return self.args[0]


def formation_problem(raw: str) -> str | None:
    """Return the name of the rule a raw formation string breaks, or None.

    A valid formation is 2 to 4 hyphen-separated positive integers that sum
    to the ten outfield players.
    """
    text = str(raw).strip()
    if not _FORMATION_RE.match(text):
        return "formation_format"
    parts = [int(p) for p in text.split("-")]
    if any(p <= 0 for p in parts):
        return "formation_format"
    if sum(parts) != 10:
        return "formation_outfield_sum"
    return None


def group_label(index: int) -> str:
    return GROUP_LABELS[index - 1]


def load_formation_mapping(path: str | Path | None = None) -> dict[str, str]:
    """Read a two-column ``raw group`` table.

    Columns may be separated by whitespace or a comma; ``#`` starts a
    comment. With no path, the shipped default table is loaded.
    """
    if path is None:
        text = resources.files("formation_dml").joinpath("data/formation_groups.txt").read_text()
        source = "default mapping"
    else:
        text = Path(path).read_text(encoding="utf-8")
        source = str(path)

    mapping: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [f for f in re.split(r"[,\s]+", line) if f]
        if len(fields) != 2:
            raise ValueError(f"{source}:{lineno}: expected two columns, got {len(fields)}")
        raw, group = fields
        if group not in GROUP_INDEX:
            raise ValueError(f"{source}:{lineno}: unknown group {group!r}")
        mapping[raw] = group
    return mapping


def group_formation(raw: str, mapping: dict[str, str] | None = None) -> int:
    """Map a raw formation string to its group index (1..6)."""
    if mapping is None:
        mapping = default_mapping()
    key = str(raw).strip()
    try:
        return GROUP_INDEX[mapping[key]]
    except KeyError:
        raise UnmappedFormationError(key) from None


_DEFAULT: dict[str, str] | None = None


def default_mapping() -> dict[str, str]:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_formation_mapping()
    return _DEFAULT
