"""Fixture records, table parsing and the cleaning filters."""
from __future__ import annotations

import csv
import datetime as dt
from collections import defaultdict
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .formations import formation_problem

POSSESSION_TOLERANCE = 0.5

# canonical field -> required?
CANONICAL_FIELDS: dict[str, bool] = {
    "fixture_id": True,
    "season": True,
    "league": True,
    "round": True,
    "date": True,
    "home_team": True,
    "away_team": True,
    "home_formation": True,
    "away_formation": True,
    "home_goals": True,
    "away_goals": True,
    "home_corners": True,
    "away_corners": True,
    "home_possession": True,
    "away_possession": True,
    "home_yellow": True,
    "away_yellow": True,
    "home_red": True,
    "away_red": True,
    "home_cl": False,
    "away_cl": False,
    "temperature": False,
    "humidity": False,
    "stage": False,
}

WEATHER_FIELDS = ("temperature", "humidity")
NON_REGULAR_STAGES = ("play-off", "playoff", "play off", "play-out", "playout", "play out")


class SchemaError(ValueError):
    """The input header does not provide a mapped column."""


@dataclass(frozen=True)
class Fixture:
    fixture_id: str
    season: str
    league: str
    round: int
    date: dt.date
    home_team: str
    away_team: str
    home_formation_raw: str
    away_formation_raw: str
    home_goals: int
    away_goals: int
    home_corners: float
    away_corners: float
    home_possession: float
    away_possession: float
    home_yellow: float
    away_yellow: float
    home_red: float
    away_red: float
    home_cl_flag: bool = False
    away_cl_flag: bool = False
    temperature: float | None = None
    humidity: float | None = None
    stage: str = ""

    @property
    def weekday(self) -> int:
        return self.date.weekday()


class Reject(NamedTuple):
    fixture_id: str
    rule: str


def fixture_problems(fx: Fixture) -> list[str]:
    """Names of every invariant the fixture violates (empty when valid)."""
    problems = []
    if fx.round < 1:
        problems.append("round_positive")
    for side in ("home", "away"):
        rule = formation_problem(getattr(fx, f"{side}_formation_raw"))
        if rule:
            problems.append(f"{rule}:{side}")
    counts = ("goals", "corners", "yellow", "red", "possession")
    for name in counts:
        for side in ("home", "away"):
            if getattr(fx, f"{side}_{name}") < 0:
                problems.append(f"negative:{side}_{name}")
    if abs(fx.home_possession + fx.away_possession - 100.0) > POSSESSION_TOLERANCE:
        problems.append("possession_sum")
    if fx.home_team == fx.away_team:
        problems.append("same_team")
    return problems


def load_column_mapping(path: str | Path) -> dict[str, str]:
    """Read ``canonical = source`` lines into a column mapping.

    Lines of a shared run config are accepted too: keys may carry a
    ``column.`` prefix, and unprefixed keys that are not canonical fields
    are ignored.
    """
    mapping = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if not line or "=" not in line:
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if key.startswith("column."):
            key = key[len("column."):]
        if key in CANONICAL_FIELDS:
            mapping[key] = value
    return mapping


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "y", "t"):
        return True
    if t in ("", "0", "false", "no", "n", "f"):
        return False
    raise ValueError(text)


def _parse_optional_float(text: str) -> float | None:
    t = text.strip()
    if t == "" or t.lower() in ("na", "nan", "null", "none"):
        return None
    return float(t)


def _build_fixture(get) -> Fixture:
    # get(field) -> str | None; raises ValueError("unparseable:<field>") on bad values
    def num(name, conv=float):
        raw = get(name)
        try:
            return conv(raw)
        except (TypeError, ValueError):
            raise ValueError(f"unparseable:{name}") from None

    def count(name):
        value = num(name)
        if value != int(value):
            raise ValueError(f"unparseable:{name}")
        return int(value)

    def opt(name, conv):
        raw = get(name)
        if raw is None:
            return None
        try:
            return conv(raw)
        except ValueError:
            raise ValueError(f"unparseable:{name}") from None

    try:
        date = dt.date.fromisoformat(get("date").strip()[:10])
    except (AttributeError, ValueError):
        raise ValueError("unparseable:date") from None

    return Fixture(
        fixture_id=get("fixture_id").strip(),
        season=get("season").strip(),
        league=get("league").strip(),
        round=count("round"),
        date=date,
        home_team=get("home_team").strip(),
        away_team=get("away_team").strip(),
        home_formation_raw=get("home_formation").strip(),
        away_formation_raw=get("away_formation").strip(),
        home_goals=count("home_goals"),
        away_goals=count("away_goals"),
        home_corners=num("home_corners"),
        away_corners=num("away_corners"),
        home_possession=num("home_possession"),
        away_possession=num("away_possession"),
        home_yellow=num("home_yellow"),
        away_yellow=num("away_yellow"),
        home_red=num("home_red"),
        away_red=num("away_red"),
        home_cl_flag=bool(opt("home_cl", _parse_bool)),
        away_cl_flag=bool(opt("away_cl", _parse_bool)),
        temperature=opt("temperature", _parse_optional_float),
        humidity=opt("humidity", _parse_optional_float),
        stage=(get("stage") or "").strip(),
    )


def parse_fixture_table(
    path: str | Path,
    schema: dict[str, str] | None = None,
    delimiter: str = ",",
) -> tuple[list[Fixture], list[Reject]]:
    """Read a delimited fixture table.

    Parameters
    ----------
    path : path to a UTF-8 text file with a header row.
    schema : mapping canonical field -> source column name. Canonical
        fields missing from the mapping are looked up under their own name.
    delimiter : field separator.

    Returns
    -------
    fixtures, rejects
        Valid fixtures in file order, and one ``Reject`` per row that could
        not be parsed or broke an invariant.

    Raises
    ------
    SchemaError
        If the header lacks a required column (or an explicitly mapped one).
    """
    schema = dict(schema or {})
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        header = set(reader.fieldnames or [])
        columns = {}
        for name, required in CANONICAL_FIELDS.items():
            source = schema.get(name, name)
            if source in header:
                columns[name] = source
            elif required or name in schema:
                raise SchemaError(f"missing column {source!r} (field {name})")

        fixtures, rejects = [], []
        for lineno, record in enumerate(reader, start=2):
            fid = (record.get(columns["fixture_id"]) or "").strip() or f"line{lineno}"

            def get(name, record=record):
                col = columns.get(name)
                return None if col is None else record.get(col)

            try:
                fx = _build_fixture(get)
            except ValueError as exc:
                rejects.append(Reject(fid, str(exc)))
                continue
            problems = fixture_problems(fx)
            if problems:
                rejects.extend(Reject(fid, p) for p in problems)
                continue
            fixtures.append(fx)
    return fixtures, rejects


def write_fixture_table(fixtures: Iterable[Fixture], path: str | Path, delimiter: str = ",") -> None:
    """Write fixtures under canonical column names (inverse of parse)."""
    names = list(CANONICAL_FIELDS)
    attr = {"home_formation": "home_formation_raw", "away_formation": "away_formation_raw",
            "home_cl": "home_cl_flag", "away_cl": "away_cl_flag"}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow(names)
        for fx in fixtures:
            row = []
            for name in names:
                value = getattr(fx, attr.get(name, name))
                if value is None:
                    row.append("")
                elif isinstance(value, bool):
                    row.append("1" if value else "0")
                elif isinstance(value, float):
                    row.append(repr(value))
                else:
                    row.append(str(value))
            writer.writerow(row)


def write_rejects(rejects: Iterable[Reject], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["fixture_id", "rule"])
        writer.writerows(rejects)


def filter_stages(fixtures: Sequence[Fixture], drop: Sequence[str] = NON_REGULAR_STAGES) -> list[Fixture]:
    """Remove fixtures whose stage label names a play-off or play-out."""
    drop = tuple(d.lower() for d in drop)
    return [f for f in fixtures if not any(d in f.stage.lower() for d in drop)]


def filter_rounds(fixtures: Sequence[Fixture], drop_first: int = 2, drop_last: int = 4) -> list[Fixture]:
    """Drop the opening and closing rounds of every season-league.

    A fixture survives when ``drop_first < round <= max_round - drop_last``,
    with ``max_round`` taken per (season, league). Order is preserved.
    """
    if drop_first < 0 or drop_last < 0:
        raise ValueError("round counts must be non-negative")
    max_round: dict[tuple[str, str], int] = defaultdict(int)
    for f in fixtures:
        key = (f.season, f.league)
        max_round[key] = max(max_round[key], f.round)
    return [
        f for f in fixtures
        if drop_first < f.round <= max_round[(f.season, f.league)] - drop_last
    ]


FIXTURE_FIELDS = tuple(f.name for f in fields(Fixture))
