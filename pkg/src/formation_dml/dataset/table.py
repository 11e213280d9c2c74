"""Two-perspective analysis rows and the numeric confounder table."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from ..encoding import TreatmentCell
from .fixtures import WEATHER_FIELDS, Fixture, filter_rounds, filter_stages
from .formations import GROUP_INDEX, GROUP_LABELS, UnmappedFormationError, default_mapping
from .strength import STRENGTH_NAMES, StrengthFeatures, strength_table

# outcome selector -> Fixture attribute stem
TARGETS: dict[str, str] = {
    "goals": "goals",
    "red_cards": "red",
    "yellow_cards": "yellow",
    "possession": "possession",
    "corners": "corners",
}
WEEKDAYS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")


def check_target(target: str) -> str:
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r}; choose from {', '.join(TARGETS)}")
    return target


def target_difference(fx: Fixture, target: str) -> float:
    """Home-minus-away difference of the selected statistic."""
    stem = TARGETS[check_target(target)]
    return float(getattr(fx, f"home_{stem}")) - float(getattr(fx, f"away_{stem}"))


@dataclass(frozen=True)
class AnalysisRow:
    """One fixture seen from the main team's side."""

    fixture_id: str
    outcome: float
    cell: TreatmentCell
    is_home: bool
    main: StrengthFeatures
    rival: StrengthFeatures
    context: tuple[float, ...] = ()

    @property
    def confounders(self) -> np.ndarray:
        return np.array(
            [*self.context, float(self.is_home), *self.main.as_vector(), *self.rival.as_vector()]
        )

    def mirrored(self) -> "AnalysisRow":
        """The same fixture from the other team's side."""
        return replace(
            self,
            outcome=-self.outcome,
            cell=self.cell.transposed(),
            is_home=not self.is_home,
            main=self.rival,
            rival=self.main,
        )


def expand_perspectives(
    fixture: Fixture,
    target: str,
    home: StrengthFeatures,
    away: StrengthFeatures,
    mapping: dict[str, str] | None = None,
    context: Sequence[float] = (),
) -> tuple[AnalysisRow, AnalysisRow]:
    """Home-perspective row and its mirrored away-perspective sibling."""
    mapping = default_mapping() if mapping is None else mapping
    groups = []
    for raw in (fixture.home_formation_raw, fixture.away_formation_raw):
        if raw not in mapping:
            raise UnmappedFormationError(raw)
        groups.append(GROUP_INDEX[mapping[raw]])
    row = AnalysisRow(
        fixture_id=fixture.fixture_id,
        outcome=target_difference(fixture, target),
        cell=TreatmentCell(*groups),
        is_home=True,
        main=home,
        rival=away,
        context=tuple(float(c) for c in context),
    )
    return row, row.mirrored()


class ConfounderEncoder:
    """Fixed-width numeric encoding of the match context.

    Season, league and weekday are one-hot over the levels seen at fit
    time. Each weather field present in the data becomes a value column
    (missing imputed to the median) plus a missingness indicator.
    """

    def __init__(self, seasons, leagues, weekdays, weather_medians):
        self.seasons = list(seasons)
        self.leagues = list(leagues)
        self.weekdays = list(weekdays)
        self.weather_medians = dict(weather_medians)

    @classmethod
    def fit(cls, fixtures: Sequence[Fixture], weather_fields=WEATHER_FIELDS):
        medians = {}
        for name in weather_fields:
            vals = [getattr(f, name) for f in fixtures if getattr(f, name) is not None]
            if vals:
                medians[name] = float(np.median(vals))
        return cls(
            sorted({f.season for f in fixtures}),
            sorted({f.league for f in fixtures}),
            sorted({f.weekday for f in fixtures}),
            medians,
        )

    @property
    def context_names(self) -> list[str]:
        names = [f"season={s}" for s in self.seasons]
        names += [f"league={x}" for x in self.leagues]
        names += [f"dow={WEEKDAYS[d]}" for d in self.weekdays]
        for name in self.weather_medians:
            names += [name, f"{name}_missing"]
        return names

    @property
    def feature_names(self) -> list[str]:
        return (
            self.context_names
            + ["is_home"]
            + [f"main_{n}" for n in STRENGTH_NAMES]
            + [f"rival_{n}" for n in STRENGTH_NAMES]
        )

    def context(self, fx: Fixture) -> tuple[float, ...]:
        vec = [float(fx.season == s) for s in self.seasons]
        vec += [float(fx.league == x) for x in self.leagues]
        vec += [float(fx.weekday == d) for d in self.weekdays]
        for name, median in self.weather_medians.items():
            value = getattr(fx, name)
            vec += [median, 1.0] if value is None else [float(value), 0.0]
        return tuple(vec)


STAT_NAMES = ("goals", "red_cards", "yellow_cards", "possession", "corners")


@dataclass
class AnalysisTable:
    """Column-oriented store of analysis rows for every target at once.

    Rows come in fixture pairs (home perspective, then away perspective).
    ``cells`` holds 1-based (main, rival) group indices.
    """

    fixture_id: np.ndarray
    season: np.ndarray
    league: np.ndarray
    is_home: np.ndarray
    cells: np.ndarray
    X: np.ndarray
    feature_names: list[str]
    outcomes: dict[str, np.ndarray]
    main_stats: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.fixture_id)

    def outcome(self, target: str) -> np.ndarray:
        return self.outcomes[check_target(target)]

    def subset(self, mask) -> "AnalysisTable":
        idx = np.asarray(mask)
        return AnalysisTable(
            self.fixture_id[idx], self.season[idx], self.league[idx], self.is_home[idx],
            self.cells[idx], self.X[idx], list(self.feature_names),
            {k: v[idx] for k, v in self.outcomes.items()},
            {k: v[idx] for k, v in self.main_stats.items()},
        )

    def to_frame(self) -> pd.DataFrame:
        data = {
            "fixture_id": self.fixture_id,
            "season": self.season,
            "league": self.league,
            "is_home": self.is_home.astype(int),
            "main_group": [GROUP_LABELS[i - 1] for i in self.cells[:, 0]],
            "rival_group": [GROUP_LABELS[j - 1] for j in self.cells[:, 1]],
        }
        data.update({f"y_{t}": v for t, v in self.outcomes.items()})
        data.update({f"stat_{t}": v for t, v in self.main_stats.items()})
        data.update({f"x_{n}": self.X[:, c] for c, n in enumerate(self.feature_names)})
        return pd.DataFrame(data)

    def to_csv(self, path: str | Path) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.10g")

    @classmethod
    def read_csv(cls, path: str | Path) -> "AnalysisTable":
        df = pd.read_csv(path, dtype={"fixture_id": str, "season": str, "league": str})
        xcols = [c for c in df.columns if c.startswith("x_")]
        cells = np.column_stack([
            df["main_group"].map(GROUP_INDEX).to_numpy(),
            df["rival_group"].map(GROUP_INDEX).to_numpy(),
        ])
        if np.isnan(cells.astype(float)).any():
            raise ValueError(f"{path}: unknown formation group label")
        return cls(
            fixture_id=df["fixture_id"].to_numpy(object),
            season=df["season"].to_numpy(object),
            league=df["league"].to_numpy(object),
            is_home=df["is_home"].to_numpy(np.int8),
            cells=cells.astype(np.int64),
            X=df[xcols].to_numpy(np.float64),
            feature_names=[c[2:] for c in xcols],
            outcomes={c[2:]: df[c].to_numpy(np.float64) for c in df.columns if c.startswith("y_")},
            main_stats={c[5:]: df[c].to_numpy(np.float64) for c in df.columns if c.startswith("stat_")},
        )


def build_analysis_table(
    fixtures: Sequence[Fixture],
    strengths: dict[str, tuple[StrengthFeatures, StrengthFeatures]] | None = None,
    mapping: dict[str, str] | None = None,
    encoder: ConfounderEncoder | None = None,
) -> AnalysisTable:
    """Expand fixtures into perspective pairs with every target's outcome.

    ``strengths`` should come from :func:`strength_table` over the full
    regular season (before the round filter) so that early rounds still
    inform later fixtures.
    """
    mapping = default_mapping() if mapping is None else mapping
    unmapped = sorted({raw for f in fixtures for raw in (f.home_formation_raw, f.away_formation_raw)
                       if raw not in mapping})
    if unmapped:
        raise UnmappedFormationError(", ".join(unmapped))
    if strengths is None:
        strengths = strength_table(fixtures)
    encoder = encoder or ConfounderEncoder.fit(fixtures)

    ids, seasons, leagues, home_flags, cells, X = [], [], [], [], [], []
    outcomes = {t: [] for t in TARGETS}
    stats = {t: [] for t in STAT_NAMES}
    for fx in fixtures:
        home, away = strengths[fx.fixture_id]
        ctx = encoder.context(fx)
        row_h, row_a = expand_perspectives(fx, "goals", home, away, mapping, ctx)
        for row, side in ((row_h, "home"), (row_a, "away")):
            ids.append(fx.fixture_id)
            seasons.append(fx.season)
            leagues.append(fx.league)
            home_flags.append(row.is_home)
            cells.append(tuple(row.cell))
            X.append(row.confounders)
        for t in TARGETS:
            d = target_difference(fx, t)
            outcomes[t] += [d, -d]
        for t, stem in TARGETS.items():
            stats[t] += [float(getattr(fx, f"home_{stem}")), float(getattr(fx, f"away_{stem}"))]

    n_feat = len(encoder.feature_names)
    return AnalysisTable(
        fixture_id=np.array(ids, dtype=object),
        season=np.array(seasons, dtype=object),
        league=np.array(leagues, dtype=object),
        is_home=np.array(home_flags, dtype=np.int8),
        cells=np.array(cells, dtype=np.int64).reshape(-1, 2),
        X=np.array(X, dtype=np.float64).reshape(-1, n_feat),
        feature_names=encoder.feature_names,
        outcomes={t: np.array(v, dtype=np.float64) for t, v in outcomes.items()},
        main_stats={t: np.array(v, dtype=np.float64) for t, v in stats.items()},
    )


def prepare_analysis_table(
    fixtures: Sequence[Fixture],
    mapping: dict[str, str] | None = None,
    drop_first: int = 2,
    drop_last: int = 4,
    log=None,
) -> AnalysisTable:
    """Stage filter, strength features, round filter, then expansion.

    ``log`` (optional callable) receives one line per step with the
    fixture counts before and after.
    """
    log = log or (lambda msg: None)
    regular = filter_stages(fixtures)
    log(f"stage filter: {len(fixtures)} -> {len(regular)} fixtures")
    strengths = strength_table(regular)
    kept = filter_rounds(regular, drop_first, drop_last)
    log(f"round filter (drop first {drop_first}, last {drop_last}): {len(regular)} -> {len(kept)} fixtures")
    table = build_analysis_table(kept, strengths, mapping)
    log(f"perspective expansion: {len(kept)} fixtures -> {len(table)} rows")
    return table
