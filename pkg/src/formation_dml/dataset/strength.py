"""Pre-match team strength features built from prior results only."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from itertools import groupby
from typing import Sequence

from .fixtures import Fixture

NO_HISTORY_RATIO = 0.5


@dataclass(frozen=True)
class StrengthFeatures:
    points_ratio_overall: float
    points_ratio_side: float
    ranking: int
    streak: int
    cl_flag: bool

    def as_vector(self) -> list[float]:
        return [
            self.points_ratio_overall,
            self.points_ratio_side,
            float(self.ranking),
            float(self.streak),
            float(self.cl_flag),
        ]


STRENGTH_NAMES = ("points_ratio_overall", "points_ratio_side", "ranking", "streak", "cl_flag")


def match_points(fx: Fixture) -> tuple[int, int]:
    if fx.home_goals > fx.away_goals:
        return 3, 0
    if fx.home_goals < fx.away_goals:
        return 0, 3
    return 1, 1


def competition_ranks(points: dict[str, int]) -> dict[str, int]:
    """Rank teams by points, equal points sharing the best rank (1, 1, 3)."""
    return {team: 1 + sum(1 for q in points.values() if q > p) for team, p in points.items()}


class _Record:
    __slots__ = ("points", "played", "home_points", "home_played", "away_points", "away_played", "streak")

    def __init__(self):
        self.points = self.played = 0
        self.home_points = self.home_played = 0
        self.away_points = self.away_played = 0
        self.streak = 0

    def add(self, pts: int, home: bool):
        self.points += pts
        self.played += 1
        if home:
            self.home_points += pts
            self.home_played += 1
        else:
            self.away_points += pts
            self.away_played += 1
        self.streak = self.streak + 1 if pts == 3 else 0

    def features(self, home: bool, rank: int, cl_flag: bool) -> StrengthFeatures:
        overall = self.points / (3 * self.played) if self.played else NO_HISTORY_RATIO
        if home:
            side = self.home_points / (3 * self.home_played) if self.home_played else NO_HISTORY_RATIO
        else:
            side = self.away_points / (3 * self.away_played) if self.away_played else NO_HISTORY_RATIO
        return StrengthFeatures(overall, side, rank, self.streak, bool(cl_flag))


def compute_strength_features(
    fixtures: Sequence[Fixture],
    team: str,
    as_of: Fixture,
    side: str | None = None,
) -> StrengthFeatures:
    """Strength of ``team`` entering the ``as_of`` fixture.

    Only fixtures of the same season and league dated strictly before
    ``as_of`` are used. ``side`` ("home"/"away") selects which venue split
    feeds ``points_ratio_side``; it defaults to the team's side in
    ``as_of``. Ranking is over every team seen in that season-league.
    """
    pool = [f for f in fixtures if f.season == as_of.season and f.league == as_of.league]
    teams = {t for f in pool for t in (f.home_team, f.away_team)}
    if team not in teams:
        raise KeyError(f"team {team!r} does not play in {as_of.league} {as_of.season}")
    if side is None:
        if team == as_of.home_team:
            side = "home"
        elif team == as_of.away_team:
            side = "away"
        else:
            raise ValueError(f"team {team!r} is not in fixture {as_of.fixture_id}; pass side")

    prior = sorted((f for f in pool if f.date < as_of.date), key=lambda f: f.date)
    records = {t: _Record() for t in teams}
    for f in prior:
        hp, ap = match_points(f)
        records[f.home_team].add(hp, True)
        records[f.away_team].add(ap, False)
    ranks = competition_ranks({t: r.points for t, r in records.items()})

    if team == as_of.home_team:
        cl = as_of.home_cl_flag
    elif team == as_of.away_team:
        cl = as_of.away_cl_flag
    else:
        own = [f for f in prior if team in (f.home_team, f.away_team)]
        cl = bool(own) and (own[-1].home_cl_flag if own[-1].home_team == team else own[-1].away_cl_flag)
    return records[team].features(side == "home", ranks[team], cl)


def strength_table(fixtures: Sequence[Fixture]) -> dict[str, tuple[StrengthFeatures, StrengthFeatures]]:
    """Home and away strength features for every fixture, in one pass.

    Equivalent to calling :func:`compute_strength_features` for both teams
    of each fixture, but linear in the number of fixtures per date.
    """
    out: dict[str, tuple[StrengthFeatures, StrengthFeatures]] = {}
    by_comp: dict[tuple[str, str], list[Fixture]] = defaultdict(list)
    for f in fixtures:
        by_comp[(f.season, f.league)].append(f)

    for comp in by_comp.values():
        comp.sort(key=lambda f: f.date)
        records = {t: _Record() for f in comp for t in (f.home_team, f.away_team)}
        for _, day in groupby(comp, key=lambda f: f.date):
            day = list(day)
            ranks = competition_ranks({t: r.points for t, r in records.items()})
            for f in day:
                out[f.fixture_id] = (
                    records[f.home_team].features(True, ranks[f.home_team], f.home_cl_flag),
                    records[f.away_team].features(False, ranks[f.away_team], f.away_cl_flag),
                )
            for f in day:
                hp, ap = match_points(f)
                records[f.home_team].add(hp, True)
                records[f.away_team].add(ap, False)
    return out
