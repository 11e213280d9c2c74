"""Synthetic fixtures with a known formation effect matrix.

Every team-season gets a latent strength ``s ~ N(0, 1)``. Before each
match both teams pick a formation group from a softmax whose logits are
``confounding_strength * z * u_g``: ``u_g`` runs from -1 (most defensive
group) to +1 (most offensive), and ``z`` is the team's observed points
ratio minus its opponent's, computed from earlier results exactly as the
dataset module does. Teams in form lean offensive, teams facing stronger
sides lean defensive.

Formation choice therefore depends only on quantities that end up in the
confounder table, while the outcome also depends on the latent strength
difference. The naive cell mean picks up that strength gap; the
residualized estimator does not.

The home-minus-away goal difference has expectation::

    true_beta[i, j] + home_advantage + strength_effect * (s_home - s_away)

and is realized as ``floor(mean + noise + U)``, ``U ~ Uniform(0, 1)``
(stochastic rounding keeps the expectation exact). The other box-score
statistics follow the same linear predictor with per-target scales.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field, replace
from itertools import groupby
from pathlib import Path

import numpy as np

from .dataset.fixtures import Fixture
from .dataset.formations import GROUP_LABELS, default_mapping
from .dataset.strength import _Record, match_points
from .dataset.table import TARGETS, AnalysisTable, check_target

# multiplier applied to (beta + home + strength) for each target's difference
TARGET_SCALES = {
    "goals": 1.0,
    "corners": 1.5,
    "yellow_cards": -0.5,
    "possession": 20.0,
    "red_cards": 0.0,
}
CL_PLACES = 4


def default_true_beta(k: int = 6) -> np.ndarray:
    """Offensive groups beat defensive ones: 0.1 per index step, capped at 0.3."""
    idx = np.arange(k)
    gap = idx[:, None] - idx[None, :]
    return 0.1 * np.sign(gap) * np.minimum(np.abs(gap), 3)


@dataclass(frozen=True)
class SynthConfig:
    n_teams: int = 20
    n_seasons: int = 7
    n_leagues: int = 9
    k: int = 6
    true_beta: np.ndarray = field(default_factory=default_true_beta)
    home_advantage: float = 0.285
    strength_effect: float = 0.3
    confounding_strength: float = 2.0
    noise_sd: float = 0.3
    weather_missing: float = 0.05
    first_season: int = 2015
    seed: int = 0

    def validate(self) -> "SynthConfig":
        beta = np.asarray(self.true_beta, dtype=np.float64)
        if beta.shape != (self.k, self.k):
            raise ValueError(f"true_beta must be {self.k}x{self.k}, got {beta.shape}")
        if not np.allclose(beta, -beta.T, atol=1e-12, rtol=0):
            raise ValueError("true_beta must be antisymmetric (beta[i, j] == -beta[j, i])")
        if self.n_teams < 4 or self.n_teams % 2:
            raise ValueError(f"n_teams must be even and >= 4, got {self.n_teams}")
        if self.n_seasons < 1 or self.n_leagues < 1:
            raise ValueError("n_seasons and n_leagues must be positive")
        if self.noise_sd <= 0:
            raise ValueError("noise_sd must be positive")
        if not 0 <= self.weather_missing <= 1:
            raise ValueError("weather_missing must be a probability")
        if self.k > len(GROUP_LABELS):
            raise ValueError(f"k={self.k} exceeds the {len(GROUP_LABELS)} known groups")
        return self

    @property
    def n_rounds(self) -> int:
        return 2 * (self.n_teams - 1)

    @property
    def n_fixtures(self) -> int:
        return self.n_seasons * self.n_leagues * self.n_rounds * self.n_teams // 2

    def null(self) -> "SynthConfig":
        return replace(self, true_beta=np.zeros((self.k, self.k)))


@dataclass(frozen=True)
class Truth:
    true_beta: np.ndarray
    home_advantage: float
    target_scales: dict
    strengths: dict  # (season, league, team) -> latent strength

    def beta_for(self, target: str) -> np.ndarray:
        return TARGET_SCALES[check_target(target)] * self.true_beta

    def home_for(self, target: str) -> float:
        return TARGET_SCALES[check_target(target)] * self.home_advantage


def oracle_beta(config: SynthConfig) -> np.ndarray:
    return np.asarray(config.true_beta, dtype=np.float64)


def round_robin(n_teams: int) -> list[list[tuple[int, int]]]:
    """Double round-robin by the circle method: list of rounds of (home, away).

    Venues alternate the way real fixture lists do: no team is ever more
    than two home games ahead of or behind its away games. The second half
    mirrors the first with venues swapped.
    """
    n, m = n_teams, n_teams - 1
    rounds = []
    for r in range(m):
        pairs = [(r, n - 1) if r % 2 == 0 else (n - 1, r)]
        for k in range(1, n // 2):
            a, b = (r + k) % m, (r - k) % m
            pairs.append((a, b) if k % 2 else (b, a))
        rounds.append(pairs)
    return rounds + [[(b, a) for a, b in pairs] for pairs in rounds]


def _season_start(year: int) -> dt.date:
    d = dt.date(year, 8, 1)
    return d + dt.timedelta(days=(5 - d.weekday()) % 7)  # first Saturday


def _raw_names(k: int) -> list[list[str]]:
    mapping = default_mapping()
    return [sorted(raw for raw, g in mapping.items() if g == GROUP_LABELS[i]) for i in range(k)]


def _stochastic_round(x: np.ndarray | float, rng) -> int:
    return int(np.floor(x + rng.random()))


def _box_score(mean: float, noise_sd: float, rng) -> dict:
    """Home/away statistics whose differences realize ``mean`` per target."""
    out = {}
    for target, scale in TARGET_SCALES.items():
        stem = TARGETS[target]
        if target == "possession":
            home = 50.0 + 0.5 * scale * mean + rng.normal(0.0, 0.5 * scale * noise_sd)
            home = round(float(np.clip(home, 20.0, 80.0)), 1)
            out["home_possession"], out["away_possession"] = home, round(100.0 - home, 1)
            continue
        if target == "goals":
            d = _stochastic_round(mean + rng.normal(0.0, noise_sd), rng)
            base = rng.poisson(1.1)
        elif target == "red_cards":
            out["home_red"], out["away_red"] = float(rng.poisson(0.1)), float(rng.poisson(0.1))
            continue
        else:
            d = _stochastic_round(scale * mean + rng.normal(0.0, abs(scale) * noise_sd), rng)
            base = rng.poisson(4.0 if target == "corners" else 1.8)
        out[f"home_{stem}"] = base + max(d, 0)
        out[f"away_{stem}"] = base + max(-d, 0)
    out["home_goals"], out["away_goals"] = int(out["home_goals"]), int(out["away_goals"])
    for name in ("corners", "yellow"):
        out[f"home_{name}"], out[f"away_{name}"] = float(out[f"home_{name}"]), float(out[f"away_{name}"])
    return out


def _competition(config: SynthConfig, season: int, league: int, raw_names):
    """Fixtures of one season-league, generated date by date."""
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, season, league]))
    n, k = config.n_teams, config.k
    beta = oracle_beta(config)
    u = np.linspace(-1.0, 1.0, k)
    year = config.first_season + season
    season_name = f"{year}-{(year + 1) % 100:02d}"
    league_name = f"L{league + 1}"
    teams = [f"{league_name}T{t + 1:02d}" for t in range(n)]
    strength = rng.standard_normal(n)
    cl = np.zeros(n, dtype=bool)
    cl[np.argsort(-strength)[:CL_PLACES]] = True
    order = rng.permutation(n)

    start = _season_start(year)
    schedule = []
    for r, pairs in enumerate(round_robin(n), start=1):
        offsets = rng.integers(0, 3, size=len(pairs))
        for m, (a, b) in enumerate(pairs):
            date = start + dt.timedelta(days=7 * (r - 1) + int(offsets[m]))
            schedule.append((date, r, m, order[a], order[b]))
    schedule.sort(key=lambda s: (s[0], s[1], s[2]))

    records = [_Record() for _ in range(n)]
    fixtures = []
    for _, day in groupby(schedule, key=lambda s: s[0]):
        day = list(day)
        played = []
        for date, r, m, h, a in day:
            ratio = [records[t].features(side, 0, False).points_ratio_overall for t, side in ((h, True), (a, False))]
            z = ratio[0] - ratio[1]
            groups = []
            for sign in (1.0, -1.0):
                logits = config.confounding_strength * sign * z * u
                p = np.exp(logits - logits.max())
                groups.append(rng.choice(k, p=p / p.sum()))
            gi, gj = groups
            mean = beta[gi, gj] + config.home_advantage + config.strength_effect * (strength[h] - strength[a])
            box = _box_score(mean, config.noise_sd, rng)
            temp = None if rng.random() < config.weather_missing else round(float(rng.normal(15.0, 7.0)), 1)
            hum = None if rng.random() < config.weather_missing else round(float(rng.uniform(40.0, 90.0)), 1)
            fx = Fixture(
                fixture_id=f"{season_name}-{league_name}-R{r:02d}-M{m + 1:02d}",
                season=season_name,
                league=league_name,
                round=r,
                date=date,
                home_team=teams[h],
                away_team=teams[a],
                home_formation_raw=raw_names[gi][rng.integers(len(raw_names[gi]))],
                away_formation_raw=raw_names[gj][rng.integers(len(raw_names[gj]))],
                home_cl_flag=bool(cl[h]),
                away_cl_flag=bool(cl[a]),
                temperature=temp,
                humidity=hum,
                **box,
            )
            fixtures.append(fx)
            played.append((fx, h, a))
        # results enter the records only after the whole match day
        for fx, h, a in played:
            hp, ap = match_points(fx)
            records[h].add(hp, True)
            records[a].add(ap, False)
    strengths = {(season_name, league_name, teams[t]): float(strength[t]) for t in range(n)}
    return fixtures, strengths


def generate(config: SynthConfig | None = None) -> tuple[list[Fixture], Truth]:
    """Simulate every season-league; output order is season, league, date."""
    config = (config or SynthConfig()).validate()
    raw_names = _raw_names(config.k)
    fixtures, strengths = [], {}
    for season in range(config.n_seasons):
        for league in range(config.n_leagues):
            fx, st = _competition(config, season, league, raw_names)
            fixtures += fx
            strengths.update(st)
    truth = Truth(oracle_beta(config).copy(), float(config.home_advantage), dict(TARGET_SCALES), strengths)
    return fixtures, truth


def naive_cell_means(table: AnalysisTable, target: str = "goals", k: int = 6):
    """Per-cell mean outcome and its standard error (no adjustment).

    Returns ``(mean, se, count)`` as K x K arrays; empty cells are NaN.
    """
    y = table.outcome(target)
    flat = (table.cells[:, 0] - 1) * k + (table.cells[:, 1] - 1)
    count = np.bincount(flat, minlength=k * k).astype(float)
    s1 = np.bincount(flat, weights=y, minlength=k * k)
    s2 = np.bincount(flat, weights=y * y, minlength=k * k)
    with np.errstate(divide="ignore", invalid="ignore"):
        mean = s1 / count
        var = (s2 - count * mean**2) / (count - 1)
        se = np.sqrt(np.clip(var, 0.0, None) / count)
    return mean.reshape(k, k), se.reshape(k, k), count.reshape(k, k).astype(int)


def write_truth(truth: Truth, path: str | Path, k: int | None = None) -> None:
    """Truth file: key=value header lines, then the labelled beta grid."""
    beta = truth.true_beta
    k = k or beta.shape[0]
    labels = GROUP_LABELS[:k]
    lines = [f"home_advantage={truth.home_advantage:.10g}"]
    lines += [f"scale.{t}={s:.10g}" for t, s in truth.target_scales.items()]
    lines.append("main\\rival," + ",".join(labels))
    for i in range(k):
        lines.append(labels[i] + "," + ",".join(f"{v:.10g}" for v in beta[i]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_truth(path: str | Path) -> tuple[np.ndarray, float]:
    home, grid = 0.0, []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("home_advantage="):
            home = float(line.split("=", 1)[1])
        elif "," in line and not line.startswith("main\\rival"):
            grid.append([float(v) for v in line.split(",")[1:]])
    return np.array(grid), home


def load_synth_config(path: str | Path, base: SynthConfig | None = None) -> SynthConfig:
    """Override SynthConfig fields from ``key=value`` lines (unknown keys ignored)."""
    cfg = base or SynthConfig()
    casts = {"n_teams": int, "n_seasons": int, "n_leagues": int, "k": int, "seed": int,
             "first_season": int, "home_advantage": float, "strength_effect": float,
             "confounding_strength": float, "noise_sd": float, "weather_missing": float}
    updates = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if "=" not in line:
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.removeprefix("synth.")
        if key in casts:
            updates[key] = casts[key](value)
    cfg = replace(cfg, **updates)
    if "k" in updates and np.shape(cfg.true_beta) != (cfg.k, cfg.k):
        cfg = replace(cfg, true_beta=default_true_beta(cfg.k))
    return cfg
