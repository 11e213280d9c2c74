import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_fixture
from formation_dml.dataset import (
    GROUP_LABELS,
    AnalysisTable,
    ConfounderEncoder,
    SchemaError,
    UnmappedFormationError,
    build_analysis_table,
    competition_ranks,
    compute_strength_features,
    default_mapping,
    expand_perspectives,
    filter_rounds,
    filter_stages,
    group_formation,
    load_column_mapping,
    load_formation_mapping,
    parse_fixture_table,
    prepare_analysis_table,
    strength_table,
    write_fixture_table,
)
from formation_dml.dataset.formations import formation_problem
from formation_dml.dataset.strength import StrengthFeatures
from formation_dml.encoding import TreatmentCell

HEADER = ("fixture_id,season,league,round,date,home_team,away_team,home_formation,away_formation,"
          "home_goals,away_goals,home_corners,away_corners,home_possession,away_possession,"
          "home_yellow,away_yellow,home_red,away_red")


def _write(tmp_path, rows, header=HEADER, name="fx.csv"):
    p = tmp_path / name
    p.write_text(header + "\n" + "\n".join(rows) + "\n", encoding="utf-8")
    return p


GOOD = [
    "1,2020,A,1,2020-08-01,H1,A1,4-3-3,4-4-2,2,1,5,3,55,45,1,2,0,0",
    "2,2020,A,1,2020-08-01,H2,A2,3-5-2,5-4-1,0,0,4,4,50,50,0,0,0,0",
    "3,2020,A,2,2020-08-08,H1,H2,4-2-3-1,3-4-3,1,3,6,2,48.7,51.3,2,1,0,1",
]


# ---- parsing ---------------------------------------------------------------

def test_parse_well_formed(tmp_path):
    fixtures, rejects = parse_fixture_table(_write(tmp_path, GOOD))
    assert len(fixtures) == 3 and rejects == []
    assert fixtures[0].home_goals == 2 and fixtures[2].away_possession == 51.3
    assert fixtures[0].date == dt.date(2020, 8, 1)


def test_possession_sum_rejected(tmp_path):
    row = "9,2020,A,3,2020-08-15,H1,A1,4-3-3,4-4-2,1,0,5,3,60,43,1,2,0,0"
    fixtures, rejects = parse_fixture_table(_write(tmp_path, GOOD + [row]))
    assert len(fixtures) == 3
    assert [(r.fixture_id, r.rule) for r in rejects] == [("9", "possession_sum")]


def test_outfield_sum_rejected(tmp_path):
    row = "9,2020,A,3,2020-08-15,H1,A1,4-3-3-1,4-4-2,1,0,5,3,50,50,1,2,0,0"
    _, rejects = parse_fixture_table(_write(tmp_path, [row]))
    assert rejects[0].rule == "formation_outfield_sum:home"


def test_unparseable_numeric_is_row_level(tmp_path):
    row = "9,2020,A,3,2020-08-15,H1,A1,4-3-3,4-4-2,x,0,5,3,50,50,1,2,0,0"
    fixtures, rejects = parse_fixture_table(_write(tmp_path, GOOD + [row]))
    assert len(fixtures) == 3
    assert rejects[0].rule == "unparseable:home_goals"


def test_missing_column_names_it(tmp_path):
    header = HEADER.replace("home_corners", "hc")
    with pytest.raises(SchemaError, match="home_corners"):
        parse_fixture_table(_write(tmp_path, GOOD, header=header))


def test_column_mapping_file(tmp_path):
    header = HEADER.replace("home_corners", "HC").replace("fixture_id", "match")
    cfg = tmp_path / "cols.cfg"
    cfg.write_text("# renamed\nhome_corners = HC\ncolumn.fixture_id=match\ntarget=goals\n")
    schema = load_column_mapping(cfg)
    assert schema == {"home_corners": "HC", "fixture_id": "match"}
    fixtures, _ = parse_fixture_table(_write(tmp_path, GOOD, header=header), schema)
    assert fixtures[0].home_corners == 5.0


def test_write_parse_round_trip(tmp_path):
    fixtures, _ = parse_fixture_table(_write(tmp_path, GOOD))
    out = tmp_path / "again.csv"
    write_fixture_table(fixtures, out)
    again, rejects = parse_fixture_table(out)
    assert again == fixtures and rejects == []


@pytest.mark.parametrize("raw,rule", [
    ("4-4-2", None), ("4-2-3-1", None), ("3-4-2-1", None),
    ("4-3-3-1", "formation_outfield_sum"), ("4-0-6", "formation_format"),
    ("10", "formation_format"), ("4-4-1-0-1", "formation_format"), ("4_4_2", "formation_format"),
])
def test_formation_rule(raw, rule):
    assert formation_problem(raw) == rule


# ---- formation grouping ----------------------------------------------------

def test_group_formation_examples():
    assert GROUP_LABELS[group_formation("4-3-1-2") - 1] == "4-3-3"
    assert GROUP_LABELS[group_formation("4-4-2") - 1] == "4-4-2"
    with pytest.raises(UnmappedFormationError, match="9-0-1"):
        group_formation("9-0-1")


def test_default_mapping_shape():
    mapping = default_mapping()
    assert len(mapping) == 28
    assert set(mapping.values()) == set(GROUP_LABELS)
    for label in GROUP_LABELS:
        assert mapping[label] == label
    for raw in mapping:
        assert formation_problem(raw) is None


def test_custom_mapping(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("# mine\n4-4-2, 5-4-1\n4-3-3 4-3-3\n")
    m = load_formation_mapping(p)
    assert group_formation("4-4-2", m) == 1
    p.write_text("4-4-2 9-9-9\n")
    with pytest.raises(ValueError, match="unknown group"):
        load_formation_mapping(p)


# ---- strength features -----------------------------------------------------

def _season(results):
    """results: list of (round, home, away, hg, ag)."""
    return [make_fixture(fid=f"m{i}", rnd=r, home=h, away=a, hg=hg, ag=ag)
            for i, (r, h, a, hg, ag) in enumerate(results)]


def test_points_ratio_wdl():
    fx = _season([(1, "T", "X", 2, 0), (2, "Y", "T", 1, 1), (3, "T", "Z", 0, 1), (4, "T", "X", 0, 0)])
    sf = compute_strength_features(fx, "T", fx[3])
    assert sf.points_ratio_overall == pytest.approx(4 / 9)
    assert sf.points_ratio_side == pytest.approx(3 / 6)  # home: W, L
    assert sf.streak == 0


def test_no_history_defaults():
    fx = _season([(1, "T", "X", 2, 0), (1, "Y", "Z", 1, 0)])
    sf = compute_strength_features(fx, "T", fx[0])
    assert (sf.points_ratio_overall, sf.points_ratio_side, sf.streak, sf.ranking) == (0.5, 0.5, 0, 1)


def test_tied_points_share_rank():
    assert competition_ranks({"a": 6, "b": 6, "c": 3, "d": 3, "e": 0}) == {"a": 1, "b": 1, "c": 3, "d": 3, "e": 5}


def test_streak_counts_wins_only():
    fx = _season([(1, "T", "X", 1, 0), (2, "Y", "T", 0, 2), (3, "T", "Z", 1, 1),
                  (4, "T", "X", 3, 0), (5, "X", "T", 0, 1), (6, "T", "Y", 0, 0)])
    assert compute_strength_features(fx, "T", fx[2]).streak == 2
    assert compute_strength_features(fx, "T", fx[5]).streak == 2


def test_absent_team_raises():
    fx = _season([(1, "T", "X", 1, 0)])
    with pytest.raises(KeyError):
        compute_strength_features(fx, "nobody", fx[0], side="home")


def _random_season(rng, n_teams=6, n_rounds=6):
    teams = [f"t{i}" for i in range(n_teams)]
    out = []
    for r in range(1, n_rounds + 1):
        perm = rng.permutation(teams)
        for m in range(0, n_teams, 2):
            out.append(make_fixture(fid=f"r{r}m{m}", rnd=r, home=perm[m], away=perm[m + 1],
                                    hg=int(rng.integers(0, 4)), ag=int(rng.integers(0, 4)),
                                    date=dt.date(2020, 8, 1) + dt.timedelta(days=7 * r + int(rng.integers(0, 2)))))
    return out


def test_strength_table_matches_direct_and_is_leak_free():
    rng = np.random.default_rng(5)
    fx = _random_season(rng)
    table = strength_table(fx)
    for f in fx:
        home = compute_strength_features(fx, f.home_team, f)
        away = compute_strength_features(fx, f.away_team, f)
        assert table[f.fixture_id] == (home, away)
        # dropping everything on or after the fixture date changes nothing
        past = [g for g in fx if g.date < f.date] + [f]
        assert compute_strength_features(past, f.home_team, f) == home


def test_ranks_positive_and_total():
    rng = np.random.default_rng(9)
    fx = _random_season(rng, 8, 5)
    for home, away in strength_table(fx).values():
        assert home.ranking >= 1 and away.ranking >= 1
        assert 0 <= home.points_ratio_overall <= 1 and 0 <= away.points_ratio_side <= 1


# ---- filters ---------------------------------------------------------------

def _rounds(n, league="A"):
    return [make_fixture(fid=f"{league}{r}", league=league, rnd=r) for r in range(1, n + 1)]


def test_round_filter_38():
    kept = filter_rounds(_rounds(38))
    assert [f.round for f in kept] == list(range(3, 35))


def test_round_filter_identity_and_exhaustion():
    fx = _rounds(10)
    assert filter_rounds(fx, 0, 0) == fx
    assert filter_rounds(_rounds(6)) == []


def test_round_filter_per_league_and_idempotence():
    fx = _rounds(38, "A") + _rounds(34, "B")
    kept = filter_rounds(fx)
    assert max(f.round for f in kept if f.league == "B") == 30
    assert filter_rounds(fx) == kept
    # re-filtering recomputes max_round from what is left, so only the
    # zero-drop filter is a fixed point of its own output
    assert filter_rounds(kept, 0, 0) == kept


def test_stage_filter():
    fx = [make_fixture(fid="a"), make_fixture(fid="b", stage="Relegation Play-off"),
          make_fixture(fid="c", stage="playout final"), make_fixture(fid="d", stage="Regular Season")]
    assert [f.fixture_id for f in filter_stages(fx)] == ["a", "d"]


# ---- perspective expansion --------------------------------------------------

SF = StrengthFeatures(0.6, 0.7, 2, 1, False)
SF2 = StrengthFeatures(0.3, 0.2, 9, 0, True)


def test_expand_goals_example():
    fx = make_fixture(hf="4-3-3", af="5-4-1", hg=2, ag=1)
    a, b = expand_perspectives(fx, "goals", SF, SF2)
    assert (a.outcome, tuple(a.cell), a.is_home) == (1.0, (5, 1), True)
    assert (b.outcome, tuple(b.cell), b.is_home) == (-1.0, (1, 5), False)
    assert b.main == SF2 and b.rival == SF


def test_expand_draw_and_possession():
    a, b = expand_perspectives(make_fixture(hg=1, ag=1), "goals", SF, SF2)
    assert a.outcome == 0 and b.outcome == 0
    fx = make_fixture(home_possession=55.0, away_possession=45.0)
    a, b = expand_perspectives(fx, "possession", SF, SF2)
    assert (a.outcome, b.outcome) == (10.0, -10.0)


@settings(max_examples=1000, deadline=None)
@given(
    hg=st.integers(0, 9), ag=st.integers(0, 9),
    hf=st.sampled_from(sorted(default_mapping())), af=st.sampled_from(sorted(default_mapping())),
    target=st.sampled_from(["goals", "red_cards", "yellow_cards", "possession", "corners"]),
    ratios=st.tuples(*[st.floats(0, 1)] * 4), ranks=st.tuples(st.integers(1, 20), st.integers(1, 20)),
)
def test_perspective_involution(hg, ag, hf, af, target, ratios, ranks):
    home = StrengthFeatures(ratios[0], ratios[1], ranks[0], 0, False)
    away = StrengthFeatures(ratios[2], ratios[3], ranks[1], 2, True)
    a, b = expand_perspectives(make_fixture(hf=hf, af=af, hg=hg, ag=ag), target, home, away)
    assert b.mirrored() == a
    assert a.mirrored() == b
    assert a.cell == TreatmentCell(b.cell.j, b.cell.i)


# ---- analysis table --------------------------------------------------------

def test_analysis_table_structure(tmp_path):
    rng = np.random.default_rng(1)
    fx = _random_season(rng, 6, 8)
    fx = [f.__class__(**{**f.__dict__, "temperature": None if i % 3 == 0 else 10.0 + i})
          for i, f in enumerate(fx)]
    table = prepare_analysis_table(fx, drop_first=1, drop_last=1)
    n = len(table)
    assert n % 2 == 0
    ids, counts = np.unique(table.fixture_id, return_counts=True)
    assert set(counts) == {2}
    assert table.X.shape == (n, len(table.feature_names))
    assert np.all(table.outcomes["goals"][0::2] == -table.outcomes["goals"][1::2])
    assert np.all(table.cells[0::2] == table.cells[1::2][:, ::-1])
    assert "temperature_missing" in table.feature_names
    tmp = tmp_path / "t.csv"
    table.to_csv(tmp)
    back = AnalysisTable.read_csv(tmp)
    np.testing.assert_allclose(back.X, table.X)
    np.testing.assert_array_equal(back.cells, table.cells)
    assert back.feature_names == table.feature_names


def test_unmapped_formation_lists_all():
    fx = [make_fixture(fid="a", hf="2-2-6"), make_fixture(fid="b", af="2-3-5")]
    with pytest.raises(UnmappedFormationError, match="2-2-6, 2-3-5"):
        build_analysis_table(fx)


def test_encoder_fixed_width():
    rng = np.random.default_rng(2)
    fx = _random_season(rng)
    enc = ConfounderEncoder.fit(fx)
    widths = {len(enc.context(f)) for f in fx}
    assert widths == {len(enc.context_names)}
