import datetime as dt

import pytest

from formation_dml.dataset import Fixture

ACCEPTANCE_LINES: dict[str, str] = {}


def make_fixture(fid="F1", season="2020", league="A", rnd=1, date=None, home="H", away="A",
                 hf="4-3-3", af="4-4-2", hg=0, ag=0, **kw):
    base = dict(
        home_corners=5.0, away_corners=4.0, home_possession=50.0, away_possession=50.0,
        home_yellow=1.0, away_yellow=2.0, home_red=0.0, away_red=0.0,
    )
    base.update(kw)
    return Fixture(
        fixture_id=fid, season=season, league=league, round=rnd,
        date=date or dt.date(2020, 8, 1) + dt.timedelta(days=7 * (rnd - 1)),
        home_team=home, away_team=away, home_formation_raw=hf, away_formation_raw=af,
        home_goals=hg, away_goals=ag, **base,
    )


@pytest.fixture
def fixture_factory():
    return make_fixture


def record_criterion(number: int, name: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES[f"{number:02d}"] = f"[{status}] criterion {number}: {name}" + (f" ({detail})" if detail else "")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
