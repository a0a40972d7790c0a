import io
import json

import pytest

from gaussreg.cli import build_parser, list_catalog, parse_count, parse_grid, run
from gaussreg.errors import ConfigParse
from gaussreg.harness.checks import BoundCheck, report_row
from gaussreg.report import COLUMNS, Report, fmt_params, numeric_columns, read_csv


def _run(argv):
    out = io.StringIO()
    code = run(argv, stdout=out)
    return code, out.getvalue()


def test_report_columns_and_metadata():
    rep = Report.build([BoundCheck("a", 1.0, 2.0, params={"h": 0.5}), report_row("b", 3.0)], "test", 1, 1000)
    text = rep.to_csv()
    meta, rows = read_csv(text)
    assert meta["schema_version"] == "1" and meta["seed"] == "1" and "git_describe" in meta
    assert tuple(rows[0]) == COLUMNS
    assert rows[0]["params"] == "h=0.5" and rows[0]["verdict"] == "pass"
    assert rep.exit_status == 0


def test_report_exit_status_ignores_report_and_vacuous_rows():
    rows = [BoundCheck("v", 3.0, 1.0, vacuous=True), BoundCheck("r", 3.0, 1.0, asserted=False)]
    assert Report.build(rows, "t").exit_status == 0
    assert Report.build(rows + [BoundCheck("f", 3.0, 1.0)], "t").exit_status == 1


def test_json_mirrors_csv():
    rep = Report.build([BoundCheck("a", 1.0, float("inf"))], "t", 1, 1000)
    obj = json.loads(rep.to_json())
    assert obj["rows"][0]["rhs"] == "inf"
    assert set(obj["rows"][0]) == set(COLUMNS)


def test_params_are_flattened():
    assert fmt_params({"a": 1.0, "b": "x"}) == "a=1.0;b=x"


def test_parse_helpers():
    assert parse_count("1e6") == 1_000_000
    with pytest.raises(ConfigParse, match="--n"):
        parse_count("10")
    with pytest.raises(ConfigParse, match="--n"):
        parse_count("abc")
    assert parse_grid("0.1,1", "--t-grid") == [0.1, 1.0]
    with pytest.raises(ConfigParse, match="--t-grid"):
        parse_grid("0.1,-1", "--t-grid")


def test_help_shows_defaults():
    text = " ".join(build_parser()._subparsers._group_actions[0].choices["verify"].format_help().split())
    assert "default: identities" in text and "default: 1e6" in text


def test_list_catalog():
    code, text = _run(["list-catalog"])
    assert code == 0
    assert "x1 (n=1,k=1): pushforward N(0,1)" in text
    assert "x1sq_x2 (n=2,k=2): Δ_f = 4x₁²" in text
    assert "chi2_1 density oracle" in text
    assert text == list_catalog()


def test_distance_command():
    code, text = _run(["distance", "--map-a", "x1", "--map-b", "x1_shift_1", "--metric", "tv"])
    _, rows = read_csv(text)
    assert code == 0 and abs(float(rows[0]["lhs"]) - 0.7659) <= 0.02 * 0.7659


def test_besov_command():
    code, text = _run(["besov", "--density", "chi2_1", "--format", "json"])
    row = json.loads(text)["rows"][0]
    assert code == 0 and abs(row["lhs"] - 0.5) <= 0.05


def test_forced_fail_exit_status():
    code, _ = _run(["verify", "--suite", "forced-fail", "--n", "1e3"])
    assert code == 1


def test_errors_name_the_field(capsys, tmp_path):
    assert run(["distance", "--map-a", "nope", "--map-b", "x1"]) == 2
    assert "--map-a" in capsys.readouterr().err
    bad = tmp_path / "m.json"
    bad.write_text('{"dim_in": 1, "dim_out": 1}')
    assert run(["analyze-map", "--map", str(bad)]) == 2
    assert "components" in capsys.readouterr().err
    assert run(["verify", "--n", "100"]) == 2
    assert "--n" in capsys.readouterr().err


def test_analyze_and_sigma_commands(tmp_path):
    out = tmp_path / "r.csv"
    assert run(["analyze-map", "--map", "x1sq_x2", "--n", "2e4", "--output", str(out)]) == 0
    names = [r["check_name"] for r in read_csv(out.read_text())[1]]
    assert "negative_moment:diverged" in names and "u_gamma" in names
    code, text = _run(["sigma", "--density", "uniform", "--t-grid", "0.05"])
    assert code == 0 and "sigma_sandwich" in text


def test_cli_is_deterministic():
    argv = ["demo-sequence", "--sequence", "x1_plus_sin_x2", "--n", "2e4", "--ns", "1,5,20"]
    a, b = _run(argv)[1], _run(argv)[1]
    assert numeric_columns(a) == numeric_columns(b)
