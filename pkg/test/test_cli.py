import csv
import io
import json
import math

import pytest

from adiabatic_diophantine import __version__
from adiabatic_diophantine.cli import _render, main


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def _reject_constant(name):
    raise ValueError(f"non-standard JSON constant {name}")


def strict_json(text):
    return json.loads(text, parse_constant=_reject_constant)


def test_oracle(capsys):
    assert main(["oracle", "x^2 + y^2 - 3", "--bound", "4"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["min_value"] == 1
    assert data["bound"] == 4
    assert data["argmin"] == [[0, 2], [1, 1], [2, 0]]
    assert data["polynomial"]["text"] == "x^2 + y^2 - 3"


def test_oracle__csv(capsys):
    assert main(["oracle", "x + y - 2", "--cutoff", "3", "--format", "csv"]) == 0
    text = capsys.readouterr().out
    assert text.startswith("tuple,d_squared\n")
    assert "\r" not in text
    rows = read_csv(text)
    assert [row["tuple"] for row in rows] == ["(0,2)", "(1,1)", "(2,0)"]
    assert {row["d_squared"] for row in rows} == {"0"}


def test_solve(tmp_path, capsys):
    out = tmp_path / "report.json"
    args = ["solve", "x - 3", "--cutoff", "4", "--shots", "1000"]
    assert main(args + ["--out", str(out)]) == 0
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["decision"]["kind"] == "HAS_SOLUTION"
    assert report["decision"]["witnesses"] == [[3]]
    assert [record["T"] for record in report["records"]][-2:] == [256.0, 512.0]
    assert "HAS_SOLUTION((3))" in capsys.readouterr().err


def test_solve__pythagorean(tmp_path, capsys):
    out = tmp_path / "report.json"
    args = ["solve", "x^2 + y^2 - 25", "--cutoff", "5", "--out", str(out)]
    assert main(args) == 0
    report = strict_json(out.read_text(encoding="utf-8"))
    assert report["decision"]["kind"] == "HAS_SOLUTION"
    assert [3, 4] in report["decision"]["witnesses"]
    assert report["records"][-1]["T"] == 512.0
    assert "HAS_SOLUTION(" in capsys.readouterr().err


def test_solve__chi2_is_strict_json(capsys):
    args = ["solve", "x - 3", "--cutoff", "4", "--tmax", "4", "--shots", "200"]
    main(args + ["--statistic", "chi2"])
    report = strict_json(capsys.readouterr().out)
    assert {record["match"]["method"] for record in report["records"]} == {"chi2"}


def test_solve__deterministic(tmp_path):
    reports = []
    for name in ("first.json", "second.json"):
        out = tmp_path / name
        args = ["solve", "x - 3", "--cutoff", "4", "--tmax", "16", "--shots", "500"]
        main(args + ["--out", str(out)])
        data = json.loads(out.read_text(encoding="utf-8"))
        data.pop("timestamp")
        reports.append(json.dumps(data, indent=2))
    assert reports[0] == reports[1]


def test_solve__inconclusive(tmp_path):
    out = tmp_path / "report.json"
    code = main(
        [
            "solve",
            "x + y - 2",
            "--cutoff",
            "2",
            "--shots",
            "100",
            "--theta",
            "0.99",
            "--out",
            str(out),
        ]
    )
    assert code == 2
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["decision"]["kind"] == "INCONCLUSIVE"
    assert report["decision"]["reason"] == "not-dominant"


def test_solve__csv(capsys):
    args = ["solve", "x - 3", "--cutoff", "4", "--tmax", "4", "--shots", "200"]
    main(args + ["--format", "csv"])
    rows = read_csv(capsys.readouterr().out)
    assert [float(row["T"]) for row in rows] == [1.0, 2.0, 4.0]
    assert len(rows[0]) == 13


def test_solve__file(tmp_path, capsys):
    path = tmp_path / "equation.txt"
    path.write_text("x - 3\n", encoding="utf-8")
    args = ["solve", "--file", str(path), "--cutoff", "4", "--tmax", "2"]
    assert main(args + ["--shots", "200"]) in (0, 2)
    assert json.loads(capsys.readouterr().out)["polynomial"]["text"] == "x - 3"


@pytest.mark.parametrize(
    "args,message",
    [
        (["solve", "x^&y"], 'error: Unexpected character "&" at position 2'),
        (["solve"], "error: Give the equation"),
        (["solve", "x", "--file", "eq.txt"], "error: Give the equation"),
        (["solve", "x + y", "--theta", "1.5"], "error: Invalid theta"),
        (["oracle", "x + y + z", "--bound", "1000"], "error: Search space"),
        (["spectrum", "x", "--s-points", "1"], "error: Invalid s-grid size"),
        (["evolve", "x", "--alpha", "one"], 'error: Invalid alpha "one"'),
        (["solve", "--file", "missing-equation.txt"], "error:"),
    ],
)
def test_errors(args, message, capsys):
    assert main(args) == 1
    assert message in capsys.readouterr().err


def test_guard_error_exit_code(capsys):
    assert main(["solve", "x + y + z", "--cutoff", "40"]) == 1
    assert "exceeds the limit" in capsys.readouterr().err


@pytest.mark.parametrize(
    "args",
    [
        [],
        ["solve", "x", "--unknown-flag"],
        ["solve", "x", "--format", "xml"],
        ["solve", "x", "--cutoff", "two"],
    ],
)
def test_parser_errors(args, capsys):
    with pytest.raises(SystemExit) as error:
        main(args)
    assert error.value.code == 1
    assert "error:" in capsys.readouterr().err


def test_version(capsys):
    with pytest.raises(SystemExit) as error:
        main(["--version"])
    assert error.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_spectrum(tmp_path, capsys):
    levels_out = tmp_path / "levels.csv"
    args = ["spectrum", "x", "--cutoff", "3", "--format", "csv", "--s-points", "11"]
    assert main(args + ["--levels-out", str(levels_out)]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert [int(row["energy"]) for row in rows] == [0, 1, 4, 9]
    assert [row["tuple"] for row in rows] == ["(0)", "(1)", "(2)", "(3)"]
    levels = read_csv(levels_out.read_text(encoding="utf-8"))
    assert len(levels) == 11 * 4
    final = [row for row in levels if float(row["s"]) == 1.0]
    assert min(float(row["eigenvalue"]) for row in final) == 0


def test_spectrum__json(capsys):
    assert main(["spectrum", "x^2 + y^2 - 3", "--cutoff", "4", "--s-points", "2"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["basis"]["dimension"] == 25
    assert len(data["diagonal"]) == 25
    assert min(row["energy"] for row in data["diagonal"]) == 1
    final = [row for row in data["levels"] if row["s"] == 1.0]
    assert len(final) == 25
    assert min(row["eigenvalue"] for row in final) == 1


def test_evolve(capsys):
    args = ["evolve", "x + y - 2", "--cutoff", "2", "--tmax", "5", "--format", "csv"]
    assert main(args + ["--stride", "50"]) == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0] == "s,ground_population,energy_expectation,norm"
    rows = read_csv(text)
    assert len(rows) == 5
    assert all(abs(float(row["norm"]) - 1) <= 1e-9 for row in rows)
    assert float(rows[0]["s"]) == 0.0
    assert float(rows[-1]["s"]) == 1.0
    assert float(rows[0]["ground_population"]) == pytest.approx(1.0)


def test_evolve__json(capsys):
    args = ["evolve", "x - 1", "--cutoff", "3", "--tmax", "2", "--profile", "sine"]
    assert main(args) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["steps"] == 80
    assert data["profile"] == "sine"
    assert data["max_norm_drift"] <= 1e-9
    assert len(data["trajectory"]) == 81


def test_sweep(capsys):
    args = ["sweep", "x^2 - 2", "--cutoffs", "1", "3", "--tmax", "128"]
    assert main(args + ["--shots", "1000", "--format", "csv"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert [row["cutoff"] for row in rows] == ["1", "3"]
    assert [row["oracle_min_value"] for row in rows] == ["1", "1"]


def test_render__rejects_non_finite():
    with pytest.raises(ValueError):
        _render("json", {"statistic": math.inf}, [], [])
