import csv
import io
import json
import math
from fractions import Fraction

import pytest

from poisonlab.cli import (
    COLUMNS,
    ConfigError,
    RunConfig,
    build_parser,
    estimate_to_row,
    load_config_file,
    main,
    parse_fraction,
    render_csv,
    render_json,
    resolve_config,
)
from poisonlab.experiments import ExcessEstimate


def _config(**kw):
    base = dict(command="run", etas=(Fraction(1, 64),), dims=(1,), sizes=(8,),
                trials=100, seed=1729, learners=("exp-mech",), adversaries=("greedy",),
                bias=Fraction(1, 4), out=None, format="csv", workers=1)
    base.update(kw)
    return RunConfig(**base)


def test_parse_fraction_exact():
    assert parse_fraction("1/64") == Fraction(1, 64)
    assert parse_fraction("0.015625") == Fraction(1, 64)
    assert parse_fraction(" 3/4 ") == Fraction(3, 4)
    with pytest.raises(ConfigError):
        parse_fraction("a/b")
    with pytest.raises(ConfigError):
        parse_fraction("1/0")


def test_load_config_file(tmp_path):
    path = tmp_path / "cfg"
    path.write_text("# grid\neta = 1/8, 1/4\nn=16\ntrials = 50  # small\n\n")
    assert load_config_file(str(path)) == {"eta": "1/8, 1/4", "n": "16", "trials": "50"}


def test_load_config_file_rejects_garbage(tmp_path):
    bad = tmp_path / "bad"
    bad.write_text("nonsense\n")
    with pytest.raises(ConfigError):
        load_config_file(str(bad))
    bad.write_text("bogus = 1\n")
    with pytest.raises(ConfigError):
        load_config_file(str(bad))
    bad.write_text("eta = 1/8\neta = 1/4\n")
    with pytest.raises(ConfigError):
        load_config_file(str(bad))


def test_resolve_precedence(tmp_path):
    path = tmp_path / "cfg"
    path.write_text("eta = 1/8\ntrials = 50\n")
    parser = build_parser()
    ns = parser.parse_args(["run", "--config", str(path), "--trials", "75"])
    cfg = resolve_config(ns)
    assert cfg.etas == (Fraction(1, 8),)  # from file
    assert cfg.trials == 75               # flag wins
    assert cfg.seed == 1729               # builtin default


def test_resolve_validation():
    parser = build_parser()
    with pytest.raises(ConfigError):
        resolve_config(parser.parse_args(["run", "--eta", "3/2"]))
    with pytest.raises(ConfigError):
        resolve_config(parser.parse_args(["run", "--learner", "nope"]))
    with pytest.raises(ConfigError):
        resolve_config(parser.parse_args(["run", "--format", "xml"]))
    with pytest.raises(ConfigError):
        resolve_config(parser.parse_args(["run", "--d", "40"]))
    with pytest.raises(ConfigError):
        resolve_config(parser.parse_args(["run", "--workers", "0"]))


def test_config_hash_ignores_presentation_fields():
    a = _config()
    b = _config(format="json", out="x.json", workers=4)
    c = _config(trials=101)
    assert a.config_hash == b.config_hash
    assert a.config_hash != c.config_hash
    assert len(a.config_hash) == 12


def _row(**kw):
    meta = {"learner": "exp-mech", "adversary": "greedy", "n": 8, "eta": "1/8",
            "d": 1, "stream": 42, "bias": "1/4"}
    est = ExcessEstimate(mean=0.5, ci_low=0.4, ci_high=0.6, bayes=0.25, excess=0.25,
                         excess_ci_low=0.15, excess_ci_high=0.35, trials=100,
                         seed=1729, metadata=meta)
    return estimate_to_row(est, "run", "abc123def456", **kw)


def test_estimate_to_row_mapping():
    row = _row(bound_name="x", bound_value=1.5, passed=True)
    assert [row[c] for c in COLUMNS[:10]] == [
        "run", "exp-mech", "greedy", 1, "1/8", 8, "1/4", 100, 1729, 42]
    assert row["mean"] == 0.5 and row["bound_value"] == 1.5 and row["passed"] is True
    assert row["error"] == ""


def test_render_csv_shape_and_precision():
    text = render_csv([_row()])
    lines = text.split("\n")
    assert lines[0] == ",".join(COLUMNS)
    assert text.endswith("\n") and "\r" not in text
    reader = csv.DictReader(io.StringIO(text))
    parsed = next(reader)
    assert parsed["mean"] == "0.5"
    assert parsed["passed"] == "" and parsed["bound_value"] == ""
    # 17 significant digits round-trip
    est = ExcessEstimate(mean=1 / 3, ci_low=1 / 3, ci_high=1 / 3, bayes=0.0,
                         excess=1 / 3, excess_ci_low=1 / 3, excess_ci_high=1 / 3,
                         trials=1, seed=1, metadata={})
    row = estimate_to_row(est, "run", "h")
    value = next(csv.DictReader(io.StringIO(render_csv([row]))))["mean"]
    assert float(value) == 1 / 3


def test_render_csv_blanks_nan():
    nan = float("nan")
    est = ExcessEstimate(mean=nan, ci_low=nan, ci_high=nan, bayes=nan, excess=nan,
                         excess_ci_low=nan, excess_ci_high=nan, trials=0, seed=1,
                         metadata={"error": "PreconditionError: no"})
    row = estimate_to_row(est, "run", "h")
    parsed = next(csv.DictReader(io.StringIO(render_csv([row]))))
    assert parsed["mean"] == "" and parsed["error"].startswith("PreconditionError")


def test_render_json_nan_is_null():
    nan = float("nan")
    est = ExcessEstimate(mean=nan, ci_low=nan, ci_high=nan, bayes=nan, excess=nan,
                         excess_ci_low=nan, excess_ci_high=nan, trials=0, seed=1,
                         metadata={})
    payload = json.loads(render_json([estimate_to_row(est, "run", "h")]))
    assert payload[0]["mean"] is None
    payload2 = json.loads(render_json([_row(passed=False)]))
    assert payload2[0]["passed"] is False and payload2[0]["mean"] == 0.5


def test_main_run_deterministic(capsys):
    args = ["run", "--eta", "1/8", "--n", "8", "--trials", "30"]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args) == 0
    second = capsys.readouterr().out
    assert first == second
    rows = list(csv.DictReader(io.StringIO(first)))
    assert len(rows) == 1
    assert rows[0]["experiment"] == "run"
    assert float(rows[0]["mean"]) > 0


def test_main_run_rejects_lists(capsys):
    assert main(["run", "--eta", "1/8,1/4", "--n", "8"]) == 2
    assert "single" in capsys.readouterr().err


def test_main_sweep_grid(capsys):
    assert main(["sweep", "--eta", "1/8,1/4", "--n", "8", "--trials", "20",
                 "--adversary", "identity,greedy"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 4
    assert [r["adversary"] for r in rows] == ["identity", "greedy"] * 2


def test_main_sweep_workers_byte_identical(tmp_path):
    base = ["sweep", "--eta", "1/8,1/4", "--n", "8,12", "--trials", "20"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(base + ["--out", str(a), "--workers", "1"]) == 0
    assert main(base + ["--out", str(b), "--workers", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_main_attack_eval_covers_all_adversaries(capsys):
    assert main(["attack-eval", "--eta", "1/4", "--n", "6", "--trials", "10"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [r["adversary"] for r in rows] == ["identity", "greedy", "brute-force"]
    assert all(r["experiment"] == "attack-eval" for r in rows)


def test_main_curve_emits_bounds(capsys):
    assert main(["curve", "--eta", "1/16", "--n", "4,8", "--trials", "200"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 2
    assert all(r["bound_name"] == "recurring-threshold" for r in rows)
    assert all(r["passed"] in ("true", "false") for r in rows)
    assert float(rows[0]["bound_value"]) == pytest.approx(math.sqrt(1 / 16) / 36)


def test_main_error_rows_from_infeasible_cells(capsys):
    # vc learner cannot run at eta = 1/4, d = 2: the row records the error
    assert main(["sweep", "--eta", "1/4", "--d", "2", "--n", "8",
                 "--learner", "vc", "--trials", "5"]) == 1
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert rows[0]["mean"] == "" and "PreconditionError" in rows[0]["error"]


def test_main_verify_subset_and_fault(capsys):
    assert main(["verify", "--check", "core.atoms-sum"]) == 0
    out = capsys.readouterr().out
    assert "PASS core.atoms-sum" in out and "1 passed" in out
    assert main(["verify", "--check", "core.atoms-sum",
                 "--inject-fault", "core.atoms-sum"]) == 1
    out = capsys.readouterr().out
    assert "FAIL core.atoms-sum: injected fault" in out


def test_main_json_format(capsys):
    assert main(["run", "--eta", "1/8", "--n", "8", "--trials", "10",
                 "--format", "json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert isinstance(payload, list) and set(payload[0]) == set(COLUMNS)
