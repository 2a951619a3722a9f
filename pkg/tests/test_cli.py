"""Command-line interface: exit codes, JSON schemas, determinism, CSV shapes."""

import importlib.resources
import json
import textwrap

import jsonschema
import pytest

from lpsnet.cli import main

MODEL_TEXT = textwrap.dedent("""\
    nodes:
      - arrival_rate: 0.2333333333333333
        servers: 3
        service: {type: hyperexp2, mean: 1.0, scv: 4.0}
      - arrival_rate: 0.0
        servers: 7
        service: {type: hyperexp2, mean: 2.0, scv: 4.0}
    routing:
      - [0.0, 1.0]
      - [0.0, 0.0]
    scenarios:
      near_critical: {load: 0.95}
      overload: {load: 1.25}
    """)


@pytest.fixture()
def model_file(tmp_path):
    p = tmp_path / "net.yaml"
    p.write_text(MODEL_TEXT, encoding="utf-8")
    return str(p)


def load_schema(name: str) -> dict:
    text = (importlib.resources.files("lpsnet") / "schemas" / name).read_text()
    return json.loads(text)


# ---------------------------------------------------------------- exit codes

def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "analyze" in capsys.readouterr().out


def test_version_exits_zero(capsys):
    assert main(["--version"]) == 0
    assert "lpsnet" in capsys.readouterr().out


def test_missing_subcommand_is_usage_error(capsys):
    assert main([]) == 1


def test_unknown_flag_is_usage_error(capsys):
    assert main(["analyze", "--frobnicate"]) == 1


def test_missing_model_file_is_model_error(capsys):
    assert main(["analyze", "/does/not/exist.yaml"]) == 2
    assert "model error" in capsys.readouterr().err


def test_invalid_yaml_is_model_error(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("nodes: [unclosed\n", encoding="utf-8")
    assert main(["analyze", str(p)]) == 2
    err = capsys.readouterr().err
    assert "bad.yaml" in err


def test_unknown_scenario_is_model_error(model_file, capsys):
    assert main(["analyze", model_file, "--scenario", "peak"]) == 2
    assert "peak" in capsys.readouterr().err


# ------------------------------------------------------------------- analyze

def test_analyze_json_matches_schema(model_file, capsys):
    assert main(["analyze", model_file]) == 0
    doc = json.loads(capsys.readouterr().out)
    jsonschema.validate(doc, load_schema("analyze.schema.json"))
    assert doc["unstable"] is False
    assert doc["derived"]["utilization_total"] == pytest.approx(0.7)
    assert doc["derived"]["critical_workload"] == pytest.approx(13.05)
    assert doc["heavy_traffic"]["mean_sojourn"] == pytest.approx(10.2466, abs=5e-4)


def test_analyze_scenario_rescales(model_file, capsys):
    assert main(["analyze", model_file, "--scenario", "near_critical"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["derived"]["utilization_total"] == pytest.approx(0.95)


def test_analyze_unstable_model(model_file, capsys):
    assert main(["analyze", model_file, "--scenario", "overload"]) == 0
    doc = json.loads(capsys.readouterr().out)
    jsonschema.validate(doc, load_schema("analyze.schema.json"))
    assert doc["unstable"] is True
    assert doc["heavy_traffic"] is None


def test_analyze_out_file(model_file, tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main(["analyze", model_file, "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    doc = json.loads(out.read_text())
    assert len(doc["model"]["nodes"]) == 2


# --------------------------------------------------------------------- fluid

def test_fluid_csv_columns(model_file, capsys):
    assert main(["fluid", model_file, "--x0", "9,1", "--horizon", "5",
                 "--samples", "11"]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert lines[0] == "t,x_1,x_2,workload,lyapunov,dist_manifold"
    first = [float(v) for v in lines[1].split(",")]
    assert first[0] == 0.0 and first[1] == 9.0 and first[2] == 1.0
    assert len(lines) <= 12
    # Lyapunov value must not increase along the trajectory.
    lyap = [float(line.split(",")[4]) for line in lines[1:]]
    assert all(b <= a + 1e-9 for a, b in zip(lyap, lyap[1:]))


def test_fluid_critical_conserves_workload(model_file, capsys):
    assert main(["fluid", model_file, "--critical", "--x0", "4,8",
                 "--horizon", "20", "--samples", "21"]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    w = [float(line.split(",")[3]) for line in lines[1:]]
    assert w[0] == pytest.approx(w[-1], rel=1e-6)


def test_fluid_bad_x0_is_usage_error(model_file, capsys):
    assert main(["fluid", model_file, "--x0", "1,2,3"]) == 1
    assert main(["fluid", model_file, "--x0", "1,oops"]) == 1
    assert main(["fluid", model_file, "--x0", "-1,2"]) == 1


# ------------------------------------------------------------------ simulate

def test_simulate_json_matches_schema_and_is_deterministic(model_file, capsys):
    argv = ["simulate", model_file, "--seed", "5", "--reps", "2",
            "--jobs", "2000"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    doc = json.loads(first)
    jsonschema.validate(doc, load_schema("simulate.schema.json"))
    assert doc["rng"]["seed"] == 5
    assert doc["config"]["replications"] == 2
    assert main(argv) == 0
    assert capsys.readouterr().out == first


def test_simulate_trace_file(model_file, tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    assert main(["simulate", model_file, "--seed", "1", "--reps", "1",
                 "--jobs", "200", "--trace", str(trace)]) == 0
    lines = trace.read_text().strip().split("\n")
    assert lines[0] == "replication,job,entry,exit,path"
    assert len(lines) > 100


def test_simulate_invalid_config_is_usage_error(model_file, capsys):
    assert main(["simulate", model_file, "--reps", "0"]) == 1
    assert main(["simulate", model_file, "--warmup", "1.5"]) == 1


# ------------------------------------------------------------------ validate

def test_validate_single_row_smoke(capsys):
    code = main(["validate", "--rows", "1", "--reps", "4", "--jobs", "40000",
                 "--workers", "1"])
    out = capsys.readouterr().out
    assert code in (0, 3)
    assert out.splitlines()[-1].startswith(("PASS", "FAIL"))
    assert "10.24" in out  # closed-form approximation column for this row
    assert "ok" in out


def test_validate_bad_rows_is_usage_error(capsys):
    assert main(["validate", "--rows", "0"]) == 1
    assert main(["validate", "--rows", "17"]) == 1
    assert main(["validate", "--rows", "abc"]) == 1


# ---------------------------------------------------------------------- dump

def test_dump_round_trips(model_file, capsys):
    assert main(["dump", model_file]) == 0
    text = capsys.readouterr().out
    assert "hyperexp2" in text
    p = model_file.replace("net.yaml", "again.yaml")
    with open(p, "w", encoding="utf-8") as fh:
        fh.write(text)
    assert main(["analyze", p]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["derived"]["utilization_total"] == pytest.approx(0.7)


def test_dump_applies_scenario(model_file, capsys):
    assert main(["dump", model_file, "--scenario", "near_critical"]) == 0
    text = capsys.readouterr().out
    from lpsnet import parse_model, utilization
    model, _ = parse_model(text)
    assert utilization(model)[1] == pytest.approx(0.95, rel=1e-12)
