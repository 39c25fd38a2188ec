from __future__ import annotations

import json

from pview.cli import main


SCHEMA = {
    "attributes": [
        {"name": "age", "kind": "numeric", "bins": 4, "min": 0, "max": 8},
        {"name": "city", "kind": "categorical", "categories": ["ams", "ber"]},
    ]
}

CSV = "age,city\n" + "\n".join(
    f"{age},{city}"
    for age, city in [
        (1, "ams"),
        (1, "ams"),
        (3, "ber"),
        (5, "ams"),
        (7, "ber"),
        (7, "ber"),
        (7, "ams"),
    ]
)


def write_inputs(tmp_path):
    schema_path = tmp_path / "schema.json"
    schema_path.write_text(json.dumps(SCHEMA))
    csv_path = tmp_path / "data.csv"
    csv_path.write_text(CSV + "\n")
    return str(csv_path), str(schema_path)


def build_args(tmp_path, **over):
    csv_path, schema_path = write_inputs(tmp_path)
    view_path = str(tmp_path / "view.hdpv")
    args = {
        "--input": csv_path,
        "--schema": schema_path,
        "--epsilon": "1.0",
        "--seed": "5",
        "--out": view_path,
    }
    args.update(over)
    argv = ["build"]
    for k, v in args.items():
        if v is None:
            continue
        argv.extend([k, v])
    return argv, view_path


def test_build_reports_budget_and_writes_view(tmp_path, capsys):
    argv, view_path = build_args(tmp_path)
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert "seed: 5" in out
    assert "records: 7, domain cells: 8" in out
    assert "ε_r=0.9 (converge 0.81, cut 0.09), ε_p=0.1" in out
    assert f"wrote {view_path}" in out
    with open(view_path, "rb") as fh:
        assert fh.read(4) == b"HDPV"


def test_build_generates_seed_when_omitted(tmp_path, capsys):
    argv, _ = build_args(tmp_path, **{"--seed": None})
    assert main(argv) == 0
    seed_line = capsys.readouterr().out.splitlines()[0]
    assert seed_line.startswith("seed: ")
    assert int(seed_line.split()[1]) >= 0


def test_query_answers_with_bounds(tmp_path, capsys):
    argv, view_path = build_args(tmp_path)
    assert main(argv) == 0
    capsys.readouterr()
    rc = main(["query", "--view", view_path, "--range", "age=0:3,city=ams:ber"])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.startswith("answer: ")
    assert "error bounds (95% confidence): [" in out
    assert "blocks touched: " in out


def test_query_accepts_raw_values_and_category_names(tmp_path, capsys):
    argv, view_path = build_args(tmp_path)
    assert main(argv) == 0
    capsys.readouterr()
    assert main(["query", "--view", view_path, "--range", "city=ber:ber"]) == 0
    assert main(["query", "--view", view_path, "--range", "age=0.0:8.0", "--values", "--mu", "0.2"]) == 0
    out = capsys.readouterr().out
    assert "error bounds (80% confidence)" in out


def test_query_range_grammar_errors_exit_2(tmp_path, capsys):
    argv, view_path = build_args(tmp_path)
    assert main(argv) == 0
    for bad in ("age", "age=1", "age=1:2:3", "age=1:2,age=0:1", "age=zz:3", ","):
        rc = main(["query", "--view", view_path, "--range", bad])
        assert rc == 2, bad
        assert "usage error" in capsys.readouterr().err


def test_query_unknown_attribute_exits_3(tmp_path, capsys):
    argv, view_path = build_args(tmp_path)
    assert main(argv) == 0
    assert main(["query", "--view", view_path, "--range", "salary=0:1"]) == 3
    assert "data error" in capsys.readouterr().err


def test_missing_view_exits_2(tmp_path, capsys):
    rc = main(["query", "--view", str(tmp_path / "nope.hdpv"), "--range", "age=0:1"])
    assert rc == 2


def test_corrupt_view_exits_3(tmp_path, capsys):
    bad = tmp_path / "bad.hdpv"
    bad.write_bytes(b"XXXX not a view")
    assert main(["inspect", "--view", str(bad)]) == 3
    assert "data error" in capsys.readouterr().err


def test_build_rejects_out_of_domain_values_unless_clamped(tmp_path, capsys):
    csv_path, schema_path = write_inputs(tmp_path)
    with open(csv_path, "a", encoding="utf-8") as fh:
        fh.write("50,ams\n")
    view_path = str(tmp_path / "view.hdpv")
    base = ["build", "--input", csv_path, "--schema", schema_path,
            "--epsilon", "1", "--seed", "1", "--out", view_path]
    assert main(base) == 3
    assert "data error" in capsys.readouterr().err
    assert main(base + ["--clamp"]) == 0
    assert "records: 8" in capsys.readouterr().out


def test_inspect_summary_and_json(tmp_path, capsys):
    argv, view_path = build_args(tmp_path)
    assert main(argv) == 0
    capsys.readouterr()
    assert main(["inspect", "--view", view_path]) == 0
    out = capsys.readouterr().out
    assert "schema: age(4), city(2)" in out
    assert "blocks: " in out
    assert "seed: 5" in out
    assert main(["inspect", "--view", view_path, "--json"]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["seed"] == 5
    assert obj["blocks"]


def test_eval_command_prints_table(tmp_path, capsys):
    config = {
        "dataset": {"synthetic": {"kind": "uniform", "shape": [5, 5], "n": 60, "seed": 0}},
        "mechanisms": ["pview", "identity"],
        "epsilons": [1.0],
        "seeds": [0],
        "workloads": [{"kind": "random_range", "k": 1, "count": 4}],
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    assert main(["eval", "--config", str(path)]) == 0
    out = capsys.readouterr().out
    assert "workload" in out
    assert "identity" in out


def test_eval_rejects_bad_configs(tmp_path, capsys):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"dataset": {}, "workloads": [], "typo": 1}))
    assert main(["eval", "--config", str(path)]) == 2
    path.write_text("{not json")
    assert main(["eval", "--config", str(path)]) == 3
    capsys.readouterr()


def test_version_and_usage_exits(capsys):
    assert main(["--version"]) == 0
    assert "pview " in capsys.readouterr().out
    assert main([]) == 2
    assert main(["build"]) == 2
    capsys.readouterr()
