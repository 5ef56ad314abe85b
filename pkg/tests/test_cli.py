import csv
import json

import pytest

from duorules import cli, encode_with_schema, load_csv, predict


@pytest.fixture
def train_config(tmp_path):
    def build(data_path, **anneal_overrides):
        annealing = {"iter_max": 400, "restarts": 2, "seed": 5}
        annealing.update(anneal_overrides)
        config = {
            "data": {"path": str(data_path), "label_column": "y", "positive_label": "1"},
            "mining": {"min_support": 0.05, "max_length": 3, "pool_cap": 60},
            "annealing": annealing,
            "split": {"train_fraction": 0.8, "seed": 5},
        }
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config), encoding="utf-8")
        return str(path)

    return build


def test_synth_writes_csv_and_sidecar(tmp_path, capsys):
    out = tmp_path / "data.csv"
    assert cli.main(["synth", "--n", "500", "--seed", "3", "--out", str(out)]) == 0
    ds = load_csv(str(out), "y", "1")
    assert ds.n == 500 and ds.p == 5
    sidecar = json.loads((tmp_path / "data.csv.meta.json").read_text())
    assert sum(sidecar["group_counts"].values()) == 500
    assert "groups" in capsys.readouterr().out


def test_synth_single_row(tmp_path):
    out = tmp_path / "one.csv"
    assert cli.main(["synth", "--n", "1", "--seed", "0", "--out", str(out)]) == 0
    assert len(out.read_text().strip().splitlines()) == 2  # header + 1 row


def test_synth_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    cli.main(["synth", "--n", "200", "--seed", "9", "--out", str(a)])
    cli.main(["synth", "--n", "200", "--seed", "9", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_synth_custom_spec(tmp_path):
    spec = {
        "n": 50,
        "seed": 4,
        "p_both_positive": 0.0,
        "p_neither_positive": 0.0,
        "attributes": ["u", "v"],
        "positive_rules": [["u=1"]],
        "negative_rules": [["u=0", "v=0"]],
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec), encoding="utf-8")
    out = tmp_path / "custom.csv"
    assert cli.main(["synth", "--spec", str(spec_path), "--out", str(out)]) == 0
    ds = load_csv(str(out), "y", "1")
    assert ds.schema.attribute_names == ["u", "v"]


def test_mine_dumps_pools(tmp_path, train_config):
    data_path = tmp_path / "data.csv"
    cli.main(["synth", "--n", "300", "--seed", "1", "--out", str(data_path)])
    pools_path = tmp_path / "pools.json"
    assert cli.main(["mine", "--config", train_config(data_path), "--out", str(pools_path)]) == 0
    pools = json.loads(pools_path.read_text())
    assert pools["positive"] and pools["negative"]
    entry = pools["positive"][0]
    assert {"literals", "support", "impurity"} <= set(entry)


def test_train_evaluate_flow(tmp_path, train_config, capsys):
    data_path = tmp_path / "data.csv"
    cli.main(["synth", "--n", "400", "--seed", "2", "--out", str(data_path)])
    outdir = tmp_path / "run"
    assert (
        cli.main(["train", "--config", train_config(data_path), "--out", str(outdir), "--trace"])
        == 0
    )
    model_path = outdir / "model.json"
    assert model_path.exists()
    assert (outdir / "test.csv").exists()
    assert (outdir / "trace.jsonl").exists()
    model = json.loads(model_path.read_text())
    assert model["format"] == "duorules-model"
    assert model["positive_rules"] and model["negative_rules"]
    assert "score" in model and "seed" in model
    assert {"log_marginal_likelihood", "log_prior", "train_taxonomy"} <= set(
        model["score_breakdown"]
    )

    evaldir = tmp_path / "eval"
    assert (
        cli.main(
            [
                "evaluate",
                "--model",
                str(model_path),
                "--test",
                str(outdir / "test.csv"),
                "--forced",
                "--out",
                str(evaldir),
            ]
        )
        == 0
    )
    out = capsys.readouterr().out
    assert "truly misclassified" in out and "forced" in out
    report = json.loads((evaldir / "report.json").read_text())
    assert set(report) == {"taxonomy", "forced_taxonomy", "rates", "forced_rates"}
    assert sum(report["taxonomy"].values()) == 80  # 20% of 400
    with open(evaldir / "rows.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 80
    assert {"row", "label", "verdict", "forced_verdict"} <= set(rows[0])


def test_forced_flag_only_adds_forced_column(tmp_path, train_config):
    data_path = tmp_path / "data.csv"
    cli.main(["synth", "--n", "300", "--seed", "8", "--out", str(data_path)])
    outdir = tmp_path / "run"
    cli.main(["train", "--config", train_config(data_path), "--out", str(outdir)])
    for forced in (False, True):
        evaldir = tmp_path / ("eval_forced" if forced else "eval_plain")
        argv = [
            "evaluate",
            "--model", str(outdir / "model.json"),
            "--test", str(outdir / "test.csv"),
            "--out", str(evaldir),
        ]
        if forced:
            argv.insert(1, "--forced")
        assert cli.main(argv) == 0
    with open(tmp_path / "eval_plain" / "rows.csv", newline="") as f:
        plain = list(csv.DictReader(f))
    with open(tmp_path / "eval_forced" / "rows.csv", newline="") as f:
        forced_rows = list(csv.DictReader(f))
    assert "forced_verdict" not in plain[0]
    assert "forced_verdict" in forced_rows[0]
    for a, b in zip(plain, forced_rows):
        shared = {k: v for k, v in b.items() if k != "forced_verdict"}
        assert a == shared
    plain_report = json.loads((tmp_path / "eval_plain" / "report.json").read_text())
    forced_report = json.loads((tmp_path / "eval_forced" / "report.json").read_text())
    assert plain_report == forced_report


def test_model_round_trip_predictions(tmp_path, train_config):
    data_path = tmp_path / "data.csv"
    cli.main(["synth", "--n", "300", "--seed", "4", "--out", str(data_path)])
    outdir = tmp_path / "run"
    cli.main(["train", "--config", train_config(data_path), "--out", str(outdir)])
    pair, schema, payload = cli.load_model(str(outdir / "model.json"))
    test_set = encode_with_schema(str(outdir / "test.csv"), schema)
    # save again and reload: identical predictions everywhere
    second_path = tmp_path / "model2.json"
    config = cli.parse_run_config(json.loads((tmp_path / "config.json").read_text()))
    mcfg = config.mining
    from duorules.mining import PatternPool

    dummy_pools = (
        PatternPool("positive", (), (), ()),
        PatternPool("negative", (), (), ()),
    )
    from duorules.scoring import PriorParams

    cli.save_model(
        str(second_path), pair, schema, config, payload["score"], dummy_pools,
        PriorParams.uniform(mcfg.max_length),
    )
    pair2, schema2, _ = cli.load_model(str(second_path))
    assert schema2 == schema
    for row in test_set.rows:
        assert predict(pair, row) == predict(pair2, row)


def test_trace_determinism_across_cli_runs(tmp_path, train_config):
    data_path = tmp_path / "data.csv"
    cli.main(["synth", "--n", "300", "--seed", "6", "--out", str(data_path)])
    config = train_config(data_path)
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    cli.main(["train", "--config", config, "--out", str(out1), "--trace"])
    cli.main(["train", "--config", config, "--out", str(out2), "--trace"])
    assert (out1 / "trace.jsonl").read_bytes() == (out2 / "trace.jsonl").read_bytes()


def test_runs_frequency_report(tmp_path, train_config):
    data_path = tmp_path / "data.csv"
    cli.main(["synth", "--n", "300", "--seed", "7", "--out", str(data_path)])
    outdir = tmp_path / "freq"
    assert (
        cli.main(
            ["runs", "--config", train_config(data_path, iter_max=150, restarts=1),
             "--runs", "3", "--out", str(outdir)]
        )
        == 0
    )
    payload = json.loads((outdir / "frequency.json").read_text())
    assert payload["runs"] == 3
    assert len(payload["scores"]) == 3
    for entry in payload["positive"] + payload["negative"]:
        assert 1 <= entry["count"] <= 3


def test_single_run_counts_all_one(tmp_path, train_config):
    data_path = tmp_path / "data.csv"
    cli.main(["synth", "--n", "300", "--seed", "7", "--out", str(data_path)])
    outdir = tmp_path / "freq1"
    cli.main(
        ["runs", "--config", train_config(data_path, iter_max=150, restarts=1),
         "--runs", "1", "--out", str(outdir)]
    )
    payload = json.loads((outdir / "frequency.json").read_text())
    assert all(e["count"] == 1 for e in payload["positive"] + payload["negative"])


def test_runs_parallel_matches_serial(tmp_path, train_config):
    data_path = tmp_path / "data.csv"
    cli.main(["synth", "--n", "300", "--seed", "7", "--out", str(data_path)])
    config = train_config(data_path, iter_max=120, restarts=1)
    serial, parallel = tmp_path / "serial", tmp_path / "parallel"
    cli.main(["runs", "--config", config, "--runs", "2", "--out", str(serial)])
    cli.main(["runs", "--config", config, "--runs", "2", "--jobs", "2", "--out", str(parallel)])
    assert (serial / "frequency.json").read_text() == (parallel / "frequency.json").read_text()


class TestErrorExits:
    def test_bad_label_column(self, tmp_path):
        data_path = tmp_path / "data.csv"
        cli.main(["synth", "--n", "50", "--seed", "0", "--out", str(data_path)])
        config = {
            "data": {"path": str(data_path), "label_column": "nope", "positive_label": "1"},
        }
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps(config), encoding="utf-8")
        assert cli.main(["train", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1

    def test_missing_data_file(self, tmp_path):
        config = {
            "data": {"path": str(tmp_path / "absent.csv"), "label_column": "y", "positive_label": "1"},
        }
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps(config), encoding="utf-8")
        assert cli.main(["train", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1

    def test_pool_cap_zero_rejected(self, tmp_path):
        data_path = tmp_path / "data.csv"
        cli.main(["synth", "--n", "50", "--seed", "0", "--out", str(data_path)])
        config = {
            "data": {"path": str(data_path), "label_column": "y", "positive_label": "1"},
            "mining": {"pool_cap": 0},
        }
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps(config), encoding="utf-8")
        assert cli.main(["train", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1

    def test_unknown_config_key_rejected(self, tmp_path):
        config = {"data": {"path": "x.csv"}, "extra": 1}
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps(config), encoding="utf-8")
        assert cli.main(["train", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1

    def test_schema_mismatch_on_evaluate(self, tmp_path, train_config):
        data_path = tmp_path / "data.csv"
        cli.main(["synth", "--n", "200", "--seed", "1", "--out", str(data_path)])
        outdir = tmp_path / "run"
        cli.main(["train", "--config", train_config(data_path), "--out", str(outdir)])
        alien = tmp_path / "alien.csv"
        alien.write_text("a,b,y\n0,1,1\n1,0,0\n", encoding="utf-8")
        assert (
            cli.main(
                ["evaluate", "--model", str(outdir / "model.json"),
                 "--test", str(alien), "--out", str(tmp_path / "e")]
            )
            == 1
        )
