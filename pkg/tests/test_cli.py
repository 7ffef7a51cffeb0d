import json

import numpy as np
import pytest

from cbcfuzzy import cli, pipeline
from cbcfuzzy.dataset import generate_synthetic, load_csv, write_csv
from cbcfuzzy.errors import TrainingError
from cbcfuzzy.knowledge import DiseaseClass, crisp_oracle
from cbcfuzzy.pipeline import Model, PipelineConfig, derive_seed, evaluate, label_records, train


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def labelled_csv(tmp_path_factory):
    d = tmp_path_factory.mktemp("data")
    cli.main(["gen", "--n-per-class", "30", "--mode", "mixed", "--seed", "1", "--out", str(d / "raw.csv")])
    cli.main(["label", "--in", str(d / "raw.csv"), "--out", str(d / "lab.csv")])
    return d / "lab.csv"


def test_gen_row_count_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "gen", "--n-per-class", 100, "--mode", "core", "--seed", 5, "--out", a)[0] == 0
    run(capsys, "gen", "--n-per-class", 100, "--mode", "core", "--seed", 5, "--out", b)
    assert len(load_csv(a)) == 1000
    assert a.read_bytes() == b.read_bytes()


def test_gen_label_small(tmp_path, capsys):
    raw, lab = tmp_path / "raw.csv", tmp_path / "lab.csv"
    run(capsys, "gen", "--n-per-class", 1, "--mode", "mixed", "--out", raw)
    code, out, _ = run(capsys, "label", "--in", raw, "--out", lab)
    assert code == 0 and "labelled 10 records" in out
    assert all(r.label is not None for r in load_csv(lab))


def test_core_labels_match_oracle_and_never_ndd(tmp_path, capsys):
    raw, lab = tmp_path / "raw.csv", tmp_path / "lab.csv"
    run(capsys, "gen", "--n-per-class", 20, "--mode", "core", "--out", raw)
    run(capsys, "label", "--in", raw, "--out", lab)
    for r in load_csv(lab):
        assert r.label is not DiseaseClass.NO_DISEASE_DETECTED
        assert r.label is crisp_oracle(r)


def test_boundary_high_tau_yields_ndd(tmp_path, capsys):
    raw, lab = tmp_path / "raw.csv", tmp_path / "lab.csv"
    run(capsys, "gen", "--n-per-class", 10, "--mode", "boundary", "--out", raw)
    run(capsys, "label", "--in", raw, "--out", lab, "--tau", 0.9)
    assert any(r.label is DiseaseClass.NO_DISEASE_DETECTED for r in load_csv(lab))


def test_label_header_only(tmp_path, capsys):
    raw, lab = tmp_path / "raw.csv", tmp_path / "lab.csv"
    raw.write_text("SampleID,WBC,HGB,HCT,PLT,Age,Sex,RefGroup\n")
    assert run(capsys, "label", "--in", raw, "--out", lab)[0] == 0
    assert load_csv(lab) == []


def test_label_bad_csv_exits_1(tmp_path, capsys):
    raw = tmp_path / "raw.csv"
    raw.write_text("SampleID,WBC\nS1,7\n")
    code, _, err = run(capsys, "label", "--in", raw, "--out", tmp_path / "x.csv")
    assert code == 1 and "HGB" in err


def test_train_writes_deterministic_model(labelled_csv, tmp_path, capsys):
    m1, m2 = tmp_path / "m1.json", tmp_path / "m2.json"
    args = ["--in", labelled_csv, "--n-estimators", 20, "--seed", 3]
    code, out, _ = run(capsys, "train", *args, "--model", m1)
    assert code == 0 and "overall accuracy" in out
    run(capsys, "train", *args, "--model", m2)
    assert m1.read_bytes() == m2.read_bytes()
    assert (tmp_path / "m1.test.csv").exists() and (tmp_path / "m1.train.csv").exists()


def test_train_needs_two_classes(tmp_path, capsys):
    rows = [r for r in label_records(generate_synthetic(20, "core", seed=0))
            if r.label is DiseaseClass.HEALTHY]
    with pytest.raises(TrainingError):
        train(rows)
    path = tmp_path / "one.csv"
    write_csv(rows, path, labeled=True)
    assert run(capsys, "train", "--in", path, "--model", tmp_path / "m.json")[0] == 1


def test_eval_on_train_partition_reproduces_train_report(labelled_csv, tmp_path, capsys):
    model = tmp_path / "m.json"
    _, train_out, _ = run(capsys, "train", "--in", labelled_csv, "--model", model, "--n-estimators", 10)
    _, eval_out, _ = run(capsys, "eval", "--in", tmp_path / "m.train.csv", "--model", model)
    assert train_out.startswith(eval_out)


def test_eval_reference_matrix(capsys):
    code, out, _ = run(capsys, "eval", "--from-confusion", "reference")
    assert code == 0 and "overall accuracy: 97%" in out
    _, js, _ = run(capsys, "eval", "--from-confusion", "reference", "--format", "json")
    doc = json.loads(js)
    assert doc["accuracy"] == 0.9681
    for c in doc["per_class"]:
        assert f"{c['f1']:.4f}" in out


def test_eval_confusion_file(tmp_path, capsys):
    path = tmp_path / "cm.csv"
    path.write_text("T,a,b\na,3,1\nb,0,4\n")
    code, out, _ = run(capsys, "eval", "--from-confusion", path, "--format", "csv")
    assert code == 0 and "accuracy,,,0.8750,8," in out


def test_predict_examples(labelled_csv, tmp_path, capsys):
    code, out, _ = run(capsys, "predict", "--wbc", 7, "--hgb", 14, "--hct", 45, "--plt", 250, "--age", 30)
    assert code == 0 and out.startswith("fuzzy label: Healthy")
    _, out, _ = run(capsys, "predict", "--wbc", 15, "--hgb", 8, "--hct", 25, "--plt", 60, "--age", 50, "--json")
    assert json.loads(out)["fuzzy_label"] == "Chronic Kidney Disease - CKD"
    model = tmp_path / "m.json"
    run(capsys, "train", "--in", labelled_csv, "--model", model, "--n-estimators", 20)
    _, out, _ = run(capsys, "predict", "--wbc", 7, "--hgb", 14, "--hct", 45, "--plt", 250, "--age", 30,
                    "--model", model, "--json")
    doc = json.loads(out)
    assert doc["model_label"] == "Healthy"
    assert sum(doc["probabilities"].values()) == pytest.approx(1.0)


def test_predict_missing_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["predict", "--wbc", "7"])
    assert exc.value.code == 2


def test_config_file_layering(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_per_class": 2, "mode": "boundary"}))
    out = tmp_path / "g.csv"
    run(capsys, "gen", "--config", cfg, "--out", out)
    assert len(load_csv(out)) == 20
    run(capsys, "gen", "--config", cfg, "--n-per-class", 3, "--out", out)
    assert len(load_csv(out)) == 30


def test_kb_export_round_trip(tmp_path, capsys):
    assert run(capsys, "kb", "--out-dir", tmp_path)[0] == 0
    rules = json.loads((tmp_path / "rules.json").read_text())
    # drop the Healthy rule; a healthy sample then has nothing to fire
    rules["rules"] = [r for r in rules["rules"] if r["then"] != "Healthy"]
    (tmp_path / "rules.json").write_text(json.dumps(rules))
    _, out, _ = run(capsys, "predict", "--wbc", 7, "--hgb", 14, "--hct", 45, "--plt", 250, "--age", 30,
                    "--variables", tmp_path / "variables.json", "--rules", tmp_path / "rules.json")
    assert out.startswith("fuzzy label: No Disease Detected")


def test_kb_rejects_unknown_class(tmp_path, capsys):
    run(capsys, "kb", "--out-dir", tmp_path)
    rules = json.loads((tmp_path / "rules.json").read_text())
    rules["rules"][0]["then"] = "Scurvy"
    rules["classes"][0] = "Scurvy"
    (tmp_path / "rules.json").write_text(json.dumps(rules))
    code, _, err = run(capsys, "predict", "--wbc", 7, "--hgb", 14, "--hct", 45, "--plt", 250, "--age", 30,
                       "--rules", tmp_path / "rules.json")
    assert code == 1 and "Scurvy" in err


def test_leakage_guard(monkeypatch, labelled_csv):
    records = load_csv(labelled_csv)
    seen = {}
    real_norm, real_over = pipeline.normalize_minmax, pipeline.oversample

    def spy_norm(ds):
        seen["norm"] = set(ds.ids)
        return real_norm(ds)

    def spy_over(ds, seed):
        seen["over"] = set(ds.ids)
        return real_over(ds, seed)

    monkeypatch.setattr(pipeline, "normalize_minmax", spy_norm)
    monkeypatch.setattr(pipeline, "oversample", spy_over)
    result = train(records, PipelineConfig(n_estimators=5))
    test_ids = {r.sample_id for r in result.test_records}
    assert test_ids and seen["norm"].isdisjoint(test_ids) and seen["over"].isdisjoint(test_ids)
    assert seen["norm"] == {r.sample_id for r in result.train_records}


def test_model_round_trip(labelled_csv, tmp_path):
    result = train(load_csv(labelled_csv), PipelineConfig(n_estimators=5))
    path = tmp_path / "m.json"
    result.model.save(path)
    again = Model.load(path)
    assert again.predict(result.test_records) == result.model.predict(result.test_records)
    assert evaluate(again, result.test_records) == evaluate(result.model, result.test_records)


def test_derive_seed_independent_streams():
    assert derive_seed(0, "split") == derive_seed(0, "split")
    assert len({derive_seed(0, "split"), derive_seed(0, "oversample"), derive_seed(1, "split")}) == 3


def test_core_training_report_high(tmp_path):
    records = label_records(generate_synthetic(60, "core", seed=2))
    result = train(records, PipelineConfig(n_estimators=30))
    assert result.report.weighted_recall >= 0.99
    assert np.isfinite(result.balanced.X).all()
    assert (result.balanced.X >= 0).all() and (result.balanced.X <= 1).all()
