import json

import httpx
import numpy as np
import pytest

from pseudogen.classifier import TrainConfig
from pseudogen.config import ClassifierConfig, DataConfig, GenerationConfig, PipelineConfig, SelectionConfig
from pseudogen.errors import ConfigError, StageError
from pseudogen.pipeline import derive_seeds, parse_strategy, read_pseudo, run_compare, run_pipeline

FILES = ("pseudo.csv", "candidates.csv", "accepted.csv", "selected.csv", "selection_report.json", "model.json",
         "report.json", "scores.txt", "config.yaml")


def make_cfg(small_synth, out, **sections):
    train, test = small_synth
    cfg = PipelineConfig(data=DataConfig(str(train), str(test)), output_dir=str(out), p1=10.0,
                         classifier=ClassifierConfig(train=TrainConfig(epochs=20)),
                         generation=GenerationConfig(count=30), n_seeds=2)
    return cfg.replace(**sections)


def test_mock_pipeline_writes_everything(small_synth, tmp_path):
    run = run_pipeline(make_cfg(small_synth, tmp_path))
    for name in FILES:
        assert (tmp_path / name).is_file(), name
    rep = json.loads((tmp_path / "report.json").read_text())
    assert set(rep) == {"tool_version", "strategy", "seed", "metrics", "counts", "score_range", "config", "timing"}
    assert all(v is not None for v in rep["metrics"].values())
    assert set(rep["timing"]) >= {"load", "score", "rarity", "generate", "select", "train", "evaluate"}
    c = run.counts
    assert c["pseudo"] == 20 and c["parsed"] == 30
    assert c["selected"] <= c["accepted"] <= c["parsed"]
    pseudo = read_pseudo(tmp_path / "pseudo.csv")
    assert len(pseudo) == 20 and pseudo.rows.shape == (20, 4)


def test_determinism(small_synth, tmp_path):
    for strategy in ("mock", "gaussian_noise", "cutout", "cutmix"):
        outs = []
        for k in range(2):
            cfg = make_cfg(small_synth, tmp_path / f"{strategy}{k}", generation=GenerationConfig(strategy, count=30))
            run_pipeline(cfg)
            outs.append(tmp_path / f"{strategy}{k}")
        for name in ("selected.csv", "model.json"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
        reps = [json.loads((o / "report.json").read_text()) for o in outs]
        for r in reps:
            r.pop("timing")
            r["config"].pop("output_dir")
        assert reps[0] == reps[1]


def test_skip_selection_and_generation(small_synth, tmp_path):
    run = run_pipeline(make_cfg(small_synth, tmp_path / "a", selection=SelectionConfig(skip_selection=True)))
    assert run.counts["selected"] == run.counts["accepted"] == run.counts["parsed"] == 30
    run = run_pipeline(make_cfg(small_synth, tmp_path / "b", selection=SelectionConfig(skip_generation=True)))
    assert run.counts["selected"] == 0 and run.counts["train_anomalies"] == run.counts["pseudo"]


def test_pseudo_split(small_synth, tmp_path):
    cfg = make_cfg(small_synth, tmp_path)
    cfg = cfg.replace(data=DataConfig(cfg.data.train_csv, cfg.data.test_csv, pseudo_split=0.5, split_seed=1))
    run = run_pipeline(cfg)
    assert run.counts["pseudo"] == 10
    m = run.metrics
    assert m.tp + m.fp + m.tn + m.fn == 100


def test_llm_without_key_makes_no_requests(small_synth, tmp_path, monkeypatch):
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    calls = []
    transport = httpx.MockTransport(lambda r: calls.append(r) or httpx.Response(500))
    with pytest.raises(ConfigError, match="OPENAI_API_KEY"):
        run_pipeline(make_cfg(small_synth, tmp_path, generation=GenerationConfig("llm", count=30)), transport)
    assert calls == []


def test_llm_with_fake_transport(small_synth, tmp_path, monkeypatch):
    monkeypatch.setenv("OPENAI_API_KEY", "sk-test")
    rng = np.random.default_rng(0)

    def handler(request):
        n = int(request.content.decode().split("Output exactly ")[1].split(" ")[0])
        rows = rng.standard_normal((n, 4)) * 3
        text = "Here are the rows:\n```\n" + "\n".join(",".join(f"{v:.4f}" for v in r) for r in rows) + "\n```"
        return httpx.Response(200, json={"choices": [{"message": {"content": text}}]})

    run = run_pipeline(make_cfg(small_synth, tmp_path, generation=GenerationConfig("llm", count=30)),
                       httpx.MockTransport(handler))
    assert run.counts["parsed"] == 30
    assert run.counts["parse_dropped"]["prose"] == 2  # one prose line in each of two batches
    assert len(list((tmp_path / "llm_raw").iterdir())) == 2


def test_stage_error_names_stage(small_synth, tmp_path):
    cfg = make_cfg(small_synth, tmp_path, generation=GenerationConfig("cutmix", count=30), p1=0.1)
    with pytest.raises(StageError, match="stage 'generate'"):
        run_pipeline(cfg)
    cfg = make_cfg(small_synth, tmp_path)
    cfg = cfg.replace(data=DataConfig(str(tmp_path / "nope.csv"), cfg.data.test_csv))
    with pytest.raises(StageError, match="stage 'load'"):
        run_pipeline(cfg)


def test_compare(small_synth, tmp_path):
    cfg = make_cfg(small_synth, tmp_path)
    rows = run_compare(cfg, ["mock", "gaussian_noise", "mock:no_selection", "no_generation"])
    assert [r["status"] for r in rows] == ["ok"] * 4
    assert len({tuple(r["pseudo_indices"]) for r in rows}) == 1
    for r in rows:
        assert len(r["f1_runs"]) == 2 and r["f1"] == pytest.approx(np.mean(r["f1_runs"]))
    assert (tmp_path / "results.csv").read_text().count("\n") == 5
    assert (tmp_path / "mock" / "seed_1" / "report.json").is_file()


def test_compare_records_failures(small_synth, tmp_path, monkeypatch):
    monkeypatch.setenv("OPENAI_API_KEY", "sk-test")
    cfg = make_cfg(small_synth, tmp_path)
    rows = run_compare(cfg, ["mock", "llm", "cutout"], transport=httpx.MockTransport(lambda r: httpx.Response(401)))
    assert [r["status"] for r in rows] == ["ok", "failed", "ok"]
    assert "credentials" in rows[1]["error"] and rows[1]["f1"] is None
    assert "failed" in (tmp_path / "results.csv").read_text()


def test_empty_selection_fails_in_train(small_synth, tmp_path, caplog):
    # a single pseudo-anomaly sets a high floor that no candidate clears here
    with pytest.raises(StageError, match="stage 'train'"):
        run_pipeline(make_cfg(small_synth, tmp_path, p1=0.1, seed=1))
    assert "selection kept none" in caplog.text


def test_compare_argument_checks(small_synth, tmp_path):
    cfg = make_cfg(small_synth, tmp_path)
    with pytest.raises(ConfigError, match="two strategies"):
        run_compare(cfg, ["mock"])
    with pytest.raises(ConfigError, match="unknown strategies"):
        run_compare(cfg, ["mock", "smote"])
    with pytest.raises(ConfigError, match="modifier"):
        parse_strategy("mock:fast")


def test_derive_seeds_distinct():
    s = derive_seeds(0)
    assert len(set(s.values())) == 4
    assert s == derive_seeds(0) and s != derive_seeds(1)
