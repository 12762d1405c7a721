"""End-to-end orchestration: score, pseudo-label, generate, select, train, evaluate."""
from __future__ import annotations

import contextlib
import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .classifier import MlpModel, predict, train
from .config import PipelineConfig, dump_config, generation_budget
from .dataset import DatasetSchema, load_csv, save_csv
from .detector import PseudoAnomalySet, fit_score, select_pseudo, write_scores
from .errors import ConfigError, PseudogenError, StageError
from .generation import (
    BASELINE_KINDS,
    CandidateSet,
    STRATEGIES,
    EmptyParse,
    baseline_generate,
    build_prompt,
    generate_batches,
    mock_generate,
    parse_candidates,
)
from .metrics import EvalReport, evaluate
from .rarity import EcdfModel, ScoreRange, fit_ecdf, pseudo_score_range
from .selection import SelectionResult, ValidationReport, stage1_filter, uncertainty_select, universe_ranges

log = logging.getLogger(__name__)


@dataclass
class Data:
    schema: DatasetSchema
    train: np.ndarray  # normal rows only
    test: np.ndarray
    test_labels: np.ndarray
    pool_index: np.ndarray  # test rows available for pseudo-labeling
    eval_index: np.ndarray  # test rows used for evaluation

    @property
    def pool(self) -> np.ndarray:
        return self.test[self.pool_index]

    @property
    def n_rows(self) -> int:
        return len(self.train) + len(self.test)


@dataclass
class RunReport:
    strategy: str
    seed: int
    metrics: EvalReport
    counts: dict
    score_range: list
    timing: dict
    config: dict
    tool_version: str = __version__

    def to_dict(self, timing: bool = True) -> dict:
        d = {
            "tool_version": self.tool_version,
            "strategy": self.strategy,
            "seed": self.seed,
            "metrics": self.metrics.to_dict(),
            "counts": self.counts,
            "score_range": self.score_range,
            "config": self.config,
        }
        if timing:
            d["timing"] = self.timing
        return d


@contextlib.contextmanager
def stage(name: str, timing: Optional[dict] = None):
    t0 = time.perf_counter()
    try:
        yield
    except (ConfigError, StageError):
        raise
    except (PseudogenError, ValueError, OSError, IndexError) as exc:
        raise StageError(name, exc) from exc
    finally:
        if timing is not None:
            timing[name] = round(time.perf_counter() - t0, 6)


def derive_seeds(seed: int) -> dict:
    children = np.random.SeedSequence(seed).spawn(4)
    names = ("generation", "init", "shuffle", "refs")
    return {k: int(c.generate_state(1)[0]) for k, c in zip(names, children)}


def load_data(cfg: PipelineConfig) -> Data:
    train_ds = load_csv(cfg.data.train_csv, cfg.data.label_column)
    test_ds = load_csv(cfg.data.test_csv, cfg.data.label_column)
    if train_ds.schema.feature_names != test_ds.schema.feature_names:
        raise ConfigError("train and test CSVs have different feature columns")
    normal = train_ds.y == 0
    if not normal.all():
        log.warning("dropping %d labeled anomalies from the training file", int((~normal).sum()))
    n_test = len(test_ds)
    if cfg.data.pseudo_split > 0:
        perm = np.random.default_rng(cfg.data.split_seed).permutation(n_test)
        cut = int(round(cfg.data.pseudo_split * n_test))
        pool, ev = np.sort(perm[:cut]), np.sort(perm[cut:])
    else:
        pool = ev = np.arange(n_test)
    return Data(train_ds.schema, train_ds.X[normal], test_ds.X, test_ds.y, pool, ev)


def pseudo_label(cfg: PipelineConfig, data: Data) -> tuple[np.ndarray, PseudoAnomalySet]:
    scores = fit_score(cfg.detector, data.train, data.pool)
    local = select_pseudo(scores, data.pool, cfg.p1)
    # report indices into the full test file
    return scores, PseudoAnomalySet(data.pool_index[local.indices], local.rows)


def rarity_model(cfg: PipelineConfig, data: Data) -> EcdfModel:
    if cfg.rarity.ecdf_population == "train":
        return fit_ecdf(data.train)
    return fit_ecdf(np.vstack([data.train, data.test]))


def budget(cfg: PipelineConfig, data: Data) -> int:
    return cfg.generation.count if cfg.generation.count is not None else generation_budget(data.n_rows)


def generate(cfg: PipelineConfig, data: Data, pseudo: PseudoAnomalySet, ecdf: EcdfModel, score_range: ScoreRange,
             seeds: dict, count: int, strategy: str, out_dir=None, transport=None) -> CandidateSet:
    g = cfg.generation
    if strategy == "mock":
        return mock_generate(seeds["generation"], ecdf, score_range, cfg.rarity.p2, count)
    if strategy in BASELINE_KINDS:
        return baseline_generate(strategy, pseudo.rows, data.train, count, g.sigma, g.mask_fraction,
                                 seeds["generation"])
    rng = np.random.default_rng(seeds["refs"])
    refs = data.train[rng.choice(len(data.train), size=min(g.normal_refs, len(data.train)), replace=False)]

    def make_prompt(k):
        return build_prompt(data.schema.feature_names, pseudo.rows, refs, score_range, cfg.rarity.p2, k,
                            token_budget=g.token_budget)

    raw_dir = Path(out_dir) / "llm_raw" if out_dir is not None else None
    responses = generate_batches(g.llm, make_prompt, count, raw_dir=raw_dir, transport=transport)
    parts, dropped = [], {}
    for text in responses:
        try:
            cs = parse_candidates(text, data.schema.m)
        except EmptyParse:
            log.warning("an LLM response contained no parseable rows")
            continue
        parts.append(cs.rows)
        for k, v in cs.dropped.items():
            dropped[k] = dropped.get(k, 0) + v
    if not parts:
        raise EmptyParse("\n".join(responses))
    return CandidateSet(np.vstack(parts), "llm", dropped)


def select(cfg: PipelineConfig, data: Data, pseudo: PseudoAnomalySet, candidates: np.ndarray, count: int):
    """Stage 1 then stage 2; returns (validation report, selection result, selected rows)."""
    s = cfg.selection
    ranges = universe_ranges(data.train, pseudo.rows)
    validation = stage1_filter(candidates, data.schema.m, ranges, s.range_tolerance)
    target = s.target_count if s.target_count is not None else count
    result = uncertainty_select(validation.accepted, pseudo.rows, data.train, target, s.delta, s.relax_step,
                                s.paper_literal_scos)
    return validation, result, result.selected.rows


def fit_classifier(cfg: PipelineConfig, data: Data, anomalies: np.ndarray, seeds: dict) -> MlpModel:
    c = cfg.classifier
    mlp = type(c.mlp)(hidden_sizes=list(c.mlp.hidden_sizes), seed=seeds["init"])
    tcfg = type(c.train)(**{**asdict(c.train), "shuffle_seed": seeds["shuffle"]})
    return train(data.train, anomalies, mlp, tcfg)


def evaluate_model(cfg: PipelineConfig, model: MlpModel, data: Data) -> EvalReport:
    idx = data.eval_index
    return evaluate(predict(model, data.test[idx]), data.test_labels[idx], cfg.f1_threshold)


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def write_pseudo(path, pseudo: PseudoAnomalySet, names) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["test_index", *names])
        for i, row in zip(pseudo.indices, pseudo.rows):
            w.writerow([int(i), *(f"{v:.17g}" for v in row)])


def read_pseudo(path) -> PseudoAnomalySet:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))[1:]
    idx = np.array([int(r[0]) for r in rows], dtype=int)
    X = np.array([[float(v) for v in r[1:]] for r in rows], dtype=float)
    return PseudoAnomalySet(idx, X)


def run_variant(cfg: PipelineConfig, data: Data, pseudo: PseudoAnomalySet, ecdf: EcdfModel,
                score_range: ScoreRange, out_dir, strategy: Optional[str] = None, transport=None,
                timing: Optional[dict] = None) -> RunReport:
    """Everything after pseudo-labeling, for one strategy and seed."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    strategy = strategy or cfg.generation.strategy
    timing = {} if timing is None else timing
    seeds = derive_seeds(cfg.seed)
    names = data.schema.feature_names
    s = cfg.selection
    count = budget(cfg, data)
    empty = np.empty((0, data.schema.m))
    counts = {"pseudo": len(pseudo), "parsed": 0, "accepted": 0, "selected": 0, "train_anomalies": 0}
    selection_report = {"skipped": True}

    if s.skip_generation:
        candidates = accepted = selected = empty
        anomalies = pseudo.rows
    else:
        with stage("generate", timing):
            cs = generate(cfg, data, pseudo, ecdf, score_range, seeds, count, strategy, out, transport)
            candidates = cs.rows
            if cs.dropped:
                counts["parse_dropped"] = cs.dropped
        if s.skip_selection:
            accepted = selected = candidates
        else:
            with stage("select", timing):
                validation, result, selected = select(cfg, data, pseudo, candidates, count)
                accepted = validation.accepted
                selection_report = result.report(validation)
            if not len(selected):
                log.warning("selection kept none of %d accepted candidates", len(accepted))
        anomalies = selected
    counts.update(parsed=len(candidates), accepted=len(accepted), selected=len(selected),
                  train_anomalies=len(anomalies))

    with stage("train", timing):
        model = fit_classifier(cfg, data, anomalies, seeds)
    with stage("evaluate", timing):
        report = evaluate_model(cfg, model, data)

    save_csv(out / "candidates.csv", candidates, names)
    save_csv(out / "accepted.csv", accepted, names)
    save_csv(out / "selected.csv", selected, names)
    _write_json(out / "selection_report.json", selection_report)
    model.save(out / "model.json")
    run = RunReport(strategy, cfg.seed, report, counts, [score_range.lo, score_range.hi], timing, cfg.to_dict())
    _write_json(out / "report.json", run.to_dict())
    return run


def prepare(cfg: PipelineConfig, timing: Optional[dict] = None):
    """Load data, pseudo-label and fit the rarity model: the part shared by every strategy."""
    timing = {} if timing is None else timing
    with stage("load", timing):
        data = load_data(cfg)
    with stage("score", timing):
        scores, pseudo = pseudo_label(cfg, data)
    with stage("rarity", timing):
        ecdf = rarity_model(cfg, data)
        score_range = pseudo_score_range(ecdf, pseudo.rows, cfg.rarity.p2)
    return data, scores, pseudo, ecdf, score_range


def check_credentials(cfg: PipelineConfig, strategies) -> None:
    if "llm" in strategies and not cfg.selection.skip_generation:
        cfg.generation.llm.api_key()


def run_pipeline(cfg: PipelineConfig, transport=None) -> RunReport:
    cfg.validate()
    check_credentials(cfg, [cfg.generation.strategy])
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    dump_config(cfg, out / "config.yaml")
    timing = {}
    data, scores, pseudo, ecdf, score_range = prepare(cfg, timing)
    write_scores(out / "scores.txt", scores)
    write_pseudo(out / "pseudo.csv", pseudo, data.schema.feature_names)
    return run_variant(cfg, data, pseudo, ecdf, score_range, out, transport=transport, timing=timing)


def parse_strategy(token: str) -> tuple[str, dict]:
    """'mock', 'mock:no_selection' or 'no_generation' -> (generation strategy, selection overrides)."""
    if token == "no_generation":
        return "mock", {"skip_generation": True}
    base, _, flag = token.partition(":")
    if flag and flag != "no_selection":
        raise ConfigError(f"unknown strategy modifier {flag!r} in {token!r}")
    return base, ({"skip_selection": True} if flag else {})


METRIC_KEYS = ("auc_roc", "auc_pr", "f1")


def run_compare(cfg: PipelineConfig, strategies, transport=None) -> list[dict]:
    """Run every strategy over ``cfg.n_seeds`` seeds on shared pseudo-labels.

    A failing strategy is recorded with status 'failed'; the others still run.
    """
    if len(strategies) < 2:
        raise ConfigError("compare needs at least two strategies")
    parsed = [parse_strategy(t) for t in strategies]
    check_credentials(cfg, [p[0] for p in parsed])
    unknown = [base for base, _ in parsed if base not in STRATEGIES]
    if unknown:
        raise ConfigError(f"unknown strategies {unknown}; choose from {STRATEGIES}")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    dump_config(cfg, out / "config.yaml")
    data, scores, pseudo, ecdf, score_range = prepare(cfg)
    write_scores(out / "scores.txt", scores)
    write_pseudo(out / "pseudo.csv", pseudo, data.schema.feature_names)

    rows = []
    for token, (base, overrides) in zip(strategies, parsed):
        sel = type(cfg.selection)(**{**asdict(cfg.selection), **overrides})
        per_seed = []
        row = {"strategy": token, "status": "ok", "error": None}
        try:
            for k in range(cfg.n_seeds):
                seed = cfg.seed + k
                run_cfg = cfg.replace(selection=sel, seed=seed)
                rep = run_variant(run_cfg, data, pseudo, ecdf, score_range,
                                  out / token.replace(":", "_") / f"seed_{seed}", strategy=base, transport=transport)
                per_seed.append(rep)
        except Exception as exc:  # recorded, the comparison carries on
            log.error("strategy %s failed: %s", token, exc)
            row.update(status="failed", error=str(exc))
        row["seeds"] = [r.seed for r in per_seed]
        for key in METRIC_KEYS:
            vals = [getattr(r.metrics, key) for r in per_seed]
            row[key] = float(np.mean(vals)) if vals and row["status"] == "ok" else None
            row[f"{key}_runs"] = vals
        row["selected"] = [r.counts["selected"] for r in per_seed]
        row["pseudo_indices"] = pseudo.indices.tolist()
        rows.append(row)

    _write_json(out / "results.json", rows)
    with (out / "results.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strategy", "status", "n_runs", *METRIC_KEYS, *(f"{k}_runs" for k in METRIC_KEYS)])
        for r in rows:
            w.writerow([r["strategy"], r["status"], len(r["seeds"]),
                        *("" if r[k] is None else f"{r[k]:.6f}" for k in METRIC_KEYS),
                        *(";".join(f"{v:.6f}" for v in r[f"{k}_runs"]) for k in METRIC_KEYS)])
    return rows
