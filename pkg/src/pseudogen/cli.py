"""Command-line entry point.

Every subcommand reads the same YAML config; the stage subcommands read and
write the intermediate files of a pipeline output directory, so a run can be
resumed or audited one stage at a time:

    synth -> score -> pseudo -> generate -> select -> train -> eval

Exit codes: 0 success, 1 stage error, 2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .classifier import MlpModel
from .config import PipelineConfig, dump_config, load_config
from .dataset import load_csv, save_csv
from .detector import load_external_scores, select_pseudo, fit_score, write_scores
from .errors import ConfigError, PseudogenError
from .pipeline import (
    Data,
    budget,
    derive_seeds,
    evaluate_model,
    fit_classifier,
    generate,
    load_data,
    pseudo_label,
    rarity_model,
    read_pseudo,
    run_compare,
    run_pipeline,
    select,
    stage,
    write_pseudo,
    _write_json,
)
from .rarity import pseudo_score_range
from .synth import write_synthetic

log = logging.getLogger("pseudogen")

EXIT_OK, EXIT_STAGE, EXIT_CONFIG = 0, 1, 2


def _config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    overrides = {}
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    return cfg.replace(**overrides).validate() if overrides else cfg


def _out(cfg: PipelineConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _path(value, out: Path, default: str) -> Path:
    return Path(value) if value else out / default


def _load(cfg: PipelineConfig) -> Data:
    with stage("load"):
        return load_data(cfg)


def _pseudo(cfg, args, out):
    path = _path(getattr(args, "pseudo", None), out, "pseudo.csv")
    with stage("load"):
        if not path.is_file():
            raise FileNotFoundError(f"pseudo-anomaly file not found: {path} (run 'pseudo' first)")
        return read_pseudo(path)


def cmd_synth(cfg, args):
    out = _out(cfg)
    train, test = write_synthetic(out, seed=cfg.seed, n_normal=args.n_normal, n_test_normal=args.n_test_normal,
                                  n_test_anomaly=args.n_test_anomaly, m=args.m, shift=args.shift)
    print(f"wrote {train} and {test}")


def cmd_score(cfg, args):
    out = _out(cfg)
    data = _load(cfg)
    with stage("score"):
        scores = fit_score(cfg.detector, data.train, data.pool)
    write_scores(out / "scores.txt", scores)
    print(f"wrote {len(scores)} scores to {out / 'scores.txt'}")


def cmd_pseudo(cfg, args):
    out = _out(cfg)
    data = _load(cfg)
    with stage("score"):
        scores_path = _path(args.scores, out, "scores.txt")
        if scores_path.is_file():
            scores = load_external_scores(scores_path, len(data.pool_index))
            local = select_pseudo(scores, data.pool, cfg.p1)
            pseudo = type(local)(data.pool_index[local.indices], local.rows)
        else:
            scores, pseudo = pseudo_label(cfg, data)
            write_scores(out / "scores.txt", scores)
    with stage("rarity"):
        rng = pseudo_score_range(rarity_model(cfg, data), pseudo.rows, cfg.rarity.p2)
    write_pseudo(out / "pseudo.csv", pseudo, data.schema.feature_names)
    _write_json(out / "score_range.json", {"lo": rng.lo, "hi": rng.hi, "p2": cfg.rarity.p2})
    print(f"{len(pseudo)} pseudo-anomalies, rarity score range [{rng.lo}, {rng.hi}]")


def cmd_generate(cfg, args):
    out = _out(cfg)
    data = _load(cfg)
    pseudo = _pseudo(cfg, args, out)
    with stage("rarity"):
        ecdf = rarity_model(cfg, data)
        rng = pseudo_score_range(ecdf, pseudo.rows, cfg.rarity.p2)
    with stage("generate"):
        cs = generate(cfg, data, pseudo, ecdf, rng, derive_seeds(cfg.seed), budget(cfg, data),
                      cfg.generation.strategy, out)
    save_csv(out / "candidates.csv", cs.rows, data.schema.feature_names)
    print(f"{len(cs.rows)} candidates ({cs.provenance}), dropped while parsing: {cs.dropped or 0}")


def cmd_select(cfg, args):
    out = _out(cfg)
    data = _load(cfg)
    pseudo = _pseudo(cfg, args, out)
    with stage("load"):
        candidates = load_csv(_path(args.candidates, out, "candidates.csv")).X
    with stage("select"):
        validation, result, selected = select(cfg, data, pseudo, candidates, budget(cfg, data))
    names = data.schema.feature_names
    save_csv(out / "accepted.csv", validation.accepted, names)
    save_csv(out / "selected.csv", selected, names)
    _write_json(out / "selection_report.json", result.report(validation))
    print(f"accepted {len(validation.accepted)}/{len(candidates)}, selected {len(selected)}")


def cmd_train(cfg, args):
    out = _out(cfg)
    data = _load(cfg)
    with stage("load"):
        anomalies = load_csv(_path(args.anomalies, out, "selected.csv")).X
    with stage("train"):
        model = fit_classifier(cfg, data, anomalies, derive_seeds(cfg.seed))
    model.save(out / "model.json")
    print(f"trained on {len(data.train)} normal and {len(anomalies)} anomalous rows, "
          f"final loss {model.loss_history[-1]:.6g}")


def cmd_eval(cfg, args):
    out = _out(cfg)
    data = _load(cfg)
    with stage("evaluate"):
        model = MlpModel.load(_path(args.model, out, "model.json"))
        report = evaluate_model(cfg, model, data)
    _write_json(out / "eval.json", report.to_dict())
    print(report.display())


def cmd_pipeline(cfg, args):
    run = run_pipeline(cfg)
    print(run.metrics.display())
    print(json.dumps(run.counts))


def cmd_compare(cfg, args):
    rows = run_compare(cfg, args.strategies)
    for r in rows:
        if r["status"] == "ok":
            print(f"{r['strategy']:<22} auc_roc={r['auc_roc']:.4f} auc_pr={r['auc_pr']:.4f} f1={r['f1']:.4f}")
        else:
            print(f"{r['strategy']:<22} FAILED: {r['error']}")


def _global_flags(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="YAML config file")
    parser.add_argument("--out", default=default, help="output directory (overrides output_dir)")
    parser.add_argument("--seed", type=int, default=default, help="run seed (overrides seed)")
    parser.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pseudogen", description=__doc__.split("\n\n")[0])
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    add("pipeline", cmd_pipeline, "run every stage end to end")
    p = add("compare", cmd_compare, "run several strategies over n_seeds seeds on shared pseudo-labels")
    p.add_argument("strategies", nargs="+",
                   help="e.g. mock gaussian_noise cutout cutmix llm mock:no_selection no_generation")
    add("score", cmd_score, "score the test rows with the configured detector")
    p = add("pseudo", cmd_pseudo, "pick pseudo-anomalies and their rarity score range")
    p.add_argument("--scores", help="score file (default: <out>/scores.txt if present, else compute)")
    p = add("generate", cmd_generate, "generate candidate anomalies")
    p.add_argument("--pseudo", help="pseudo-anomaly file (default: <out>/pseudo.csv)")
    p = add("select", cmd_select, "validate and select candidates")
    p.add_argument("--pseudo", help="pseudo-anomaly file (default: <out>/pseudo.csv)")
    p.add_argument("--candidates", help="candidate file (default: <out>/candidates.csv)")
    p = add("train", cmd_train, "train the classifier on train normals plus anomalies")
    p.add_argument("--anomalies", help="anomaly rows (default: <out>/selected.csv)")
    p = add("eval", cmd_eval, "evaluate a trained model on the test set")
    p.add_argument("--model", help="model file (default: <out>/model.json)")
    p = add("synth", cmd_synth, "write the built-in synthetic dataset (train.csv, test.csv)")
    p.add_argument("--n-normal", type=int, default=2000)
    p.add_argument("--n-test-normal", type=int, default=900)
    p.add_argument("--n-test-anomaly", type=int, default=100)
    p.add_argument("--m", type=int, default=6)
    p.add_argument("--shift", type=float, default=4.0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        args.func(cfg, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PseudogenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except ValueError as exc:  # e.g. invalid synth sizes
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
