#!/usr/bin/env python3
"""Distribution of approximation accuracy, granule weight and weighted
uncertainty over one universe, for both t-conorm sign conventions.

    python scripts/selection_diagnostics.py [--data-seed 0] [--seed 0]
"""
import argparse
import tempfile

import numpy as np

from pseudogen.config import DataConfig, PipelineConfig
from pseudogen.pipeline import budget, derive_seeds, generate, prepare
from pseudogen.selection import uncertainty_select
from pseudogen.synth import write_synthetic


def summary(name, v):
    q = np.quantile(v, [0, 0.25, 0.5, 0.75, 1])
    return f"  {name:<12}" + " ".join(f"{x:9.4f}" for x in q)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--data-seed", type=int, default=0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        train, test = write_synthetic(tmp, seed=args.data_seed)
        cfg = PipelineConfig(data=DataConfig(str(train), str(test)), seed=args.seed)
        data, _, pseudo, ecdf, rng = prepare(cfg)
    cands = generate(cfg, data, pseudo, ecdf, rng, derive_seeds(cfg.seed), budget(cfg, data), "mock").rows
    print(f"score range [{rng.lo}, {rng.hi}], {len(pseudo)} pseudo-anomalies, {len(cands)} candidates")
    print(f"  {'':<12}" + " ".join(f"{h:>9}" for h in ("min", "q25", "median", "q75", "max")))
    for literal in (False, True):
        res = uncertainty_select(cands, pseudo.rows, data.train, len(cands), paper_literal_scos=literal)
        u, s = res.uncertainty, res.selected
        cand = res.system.mask("candidate")
        print(f"{'minus-sign' if literal else 'dual (default)'} t-conorm: delta={res.delta:.4f}, "
              f"p3 {s.initial_threshold:.4f} -> {s.final_threshold:.4f} in {s.relax_steps} steps, "
              f"selected {len(s.universe_indices)}")
        print(summary("alpha", u.alpha))
        print(summary("lambda", u.lam))
        print(summary("alpha' cand", u.alpha_prime[cand]))
        print(summary("alpha' all", u.alpha_prime))


if __name__ == "__main__":
    main()
