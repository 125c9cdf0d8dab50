"""Train the 9-class toy model and report held-out success, jerk and diversity.

    python3 scripts/toy_run.py --seed 0 --beta 0.1 --out runs/toy
"""
import argparse
import json
import time
from pathlib import Path

import numpy as np

from camtraj.cli import loss_config, model_config, toy_records, train_config
from camtraj.config import RunConfig
from camtraj.denoiser import train
from camtraj.evalkit import diversity, evaluate_model
from camtraj.taskgen import Instruction, SceneStub, encode_condition


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, required=True)
    ap.add_argument("--beta", type=float, default=0.1)
    ap.add_argument("--steps", type=int, default=None)
    ap.add_argument("--out", default="runs/toy")
    args = ap.parse_args()
    cfg = RunConfig(seed=args.seed, beta=args.beta, **({"steps": args.steps} if args.steps else {}))

    train_recs, eval_recs = toy_records(cfg)
    flats = np.stack([r.flat for r in train_recs])
    conds = np.stack([encode_condition(r.instruction, r.scene) for r in train_recs])

    t0 = time.perf_counter()
    every = max(cfg.steps // 12, 1)

    def log(step, rep):
        if step % every == 0:
            print(f"step {step:5d}  diff {rep.diff:.4f}  wav {rep.wav:.4f}  r {rep.r_beta:.3g}  {time.perf_counter() - t0:.0f} s", flush=True)

    model = train(
        flats,
        conds,
        model_config(cfg, conds.shape[1]),
        loss_config(cfg),
        train_config(cfg),
        cfg.seed,
        log,
    )
    t1 = time.perf_counter()
    ev = evaluate_model(model, eval_recs, cfg.seed)
    div = diversity(model, Instruction("dolly_in", "regular", 1.5), SceneStub.from_seed(0), 16, seed=7)
    summary = {
        "seed": cfg.seed,
        "beta": cfg.beta,
        "success": ev.success.rate,
        "per_class": ev.success.per_class,
        "table": ev.success.table,
        "mean_jerk": ev.mean_jerk,
        "lf_fraction": ev.lf_fraction,
        "diversity_variance": div.mean_variance,
        "diversity_on_class": div.on_class_fraction,
        "train_seconds": t1 - t0,
        "eval_seconds": time.perf_counter() - t1,
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model.save(out / f"model-s{cfg.seed}-b{cfg.beta}.ckpt")
    (out / f"summary-s{cfg.seed}-b{cfg.beta}.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
