"""Beta ablation on the toy task: one model per (seed, beta), same data and init.

    python3 scripts/beta_sweep.py --seeds 0 1 2 --betas 0 0.1 1.0 --out runs/sweep
"""
import argparse
from pathlib import Path

from camtraj.cli import loss_config, toy_records, train_config
from camtraj.config import RunConfig
from camtraj.evalkit import beta_sweep, fmt


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--betas", type=float, nargs="+", default=[0.0, 0.1])
    ap.add_argument("--steps", type=int, default=None)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="runs/sweep")
    args = ap.parse_args()
    lines = ["seed,beta,success_rate,mean_jerk,lf_fraction,status"]
    for seed in args.seeds:
        cfg = RunConfig(seed=seed, **({"steps": args.steps} if args.steps else {}))
        train_recs, eval_recs = toy_records(cfg)
        cells = beta_sweep(
            args.betas,
            train_recs,
            eval_recs,
            loss_config(cfg),
            train_config(cfg),
            None,
            seed,
            workers=args.workers,
        )
        for c in cells:
            line = f"{seed},{fmt(c.beta)},{fmt(c.success_rate)},{fmt(c.mean_jerk)},{fmt(c.lf_fraction)},{c.status}"
            lines.append(line)
            print(line, flush=True)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
