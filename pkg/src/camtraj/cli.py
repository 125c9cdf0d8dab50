"""Command-line entry point.

Every command resolves a :class:`RunConfig`, writes its outputs atomically into
``<out>/<command>-<config hash>-s<seed>/`` together with the resolved
``config.txt``, and prints that directory. Failures print one JSON line to
stderr and exit nonzero.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import evalkit
from .analysis import analyze
from .config import ConfigError, RunConfig, resolve
from .denoiser import CameraModel, DenoiserConfig, TrainConfig, train
from .evalkit import Thresholds, fmt
from .losses import WavRegConfig
from .taskgen import (
    CLASSES,
    Instruction,
    Record,
    SceneStub,
    build_records,
    encode_condition,
    load_dataset,
    write_atomic,
    write_dataset,
)
from .trajectory import flatten, to_pose_lines, unflatten

EVAL_SEED_OFFSET = 1_000_003  # held-out records never share a stream with training data

COMMANDS = ("gen-data", "train", "sample", "eval", "analyze", "export", "sweep")


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _classes(cfg: RunConfig) -> tuple[str, ...]:
    classes = cfg.classes or CLASSES
    bad = [c for c in classes if c not in CLASSES]
    if bad:
        raise ConfigError(f"unknown classes {bad}", "classes")
    return tuple(classes)


def _need(cfg: RunConfig, key: str) -> str:
    value = getattr(cfg, key)
    if not value:
        raise ConfigError(f"{key} is required for this command", key)
    return value


def _thresholds(cfg: RunConfig) -> Thresholds:
    return Thresholds(cfg.translation_threshold, cfg.rotation_threshold_deg, cfg.speed_tolerance)


def loss_config(cfg: RunConfig) -> WavRegConfig:
    return WavRegConfig(cfg.levels, cfg.weight_approx, cfg.weight_details, cfg.beta)


def train_config(cfg: RunConfig) -> TrainConfig:
    return TrainConfig(
        cfg.steps, cfg.batch_size, cfg.lr, cfg.regularizer, cfg.diffusion_steps, cfg.diag_every, cfg.lr_schedule, cfg.warmup, cfg.ema_decay
    )


def model_config(cfg: RunConfig, cond_dim: int) -> DenoiserConfig:
    return DenoiserConfig(cfg.t, 12, cfg.latent_dim, cfg.depth, cfg.heads, cond_dim)


def toy_records(cfg: RunConfig) -> tuple[list[Record], list[Record]]:
    """Freshly generated (train, held-out) records for ``cfg``'s seed."""
    return build_records(cfg.per_class, cfg.t, cfg.seed, _classes(cfg), cfg.dt), _eval_records(replace(cfg, eval_data=""))


def _train_records(cfg: RunConfig) -> list[Record]:
    recs = load_dataset(_need(cfg, "data"))
    if not recs:
        raise ConfigError("training dataset is empty", "data")
    return recs


def _eval_records(cfg: RunConfig) -> list[Record]:
    if cfg.eval_data:
        return load_dataset(cfg.eval_data)
    return build_records(cfg.eval_per_class, cfg.t, cfg.seed + EVAL_SEED_OFFSET, _classes(cfg), cfg.dt, prefix="eval-")


# commands ----------------------------------------------------------------------


def cmd_gen_data(cfg: RunConfig, out: Path) -> None:
    recs = build_records(cfg.per_class, cfg.t, cfg.seed, _classes(cfg), cfg.dt)
    write_dataset(out / "dataset.jsonl", recs)


def cmd_train(cfg: RunConfig, out: Path) -> None:
    recs = _train_records(cfg)
    flats = np.stack([r.flat for r in recs])
    conds = np.stack([encode_condition(r.instruction, r.scene) for r in recs])
    rows = []

    def log(step, rep):
        rows.append((step, rep.diff, rep.wav, rep.total, rep.r_beta, rep.sin_phi, rep.bound))

    model = train(flats, conds, model_config(cfg, conds.shape[1]), loss_config(cfg), train_config(cfg), cfg.seed, log)
    model.save(out / "model.ckpt")
    write_atomic(out / "train_log.csv", _csv(("step", "diff", "wav", "total", "r_beta", "sin_phi", "bound"), rows))


def cmd_sample(cfg: RunConfig, out: Path) -> None:
    model = CameraModel.load(_need(cfg, "checkpoint"))
    instr = Instruction(cfg.motion_class, cfg.speed, cfg.magnitude, cfg.components)
    scene = SceneStub.from_seed(cfg.scene_seed)
    cond = np.tile(encode_condition(instr, scene), (cfg.n_samples, 1))
    seeds = [evalkit._item_seed(cfg.seed, i) for i in range(cfg.n_samples)]
    flats = model.sample(cond, seeds)
    recs = [Record(f"sample-{i:05d}", instr, scene, unflatten(f, cfg.dt)) for i, f in enumerate(flats)]
    write_dataset(out / "samples.jsonl", recs)


def cmd_eval(cfg: RunConfig, out: Path) -> None:
    model = CameraModel.load(_need(cfg, "checkpoint"))
    ev = evalkit.evaluate_model(model, _eval_records(cfg), cfg.seed, _thresholds(cfg))
    rows = [
        (s.id, s.instruction.motion_class, "+".join(s.instruction.components), v.predicted_class, "+".join(v.components), int(bool(v.matched)))
        for s, v in zip(ev.samples, ev.success.verdicts)
    ]
    write_atomic(out / "verdicts.csv", _csv(("id", "class", "components", "predicted", "predicted_components", "matched"), rows))
    summary = [("overall", ev.success.rate)]
    summary += [(f"class:{k}", v) for k, v in ev.success.per_class.items()]
    summary += [(f"table:{k}", v) for k, v in ev.success.table.items()]
    summary += [("mean_jerk", ev.mean_jerk), ("lf_fraction", ev.lf_fraction)]
    write_atomic(out / "summary.csv", _csv(("metric", "value"), [(k, float(v)) for k, v in summary]))
    write_dataset(out / "samples.jsonl", [Record(s.id, s.instruction, s.scene, s.trajectory) for s in ev.samples])


def cmd_analyze(cfg: RunConfig, out: Path) -> None:
    recs = load_dataset(_need(cfg, "input"))
    rows, header = [], None
    for r in recs:
        row = analyze(r.trajectory, cfg.levels, cfg.cutoff).row()
        header = header or ("id", *row)
        rows.append((r.id, *row.values()))
    write_atomic(out / "analysis.csv", _csv(header or ("id",), rows))


def cmd_export(cfg: RunConfig, out: Path) -> None:
    recs = load_dataset(_need(cfg, "input"))
    if cfg.format == "jsonl":
        lines = []
        for r in recs:
            lines.append(json.dumps({"id": r.id, "dt": r.trajectory.frame_interval, "traj": flatten(r.trajectory).tolist()}, separators=(",", ":")))
        write_atomic(out / "poses.jsonl", "\n".join(lines) + "\n")
        return
    for r in recs:
        write_atomic(out / f"{r.id}.txt", "\n".join(to_pose_lines(r.trajectory)) + "\n")


def cmd_sweep(cfg: RunConfig, out: Path) -> None:
    cells = evalkit.beta_sweep(
        cfg.betas,
        _train_records(cfg),
        _eval_records(cfg),
        loss_config(cfg),
        train_config(cfg),
        None,
        cfg.seed,
        _thresholds(cfg),
        cfg.workers,
    )
    write_atomic(out / "sweep.csv", evalkit.sweep_csv(cells))


HANDLERS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "sample": cmd_sample,
    "eval": cmd_eval,
    "analyze": cmd_analyze,
    "export": cmd_export,
    "sweep": cmd_sweep,
}


# entry point ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="camtraj", description="Camera trajectory diffusion toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--seed")
        p.add_argument("--out", default="runs", help="parent directory for run directories")
        p.add_argument("--beta")
        p.add_argument("--levels")
        p.add_argument("--steps")
        p.add_argument("--classes")
        p.add_argument("--t")
        p.add_argument("--format", choices=("re10k", "jsonl"))
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    out = {}
    for key in ("seed", "beta", "levels", "steps", "classes", "t", "format"):
        v = getattr(args, key)
        if v is not None:
            out[key] = v
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}", None, "--set")
        k, v = item.split("=", 1)
        out[k.strip()] = (v, f"--set {item}")
    return out


def run(argv: Sequence[str] | None = None) -> Path:
    args = build_parser().parse_args(argv)
    cfg = resolve(args.config, _overrides(args))
    out = Path(args.out) / f"{args.command}-{cfg.digest()}-s{cfg.seed}"
    out.mkdir(parents=True, exist_ok=True)
    write_atomic(out / "config.txt", cfg.to_text())
    HANDLERS[args.command](cfg, out)
    return out


def _error_line(exc: BaseException) -> str:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConfigError):
        payload["key"] = exc.key
        payload["location"] = exc.location
    return json.dumps(payload, sort_keys=True)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        out = run(argv)
    except ConfigError as exc:
        print(_error_line(exc), file=sys.stderr)
        return 2
    except Exception as exc:
        print(_error_line(exc), file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
