"""Rule-based motion classification, success rates, diversity and the beta sweep.

Classification reads the net motion between the first and last frame in the
first camera's basis (+X right, +Y down, +Z forward). The relative
camera-to-world rotation is decomposed as yaw (about Y), then pitch (about X),
then roll (about Z). An axis is active when its net magnitude exceeds its
threshold; pedestal (Y translation) and roll are detected but never generated,
so they always count as a mismatch.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .analysis import analyze, kinematics
from .denoiser import CameraModel, DenoiserConfig, TrainConfig, train
from .losses import WavRegConfig
from .taskgen import COMPONENTS, Instruction, Record, SceneStub, _rot_x, _rot_y, component_net, encode_condition
from .trajectory import Trajectory, flatten, rotation_angle, unflatten

STATIC = "static"

# axis score name -> (positive component, negative component)
_AXES = {
    "x": ("truck_right", "truck_left"),
    "y": ("pedestal_down", "pedestal_up"),
    "z": ("dolly_in", "dolly_out"),
    "yaw": ("pan_right", "pan_left"),
    "pitch": ("tilt_up", "tilt_down"),
    "roll": ("roll_right", "roll_left"),
}
_TRANS_AXES = ("x", "y", "z")


@dataclass(frozen=True)
class Thresholds:
    translation: float = 0.1  # scene units
    rotation_deg: float = 2.0
    speed_tolerance: float = 0.3  # relative, for the speed check

    def for_axis(self, axis: str) -> float:
        return self.translation if axis in _TRANS_AXES else math.radians(self.rotation_deg)


@dataclass(frozen=True)
class EvalVerdict:
    predicted_class: str  # an atomic class, "composite" or "static"
    components: tuple[str, ...]  # active components, strongest first
    axis_scores: dict = field(repr=False)  # axis -> net displacement (units) or rotation (rad)
    matched: bool | None = None


def net_motion(traj: Trajectory) -> dict[str, float]:
    """Net translation and yaw/pitch/roll between first and last frame, first-frame basis."""
    R1, p1 = traj.rotations[0], traj.translations[0]
    RT, pT = traj.rotations[-1], traj.translations[-1]
    c_rel = R1 @ (-RT.T @ pT) + p1
    M = R1 @ RT.T  # last camera's axes expressed in the first camera's frame
    yaw = math.atan2(M[0, 2], M[2, 2])
    pitch = math.asin(float(np.clip(-M[1, 2], -1.0, 1.0)))
    roll = math.atan2(M[1, 0], M[1, 1])
    return {"x": float(c_rel[0]), "y": float(c_rel[1]), "z": float(c_rel[2]), "yaw": yaw, "pitch": pitch, "roll": roll}


def classify_motion(traj: Trajectory, thresholds: Thresholds = Thresholds(), instruction: Instruction | None = None) -> EvalVerdict:
    if len(traj) < 2:
        raise ValueError("classification needs T >= 2")
    scores = net_motion(traj)
    active = []
    for axis, (pos, neg) in _AXES.items():
        v = scores[axis]
        ratio = abs(v) / thresholds.for_axis(axis)
        if ratio > 1.0:
            active.append((ratio, pos if v > 0 else neg))
    active.sort(key=lambda t: -t[0])
    comps = tuple(name for _, name in active)
    if not comps:
        cls = STATIC
    elif len(comps) == 1:
        cls = comps[0]
    else:
        cls = "composite"
    verdict = EvalVerdict(cls, comps, scores)
    if instruction is not None:
        verdict = replace(verdict, matched=matches(verdict, instruction))
    return verdict


def matches(verdict: EvalVerdict, instr: Instruction) -> bool:
    if instr.motion_class == "composite":
        return verdict.predicted_class == "composite" and set(verdict.components) == set(instr.components)
    return verdict.predicted_class == instr.motion_class


# speed fidelity ----------------------------------------------------------------


def nominal_speeds(instr: Instruction, scene: SceneStub, T: int, dt: float) -> tuple[float, float]:
    """Expected mean (linear, angular) speed of the camera centre and orientation."""
    trans = np.zeros(3)
    angles = np.zeros(2)
    for c in instr.parts:
        kind, axis, _ = COMPONENTS[c]
        if kind == "trans":
            trans[axis] += component_net(c, instr, scene)
        else:
            angles[axis] += component_net(c, instr, scene)
    R = _rot_y(np.array(angles[1])) @ _rot_x(np.array(angles[0]))
    ang = float(rotation_angle(np.eye(3), R))
    dur = (T - 1) * dt
    return float(np.linalg.norm(trans)) / dur, ang / dur


def speed_ok(traj: Trajectory, instr: Instruction, scene: SceneStub, tol: float = 0.3) -> bool:
    """Mean speed within ``tol`` of nominal for each motion kind the instruction uses."""
    lin_nom, ang_nom = nominal_speeds(instr, scene, len(traj), traj.frame_interval)
    centers = traj.centers
    lin = float(np.mean(np.linalg.norm(np.diff(centers, axis=0), axis=1))) / traj.frame_interval
    ang = float(np.mean(kinematics(traj).angular_speed))
    ok = True
    if lin_nom > 0:
        ok &= abs(lin - lin_nom) <= tol * lin_nom
    if ang_nom > 0:
        ok &= abs(ang - ang_nom) <= tol * ang_nom
    return bool(ok)


# success rate --------------------------------------------------------------------


@dataclass(frozen=True)
class Sample:
    instruction: Instruction
    trajectory: Trajectory
    scene: SceneStub | None = None
    id: str = ""


TABLE_GROUPS = {
    "dolly_in": ("dolly_in",),
    "pan": ("pan_left", "pan_right"),
    "truck": ("truck_left", "truck_right"),
    "tilt": ("tilt_up", "tilt_down"),
    "complex": ("composite",),
}


@dataclass(frozen=True)
class SuccessReport:
    rate: float
    n: int
    per_class: dict  # class -> rate; classes without samples are absent
    table: dict  # Table-1 style columns; absent when empty
    verdicts: tuple[EvalVerdict, ...] = field(repr=False, default=())


def success_rate(samples: Sequence[Sample], thresholds: Thresholds = Thresholds()) -> SuccessReport:
    if len(samples) == 0:
        raise ValueError("success_rate needs at least one sample")
    verdicts = tuple(classify_motion(s.trajectory, thresholds, s.instruction) for s in samples)
    hits = np.array([v.matched for v in verdicts], dtype=bool)
    classes = np.array([str(s.instruction.motion_class) for s in samples], dtype=object)
    per_class = {str(c): float(hits[classes == c].mean()) for c in sorted(set(classes))}
    table = {}
    for col, members in TABLE_GROUPS.items():
        mask = np.isin(classes, members)
        if mask.any():
            table[col] = float(hits[mask].mean())
    regular = [i for i, s in enumerate(samples) if s.instruction.speed == "regular" and s.scene is not None]
    if regular:
        table["regular_speed"] = float(
            np.mean(
                [
                    hits[i] and speed_ok(samples[i].trajectory, samples[i].instruction, samples[i].scene, thresholds.speed_tolerance)
                    for i in regular
                ]
            )
        )
    if table:
        table["average"] = float(np.mean(list(table.values())))
    return SuccessReport(float(hits.mean()), len(samples), per_class, table, verdicts)


# model evaluation ----------------------------------------------------------------


def mean_jerk(trajs: Iterable[Trajectory]) -> float:
    vals = [float(np.sum(np.diff(flatten(t), n=3, axis=0) ** 2)) for t in trajs]
    return float(np.mean(vals))


@dataclass(frozen=True)
class ModelEval:
    success: SuccessReport
    mean_jerk: float
    lf_fraction: float
    samples: tuple[Sample, ...] = field(repr=False)


def generate(model: CameraModel, records: Sequence[Record], seed: int, chunk: int = 256) -> list[Trajectory]:
    """One sample per record; record ``i`` draws from stream ``[seed, i]``."""
    dt = records[0].trajectory.frame_interval if records else 1.0
    out = []
    for start in range(0, len(records), chunk):
        part = records[start : start + chunk]
        conds = np.stack([encode_condition(r.instruction, r.scene) for r in part])
        seeds = [_item_seed(seed, start + i) for i in range(len(part))]
        flats = model.sample(conds, seeds)
        out.extend(unflatten(f, dt) for f in flats)
    return out


def _item_seed(seed: int, i: int) -> int:
    return int(np.random.SeedSequence([seed, i]).generate_state(1, np.uint64)[0])


def evaluate_model(model: CameraModel, records: Sequence[Record], seed: int, thresholds: Thresholds = Thresholds()) -> ModelEval:
    trajs = generate(model, records, seed)
    samples = tuple(Sample(r.instruction, t, r.scene, r.id) for r, t in zip(records, trajs))
    rep = success_rate(samples, thresholds)
    lf = float(np.mean([analyze(t).lf_fraction for t in trajs]))
    return ModelEval(rep, mean_jerk(trajs), lf, samples)


@dataclass(frozen=True)
class DiversityReport:
    mean_variance: float
    min_variance: float
    on_class_fraction: float
    n_seeds: int


def diversity(model: CameraModel, instr: Instruction, scene: SceneStub, n_seeds: int, seed: int = 0, thresholds: Thresholds = Thresholds(), frame_interval: float = 0.25) -> DiversityReport:
    """Spread of ``n_seeds`` samples for one condition, and how many stay on class."""
    if n_seeds < 2:
        raise ValueError("diversity needs n_seeds >= 2")
    cond = np.tile(encode_condition(instr, scene), (n_seeds, 1))
    flats = model.sample(cond, [_item_seed(seed, i) for i in range(n_seeds)])
    trajs = [unflatten(f, frame_interval) for f in flats]
    var = np.var(np.stack([flatten(t) for t in trajs]), axis=0, ddof=1)
    # the first pose is pinned to the identity, so exclude it from the spread
    var = var[1:]
    on = np.mean([classify_motion(t, thresholds, instr).matched for t in trajs])
    return DiversityReport(float(var.mean()), float(var.min()), float(on), n_seeds)


# beta sweep -------------------------------------------------------------------


@dataclass(frozen=True)
class SweepCell:
    beta: float
    success_rate: float
    mean_jerk: float
    lf_fraction: float
    status: str = "ok"


SWEEP_FIELDS = ("beta", "success_rate", "mean_jerk", "lf_fraction", "status")


def fmt(x: float) -> str:
    return format(float(x) + 0.0, ".17g")


def _records_arrays(records: Sequence[Record]) -> tuple[np.ndarray, np.ndarray]:
    flats = np.stack([r.flat for r in records])
    conds = np.stack([encode_condition(r.instruction, r.scene) for r in records])
    return flats, conds


def run_cell(
    beta: float,
    train_records: Sequence[Record],
    eval_records: Sequence[Record],
    loss_cfg: WavRegConfig,
    train_cfg: TrainConfig,
    cfg: DenoiserConfig | None,
    seed: int,
    thresholds: Thresholds = Thresholds(),
) -> SweepCell:
    try:
        flats, conds = _records_arrays(train_records)
        model = train(flats, conds, cfg, replace(loss_cfg, beta=float(beta)), train_cfg, seed)
        ev = evaluate_model(model, eval_records, seed, thresholds)
        return SweepCell(float(beta), ev.success.rate, ev.mean_jerk, ev.lf_fraction)
    except Exception as exc:  # a failed cell is reported, not fatal
        return SweepCell(float(beta), math.nan, math.nan, math.nan, f"failed: {type(exc).__name__}: {exc}")


def beta_sweep(
    betas: Sequence[float],
    train_records: Sequence[Record],
    eval_records: Sequence[Record],
    loss_cfg: WavRegConfig = WavRegConfig(),
    train_cfg: TrainConfig = TrainConfig(),
    cfg: DenoiserConfig | None = None,
    seed: int = 0,
    thresholds: Thresholds = Thresholds(),
    workers: int = 1,
) -> list[SweepCell]:
    """Train and score one model per beta; every cell shares init, data order and eval seeds."""
    if len(betas) == 0:
        raise ValueError("betas must be nonempty")
    args = [(b, train_records, eval_records, loss_cfg, train_cfg, cfg, seed, thresholds) for b in betas]
    if workers <= 1:
        return [run_cell(*a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_cell, *a) for a in args]
        return [f.result() for f in futures]


def sweep_csv(cells: Sequence[SweepCell]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_FIELDS)
    for c in cells:
        w.writerow([fmt(c.beta), fmt(c.success_rate), fmt(c.mean_jerk), fmt(c.lf_fraction), c.status])
    return buf.getvalue()
