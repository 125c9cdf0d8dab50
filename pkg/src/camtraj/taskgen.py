"""Synthetic instruction-conditioned camera trajectories.

Each atomic class moves one axis of the camera in the first-frame basis
(+X right, +Y down, +Z forward):

    dolly_in / dolly_out     translation along +Z / -Z
    truck_right / truck_left translation along +X / -X
    pan_right / pan_left     yaw about Y (forward turns toward +X / -X)
    tilt_up / tilt_down      pitch about X (forward turns toward -Y / +Y)

A composite superposes 2-3 atomic components on distinct axes. Motion follows
a cosine ease-in/ease-out profile with an optional per-seed low-frequency
jitter of at most 5% of the magnitude.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .trajectory import MotionStatus, Trajectory, check_lipschitz, flatten, validate_motion

ATOMIC = (
    "dolly_in",
    "dolly_out",
    "pan_left",
    "pan_right",
    "truck_left",
    "truck_right",
    "tilt_up",
    "tilt_down",
)
CLASSES = ATOMIC + ("composite",)
SPEEDS = ("slow", "regular", "fast")
SPEED_FACTOR = {"slow": 0.5, "regular": 1.0, "fast": 2.0}

# component -> (kind, axis, sign); rotation axes are 0 = pitch (X), 1 = yaw (Y)
COMPONENTS = {
    "dolly_in": ("trans", 2, 1.0),
    "dolly_out": ("trans", 2, -1.0),
    "truck_right": ("trans", 0, 1.0),
    "truck_left": ("trans", 0, -1.0),
    "pan_right": ("rot", 1, 1.0),
    "pan_left": ("rot", 1, -1.0),
    "tilt_up": ("rot", 0, 1.0),
    "tilt_down": ("rot", 0, -1.0),
}
AXIS_GROUP = {name: name.split("_")[0] for name in ATOMIC}

MAGNITUDE_BOUNDS = {c: (1.0, 2.0) for c in CLASSES}
ROTATION_UNIT_DEG = 10.0  # net degrees per unit magnitude at regular speed
JITTER_MAX = 0.05
SCENE_DIM = 8
DEFAULT_T = 13
DEFAULT_DT = 0.25
COND_DIM = len(CLASSES) + len(SPEEDS) + 1 + len(ATOMIC) + SCENE_DIM


class UnsupportedComposite(ValueError):
    pass


@dataclass(frozen=True)
class Instruction:
    motion_class: str
    speed: str = "regular"
    magnitude: float = 1.0
    components: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "magnitude", float(self.magnitude))
        if self.motion_class not in CLASSES:
            raise ValueError(f"unknown motion class {self.motion_class!r}")
        if self.speed not in SPEEDS:
            raise ValueError(f"unknown speed {self.speed!r}")
        lo, hi = MAGNITUDE_BOUNDS[self.motion_class]
        if not lo <= self.magnitude <= hi:
            raise ValueError(f"magnitude {self.magnitude} outside [{lo}, {hi}]")
        if self.motion_class == "composite":
            if not 2 <= len(self.components) <= 3:
                raise ValueError("a composite needs 2-3 components")
            bad = [c for c in self.components if c not in ATOMIC]
            if bad:
                raise ValueError(f"unknown components {bad}")
        elif self.components:
            raise ValueError("only composites carry components")

    @property
    def parts(self) -> tuple[str, ...]:
        """Atomic components, including the class itself for atomic instructions."""
        return self.components if self.motion_class == "composite" else (self.motion_class,)


@dataclass(frozen=True, eq=False)
class SceneStub:
    """Stand-in for the visual observation: a feature vector and a depth scale.

    Slot 0 of the feature carries log2(depth_scale); the rest is seeded noise.
    """

    feature: np.ndarray
    depth_scale: float
    seed: int = -1

    @classmethod
    def from_seed(cls, seed: int, width: int = SCENE_DIM) -> "SceneStub":
        rng = np.random.default_rng([seed, 0x5CE7E])
        log_depth = rng.uniform(-1.0, 1.0)
        feature = np.concatenate([[log_depth], 0.5 * rng.standard_normal(width - 1)])
        return cls(feature, float(2.0**log_depth), seed)

    def __post_init__(self):
        if not 0.5 <= self.depth_scale <= 2.0:
            raise ValueError("depth_scale must lie in [0.5, 2]")


def _rot_x(a: np.ndarray) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    R = np.zeros(a.shape + (3, 3))
    R[..., 0, 0] = 1
    R[..., 1, 1], R[..., 1, 2] = c, -s
    R[..., 2, 1], R[..., 2, 2] = s, c
    return R


def _rot_y(a: np.ndarray) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    R = np.zeros(a.shape + (3, 3))
    R[..., 1, 1] = 1
    R[..., 0, 0], R[..., 0, 2] = c, s
    R[..., 2, 0], R[..., 2, 2] = -s, c
    return R


def ease_profile(T: int) -> np.ndarray:
    """Cosine ease-in/ease-out progress from 0 to 1 over T samples."""
    u = np.linspace(0.0, 1.0, T)
    return (1.0 - np.cos(np.pi * u)) / 2.0


def _jittered_profile(T: int, rng: np.random.Generator | None) -> np.ndarray:
    base = ease_profile(T)
    if rng is None:
        return base
    # endpoint scale and a mid-course bump, each at most half the budget
    d1, d2 = rng.uniform(-JITTER_MAX / 2, JITTER_MAX / 2, size=2)
    u = np.linspace(0.0, 1.0, T)
    return (1.0 + d1) * base + d2 * np.sin(np.pi * u) ** 2


def component_net(name: str, instr: Instruction, scene: SceneStub) -> float:
    """Net signed displacement (scene units) or rotation (radians) of one component."""
    kind, _, sign = COMPONENTS[name]
    f = instr.magnitude * SPEED_FACTOR[instr.speed]
    if kind == "trans":
        return sign * f * scene.depth_scale
    return sign * np.deg2rad(f * ROTATION_UNIT_DEG)


def check_composite(components: Sequence[str]) -> None:
    groups = [AXIS_GROUP[c] for c in components]
    if len(set(groups)) != len(groups):
        raise UnsupportedComposite(f"components {list(components)} conflict on the same axis")


def generate_trajectory(
    instr: Instruction,
    scene: SceneStub,
    T: int = DEFAULT_T,
    seed: int | None = 0,
    frame_interval: float = DEFAULT_DT,
) -> Trajectory:
    """Camera path for ``instr``; ``seed=None`` disables jitter."""
    if T < 2:
        raise ValueError("T must be >= 2")
    check_composite(instr.parts)
    rng = None if seed is None else np.random.default_rng(seed)
    center = np.zeros((T, 3))
    angles = np.zeros((T, 2))  # pitch, yaw
    for name in instr.parts:
        # one jitter draw per component, independent of direction so mirrors stay exact
        prof = _jittered_profile(T, rng)
        kind, axis, _ = COMPONENTS[name]
        net = component_net(name, instr, scene)
        if kind == "trans":
            center[:, axis] += net * prof
        else:
            angles[:, axis] += net * prof
    cam_to_world = _rot_y(angles[:, 1]) @ _rot_x(angles[:, 0])
    R = np.swapaxes(cam_to_world, -1, -2) + 0.0
    p = -np.einsum("tij,tj->ti", R, center) + 0.0
    R[0], p[0] = np.eye(3), 0.0
    return Trajectory(R, p, frame_interval)


def nominal_step(instr: Instruction, scene: SceneStub, T: int) -> float:
    """Average per-step pose distance, counting the rotation lever arm on translations."""
    trans = sum(abs(component_net(c, instr, scene)) for c in instr.parts if COMPONENTS[c][0] == "trans")
    rot = sum(abs(component_net(c, instr, scene)) for c in instr.parts if COMPONENTS[c][0] == "rot")
    return (trans + rot * (1.0 + trans)) / (T - 1)


def encode_condition(instr: Instruction, scene: SceneStub) -> np.ndarray:
    """[one-hot class | one-hot speed | magnitude in [0,1] | multi-hot components | scene feature]."""
    v = np.zeros(COND_DIM)
    v[CLASSES.index(instr.motion_class)] = 1.0
    o = len(CLASSES)
    v[o + SPEEDS.index(instr.speed)] = 1.0
    o += len(SPEEDS)
    lo, hi = MAGNITUDE_BOUNDS[instr.motion_class]
    v[o] = (instr.magnitude - lo) / (hi - lo)
    o += 1
    for c in instr.components:
        v[o + ATOMIC.index(c)] = 1.0
    o += len(ATOMIC)
    feat = np.asarray(scene.feature, dtype=np.float64)
    if feat.shape != (SCENE_DIM,):
        raise ValueError(f"scene feature must have width {SCENE_DIM}")
    v[o:] = feat
    return v


def sample_instruction(motion_class: str, rng: np.random.Generator) -> Instruction:
    speed = SPEEDS[rng.integers(len(SPEEDS))]
    lo, hi = MAGNITUDE_BOUNDS[motion_class]
    magnitude = float(rng.uniform(lo, hi))
    components: tuple[str, ...] = ()
    if motion_class == "composite":
        groups = ["dolly", "truck", "pan", "tilt"]
        k = int(rng.integers(2, 4))
        chosen = sorted(rng.choice(len(groups), size=k, replace=False))
        components = tuple(
            [c for c in ATOMIC if AXIS_GROUP[c] == groups[g]][int(rng.integers(2))] for g in chosen
        )
    return Instruction(motion_class, speed, magnitude, components)


# dataset ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Record:
    id: str
    instruction: Instruction
    scene: SceneStub
    trajectory: Trajectory

    @property
    def flat(self) -> np.ndarray:
        return flatten(self.trajectory)


DATASET_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["id", "class", "speed", "magnitude", "components", "scene_seed", "depth_scale", "dt", "traj"],
    "properties": {
        "id": {"type": "string"},
        "class": {"enum": list(CLASSES)},
        "speed": {"enum": list(SPEEDS)},
        "magnitude": {"type": "number", "exclusiveMinimum": 0},
        "components": {"type": "array", "items": {"enum": list(ATOMIC)}, "maxItems": 3},
        "scene_seed": {"type": "integer"},
        "depth_scale": {"type": "number", "minimum": 0.5, "maximum": 2.0},
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "traj": {
            "type": "array",
            "minItems": 2,
            "items": {"type": "array", "minItems": 12, "maxItems": 12, "items": {"type": "number"}},
        },
    },
}


def num(x: float) -> str:
    return format(float(x), ".17g")


def record_to_json(rec: Record) -> str:
    instr, scene, traj = rec.instruction, rec.scene, rec.trajectory
    rows = ",".join("[" + ",".join(num(v) for v in row) + "]" for row in flatten(traj))
    return (
        "{"
        f'"id": {json.dumps(rec.id)}, "class": {json.dumps(instr.motion_class)}, '
        f'"speed": {json.dumps(instr.speed)}, "magnitude": {num(instr.magnitude)}, '
        f'"components": {json.dumps(list(instr.components))}, "scene_seed": {int(scene.seed)}, '
        f'"depth_scale": {num(scene.depth_scale)}, "dt": {num(traj.frame_interval)}, '
        f'"traj": [{rows}]'
        "}"
    )


def record_from_json(line: str | dict) -> Record:
    d = json.loads(line) if isinstance(line, str) else line
    instr = Instruction(d["class"], d["speed"], d["magnitude"], tuple(d["components"]))
    scene = SceneStub.from_seed(int(d["scene_seed"]))
    if abs(scene.depth_scale - d["depth_scale"]) > 1e-12:
        scene = SceneStub(scene.feature, float(d["depth_scale"]), int(d["scene_seed"]))
    block = np.array(d["traj"], dtype=np.float64).reshape(-1, 3, 4)
    # stored values are already orthonormal; skip re-orthonormalisation so loads are bit-exact
    traj = Trajectory(block[:, :, :3], block[:, :, 3], float(d["dt"]))
    return Record(str(d["id"]), instr, scene, traj)


def check_record(rec: Record) -> None:
    """Raise if a generated record violates the motion or Lipschitz bounds."""
    T = len(rec.trajectory)
    step = nominal_step(rec.instruction, rec.scene, T)
    L = 2.0 * step / rec.trajectory.frame_interval
    status = validate_motion(rec.trajectory, min_total=0.05, max_step=2.0 * step)
    if status is not MotionStatus.OK:
        raise ValueError(f"record {rec.id}: motion check failed ({status.value})")
    rep = check_lipschitz(rec.trajectory, L)
    if not rep.passed:
        raise ValueError(f"record {rec.id}: Lipschitz check failed at step {rep.index}")


def build_records(
    per_class: int | dict[str, int],
    T: int = DEFAULT_T,
    seed: int = 0,
    classes: Sequence[str] = CLASSES,
    frame_interval: float = DEFAULT_DT,
    prefix: str = "",
) -> list[Record]:
    counts = per_class if isinstance(per_class, dict) else {c: int(per_class) for c in classes}
    if any(n < 1 for n in counts.values()):
        raise ValueError("per-class counts must be >= 1")
    out = []
    for ci, cls in enumerate(counts):
        if cls not in CLASSES:
            raise ValueError(f"unknown class {cls!r}")
        rng = np.random.default_rng([seed, CLASSES.index(cls)])
        for i in range(counts[cls]):
            instr = sample_instruction(cls, rng)
            scene_seed = int(rng.integers(2**31))
            traj_seed = int(rng.integers(2**31))
            scene = SceneStub.from_seed(scene_seed)
            traj = generate_trajectory(instr, scene, T, traj_seed, frame_interval)
            rec = Record(f"{prefix}{cls}-{i:05d}", instr, scene, traj)
            check_record(rec)
            out.append(rec)
    return out


def write_atomic(path: str | os.PathLike, text: str | bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    mode = "wb" if isinstance(text, bytes) else "w"
    with open(tmp, mode, **({} if isinstance(text, bytes) else {"encoding": "utf-8", "newline": "\n"})) as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_dataset(path: str | os.PathLike, records: Iterable[Record]) -> None:
    write_atomic(path, "".join(record_to_json(r) + "\n" for r in records))


def build_dataset(path, per_class, T: int = DEFAULT_T, seed: int = 0, classes: Sequence[str] = CLASSES, frame_interval: float = DEFAULT_DT) -> list[Record]:
    records = build_records(per_class, T, seed, classes, frame_interval)
    write_dataset(path, records)
    return records


def load_dataset(path: str | os.PathLike) -> list[Record]:
    with open(path, encoding="utf-8") as fh:
        return [record_from_json(line) for line in fh if line.strip()]
