"""Rigid camera pose trajectories.

Poses are world->camera extrinsics: ``x_cam = R @ x_world + p``. Camera local
axes are +X right, +Y down, +Z along the viewing direction.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

ORTHO_TOL = 1e-9
CHANNELS = 12
TRANSLATION_CHANNELS = (3, 7, 11)  # t_x, t_y, t_z in the row-major [R | t] layout


class DegenerateRotation(ValueError):
    pass


class InvalidPose(ValueError):
    pass


def _check_rotation(R: np.ndarray, tol: float = ORTHO_TOL) -> None:
    if R.shape[-2:] != (3, 3):
        raise InvalidPose(f"rotation must be 3x3, got {R.shape}")
    if not np.all(np.isfinite(R)):
        raise InvalidPose("rotation has non-finite entries")
    eye = np.eye(3)
    err = np.abs(np.swapaxes(R, -1, -2) @ R - eye).max()
    if err > tol:
        raise InvalidPose(f"rotation not orthonormal (max |R^T R - I| = {err:.3g})")
    det = np.linalg.det(R)
    if np.any(np.abs(det - 1.0) > tol):
        raise InvalidPose("rotation determinant is not +1")


@dataclass(frozen=True, eq=False)
class Pose:
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.array(self.rotation, dtype=np.float64)
        p = np.array(self.translation, dtype=np.float64).reshape(3)
        _check_rotation(R)
        if not np.all(np.isfinite(p)):
            raise InvalidPose("translation has non-finite entries")
        R.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", p)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    @property
    def center(self) -> np.ndarray:
        """Camera center in world coordinates."""
        return -self.rotation.T @ self.translation


@dataclass(frozen=True, eq=False)
class Trajectory:
    """T >= 2 poses sampled every ``frame_interval`` seconds.

    Stored as stacked arrays; ``poses`` gives the per-step view.
    """

    rotations: np.ndarray  # (T, 3, 3)
    translations: np.ndarray  # (T, 3)
    frame_interval: float = 1.0

    def __post_init__(self):
        R = np.array(self.rotations, dtype=np.float64)
        p = np.array(self.translations, dtype=np.float64)
        if R.ndim != 3 or R.shape[1:] != (3, 3):
            raise InvalidPose(f"rotations must be (T, 3, 3), got {R.shape}")
        if p.shape != (R.shape[0], 3):
            raise InvalidPose(f"translations must be ({R.shape[0]}, 3), got {p.shape}")
        if R.shape[0] < 2:
            raise InvalidPose("a trajectory needs at least 2 poses")
        if not self.frame_interval > 0:
            raise InvalidPose("frame_interval must be positive")
        _check_rotation(R)
        if not np.all(np.isfinite(p)):
            raise InvalidPose("translation has non-finite entries")
        R.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "rotations", R)
        object.__setattr__(self, "translations", p)
        object.__setattr__(self, "frame_interval", float(self.frame_interval))

    @classmethod
    def from_poses(cls, poses: Iterable[Pose], frame_interval: float = 1.0) -> "Trajectory":
        poses = list(poses)
        return cls(
            np.stack([q.rotation for q in poses]),
            np.stack([q.translation for q in poses]),
            frame_interval,
        )

    @classmethod
    def constant(cls, T: int, frame_interval: float = 1.0, pose: Pose | None = None) -> "Trajectory":
        pose = pose or Pose.identity()
        return cls(np.repeat(pose.rotation[None], T, 0), np.repeat(pose.translation[None], T, 0), frame_interval)

    def __len__(self) -> int:
        return self.rotations.shape[0]

    def __getitem__(self, t: int) -> Pose:
        return Pose(self.rotations[t], self.translations[t])

    @property
    def poses(self) -> tuple[Pose, ...]:
        return tuple(self[t] for t in range(len(self)))

    @property
    def centers(self) -> np.ndarray:
        """Camera centers in world coordinates, (T, 3)."""
        return -np.einsum("tji,tj->ti", self.rotations, self.translations)

    def relative_to_first(self) -> "Trajectory":
        """Re-express all poses so that the first one is the identity."""
        R0, p0 = self.rotations[0], self.translations[0]
        R = self.rotations @ R0.T
        p = self.translations - R @ p0
        R[0] = np.eye(3)
        p[0] = 0.0
        return Trajectory(R, p, self.frame_interval)

    def precompose(self, rotation: np.ndarray, translation: np.ndarray) -> "Trajectory":
        """Change world frame: x_world = rotation @ x_new + translation."""
        R = self.rotations @ rotation
        p = self.rotations @ np.asarray(translation, dtype=np.float64) + self.translations
        return Trajectory(R, p, self.frame_interval)

    def allclose(self, other: "Trajectory", atol: float = 1e-12) -> bool:
        return (
            len(self) == len(other)
            and np.allclose(self.rotations, other.rotations, rtol=0, atol=atol)
            and np.allclose(self.translations, other.translations, rtol=0, atol=atol)
        )


def flatten(traj: Trajectory) -> np.ndarray:
    """Row t is the 3x4 ``[R_t | p_t]`` block flattened row-major: (T, 12)."""
    T = len(traj)
    block = np.concatenate([traj.rotations, traj.translations[:, :, None]], axis=2)
    return block.reshape(T, CHANNELS).copy()


def gram_schmidt(blocks: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    """Project (..., 3, 3) blocks onto SO(3) from their first two rows."""
    r1 = blocks[..., 0, :]
    r2 = blocks[..., 1, :]
    n1 = np.linalg.norm(r1, axis=-1, keepdims=True)
    n2 = np.linalg.norm(r2, axis=-1, keepdims=True)
    if np.any(n1 < eps) or np.any(n2 < eps):
        raise DegenerateRotation("rotation block has a near-zero row")
    e1 = r1 / n1
    v2 = r2 - np.sum(e1 * r2, axis=-1, keepdims=True) * e1
    m2 = np.linalg.norm(v2, axis=-1, keepdims=True)
    if np.any(m2 < eps):
        raise DegenerateRotation("rotation block rows are collinear")
    e2 = v2 / m2
    e3 = np.cross(e1, e2)
    return np.stack([e1, e2, e3], axis=-2)


def unflatten(flat: np.ndarray, frame_interval: float = 1.0) -> Trajectory:
    flat = np.asarray(flat, dtype=np.float64)
    if flat.ndim != 2 or flat.shape[1] != CHANNELS:
        raise ValueError(f"expected (T, {CHANNELS}) values, got {flat.shape}")
    if not np.all(np.isfinite(flat)):
        raise ValueError("flat trajectory has non-finite entries")
    block = flat.reshape(-1, 3, 4)
    return Trajectory(gram_schmidt(block[:, :, :3]), block[:, :, 3].copy(), frame_interval)


def rotation_angle(Ra: np.ndarray, Rb: np.ndarray) -> np.ndarray:
    """Geodesic angle between rotations, in [0, pi].

    Uses atan2 of the skew and trace parts of ``Ra^T Rb``; equal to the
    clamped arccos form but without its loss of precision near 0 and pi.
    """
    M = np.swapaxes(Ra, -1, -2) @ Rb
    c = (np.trace(M, axis1=-2, axis2=-1) - 1.0) / 2.0
    skew = np.stack([M[..., 2, 1] - M[..., 1, 2], M[..., 0, 2] - M[..., 2, 0], M[..., 1, 0] - M[..., 0, 1]], -1)
    s = np.linalg.norm(skew, axis=-1) / 2.0
    return np.arctan2(s, c)


def geodesic_step(a: Pose, b: Pose, w_rot: float = 1.0) -> float:
    if w_rot < 0:
        raise ValueError("w_rot must be nonnegative")
    theta = float(rotation_angle(a.rotation, b.rotation))
    return w_rot * theta + float(np.linalg.norm(b.translation - a.translation))


def step_distances(traj: Trajectory, w_rot: float = 1.0) -> np.ndarray:
    """Vectorised ``geodesic_step`` between consecutive poses, (T-1,)."""
    theta = rotation_angle(traj.rotations[:-1], traj.rotations[1:])
    dp = np.linalg.norm(np.diff(traj.translations, axis=0), axis=1)
    return w_rot * theta + dp


@dataclass(frozen=True)
class LipschitzReport:
    max_step: float
    index: int
    bound: float
    passed: bool


def check_lipschitz(traj: Trajectory, L: float, w_rot: float = 1.0) -> LipschitzReport:
    if not L > 0:
        raise ValueError("Lipschitz bound must be positive")
    steps = step_distances(traj, w_rot)
    i = int(np.argmax(steps))
    bound = L * traj.frame_interval
    return LipschitzReport(float(steps[i]), i, bound, bool(np.all(steps <= bound)))


class MotionStatus(enum.Enum):
    OK = "ok"
    STATIC = "static"
    TOO_FAST = "too_fast"


def validate_motion(traj: Trajectory, min_total: float, max_step: float, w_rot: float = 1.0) -> MotionStatus:
    if min_total < 0 or not max_step > 0:
        raise ValueError("need min_total >= 0 and max_step > 0")
    steps = step_distances(traj, w_rot)
    if steps.sum() < min_total:
        return MotionStatus.STATIC
    if np.any(steps > max_step):
        return MotionStatus.TOO_FAST
    return MotionStatus.OK


# pose-line export -----------------------------------------------------------

POSE_LINE_FIELDS = 19
DEFAULT_INTRINSICS = (0.5, 0.5, 0.5, 0.5, 0.0, 0.0)  # fx fy cx cy k1 k2


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def to_pose_lines(traj: Trajectory, intrinsics: Sequence[float] = DEFAULT_INTRINSICS) -> list[str]:
    """``t_us fx fy cx cy k1 k2 r11 r12 r13 t1 r21 r22 r23 t2 r31 r32 r33 t3`` per step."""
    flat = flatten(traj)
    lines = []
    for t, row in enumerate(flat):
        t_us = int(round(t * traj.frame_interval * 1e6))
        fields = [str(t_us)] + [_fmt(v) for v in intrinsics] + [_fmt(v) for v in row]
        lines.append(" ".join(fields))
    return lines


def from_pose_lines(lines: Iterable[str]) -> Trajectory:
    rows, stamps = [], []
    for n, line in enumerate(lines):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != POSE_LINE_FIELDS:
            raise ValueError(f"line {n + 1}: expected {POSE_LINE_FIELDS} fields, got {len(parts)}")
        stamps.append(int(parts[0]))
        rows.append([float(v) for v in parts[7:]])
    if len(rows) < 2:
        raise ValueError("need at least two pose lines")
    dt = (stamps[1] - stamps[0]) * 1e-6
    return unflatten(np.array(rows), dt if dt > 0 else 1.0)
