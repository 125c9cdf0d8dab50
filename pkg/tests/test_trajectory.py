import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from camtraj.trajectory import (
    DegenerateRotation,
    InvalidPose,
    MotionStatus,
    POSE_LINE_FIELDS,
    Pose,
    Trajectory,
    check_lipschitz,
    flatten,
    from_pose_lines,
    geodesic_step,
    gram_schmidt,
    rotation_angle,
    step_distances,
    to_pose_lines,
    unflatten,
    validate_motion,
)

from conftest import random_rotations


def rot_y(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])


def random_traj(seed, T=7, dt=0.5):
    rng = np.random.default_rng(seed)
    return Trajectory(random_rotations(rng, T), rng.standard_normal((T, 3)), dt)


def test_pose_rejects_non_orthonormal():
    with pytest.raises(InvalidPose):
        Pose(np.diag([1.0, 1.0, 1.1]), np.zeros(3))
    with pytest.raises(InvalidPose):
        Pose(np.diag([1.0, 1.0, -1.0]), np.zeros(3))


def test_pose_arrays_are_read_only():
    p = Pose.identity()
    with pytest.raises(ValueError):
        p.translation[0] = 1.0


def test_trajectory_needs_two_poses():
    with pytest.raises(InvalidPose):
        Trajectory(np.eye(3)[None], np.zeros((1, 3)))


def test_center_inverts_extrinsics():
    R = rot_y(0.3)
    c = np.array([1.0, 2.0, 3.0])
    assert np.allclose(Pose(R, -R @ c).center, c)


@given(st.integers(0, 2**32 - 1), st.integers(2, 20))
def test_flatten_round_trip(seed, T):
    traj = random_traj(seed, T)
    back = unflatten(flatten(traj), traj.frame_interval)
    assert back.allclose(traj, atol=1e-12)
    assert flatten(traj).shape == (T, 12)


def test_flatten_layout_is_row_major_3x4():
    R = rot_y(0.2)
    traj = Trajectory(np.stack([np.eye(3), R]), np.array([[0, 0, 0], [1.0, 2.0, 3.0]]))
    row = flatten(traj)[1]
    assert np.allclose(row[[0, 1, 2]], R[0]) and row[3] == 1.0 and row[7] == 2.0 and row[11] == 3.0


def test_gram_schmidt_keeps_exact_rotations(rng):
    R = random_rotations(rng, 10)
    assert np.allclose(gram_schmidt(R), R, atol=1e-14)


def test_gram_schmidt_projects_perturbed_blocks(rng):
    R = random_rotations(rng, 50) + 0.05 * rng.standard_normal((50, 3, 3))
    Q = gram_schmidt(R)
    assert np.allclose(np.swapaxes(Q, 1, 2) @ Q, np.eye(3), atol=1e-12)
    assert np.allclose(np.linalg.det(Q), 1.0)


def test_gram_schmidt_degenerate():
    with pytest.raises(DegenerateRotation):
        gram_schmidt(np.zeros((3, 3)))
    with pytest.raises(DegenerateRotation):
        gram_schmidt(np.array([[1.0, 0, 0], [2.0, 0, 0], [0, 0, 1]]))


def test_rotation_angle_matches_arccos(rng):
    A, B = random_rotations(rng, 200), random_rotations(rng, 200)
    M = np.swapaxes(A, 1, 2) @ B
    ref = np.arccos(np.clip((np.trace(M, axis1=1, axis2=2) - 1) / 2, -1, 1))
    assert np.allclose(rotation_angle(A, B), ref, atol=1e-7)


def test_rotation_angle_small_angles_are_accurate():
    # arccos loses about half the digits here; the atan2 form does not
    assert rotation_angle(np.eye(3), rot_y(1e-9)) == pytest.approx(1e-9, rel=1e-6)


def test_geodesic_step_example():
    a = Pose.identity()
    b = Pose(rot_y(math.radians(2)), np.array([0.0, 0.0, 0.1]))
    assert geodesic_step(a, b) == pytest.approx(math.radians(2) + 0.1, abs=1e-15)
    assert geodesic_step(a, b, w_rot=0.0) == pytest.approx(0.1)


@given(st.integers(0, 2**32 - 1))
def test_geodesic_step_symmetric(seed):
    traj = random_traj(seed, 2)
    assert geodesic_step(traj[0], traj[1]) == pytest.approx(geodesic_step(traj[1], traj[0]), abs=1e-12)


def test_lipschitz_check():
    T = 5
    p = np.zeros((T, 3))
    p[:, 2] = 0.1 * np.arange(T)
    traj = Trajectory(np.repeat(np.eye(3)[None], T, 0), p, 0.5)
    assert check_lipschitz(traj, L=0.2 + 1e-12).passed
    rep = check_lipschitz(traj, L=0.19)
    assert not rep.passed and rep.max_step == pytest.approx(0.1)


def test_validate_motion():
    assert validate_motion(Trajectory.constant(4), 0.01, 1.0) is MotionStatus.STATIC
    traj = random_traj(0)
    assert validate_motion(traj, 0.0, 1e-3) is MotionStatus.TOO_FAST
    assert validate_motion(traj, 0.0, 100.0) is MotionStatus.OK


def test_step_distances_match_pairwise():
    traj = random_traj(3)
    pairwise = [geodesic_step(a, b) for a, b in zip(traj.poses, traj.poses[1:])]
    assert np.allclose(step_distances(traj), pairwise)


def test_relative_to_first_starts_at_identity():
    traj = random_traj(5).relative_to_first()
    assert np.allclose(traj.rotations[0], np.eye(3)) and np.allclose(traj.translations[0], 0)


def test_pose_lines_round_trip():
    traj = random_traj(9, T=13, dt=0.25)
    lines = to_pose_lines(traj)
    assert len(lines) == 13
    assert all(len(l.split()) == POSE_LINE_FIELDS for l in lines)
    assert lines[1].split()[0] == "250000"
    back = from_pose_lines(lines)
    assert back.allclose(traj, atol=1e-15) and back.frame_interval == 0.25


def test_pose_lines_reject_bad_field_count():
    with pytest.raises(ValueError, match="19 fields"):
        from_pose_lines(["0 1 2 3"])
