import json

import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from camtraj.evalkit import classify_motion, matches
from camtraj.taskgen import (
    ATOMIC,
    CLASSES,
    COND_DIM,
    DATASET_SCHEMA,
    SPEED_FACTOR,
    Instruction,
    SceneStub,
    UnsupportedComposite,
    build_dataset,
    build_records,
    encode_condition,
    generate_trajectory,
    load_dataset,
    nominal_step,
    record_to_json,
    sample_instruction,
)
from camtraj.trajectory import check_lipschitz, flatten

SCENE = SceneStub.from_seed(3)


def gen(cls, seed=7, speed="regular", magnitude=1.5, components=()):
    return generate_trajectory(Instruction(cls, speed, magnitude, components), SCENE, seed=seed)


def test_instruction_invariants():
    with pytest.raises(ValueError):
        Instruction("composite")
    with pytest.raises(ValueError):
        Instruction("dolly_in", components=("pan_left",))
    with pytest.raises(ValueError):
        Instruction("dolly_in", magnitude=5.0)
    with pytest.raises(ValueError):
        Instruction("spin")


def test_scene_stub_bounds():
    for s in range(50):
        sc = SceneStub.from_seed(s)
        assert 0.5 <= sc.depth_scale <= 2.0
        assert np.array_equal(sc.feature, SceneStub.from_seed(s).feature)
    with pytest.raises(ValueError):
        SceneStub(np.zeros(8), 3.0)


def test_first_pose_is_identity():
    for cls in ATOMIC:
        tr = gen(cls)
        assert np.array_equal(tr.rotations[0], np.eye(3)) and np.all(tr.translations[0] == 0)


def test_dolly_in_without_jitter():
    tr = generate_trajectory(Instruction("dolly_in", "regular", 1.0), SCENE, seed=None)
    assert np.all(np.diff(tr.centers[:, 2]) > 0)
    assert np.allclose(tr.rotations, np.eye(3))
    assert np.allclose(tr.centers[:, :2], 0)


@pytest.mark.parametrize("a,b", [("pan_left", "pan_right"), ("tilt_up", "tilt_down")])
def test_rotation_pairs_are_inverses(a, b):
    ra, rb = gen(a).rotations, gen(b).rotations
    assert np.allclose(ra @ rb, np.eye(3), atol=1e-15)


@pytest.mark.parametrize("a,b,axis", [("truck_left", "truck_right", 0), ("dolly_in", "dolly_out", 2)])
def test_translation_pairs_are_reflections(a, b, axis):
    ca, cb = gen(a).centers, gen(b).centers
    flip = np.ones(3)
    flip[axis] = -1
    assert np.array_equal(ca, cb * flip)


def test_same_axis_composite_rejected():
    with pytest.raises(UnsupportedComposite):
        gen("composite", components=("pan_left", "pan_right"))


def test_speed_scales_motion():
    slow, fast = gen("truck_right", speed="slow"), gen("truck_right", speed="fast")
    assert np.allclose(fast.centers, slow.centers * SPEED_FACTOR["fast"] / SPEED_FACTOR["slow"])


@settings(max_examples=40)
@given(st.sampled_from(CLASSES), st.integers(0, 2**31 - 1), st.integers(2, 40))
def test_lipschitz_at_twice_nominal_step(cls, seed, T):
    rng = np.random.default_rng(seed)
    instr = sample_instruction(cls, rng)
    scene = SceneStub.from_seed(seed)
    tr = generate_trajectory(instr, scene, T, seed)
    L = 2.0 * nominal_step(instr, scene, T) / tr.frame_interval
    assert check_lipschitz(tr, L).passed


def test_condition_encoding():
    a = encode_condition(Instruction("dolly_in"), SCENE)
    b = encode_condition(Instruction("dolly_out"), SCENE)
    assert np.array_equal(a, encode_condition(Instruction("dolly_in"), SCENE))
    assert set(np.flatnonzero(a != b)) == {CLASSES.index("dolly_in"), CLASSES.index("dolly_out")}
    rng = np.random.default_rng(0)
    for cls in CLASSES:
        assert encode_condition(sample_instruction(cls, rng), SCENE).shape == (COND_DIM,)


def test_dataset_counts_schema_and_determinism(tmp_path):
    recs = build_dataset(tmp_path / "a.jsonl", 10, seed=5)
    build_dataset(tmp_path / "b.jsonl", 10, seed=5)
    assert len(recs) == 90
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    lines = (tmp_path / "a.jsonl").read_text().splitlines()
    for line in lines:
        jsonschema.validate(json.loads(line), DATASET_SCHEMA)
    counts = {c: sum(r.instruction.motion_class == c for r in recs) for c in CLASSES}
    assert set(counts.values()) == {10}


def test_dataset_round_trip_is_exact(tmp_path):
    recs = build_dataset(tmp_path / "d.jsonl", 2, seed=1)
    back = load_dataset(tmp_path / "d.jsonl")
    for r, b in zip(recs, back):
        assert np.array_equal(flatten(r.trajectory), flatten(b.trajectory))
        assert r.instruction == b.instruction
        assert record_to_json(r) == record_to_json(b)


def test_class_separability():
    recs = build_records(40, seed=11)
    hits = [matches(classify_motion(r.trajectory), r.instruction) for r in recs]
    assert np.mean(hits) >= 0.99


def test_bad_counts_rejected():
    with pytest.raises(ValueError):
        build_records(0)
