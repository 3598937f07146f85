import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from radarsynth.config import CameraModel
from radarsynth.fixtures import demo_gesture
from radarsynth.ingest import JOINT_NAMES, SkeletonFrame
from radarsynth.kinematics import (
    JointVelocityRecord,
    all_joint_velocities,
    assign_window_velocities,
    joint_velocities,
    radial_velocity,
    window_of,
)
from radarsynth.reflector_gen import InterpolatedPoint


def _frame(index, ts, shift=0.0):
    # identity camera with fx = fy = 100, cx = cy = 0: x = u * d / 100
    joints = [(n, 10.0 * k + shift * 100 / 2.0, 5.0 * k, 2.0) for k, n in enumerate(JOINT_NAMES)]
    return SkeletonFrame(index, ts, joints)


CAM = CameraModel.identity(fx=100, fy=100, cx=0, cy=0)


def test_first_frame_has_zero_velocity():
    rec = joint_velocities([_frame(0, 0.0), _frame(1, 0.1, 0.1)], CAM, 0)
    for v in (rec.v_a, rec.v_b, rec.v_c):
        assert np.array_equal(v, np.zeros(3))


def test_difference_quotient():
    # each joint moves +0.1 m in x over 0.1 s
    rec = joint_velocities([_frame(0, 0.0), _frame(1, 0.1, 0.1)], CAM, 1)
    for v in (rec.v_a, rec.v_b, rec.v_c):
        assert np.allclose(v, (1.0, 0.0, 0.0))


def test_static_joints():
    vel = all_joint_velocities([_frame(0, 0.0), _frame(1, 0.1)], CAM, 1)
    assert np.array_equal(vel, np.zeros((19, 3)))


def test_non_increasing_timestamps():
    with pytest.raises(ValueError, match="timestamps"):
        joint_velocities([_frame(0, 0.2), _frame(1, 0.2)], CAM, 1)


def test_demo_wrist_moves_toward_radar():
    frames = demo_gesture()
    rec = joint_velocities(frames, CameraModel(fx=150, fy=150, cx=80, cy=60), 3)
    assert rec.v_c[1] < 0  # pushing out: range decreases


def test_window_rule():
    rec = JointVelocityRecord((0.1, 0, 0), (0.5, 0, 0), (1.0, 0, 0))
    pts = [InterpolatedPoint(np.zeros(3), s) for s in (0.3, 1.0, 0.0, 0.25, 0.5, 0.75, 0.2499)]
    v = assign_window_velocities(pts, rec)
    assert np.allclose(v[0], (0.5, 0, 0)) and pts[0].source_window == "w2"
    assert np.allclose(v[1], (1.0, 0, 0)) and pts[1].source_window == "w4"
    assert [p.source_window for p in pts[2:]] == ["w1", "w2", "w3", "w4", "w1"]


def test_window_populations_match_oracle(rng):
    params = rng.uniform(0, 1, 1000)
    pts = [InterpolatedPoint(np.zeros(3), float(s)) for s in params]
    assign_window_velocities(pts, JointVelocityRecord(np.zeros(3), np.zeros(3), np.zeros(3)))
    counts = {w: sum(p.source_window == w for p in pts) for w in ("w1", "w2", "w3", "w4")}
    expected = {"w1": 0, "w2": 0, "w3": 0, "w4": 0}
    for s in params:
        expected["w1" if s < 0.25 else "w2" if s < 0.5 else "w3" if s < 0.75 else "w4"] += 1
    assert counts == expected
    assert sum(counts.values()) == 1000


def test_radial_velocity_examples():
    assert radial_velocity((0, 1, 0), (0, 2, 0)) == pytest.approx(2.0)
    assert radial_velocity((0, 1, 0), (1, 0, 0)) == 0.0
    # unit line of sight (0.6, 0.8, 0)
    assert radial_velocity((3, 4, 0), (1, 0, 0)) == pytest.approx(0.6)
    with pytest.raises(ValueError):
        radial_velocity((1, 1, 1), (1, 0, 0), radar_position=(1, 1, 1))


finite = st.floats(-100, 100)


@given(arrays(float, 3, elements=finite), arrays(float, 3, elements=finite))
def test_radial_velocity_bounded(p, v):
    if np.linalg.norm(p) < 1e-6:
        return
    assert abs(radial_velocity(p, v)) <= np.linalg.norm(v) * (1 + 1e-12) + 1e-12


@given(st.floats(0, 1))
def test_window_total(s):
    assert window_of(s) in ("w1", "w2", "w3", "w4")
