"""Joint velocities from frame history and the four-window velocity rule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import CameraModel
from .ingest import SkeletonFrame, project_many

WINDOWS = ("w1", "w2", "w3", "w4")


@dataclass(frozen=True)
class JointVelocityRecord:
    v_a: np.ndarray
    v_b: np.ndarray
    v_c: np.ndarray

    def __post_init__(self):
        for name in ("v_a", "v_b", "v_c"):
            v = np.asarray(getattr(self, name), dtype=float).reshape(3)
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} has non-finite components")
            object.__setattr__(self, name, v)


def _check_history(frames, index):
    if index < 0 or index >= len(frames):
        raise IndexError(f"frame ordinal {index} outside history of {len(frames)} frames")
    for prev, cur in zip(frames[:index], frames[1:index + 1]):
        if not cur.timestamp > prev.timestamp:
            raise ValueError(
                f"timestamps must increase: frame {cur.frame_index} at {cur.timestamp} "
                f"follows {prev.timestamp}"
            )


def all_joint_velocities(frames: list[SkeletonFrame], camera: CameraModel, index: int) -> np.ndarray:
    """Backward-difference velocity of every joint, shape (19, 3), in file joint order."""
    _check_history(frames, index)
    if index == 0:
        return np.zeros((len(frames[0].joints), 3))
    cur, prev = frames[index], frames[index - 1]
    p_cur = project_many(cur.uvd(), camera)
    order = {jid: k for k, jid in enumerate(prev.joint_ids)}
    p_prev = project_many(prev.uvd()[[order[j] for j in cur.joint_ids]], camera)
    return (p_cur - p_prev) / (cur.timestamp - prev.timestamp)


def joint_velocities(frames: list[SkeletonFrame], camera: CameraModel, index: int) -> JointVelocityRecord:
    vel = all_joint_velocities(frames, camera, index)
    ids = frames[index].joint_ids
    a, b, c = (ids.index(j) for j in frames[index].arm_ids)
    return JointVelocityRecord(vel[a], vel[b], vel[c])


def window_of(arm_param: float) -> str:
    """Quarter windows along the arm; boundaries go to the higher window."""
    if arm_param < 0.25:
        return "w1"
    if arm_param < 0.5:
        return "w2"
    if arm_param < 0.75:
        return "w3"
    return "w4"


def assign_window_velocities(points, rec: JointVelocityRecord) -> list[np.ndarray]:
    """Velocity per point by window: w1 -> A, w2/w3 -> B, w4 -> C.

    Records the window on each point's ``source_window``.
    """
    table = {"w1": rec.v_a, "w2": rec.v_b, "w3": rec.v_b, "w4": rec.v_c}
    out = []
    for p in points:
        w = window_of(p.arm_param)
        p.source_window = w
        out.append(table[w].copy())
    return out


def radial_velocity(position, velocity, radar_position=(0.0, 0.0, 0.0)) -> float:
    """Velocity component along the line of sight; positive means receding."""
    return float(radial_velocities(np.atleast_2d(position), np.atleast_2d(velocity), radar_position)[0])


def radial_velocities(positions: np.ndarray, velocities: np.ndarray, radar_position=(0.0, 0.0, 0.0)) -> np.ndarray:
    los = np.asarray(positions, dtype=float) - np.asarray(radar_position, dtype=float)
    rng = np.linalg.norm(los, axis=1)
    if np.any(rng == 0):
        raise ValueError("point coincides with the radar; radial velocity undefined")
    return np.einsum("ij,ij->i", np.asarray(velocities, dtype=float), los / rng[:, None])
