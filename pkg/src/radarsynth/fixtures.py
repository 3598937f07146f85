"""Deterministic synthetic fixtures: a pushing gesture, arm masks and reflector scenes.

These stand in for the outputs of the upstream vision models (skeleton,
depth and human parsing) so the pipeline can be exercised end to end.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import CameraModel, RadarConfig, SimulationConfig, save_config
from .ingest import (
    JOINT_NAMES,
    MASK_LABELS,
    BodyPartMask,
    SkeletonFrame,
    save_masks,
    save_scene,
    save_skeleton_sequence,
)
from .scene import Reflector, Scene

IMAGE_WIDTH = 160
IMAGE_HEIGHT = 120
DEMO_CAMERA = CameraModel(fx=150.0, fy=150.0, cx=80.0, cy=60.0)

# Standing pose in the optical frame (x right, y down, z forward), metres.
_BODY = {
    "nose": (0.0, -0.55, 0.0),
    "neck": (0.0, -0.4, 0.02),
    "right_shoulder": (-0.2, -0.38, 0.02),
    "left_shoulder": (0.2, -0.38, 0.02),
    "left_elbow": (0.25, -0.1, 0.02),
    "left_wrist": (0.27, 0.15, 0.0),
    "mid_hip": (0.0, 0.1, 0.02),
    "right_hip": (-0.12, 0.1, 0.02),
    "left_hip": (0.12, 0.1, 0.02),
    "right_knee": (-0.13, 0.55, 0.0),
    "left_knee": (0.13, 0.55, 0.0),
    "right_ankle": (-0.13, 0.95, 0.03),
    "left_ankle": (0.13, 0.95, 0.03),
    "right_eye": (-0.03, -0.58, -0.02),
    "left_eye": (0.03, -0.58, -0.02),
    "right_ear": (-0.07, -0.56, 0.02),
    "left_ear": (0.07, -0.56, 0.02),
}


def _arm_pose(phase: float) -> tuple[np.ndarray, np.ndarray]:
    """Elbow and wrist offsets for a forward push; ``phase`` in [0, 1] goes out and back."""
    reach = np.sin(np.pi * phase)
    elbow = np.array([-0.32, -0.2 + 0.05 * reach, -0.12 * reach])
    wrist = np.array([-0.35, -0.15 - 0.15 * reach, -0.45 * reach])
    return elbow, wrist


def demo_gesture(n_frames: int = 20, depth: float = 2.5, frame_duration: float = 0.1) -> list[SkeletonFrame]:
    frames = []
    cam = DEMO_CAMERA
    for k in range(n_frames):
        phase = k / max(n_frames - 1, 1)
        elbow, wrist = _arm_pose(phase)
        pose = dict(_BODY)
        pose["right_elbow"] = tuple(elbow + [0, 0, 0.02])
        pose["right_wrist"] = tuple(wrist + [0, 0, 0.02])
        joints = []
        for name in JOINT_NAMES:
            x, y, z = pose[name]
            z = z + depth
            joints.append((name, cam.fx * x / z + cam.cx, cam.fy * y / z + cam.cy, z))
        frames.append(SkeletonFrame(k, round(k * frame_duration, 6), joints))
    return frames


def _segment_distance(px: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = float(ab @ ab)
    t = np.zeros(len(px)) if denom == 0 else np.clip((px - a) @ ab / denom, 0.0, 1.0)
    return np.linalg.norm(px - (a + t[:, None] * ab), axis=1)


def strip_mask(polyline_uv, half_width_px: float, width: int = IMAGE_WIDTH, height: int = IMAGE_HEIGHT, body_box=None) -> BodyPartMask:
    """Mask whose arm label is every pixel centre within ``half_width_px`` of the polyline."""
    vv, uu = np.mgrid[0:height, 0:width]
    centres = np.column_stack([uu.ravel() + 0.5, vv.ravel() + 0.5])
    pts = np.asarray(polyline_uv, dtype=float)
    dist = np.min([_segment_distance(centres, p, q) for p, q in zip(pts[:-1], pts[1:])], axis=0)
    labels = np.zeros(height * width, dtype=np.int64)
    if body_box is not None:
        u0, v0, u1, v1 = body_box
        inside = (centres[:, 0] >= u0) & (centres[:, 0] < u1) & (centres[:, 1] >= v0) & (centres[:, 1] < v1)
        labels[inside] = MASK_LABELS["other_body"]
    labels[dist <= half_width_px] = MASK_LABELS["arm"]
    return BodyPartMask(width, height, labels.reshape(height, width))


def demo_masks(frames: list[SkeletonFrame], half_width_px: float = 3.0) -> list[BodyPartMask]:
    masks = []
    for f in frames:
        arm = [(f.joint(j).u, f.joint(j).v) for j in f.arm_ids]
        masks.append(strip_mask(arm, half_width_px, body_box=(68, 20, 92, 110)))
    return masks


def uniform_mask(label: str, width: int = IMAGE_WIDTH, height: int = IMAGE_HEIGHT) -> BodyPartMask:
    return BodyPartMask(width, height, np.full((height, width), MASK_LABELS[label], dtype=np.int64))


def demo_scene() -> Scene:
    """Two reflectors: a low table between radar and user and a wall panel on the left."""
    return Scene(
        (
            Reflector((-0.3, 0.8, -0.85), (0.5, 1.6, -0.8), 0.7, name="table"),
            Reflector((-1.6, 0.8, -0.3), (-1.55, 3.5, 0.7), 0.9, name="tv"),
        )
    )


def mirror_scene(gap: float = 1.0, reflectivity: float = 0.9) -> Scene:
    """Two parallel walls at x = -gap and x = +gap facing each other (a corridor)."""
    return Scene(
        (
            Reflector((gap, 0.5, -1.0), (gap + 0.05, 5.0, 1.0), reflectivity, name="east wall"),
            Reflector((-gap - 0.05, 0.5, -1.0), (-gap, 5.0, 1.0), reflectivity, name="west wall"),
        )
    )


def demo_config(**overrides) -> SimulationConfig:
    return SimulationConfig(radar=replace(RadarConfig(), **overrides), camera=DEMO_CAMERA)


# Noise floor tuned for the corridor: weak late bounces straddle it as alpha varies.
SWEEP_NOISE_FLOOR_DB = -112.0
REFERENCE_ALPHA = 0.15
REFERENCE_SEED = 7


def sweep_config(**overrides) -> SimulationConfig:
    return demo_config(noise_floor_db=SWEEP_NOISE_FLOOR_DB, **overrides)


def write_demo(directory) -> dict:
    """Write the demo fixture set into ``directory``; returns the file paths."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    frames = demo_gesture()
    paths = {
        "skeleton": out / "demo_skeleton.jsonl",
        "mask": out / "demo_mask.jsonl",
        "scene": out / "demo_scene.jsonl",
        "config": out / "demo_config.json",
        "mirror_scene": out / "mirror_scene.jsonl",
        "sweep_config": out / "sweep_config.json",
    }
    save_skeleton_sequence(frames, paths["skeleton"])
    save_masks(demo_masks(frames), paths["mask"])
    save_scene(demo_scene(), paths["scene"])
    save_config(demo_config(), paths["config"])
    save_scene(mirror_scene(), paths["mirror_scene"])
    save_config(sweep_config(), paths["sweep_config"])
    return paths


def write_reference(directory) -> Path:
    """Synthetic reference for the alpha sweep: the corridor run at alpha 0.15 with another seed."""
    from .assembly import write_frames
    from .pipeline import RadarSynthesizer

    out = Path(directory)
    frames = demo_gesture()
    cfg = sweep_config(alpha=REFERENCE_ALPHA, seed=REFERENCE_SEED)
    synth = RadarSynthesizer(cfg.radar, cfg.camera, mirror_scene(), demo_masks(frames)).fit()
    path = out / "sweep_reference.jsonl"
    write_frames(synth.transform(frames), path)
    return path
