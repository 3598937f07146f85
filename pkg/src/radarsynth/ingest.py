"""Readers and writers for skeleton, mask and scene files.

All three formats are JSON Lines: a header object carrying
``schema_version`` and ``kind`` on the first line, then one record per line.
Floats are written with ``repr`` precision, so write -> read is bit-exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .config import SCHEMA_VERSION, CameraModel
from .scene import DEFAULT_ORIGIN, GRID_SHAPE, VOXEL_SIZE, Reflector, Scene, draw_biases

JOINT_NAMES = (
    "nose",
    "neck",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "mid_hip",
    "right_hip",
    "right_knee",
    "right_ankle",
    "left_hip",
    "left_knee",
    "left_ankle",
    "right_eye",
    "left_eye",
    "right_ear",
    "left_ear",
)
N_JOINTS = len(JOINT_NAMES)
DEFAULT_ARM = ("right_shoulder", "right_elbow", "right_wrist")

MASK_LABELS = {"background": 0, "arm": 1, "other_body": 2}


class FormatError(ValueError):
    """Malformed input file; ``lineno`` is 1-based when known."""

    def __init__(self, path, lineno, message):
        self.path = str(path)
        self.lineno = lineno
        where = f"{path}:{lineno}" if lineno else str(path)
        super().__init__(f"{where}: {message}")


class Joint(NamedTuple):
    joint_id: str
    u: float
    v: float
    depth: float


@dataclass(frozen=True)
class SkeletonFrame:
    frame_index: int
    timestamp: float
    joints: tuple
    arm_ids: tuple = DEFAULT_ARM

    def __post_init__(self):
        joints = tuple(Joint(str(j[0]), float(j[1]), float(j[2]), float(j[3])) for j in self.joints)
        object.__setattr__(self, "joints", joints)
        object.__setattr__(self, "arm_ids", tuple(self.arm_ids))
        if len(joints) != N_JOINTS:
            raise ValueError(f"expected {N_JOINTS} joints, got {len(joints)}")
        ids = [j.joint_id for j in joints]
        if len(set(ids)) != N_JOINTS:
            raise ValueError("joint ids must be unique")
        for j in joints:
            if not (j.depth > 0 and np.isfinite(j.depth)):
                raise ValueError(f"joint {j.joint_id} has non-positive depth {j.depth}")
            if not (np.isfinite(j.u) and np.isfinite(j.v)):
                raise ValueError(f"joint {j.joint_id} has non-finite pixel coordinates")
        if len(self.arm_ids) != 3 or len(set(self.arm_ids)) != 3:
            raise ValueError("arm_ids must be three distinct joint ids")
        missing = set(self.arm_ids) - set(ids)
        if missing:
            raise ValueError(f"arm joints {sorted(missing)} not present in frame")

    def joint(self, joint_id: str) -> Joint:
        for j in self.joints:
            if j.joint_id == joint_id:
                return j
        raise KeyError(joint_id)

    def uvd(self) -> np.ndarray:
        """(19, 3) array of (u, v, depth) in file order."""
        return np.array([[j.u, j.v, j.depth] for j in self.joints])

    @property
    def joint_ids(self) -> tuple:
        return tuple(j.joint_id for j in self.joints)


@dataclass(frozen=True)
class BodyPartMask:
    """Dense per-pixel part labels, indexed ``labels[v, u]``."""

    width: int
    height: int
    labels: np.ndarray
    label_table: tuple = tuple(MASK_LABELS.items())

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.shape != (self.height, self.width):
            raise ValueError(
                f"label grid has shape {labels.shape}, expected {(self.height, self.width)}"
            )
        table = dict(self.label_table)
        if "arm" not in table:
            raise ValueError("label table must define an 'arm' label")
        bad = np.setdiff1d(np.unique(labels), list(table.values()))
        if bad.size:
            raise ValueError(f"undeclared labels {bad.tolist()}")
        labels = labels.astype(np.int64, copy=True)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "label_table", tuple(sorted(table.items(), key=lambda kv: kv[1])))

    @property
    def arm_label(self) -> int:
        return dict(self.label_table)["arm"]

    def is_arm(self, u, v) -> np.ndarray:
        """True where pixel (floor(u), floor(v)) is in bounds and labelled arm."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        finite = np.isfinite(u) & np.isfinite(v)
        ui = np.floor(np.where(finite, u, -1)).astype(np.int64)
        vi = np.floor(np.where(finite, v, -1)).astype(np.int64)
        inside = finite & (ui >= 0) & (ui < self.width) & (vi >= 0) & (vi < self.height)
        out = np.zeros(np.broadcast(u, v).shape, dtype=bool)
        out[inside] = self.labels[vi[inside], ui[inside]] == self.arm_label
        return out

    def __eq__(self, other):
        if not isinstance(other, BodyPartMask):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.label_table == other.label_table
            and np.array_equal(self.labels, other.labels)
        )

    def __hash__(self):
        return hash((self.width, self.height, self.labels.tobytes()))


def project_to_3d(joint, camera: CameraModel) -> np.ndarray:
    """Back-project (u, v, depth) through the pinhole model into the radar frame."""
    u, v, depth = (float(c) for c in (joint[-3], joint[-2], joint[-1]))
    if not depth > 0:
        raise ValueError("depth must be positive")
    return project_many(np.array([[u, v, depth]]), camera)[0]


def project_many(uvd: np.ndarray, camera: CameraModel) -> np.ndarray:
    uvd = np.asarray(uvd, dtype=float)
    depth = uvd[:, 2]
    cam = np.column_stack(
        [(uvd[:, 0] - camera.cx) * depth / camera.fx, (uvd[:, 1] - camera.cy) * depth / camera.fy, depth]
    )
    return cam @ camera.rotation.T + camera.translation


def project_to_image(points: np.ndarray, camera: CameraModel) -> np.ndarray:
    """Inverse of :func:`project_many`: radar-frame points to (u, v, depth)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    cam = (points - camera.translation) @ camera.rotation
    z = cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(z > 0, camera.fx * cam[:, 0] / z + camera.cx, np.nan)
        v = np.where(z > 0, camera.fy * cam[:, 1] / z + camera.cy, np.nan)
    return np.column_stack([u, v, z])


# -- file IO ---------------------------------------------------------------


def _read_jsonl(path, kind):
    path = Path(path)
    text = path.read_text()
    lines = text.splitlines()
    if not lines:
        return None, []
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FormatError(path, 1, f"header is not valid JSON ({exc.msg})") from exc
    if not isinstance(header, dict):
        raise FormatError(path, 1, "header must be a JSON object")
    if header.get("schema_version") != SCHEMA_VERSION:
        raise FormatError(path, 1, f"unsupported schema_version {header.get('schema_version')!r}")
    if header.get("kind") != kind:
        raise FormatError(path, 1, f"expected kind {kind!r}, got {header.get('kind')!r}")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            records.append((lineno, json.loads(line)))
        except json.JSONDecodeError as exc:
            raise FormatError(path, lineno, f"malformed record ({exc.msg})") from exc
    return header, records


def _dump(obj) -> str:
    return json.dumps(obj, separators=(",", ":"))


def load_skeleton_sequence(path) -> list[SkeletonFrame]:
    """Read a skeleton JSONL file; empty file -> empty list."""
    header, records = _read_jsonl(path, "skeleton")
    if header is None:
        return []
    names = tuple(header.get("joint_names", JOINT_NAMES))
    if len(names) != N_JOINTS or len(set(names)) != N_JOINTS:
        raise FormatError(path, 1, f"joint_names must list {N_JOINTS} distinct names")
    arm = tuple(header.get("arm", DEFAULT_ARM))
    if len(arm) != 3 or not set(arm) <= set(names):
        raise FormatError(path, 1, "arm must name three joints from joint_names")
    frames = []
    last = None
    for lineno, rec in records:
        try:
            joints = rec["joints"]
            if len(joints) != N_JOINTS:
                raise ValueError(f"expected {N_JOINTS} joints, got {len(joints)}")
            if any(len(j) != 4 for j in joints):
                raise ValueError("each joint must be [joint_id, u, v, depth]")
            if set(j[0] for j in joints) - set(names):
                raise ValueError("joint id not declared in joint_names")
            frame = SkeletonFrame(int(rec["frame_index"]), float(rec["timestamp"]), joints, arm)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(path, lineno, str(exc)) from exc
        if last is not None and frame.frame_index <= last:
            raise FormatError(path, lineno, f"frame_index {frame.frame_index} is not increasing")
        last = frame.frame_index
        frames.append(frame)
    return frames


def save_skeleton_sequence(frames, path, joint_names=JOINT_NAMES) -> None:
    frames = list(frames)
    arm = frames[0].arm_ids if frames else DEFAULT_ARM
    lines = [_dump({"schema_version": SCHEMA_VERSION, "kind": "skeleton", "joint_names": list(joint_names), "arm": list(arm)})]
    for f in frames:
        lines.append(
            _dump(
                {
                    "frame_index": f.frame_index,
                    "timestamp": f.timestamp,
                    "joints": [[j.joint_id, j.u, j.v, j.depth] for j in f.joints],
                }
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def load_masks(path) -> list[BodyPartMask]:
    """Read a mask file holding one static mask or one mask per frame."""
    header, records = _read_jsonl(path, "mask")
    if header is None:
        raise FormatError(path, None, "empty mask file")
    try:
        width, height = int(header["width"]), int(header["height"])
        table = {str(k): int(v) for k, v in header.get("labels", MASK_LABELS).items()}
        n_frames = int(header.get("n_frames", 1))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(path, 1, f"bad mask header ({exc})") from exc
    if len(records) != n_frames * height:
        raise FormatError(path, None, f"expected {n_frames * height} rows, found {len(records)}")
    valid = set(table.values())
    masks = []
    for f in range(n_frames):
        rows = records[f * height:(f + 1) * height]
        for lineno, row in rows:
            if not isinstance(row, list) or len(row) != width:
                raise FormatError(path, lineno, f"row must hold {width} labels")
            if not set(row) <= valid:
                raise FormatError(path, lineno, f"labels {sorted(set(row) - valid)} not declared")
        masks.append(BodyPartMask(width, height, np.array([r for _, r in rows], dtype=np.int64), tuple(table.items())))
    return masks


def load_mask(path) -> BodyPartMask:
    return load_masks(path)[0]


def save_masks(masks, path) -> None:
    masks = list(masks)
    first = masks[0]
    lines = [
        _dump(
            {
                "schema_version": SCHEMA_VERSION,
                "kind": "mask",
                "width": first.width,
                "height": first.height,
                "labels": dict(first.label_table),
                "n_frames": len(masks),
            }
        )
    ]
    for m in masks:
        lines.extend(_dump(row) for row in m.labels.tolist())
    Path(path).write_text("\n".join(lines) + "\n")


def load_scene(path, seed: int = 0) -> Scene:
    """Read a scene file and rasterize its reflectors.

    Reflectors without an explicit ``bias`` get a seeded uniform offset when
    the header sets ``bias_half_width`` > 0.
    """
    header, records = _read_jsonl(path, "scene")
    if header is None:
        raise FormatError(path, None, "empty scene file")
    if tuple(header.get("grid", GRID_SHAPE)) != GRID_SHAPE:
        raise FormatError(path, 1, f"grid must be {list(GRID_SHAPE)}")
    if float(header.get("voxel_size", VOXEL_SIZE)) != VOXEL_SIZE:
        raise FormatError(path, 1, f"voxel_size must be {VOXEL_SIZE}")
    origin = tuple(header.get("origin", DEFAULT_ORIGIN))
    reflectors = []
    for lineno, rec in records:
        try:
            reflectors.append(
                Reflector(
                    tuple(rec["min"]),
                    tuple(rec["max"]),
                    float(rec["reflectivity"]),
                    tuple(rec.get("bias", (0.0, 0.0, 0.0))),
                    str(rec.get("name", "")),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(path, lineno, str(exc)) from exc
    reflectors = draw_biases(reflectors, float(header.get("bias_half_width", 0.0)), seed)
    try:
        return Scene(reflectors, origin)
    except ValueError as exc:
        raise FormatError(path, None, str(exc)) from exc


def save_scene(scene: Scene, path) -> None:
    lines = [
        _dump(
            {
                "schema_version": SCHEMA_VERSION,
                "kind": "scene",
                "grid": list(GRID_SHAPE),
                "voxel_size": VOXEL_SIZE,
                "origin": list(scene.origin),
            }
        )
    ]
    for r in scene.reflectors:
        rec = {"min": list(r.min_corner), "max": list(r.max_corner), "reflectivity": r.reflectivity}
        if any(r.bias):
            rec["bias"] = list(r.bias)
        if r.name:
            rec["name"] = r.name
        lines.append(_dump(rec))
    Path(path).write_text("\n".join(lines) + "\n")
