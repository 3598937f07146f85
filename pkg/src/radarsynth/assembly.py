"""Radar frame assembly, farthest point sampling, calibration and frame IO."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points
from .config import SCHEMA_VERSION, RadarConfig
from .counters import Counters
from .fmcw import DB_MAX, DB_MIN

COLUMNS = ("frame_index", "x", "y", "z", "radial_velocity", "intensity")


@dataclass(frozen=True)
class RadarFrame:
    """One frame of radar points; ``points`` columns are x, y, z, radial velocity, intensity."""

    frame_index: int
    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 5)))

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 5).copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    @property
    def xyz(self) -> np.ndarray:
        return self.points[:, :3]

    @property
    def radial_velocity(self) -> np.ndarray:
        return self.points[:, 3]

    @property
    def intensity(self) -> np.ndarray:
        return self.points[:, 4]

    def __eq__(self, other):
        if not isinstance(other, RadarFrame):
            return NotImplemented
        return self.frame_index == other.frame_index and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash((self.frame_index, self.points.tobytes()))


def clamp_velocity(v: np.ndarray, limit: float, counters: Counters | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    over = np.abs(v) > limit
    if counters is not None:
        counters.velocity_clamps += int(np.count_nonzero(over))
    return np.clip(v, -limit, limit)


def build_frame(points, velocities, intensities, cfg: RadarConfig, frame_index: int = 0, counters: Counters | None = None) -> RadarFrame:
    """Join positions, radial velocities and per-point intensities into a frame.

    Points whose intensity is NaN (no surviving propagation path) are dropped.
    """
    xyz = check_points(points, allow_empty=True)
    vel = np.asarray(velocities, dtype=float).reshape(-1)
    inten = np.asarray(intensities, dtype=float).reshape(-1)
    if not len(xyz) == len(vel) == len(inten):
        raise ValueError(
            f"length mismatch: {len(xyz)} points, {len(vel)} velocities, {len(inten)} intensities"
        )
    keep = np.isfinite(inten)
    vel = clamp_velocity(vel[keep], cfg.max_radial_velocity, counters)
    inten = np.clip(inten[keep], DB_MIN, DB_MAX)
    return RadarFrame(frame_index, np.column_stack([xyz[keep], vel, inten]))


# -- farthest point sampling -------------------------------------------------


def fps_indices(points, target: int) -> np.ndarray:
    """Greedy farthest point sampling seeded at index 0.

    Each step adds the point with the largest distance to the selected set;
    ties go to the lowest index. Returns indices in selection order.
    """
    if target < 1:
        raise ValueError("target must be >= 1")
    xyz = check_points(points, allow_empty=True)
    n = len(xyz)
    if target >= n:
        return np.arange(n)
    selected = [0]
    min_d2 = np.sum((xyz - xyz[0]) ** 2, axis=1)
    for _ in range(target - 1):
        nxt = int(np.argmax(min_d2))
        selected.append(nxt)
        min_d2 = np.minimum(min_d2, np.sum((xyz - xyz[nxt]) ** 2, axis=1))
    return np.asarray(selected)


def fps_sample(points, target: int) -> np.ndarray:
    xyz = np.asarray(points, dtype=float)
    return xyz[fps_indices(xyz, target)]


class FarthestPointSampler(TransformerMixin, BaseEstimator):
    """Downsample a point set (or a frame's rows) to ``n_points`` by greedy FPS on x, y, z."""

    def __init__(self, n_points: int = 64):
        self.n_points = n_points

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        self.indices_ = fps_indices(X[:, :3], self.n_points)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "indices_")
        X = np.asarray(X, dtype=float)
        return X[fps_indices(X[:, :3], self.n_points)]

    def fit_transform(self, X, y=None):
        X = np.asarray(X, dtype=float)
        return X[self.fit(X).indices_]


def sample_frame(frame: RadarFrame, target: int) -> RadarFrame:
    if len(frame) == 0:
        return frame
    return RadarFrame(frame.frame_index, frame.points[fps_indices(frame.xyz, target)])


@dataclass(frozen=True)
class SamplingTable:
    """Target point count per (position bin, gesture label)."""

    entries: dict

    def __post_init__(self):
        for key, count in self.entries.items():
            if int(count) < 1:
                raise ValueError(f"sampling count for {key} must be >= 1")

    def target(self, position_bin, gesture, default: int) -> int:
        return int(self.entries.get((str(position_bin), str(gesture)), default))


def load_sampling_table(path) -> SamplingTable:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty sampling table")
    header = json.loads(lines[0])
    if header.get("schema_version") != SCHEMA_VERSION or header.get("kind") != "sampling_table":
        raise ValueError(f"{path}:1: not a version-{SCHEMA_VERSION} sampling table")
    entries = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            entries[(str(rec["position_bin"]), str(rec["gesture"]))] = int(rec["count"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return SamplingTable(entries)


# -- calibration --------------------------------------------------------------


def apply_calibration(frame: RadarFrame, calibration: dict | None, max_radial_velocity: float = 2.67, counters: Counters | None = None) -> RadarFrame:
    """Channel-wise affine map on velocity and intensity, then re-clamp.

    ``calibration`` may hold ``velocity_scale``, ``velocity_offset``,
    ``intensity_scale`` and ``intensity_offset``; missing keys are identity.
    """
    if not calibration or len(frame) == 0:
        return frame
    vs = float(calibration.get("velocity_scale", 1.0))
    vo = float(calibration.get("velocity_offset", 0.0))
    is_ = float(calibration.get("intensity_scale", 1.0))
    io = float(calibration.get("intensity_offset", 0.0))
    if not np.all(np.isfinite([vs, vo, is_, io])):
        raise ValueError("calibration coefficients must be finite")
    if (vs, vo, is_, io) == (1.0, 0.0, 1.0, 0.0):
        return frame
    pts = frame.points.copy()
    pts[:, 3] = clamp_velocity(vs * pts[:, 3] + vo, max_radial_velocity, counters)
    inten = is_ * pts[:, 4] + io
    if counters is not None:
        counters.intensity_clamps += int(np.count_nonzero((inten < DB_MIN) | (inten > DB_MAX)))
    pts[:, 4] = np.clip(inten, DB_MIN, DB_MAX)
    return RadarFrame(frame.frame_index, pts)


class AffineCalibrator(TransformerMixin, BaseEstimator):
    """Affine velocity/intensity correction for generated frames.

    With no reference, ``fit`` adopts the constructor coefficients. Given
    reference frames ``y``, each generated point is paired with its nearest
    reference point and both channels are fitted by least squares.
    """

    def __init__(self, velocity_scale=1.0, velocity_offset=0.0, intensity_scale=1.0, intensity_offset=0.0, max_radial_velocity=2.67):
        self.velocity_scale = velocity_scale
        self.velocity_offset = velocity_offset
        self.intensity_scale = intensity_scale
        self.intensity_offset = intensity_offset
        self.max_radial_velocity = max_radial_velocity

    def fit(self, X, y=None):
        coef = {
            "velocity_scale": float(self.velocity_scale),
            "velocity_offset": float(self.velocity_offset),
            "intensity_scale": float(self.intensity_scale),
            "intensity_offset": float(self.intensity_offset),
        }
        if y is not None:
            from .metrics import nearest_pairs

            if len(X) != len(y):
                raise ValueError("generated and reference frame counts differ")
            gen, ref = [], []
            for g, r in zip(X, y):
                if len(g) and len(r):
                    j = nearest_pairs(g.xyz, r.xyz)
                    gen.append(g.points)
                    ref.append(r.points[j])
            if gen:
                gen = np.concatenate(gen)
                ref = np.concatenate(ref)
                for col, name in ((3, "velocity"), (4, "intensity")):
                    design = np.column_stack([gen[:, col], np.ones(len(gen))])
                    (scale, offset), *_ = np.linalg.lstsq(design, ref[:, col], rcond=None)
                    coef[f"{name}_scale"] = float(scale)
                    coef[f"{name}_offset"] = float(offset)
        self.coef_ = coef
        return self

    def transform(self, X):
        check_is_fitted(self, "coef_")
        return [apply_calibration(f, self.coef_, self.max_radial_velocity) for f in X]


# -- frame IO -----------------------------------------------------------------


def write_frames(frames, path) -> None:
    """Write frames as JSON Lines: header, then one ``[frame_index, x, y, z, v, I]`` row per point."""
    frames = list(frames)
    header = {
        "schema_version": SCHEMA_VERSION,
        "kind": "radar_frames",
        "columns": list(COLUMNS),
        "frame_indices": [f.frame_index for f in frames],
    }
    lines = [json.dumps(header, separators=(",", ":"))]
    for f in frames:
        for row in f.points.tolist():
            lines.append(json.dumps([f.frame_index] + row, separators=(",", ":")))
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write frames to {path}: {exc.strerror or exc}") from exc


def read_frames(path) -> list[RadarFrame]:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise OSError(f"cannot read frames from {path}: {exc.strerror or exc}") from exc
    if not lines:
        raise ValueError(f"{path}: empty frame file")
    header = json.loads(lines[0])
    if header.get("schema_version") != SCHEMA_VERSION or header.get("kind") != "radar_frames":
        raise ValueError(f"{path}:1: not a version-{SCHEMA_VERSION} radar frame file")
    order = [int(i) for i in header.get("frame_indices", [])]
    rows: dict = {i: [] for i in order}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            if len(rec) != 6:
                raise ValueError("expected 6 columns")
            idx = int(rec[0])
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{path}:{lineno}: malformed point record ({exc})") from exc
        if idx not in rows:
            rows[idx] = []
            order.append(idx)
        rows[idx].append([float(c) for c in rec[1:]])
    return [RadarFrame(i, np.array(rows[i]).reshape(-1, 5)) for i in order]
