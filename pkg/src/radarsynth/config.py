"""Radar, camera and metric configuration objects."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
SCHEMA_VERSION = 1

# IWR1443-class defaults: 77 GHz start, 4 cm range resolution -> B = c / (2 * 0.04).
DEFAULT_F0 = 77e9
DEFAULT_BANDWIDTH = SPEED_OF_LIGHT / (2 * 0.04)
DEFAULT_RAMP_END = 114.29e-6
DEFAULT_IDLE_TIME = 7e-6
MAX_ALPHA = 0.3


class ConfigError(ValueError):
    """Raised when a configuration object violates its invariants."""


@dataclass(frozen=True)
class RadarConfig:
    """FMCW waveform, link-budget and simulation parameters.

    ``T`` is the ramp end time; idle time is carried as metadata only.
    ``alpha`` is the per-bounce attenuation coefficient, capped at 0.3.
    """

    f0: float = DEFAULT_F0
    B: float = DEFAULT_BANDWIDTH
    T: float = DEFAULT_RAMP_END
    N: int = 16
    phi0: float = 0.0
    A_tx: float = 1.0
    G_tx: float = 1.0
    G_rx: float = 1.0
    wavelength: float = SPEED_OF_LIGHT / DEFAULT_F0
    P: float = 1.0
    alpha: float = 0.15
    frame_duration: float = 0.1
    points_per_frame: int = 64
    seed: int = 0
    idle_time: float = DEFAULT_IDLE_TIME
    max_radial_velocity: float = 2.67
    noise_floor_db: float = -150.0
    rcs_floor: float = 1e-6
    jitter_radius: float = 0.05
    redraw_budget: int = 100
    max_bounces: int = 3
    angular_step_deg: float = 1.0
    fov_azimuth_deg: float = 60.0
    fov_elevation_deg: float = 30.0
    radar_position: tuple = (0.0, 0.0, 0.0)
    coherent: bool = False

    def __post_init__(self):
        if not 0.0 <= self.alpha <= MAX_ALPHA:
            raise ConfigError(f"alpha must lie in [0, {MAX_ALPHA}], got {self.alpha}")
        if self.B <= 0 or self.T <= 0:
            raise ConfigError("B and T must be positive")
        if self.N < 1:
            raise ConfigError("N must be >= 1")
        if self.points_per_frame < 3:
            raise ConfigError("points_per_frame must be >= 3")
        if self.wavelength <= 0:
            raise ConfigError("wavelength must be positive")
        if not 0 <= self.max_bounces <= 3:
            raise ConfigError("max_bounces must lie in 0..3")
        if self.angular_step_deg <= 0:
            raise ConfigError("angular_step_deg must be positive")
        if self.redraw_budget < 1:
            raise ConfigError("redraw_budget must be >= 1")
        object.__setattr__(self, "radar_position", tuple(float(c) for c in self.radar_position))

    def with_alpha(self, alpha: float) -> "RadarConfig":
        return replace(self, alpha=float(alpha))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["radar_position"] = list(self.radar_position)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RadarConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown radar config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera with a rigid camera-to-radar transform.

    The default extrinsic maps the optical frame (x right, y down, z forward)
    onto the radar frame (x right, y boresight, z up) with both sensors
    co-located.
    """

    fx: float = 600.0
    fy: float = 600.0
    cx: float = 320.0
    cy: float = 240.0
    extrinsic: np.ndarray = field(
        default_factory=lambda: np.array(
            [[1.0, 0, 0, 0], [0, 0, 1.0, 0], [0, -1.0, 0, 0], [0, 0, 0, 1.0]]
        )
    )

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ConfigError("focal lengths must be positive")
        ext = np.asarray(self.extrinsic, dtype=float)
        if ext.shape != (4, 4):
            raise ConfigError("extrinsic must be a 4x4 homogeneous transform")
        rot = ext[:3, :3]
        if not np.allclose(rot @ rot.T, np.eye(3), atol=1e-9):
            raise ConfigError("extrinsic rotation is not orthonormal")
        if not np.isclose(np.linalg.det(rot), 1.0, atol=1e-9):
            raise ConfigError("extrinsic rotation must have det = +1")
        if not np.allclose(ext[3], [0, 0, 0, 1]):
            raise ConfigError("extrinsic bottom row must be (0, 0, 0, 1)")
        ext = ext.copy()
        ext.setflags(write=False)
        object.__setattr__(self, "extrinsic", ext)

    @classmethod
    def identity(cls, fx=600.0, fy=600.0, cx=320.0, cy=240.0) -> "CameraModel":
        return cls(fx=fx, fy=fy, cx=cx, cy=cy, extrinsic=np.eye(4))

    @property
    def rotation(self) -> np.ndarray:
        return self.extrinsic[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.extrinsic[:3, 3]

    def to_dict(self) -> dict:
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "extrinsic": self.extrinsic.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraModel":
        d = dict(d)
        if "extrinsic" in d:
            d["extrinsic"] = np.asarray(d["extrinsic"], dtype=float)
        return cls(**d)

    def __eq__(self, other):
        if not isinstance(other, CameraModel):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(json.dumps(self.to_dict(), sort_keys=True))


@dataclass(frozen=True)
class MetricsConfig:
    loss_weight: float = 0.5
    emd_exact_limit: int = 512

    def __post_init__(self):
        if not 0.0 <= self.loss_weight <= 1.0:
            raise ConfigError("loss_weight must lie in [0, 1]")
        if self.emd_exact_limit < 1:
            raise ConfigError("emd_exact_limit must be >= 1")


@dataclass(frozen=True)
class SimulationConfig:
    """Bundle of everything a run needs besides the input files."""

    radar: RadarConfig = field(default_factory=RadarConfig)
    camera: CameraModel = field(default_factory=CameraModel)
    calibration: dict | None = None
    sampling_table: str | None = None

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "radar": self.radar.to_dict(),
            "camera": self.camera.to_dict(),
            "calibration": self.calibration,
            "sampling_table": self.sampling_table,
        }


def load_config(path) -> SimulationConfig:
    """Read a JSON simulation config (``schema_version`` 1)."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"{path}: unsupported schema_version {raw.get('schema_version')!r}")
    radar = RadarConfig.from_dict(raw.get("radar", {}))
    camera = CameraModel.from_dict(raw["camera"]) if "camera" in raw else CameraModel()
    return SimulationConfig(
        radar=radar,
        camera=camera,
        calibration=raw.get("calibration"),
        sampling_table=raw.get("sampling_table"),
    )


def save_config(config: SimulationConfig, path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
