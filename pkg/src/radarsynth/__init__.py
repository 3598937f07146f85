"""Synthetic FMCW mmWave radar point clouds from human skeleton sequences."""

from .assembly import (
    AffineCalibrator,
    FarthestPointSampler,
    RadarFrame,
    SamplingTable,
    apply_calibration,
    build_frame,
    fps_sample,
    read_frames,
    write_frames,
)
from .config import CameraModel, MetricsConfig, RadarConfig, SimulationConfig, load_config
from .counters import Counters
from .ingest import (
    BodyPartMask,
    SkeletonFrame,
    load_masks,
    load_scene,
    load_skeleton_sequence,
    project_to_3d,
)
from .metrics import average_cumulative_error, chamfer, combined_loss, emd
from .pipeline import RadarSynthesizer
from .propagation import MultipathPropagator
from .scene import Reflector, Scene

__version__ = "0.1.0"

__all__ = [
    "AffineCalibrator",
    "BodyPartMask",
    "CameraModel",
    "Counters",
    "FarthestPointSampler",
    "MetricsConfig",
    "MultipathPropagator",
    "RadarConfig",
    "RadarFrame",
    "RadarSynthesizer",
    "Reflector",
    "SamplingTable",
    "Scene",
    "SimulationConfig",
    "SkeletonFrame",
    "apply_calibration",
    "average_cumulative_error",
    "build_frame",
    "chamfer",
    "combined_loss",
    "emd",
    "fps_sample",
    "load_config",
    "load_masks",
    "load_scene",
    "load_skeleton_sequence",
    "project_to_3d",
    "read_frames",
    "write_frames",
]
