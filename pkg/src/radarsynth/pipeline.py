"""End-to-end synthesizer: skeleton sequence in, radar frames out."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .assembly import RadarFrame, SamplingTable, apply_calibration, build_frame, sample_frame
from .config import CameraModel, RadarConfig
from .counters import Counters
from .ingest import BodyPartMask, SkeletonFrame, project_many, project_to_image
from .kinematics import JointVelocityRecord, all_joint_velocities, assign_window_velocities, radial_velocities
from .propagation import MultipathPropagator, combine_paths
from .rcs import rcs_per_point, triangulate
from .reflector_gen import ArmChain, generate_reflection_points
from .scene import Scene


def frame_rng(seed: int, frame_index: int) -> np.random.Generator:
    """Per-frame generator: ``SeedSequence([seed, frame_index])`` feeding PCG64."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), int(frame_index)]))


@dataclass
class FrameResult:
    frame: RadarFrame
    positions: np.ndarray
    radial_velocity: np.ndarray
    rcs: np.ndarray
    intensity: np.ndarray
    counters: Counters


class RadarSynthesizer(TransformerMixin, BaseEstimator):
    """Turn skeleton, depth and body-part-mask sequences into radar point-cloud frames.

    ``fit`` prepares the multipath model for ``scene``; ``transform`` maps a
    list of :class:`SkeletonFrame` to a list of :class:`RadarFrame`. Each
    frame draws from its own generator seeded by ``(seed, frame_index)``, so
    output does not depend on ``n_jobs``.

    Parameters
    ----------
    radar_config : RadarConfig, optional
    camera : CameraModel, optional
    scene : Scene, optional
        Defaults to an empty scene (pure radar equation).
    masks : BodyPartMask or list of BodyPartMask
        One static mask or one per frame.
    sampling_table : SamplingTable, optional
    sampling_key : (position_bin, gesture), optional
    calibration : dict, optional
        Affine coefficients passed to :func:`apply_calibration`.
    n_jobs : int
        Worker threads for the per-frame pass.
    """

    def __init__(
        self,
        radar_config=None,
        camera=None,
        scene=None,
        masks=None,
        sampling_table=None,
        sampling_key=None,
        calibration=None,
        n_jobs=1,
    ):
        self.radar_config = radar_config
        self.camera = camera
        self.scene = scene
        self.masks = masks
        self.sampling_table = sampling_table
        self.sampling_key = sampling_key
        self.calibration = calibration
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        self.config_ = self.radar_config if self.radar_config is not None else RadarConfig()
        self.camera_ = self.camera if self.camera is not None else CameraModel()
        self.propagator_ = MultipathPropagator(self.config_).fit(self.scene if self.scene is not None else Scene())
        return self

    def _mask_for(self, position: int, n_frames: int) -> BodyPartMask:
        masks = self.masks
        if masks is None:
            raise ValueError("RadarSynthesizer needs a body-part mask")
        if isinstance(masks, BodyPartMask):
            return masks
        masks = list(masks)
        if len(masks) == 1:
            return masks[0]
        if len(masks) != n_frames:
            raise ValueError(f"got {len(masks)} masks for {n_frames} frames")
        return masks[position]

    def _target_count(self) -> int:
        cfg = self.config_
        if self.sampling_table is None or self.sampling_key is None:
            return cfg.points_per_frame
        table = self.sampling_table
        if not isinstance(table, SamplingTable):
            raise TypeError("sampling_table must be a SamplingTable")
        return table.target(*self.sampling_key, default=cfg.points_per_frame)

    def simulate_frame(self, frame: SkeletonFrame, joint_velocity: np.ndarray, mask: BodyPartMask, cfg: RadarConfig | None = None) -> FrameResult:
        """Run reflection generation through assembly for one frame.

        ``joint_velocity`` is the (19, 3) output of the sequential history pass.
        """
        check_is_fitted(self, "propagator_")
        cfg = cfg or self.config_
        camera = self.camera_
        counters = Counters()
        rng = frame_rng(cfg.seed, frame.frame_index)

        chain = ArmChain.from_frame(frame, camera)
        arm_points = generate_reflection_points(chain, mask, camera, cfg, rng, counters)
        ids = frame.joint_ids
        a, b, c = (ids.index(j) for j in frame.arm_ids)
        rec = JointVelocityRecord(joint_velocity[a], joint_velocity[b], joint_velocity[c])
        arm_vel = np.asarray(assign_window_velocities(arm_points, rec))
        arm_xyz = np.stack([p.position for p in arm_points])

        body = [k for k in range(len(ids)) if k not in (a, b, c)]
        uvd = frame.uvd()
        body_xyz = project_many(uvd[body], camera)
        positions = np.vstack([arm_xyz, body_xyz])
        velocities = np.vstack([arm_vel, joint_velocity[body]])
        image = np.vstack([project_to_image(arm_xyz, camera)[:, :2], uvd[body, :2]])

        radar = np.asarray(cfg.radar_position)
        triangles = triangulate(positions, image)
        rcs = rcs_per_point(triangles, positions, radar, cfg.wavelength, cfg.rcs_floor)
        v_r = radial_velocities(positions, velocities, radar)
        bundle = self.propagator_.trace(positions)
        intensity = combine_paths(cfg, bundle, rcs, counters)

        out = build_frame(positions, v_r, intensity, cfg, frame.frame_index, counters)
        out = sample_frame(out, self._target_count())
        out = apply_calibration(out, self.calibration, cfg.max_radial_velocity, counters)
        return FrameResult(out, positions, v_r, rcs, intensity, counters)

    def transform(self, X, cfg: RadarConfig | None = None) -> list[RadarFrame]:
        check_is_fitted(self, "propagator_")
        frames = list(X)
        n = len(frames)
        # pass 1: joint velocities need the ordered history
        velocities = [all_joint_velocities(frames, self.camera_, i) for i in range(n)]
        jobs = [(f, velocities[i], self._mask_for(i, n)) for i, f in enumerate(frames)]

        def run(job):
            return self.simulate_frame(*job, cfg=cfg)

        if self.n_jobs and self.n_jobs > 1 and n > 1:
            with ThreadPoolExecutor(max_workers=self.n_jobs) as pool:
                results = list(pool.map(run, jobs))
        else:
            results = [run(j) for j in jobs]
        counters = Counters()
        for r in results:
            counters.merge(r.counters)
        self.counters_ = counters
        self.results_ = results
        return [r.frame for r in results]
