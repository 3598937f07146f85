"""Arm reflection-point expansion with mask-based overflow correction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import CameraModel, RadarConfig
from .counters import Counters
from .ingest import BodyPartMask, SkeletonFrame, project_many, project_to_image


class ReflectorGenerationError(RuntimeError):
    """Redraw budget exhausted; ``deficit`` points could not be placed on the arm."""

    def __init__(self, deficit: int, rounds: int):
        self.deficit = deficit
        self.rounds = rounds
        super().__init__(
            f"could not place {deficit} reflection points on the arm after {rounds} rounds; "
            "mask and skeleton look inconsistent"
        )


@dataclass(frozen=True)
class ArmChain:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    a_img: tuple = (np.nan, np.nan)
    b_img: tuple = (np.nan, np.nan)
    c_img: tuple = (np.nan, np.nan)

    def __post_init__(self):
        for name in ("a", "b", "c"):
            p = np.asarray(getattr(self, name), dtype=float).reshape(3)
            if not np.all(np.isfinite(p)):
                raise ValueError(f"arm joint {name} has non-finite coordinates")
            object.__setattr__(self, name, p)

    @classmethod
    def from_frame(cls, frame: SkeletonFrame, camera: CameraModel) -> "ArmChain":
        uvd = np.array([[frame.joint(j).u, frame.joint(j).v, frame.joint(j).depth] for j in frame.arm_ids])
        xyz = project_many(uvd, camera)
        return cls(xyz[0], xyz[1], xyz[2], tuple(uvd[0, :2]), tuple(uvd[1, :2]), tuple(uvd[2, :2]))

    @property
    def vertices(self) -> np.ndarray:
        return np.stack([self.a, self.b, self.c])

    def segment_lengths(self) -> tuple[float, float]:
        return float(np.linalg.norm(self.b - self.a)), float(np.linalg.norm(self.c - self.b))

    def param_of_b(self) -> float:
        ab, bc = self.segment_lengths()
        total = ab + bc
        return ab / total if total > 0 else 0.0

    def point_at(self, s: np.ndarray) -> np.ndarray:
        """Map normalized arc length ``s`` in [0, 1] onto the A -> B -> C polyline."""
        s = np.asarray(s, dtype=float)
        ab, bc = self.segment_lengths()
        total = ab + bc
        if total == 0:
            return np.broadcast_to(self.a, s.shape + (3,)).copy()
        dist = s * total
        on_first = dist <= ab
        t1 = np.clip(dist / ab, 0.0, 1.0) if ab > 0 else np.zeros_like(s)
        t2 = np.clip((dist - ab) / bc, 0.0, 1.0) if bc > 0 else np.zeros_like(s)
        first = self.a + t1[..., None] * (self.b - self.a)
        second = self.b + t2[..., None] * (self.c - self.b)
        return np.where(on_first[..., None], first, second)


@dataclass
class InterpolatedPoint:
    position: np.ndarray
    arm_param: float
    source_window: str | None = field(default=None)

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).reshape(3)
        if not 0.0 <= self.arm_param <= 1.0:
            raise ValueError(f"arm_param {self.arm_param} outside [0, 1]")


def _random_draws(chain: ArmChain, count: int, jitter_radius: float, rng: np.random.Generator):
    s = rng.uniform(0.0, 1.0, size=count)
    pos = chain.point_at(s)
    if jitter_radius > 0 and count:
        direction = rng.normal(size=(count, 3))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radius = jitter_radius * rng.uniform(0.0, 1.0, size=count) ** (1.0 / 3.0)
        pos = pos + direction * radius[:, None]
    return pos, s


def interpolate_arm_points(chain: ArmChain, count: int, jitter_radius: float, rng: np.random.Generator):
    """Return ``count`` points: joints A, B, C first, then seeded random draws.

    Random draws are uniform in normalized arc length along A -> B -> C,
    displaced by an isotropic offset of length at most ``jitter_radius``.
    """
    if count < 3:
        raise ValueError("count must be >= 3")
    if jitter_radius < 0:
        raise ValueError("jitter_radius must be non-negative")
    points = [
        InterpolatedPoint(chain.a.copy(), 0.0),
        InterpolatedPoint(chain.b.copy(), chain.param_of_b()),
        InterpolatedPoint(chain.c.copy(), 1.0),
    ]
    pos, s = _random_draws(chain, count - 3, jitter_radius, rng)
    points.extend(InterpolatedPoint(p, float(t)) for p, t in zip(pos, s))
    return points


def check_overflow(points, mask: BodyPartMask, camera: CameraModel):
    """Split ``points`` into (kept, overflow) by whether they project onto arm pixels."""
    points = list(points)
    if not points:
        return [], []
    xyz = np.stack([p.position for p in points])
    uv = project_to_image(xyz, camera)
    on_arm = mask.is_arm(uv[:, 0], uv[:, 1])
    kept = [p for p, ok in zip(points, on_arm) if ok]
    overflow = [p for p, ok in zip(points, on_arm) if not ok]
    return kept, overflow


def generate_reflection_points(
    chain: ArmChain,
    mask: BodyPartMask,
    camera: CameraModel,
    config: RadarConfig,
    rng: np.random.Generator,
    counters: Counters | None = None,
):
    """Draw, check and redraw until ``config.points_per_frame`` points sit on the arm.

    Only overflow points are redrawn; kept points persist between rounds.
    Raises :class:`ReflectorGenerationError` when ``config.redraw_budget``
    rounds do not fill the quota.
    """
    target = config.points_per_frame
    candidates = interpolate_arm_points(chain, target, config.jitter_radius, rng)
    kept, _ = check_overflow(candidates, mask, camera)
    rounds = 1
    while len(kept) < target and rounds < config.redraw_budget:
        deficit = target - len(kept)
        pos, s = _random_draws(chain, deficit, config.jitter_radius, rng)
        fresh = [InterpolatedPoint(p, float(t)) for p, t in zip(pos, s)]
        more, _ = check_overflow(fresh, mask, camera)
        kept.extend(more)
        rounds += 1
    if counters is not None:
        counters.redraw_rounds += rounds - 1
    if len(kept) < target:
        raise ReflectorGenerationError(target - len(kept), rounds)
    return kept
