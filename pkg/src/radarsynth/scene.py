"""Voxelized scene holding reflector occupancy and reflectivity."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GRID_SHAPE = (128, 128, 64)
VOXEL_SIZE = 0.05
DEFAULT_ORIGIN = (-3.2, 0.0, -1.6)

OUT_OF_GRID = None


class SceneError(ValueError):
    pass


@dataclass(frozen=True)
class Reflector:
    """Axis-aligned box reflector; ``bias`` is added to both corners."""

    min_corner: tuple
    max_corner: tuple
    reflectivity: float
    bias: tuple = (0.0, 0.0, 0.0)
    name: str = ""

    def __post_init__(self):
        for attr in ("min_corner", "max_corner", "bias"):
            value = tuple(float(c) for c in getattr(self, attr))
            if len(value) != 3 or not all(np.isfinite(value)):
                raise SceneError(f"reflector {attr} must be 3 finite numbers")
            object.__setattr__(self, attr, value)
        if not 0.0 <= self.reflectivity <= 1.0:
            raise SceneError(f"reflectivity {self.reflectivity} outside [0, 1]")
        if any(lo >= hi for lo, hi in zip(self.min_corner, self.max_corner)):
            raise SceneError("reflector min corner must be strictly below max corner")

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        b = np.asarray(self.bias)
        return np.asarray(self.min_corner) + b, np.asarray(self.max_corner) + b


@dataclass(frozen=True)
class Scene:
    """128 x 128 x 64 grid of 0.05 m voxels, radar at the world origin.

    A voxel is occupied when its centre lies inside some reflector box;
    later reflectors overwrite the reflectivity of earlier ones.
    """

    reflectors: tuple = ()
    origin: tuple = DEFAULT_ORIGIN
    occupancy: np.ndarray = field(default=None, repr=False, compare=False)
    reflectivity: np.ndarray = field(default=None, repr=False, compare=False)

    shape = GRID_SHAPE
    voxel_size = VOXEL_SIZE

    def __post_init__(self):
        object.__setattr__(self, "reflectors", tuple(self.reflectors))
        object.__setattr__(self, "origin", tuple(float(c) for c in self.origin))
        occ = np.zeros(GRID_SHAPE, dtype=bool)
        rho = np.zeros(GRID_SHAPE, dtype=float)
        origin = np.asarray(self.origin)
        upper = origin + np.asarray(GRID_SHAPE) * VOXEL_SIZE
        for idx, refl in enumerate(self.reflectors):
            lo, hi = refl.bounds
            if np.any(lo < origin - 1e-9) or np.any(hi > upper + 1e-9):
                raise SceneError(
                    f"reflector {idx} ({refl.name or 'unnamed'}) extends outside the grid "
                    f"[{origin.tolist()}, {upper.tolist()}]"
                )
            # voxel i is inside when its centre origin + (i + 0.5) * vs lies in [lo, hi)
            start = np.ceil((lo - origin) / VOXEL_SIZE - 0.5).astype(int)
            stop = np.ceil((hi - origin) / VOXEL_SIZE - 0.5).astype(int)
            start = np.clip(start, 0, GRID_SHAPE)
            stop = np.clip(stop, 0, GRID_SHAPE)
            sl = tuple(slice(a, b) for a, b in zip(start, stop))
            occ[sl] = True
            rho[sl] = refl.reflectivity
        occ.setflags(write=False)
        rho.setflags(write=False)
        object.__setattr__(self, "occupancy", occ)
        object.__setattr__(self, "reflectivity", rho)

    @property
    def extent(self) -> np.ndarray:
        return np.asarray(GRID_SHAPE) * VOXEL_SIZE

    @property
    def n_occupied(self) -> int:
        return int(np.count_nonzero(self.occupancy))

    def voxel_index(self, point):
        """Integer voxel index of ``point`` or ``None`` when outside the grid."""
        idx = voxel_indices(self, np.asarray(point, dtype=float).reshape(1, 3))[0]
        if idx[0] < 0:
            return OUT_OF_GRID
        return tuple(int(i) for i in idx)

    def voxel_center(self, index) -> np.ndarray:
        return np.asarray(self.origin) + (np.asarray(index, dtype=float) + 0.5) * VOXEL_SIZE

    def contains(self, points) -> np.ndarray:
        return voxel_indices(self, np.atleast_2d(points))[:, 0] >= 0


def voxel_indices(scene: Scene, points: np.ndarray) -> np.ndarray:
    """Vectorized ``floor((p - origin) / voxel_size)``; rows outside the grid become -1."""
    points = np.asarray(points, dtype=float)
    idx = np.floor((points - np.asarray(scene.origin)) / VOXEL_SIZE).astype(np.int64)
    inside = np.all((idx >= 0) & (idx < np.asarray(GRID_SHAPE)), axis=1)
    idx[~inside] = -1
    return idx


def voxel_index(scene: Scene, point):
    return scene.voxel_index(point)


def draw_biases(reflectors, half_width: float, seed: int) -> tuple:
    """Give every reflector without an explicit bias a seeded uniform offset."""
    if half_width <= 0:
        return tuple(reflectors)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5CE4E]))
    out = []
    for refl in reflectors:
        offset = rng.uniform(-half_width, half_width, size=3)
        if any(refl.bias):
            out.append(refl)
        else:
            out.append(
                Reflector(refl.min_corner, refl.max_corner, refl.reflectivity, tuple(offset), refl.name)
            )
    return tuple(out)
