"""Voxelized multipath propagation.

Reflector surfaces are the axis-aligned faces between voxels with positive
reflectivity and empty voxels, grouped into planar facets. A deterministic
angular ray march from the radar finds which facets are illuminated; paths
with up to three specular bounces are then constructed exactly with the
image method and checked for occlusion by sampling each segment at
half-voxel steps.

Paths are monostatic: the outbound leg may bounce, the return leg runs
straight from the target back to the radar.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points
from .config import SPEED_OF_LIGHT, RadarConfig
from .counters import Counters
from .fmcw import DB_MAX, DB_MIN, attenuated_amplitude, to_db
from .scene import GRID_SHAPE, VOXEL_SIZE, Scene, voxel_indices

MAX_BOUNCES = 3
_SEG_EPS = 1e-6


@dataclass(frozen=True)
class Facet:
    """Cells of one voxel-face plane that reflect outward along ``sign * e_axis``."""

    axis: int
    sign: int
    plane_index: int
    plane: float
    reflectivity: np.ndarray  # 2D over the two remaining axes, 0 where no face

    @property
    def other_axes(self) -> tuple[int, int]:
        return tuple(a for a in range(3) if a != self.axis)

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.axis, self.sign, self.plane_index)

    def mirror(self, p: np.ndarray) -> np.ndarray:
        q = np.array(p, dtype=float)
        q[..., self.axis] = 2 * self.plane - q[..., self.axis]
        return q

    def cell_bounds(self, origin) -> np.ndarray:
        """(lo, hi) world extent of reflecting cells along each axis, shape (2, 3)."""
        bounds = np.empty((2, 3))
        bounds[:, self.axis] = self.plane
        nz = np.nonzero(self.reflectivity)
        for k, ax in enumerate(self.other_axes):
            bounds[0, ax] = origin[ax] + nz[k].min() * VOXEL_SIZE
            bounds[1, ax] = origin[ax] + (nz[k].max() + 1) * VOXEL_SIZE
        return bounds


@dataclass(frozen=True)
class PropagationPath:
    segments: np.ndarray  # waypoints: radar, bounces..., target, radar
    bounce_count: int
    total_length: float
    attenuation_factor: float
    reflectivity_product: float = 1.0

    def __post_init__(self):
        assert 0 <= self.bounce_count <= MAX_BOUNCES, "paths never exceed three bounces"
        if not self.total_length > 0:
            raise ValueError("path length must be positive")
        if not 0 < self.attenuation_factor <= 1:
            raise ValueError("attenuation factor must lie in (0, 1]")

    @property
    def delay(self) -> float:
        return self.total_length / SPEED_OF_LIGHT


@dataclass(frozen=True)
class IntensityMap:
    """Per-point and per-voxel intensity in dB; NaN marks points with no surviving path."""

    point_db: np.ndarray
    voxel_db: dict

    def __post_init__(self):
        finite = self.point_db[np.isfinite(self.point_db)]
        if finite.size and (finite.min() < DB_MIN or finite.max() > DB_MAX):
            raise ValueError("intensity outside [-150, 150] dB")


@dataclass
class PathBundle:
    """Vectorized trace result for m targets and P candidate paths.

    ``bounces`` and ``facets`` describe each candidate path; ``valid``,
    ``length`` and ``rho`` are (m, P) arrays.
    """

    bounces: np.ndarray
    facets: list
    valid: np.ndarray
    length: np.ndarray
    rho: np.ndarray
    waypoints: list | None = None

    def attenuation(self, alpha: float) -> np.ndarray:
        return self.rho * (1.0 - alpha) ** self.bounces[None, :]


def extract_facets(scene: Scene) -> list[Facet]:
    """Group every reflecting voxel face of ``scene`` into planar facets."""
    rho = np.where(scene.occupancy, scene.reflectivity, 0.0)
    solid = rho > 0
    origin = np.asarray(scene.origin)
    facets = []
    for axis in range(3):
        n = GRID_SHAPE[axis]
        for sign in (-1, 1):
            neighbour = np.zeros_like(solid)
            src = [slice(None)] * 3
            dst = [slice(None)] * 3
            if sign > 0:
                src[axis] = slice(1, None)
                dst[axis] = slice(0, n - 1)
            else:
                src[axis] = slice(0, n - 1)
                dst[axis] = slice(1, None)
            neighbour[tuple(dst)] = solid[tuple(src)]
            face = solid & ~neighbour
            if not face.any():
                continue
            layers = np.nonzero(face.any(axis=tuple(a for a in range(3) if a != axis)))[0]
            for layer in layers:
                sel = [slice(None)] * 3
                sel[axis] = layer
                cells = np.where(face[tuple(sel)], rho[tuple(sel)], 0.0)
                plane_index = int(layer) + (1 if sign > 0 else 0)
                facets.append(
                    Facet(axis, sign, plane_index, float(origin[axis] + plane_index * VOXEL_SIZE), cells)
                )
    return facets


def _fov_mask(directions: np.ndarray, cfg: RadarConfig) -> np.ndarray:
    az = np.degrees(np.arctan2(directions[:, 0], directions[:, 1]))
    el = np.degrees(np.arctan2(directions[:, 2], np.hypot(directions[:, 0], directions[:, 1])))
    return (np.abs(az) <= cfg.fov_azimuth_deg + 1e-9) & (np.abs(el) <= cfg.fov_elevation_deg + 1e-9)


def ray_directions(cfg: RadarConfig) -> np.ndarray:
    """Unit directions on the azimuth x elevation grid covering the field of view."""
    step = cfg.angular_step_deg
    az = np.arange(-cfg.fov_azimuth_deg, cfg.fov_azimuth_deg + 0.5 * step, step)
    el = np.arange(-cfg.fov_elevation_deg, cfg.fov_elevation_deg + 0.5 * step, step)
    az_g, el_g = np.meshgrid(np.radians(az), np.radians(el), indexing="ij")
    d = np.stack(
        [np.cos(el_g) * np.sin(az_g), np.cos(el_g) * np.cos(az_g), np.sin(el_g)], axis=-1
    ).reshape(-1, 3)
    return d


def march_rays(scene: Scene, radar_position, directions: np.ndarray) -> list:
    """First-hit facet key ``(axis, sign, plane_index)`` for every ray, or None."""
    origin = np.asarray(scene.origin)
    radar = np.asarray(radar_position, dtype=float)
    solid = scene.occupancy & (scene.reflectivity > 0)
    step = VOXEL_SIZE / 2
    max_dist = float(np.linalg.norm(scene.extent)) + np.linalg.norm(radar - origin)
    n_steps = int(np.ceil(max_dist / step))
    m = len(directions)
    hit = np.full((m, 3), -1, dtype=np.int64)
    alive = np.ones(m, dtype=bool)
    for s in range(1, n_steps + 1):
        if not alive.any():
            break
        rows = np.nonzero(alive)[0]
        pts = radar + directions[rows] * (s * step)
        idx = np.floor((pts - origin) / VOXEL_SIZE).astype(np.int64)
        inside = np.all((idx >= 0) & (idx < np.asarray(GRID_SHAPE)), axis=1)
        blocked = np.zeros(len(rows), dtype=bool)
        blocked[inside] = solid[idx[inside, 0], idx[inside, 1], idx[inside, 2]]
        hit[rows[blocked]] = idx[blocked]
        alive[rows[blocked]] = False
    keys = []
    for d, vox in zip(directions, hit):
        if vox[0] < 0:
            keys.append(None)
            continue
        lo = origin + vox * VOXEL_SIZE
        hi = lo + VOXEL_SIZE
        with np.errstate(divide="ignore", invalid="ignore"):
            t_near = np.where(d > 0, (lo - radar) / d, np.where(d < 0, (hi - radar) / d, -np.inf))
        axis = int(np.argmax(t_near))
        sign = -1 if d[axis] > 0 else 1
        plane_index = int(vox[axis]) + (1 if sign > 0 else 0)
        keys.append((axis, sign, plane_index))
    return keys


def _facets_can_chain(a: Facet, b: Facet, origin) -> bool:
    """Whether a specular ray leaving facet ``a`` could reach facet ``b``."""
    if a.key == b.key:
        return False
    ba = a.cell_bounds(origin)
    bb = b.cell_bounds(origin)

    def on_positive_side(bounds, f):
        edge = bounds[1, f.axis] if f.sign > 0 else bounds[0, f.axis]
        return f.sign * (edge - f.plane) > 1e-12

    return on_positive_side(ba, b) and on_positive_side(bb, a)


class MultipathPropagator(BaseEstimator):
    """Trace radar -> (reflectors) -> target -> radar paths through a voxel scene.

    Parameters
    ----------
    radar_config : RadarConfig, optional
        Supplies radar position, field of view, angular step, ``max_bounces``,
        ``alpha`` and the noise floor.
    """

    def __init__(self, radar_config: RadarConfig | None = None):
        self.radar_config = radar_config

    @property
    def _cfg(self) -> RadarConfig:
        return self.radar_config if self.radar_config is not None else RadarConfig()

    def fit(self, scene: Scene, y=None):
        cfg = self._cfg
        origin = np.asarray(scene.origin)
        self.scene_ = scene
        self.radar_position_ = np.asarray(cfg.radar_position, dtype=float)
        self.facets_ = extract_facets(scene)
        by_key = {f.key: i for i, f in enumerate(self.facets_)}
        keys = march_rays(scene, self.radar_position_, ray_directions(cfg))
        lit = sorted({by_key[k] for k in keys if k is not None and k in by_key})
        self.illuminated_ = lit
        self.successors_ = {
            i: [j for j, g in enumerate(self.facets_) if _facets_can_chain(f, g, origin)]
            for i, f in enumerate(self.facets_)
        }
        self.sequences_ = self._sequences(cfg.max_bounces)
        self._solid = scene.occupancy & (scene.reflectivity > 0)
        return self

    def _sequences(self, max_bounces: int) -> list[tuple]:
        seqs = [()]
        frontier = [(i,) for i in self.illuminated_]
        for _ in range(max_bounces):
            seqs.extend(frontier)
            frontier = [s + (j,) for s in frontier for j in self.successors_[s[-1]]]
        return seqs

    # -- geometry helpers --------------------------------------------------

    def _occluded(self, start: np.ndarray, end: np.ndarray) -> np.ndarray:
        """True where the open segment start -> end crosses a reflecting voxel."""
        vec = end - start
        length = np.linalg.norm(vec, axis=1)
        out = np.zeros(len(start), dtype=bool)
        if len(start) == 0:
            return out
        n = int(np.ceil(length.max() / (VOXEL_SIZE / 2))) + 2
        frac = np.linspace(0.0, 1.0, n)
        safe = np.where(length > 0, length, 1.0)
        lo = np.minimum(_SEG_EPS / safe, 0.5)
        hi = 1.0 - lo
        s = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
        pts = start[:, None, :] + s[..., None] * vec[:, None, :]
        idx = np.floor((pts - np.asarray(self.scene_.origin)) / VOXEL_SIZE).astype(np.int64)
        inside = np.all((idx >= 0) & (idx < np.asarray(GRID_SHAPE)), axis=2)
        blocked = np.zeros(inside.shape, dtype=bool)
        blocked[inside] = self._solid[idx[inside][:, 0], idx[inside][:, 1], idx[inside][:, 2]]
        out = blocked.any(axis=1)
        return out

    def _trace_sequence(self, seq: tuple, targets: np.ndarray, cfg: RadarConfig):
        radar = self.radar_position_
        m = len(targets)
        origin = np.asarray(self.scene_.origin)
        images = [radar]
        for i in seq:
            images.append(self.facets_[i].mirror(images[-1]))
        valid = np.ones(m, dtype=bool)
        rho = np.ones(m)
        cur = targets.copy()
        points = [targets]
        for k in range(len(seq), 0, -1):
            f = self.facets_[seq[k - 1]]
            img = images[k]
            a = f.axis
            if f.sign * (img[a] - f.plane) >= 0:
                return None
            valid &= f.sign * (cur[:, a] - f.plane) > 0
            denom = cur[:, a] - img[a]
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (f.plane - img[a]) / denom
            valid &= (t > 0) & (t < 1)
            hit = img + np.where(valid, t, 0.0)[:, None] * (cur - img)
            hit[:, a] = f.plane
            u_ax, v_ax = f.other_axes
            iu = np.floor((hit[:, u_ax] - origin[u_ax]) / VOXEL_SIZE).astype(np.int64)
            iv = np.floor((hit[:, v_ax] - origin[v_ax]) / VOXEL_SIZE).astype(np.int64)
            ok = valid & (iu >= 0) & (iu < f.reflectivity.shape[0]) & (iv >= 0) & (iv < f.reflectivity.shape[1])
            cell_rho = np.zeros(m)
            cell_rho[ok] = f.reflectivity[iu[ok], iv[ok]]
            valid &= cell_rho > 0
            rho *= np.where(valid, cell_rho, 1.0)
            cur = hit
            points.insert(0, hit)
            if not valid.any():
                return None
        # outbound must leave the radar inside the field of view
        first = points[0] - radar
        norm = np.linalg.norm(first, axis=1)
        valid &= norm > 0
        valid &= _fov_mask(first / np.where(norm > 0, norm, 1.0)[:, None], cfg)
        if not valid.any():
            return None
        waypoints = [np.broadcast_to(radar, targets.shape)] + points
        length = np.zeros(m)
        for p, q in zip(waypoints[:-1], waypoints[1:]):
            rows = np.nonzero(valid)[0]
            valid[rows[self._occluded(p[rows], q[rows])]] = False
            length += np.linalg.norm(q - p, axis=1)
        length += np.linalg.norm(targets - radar, axis=1)
        return valid, length, rho, waypoints

    def trace(self, targets, with_waypoints: bool = False) -> PathBundle:
        """Trace every candidate path to every target (targets must lie in the grid)."""
        check_is_fitted(self, "facets_")
        cfg = self._cfg
        targets = check_points(targets, name="targets", allow_empty=True)
        inside = self.scene_.contains(targets) if len(targets) else np.zeros(0, dtype=bool)
        if not np.all(inside):
            bad = targets[~inside][0]
            raise ValueError(f"target {bad.tolist()} lies outside the scene grid")
        m = len(targets)
        radar = self.radar_position_
        direct = targets - radar
        dnorm = np.linalg.norm(direct, axis=1)
        if np.any(dnorm == 0):
            raise ValueError("target coincides with the radar")
        return_ok = _fov_mask(direct / dnorm[:, None], cfg) & ~self._occluded(
            np.broadcast_to(radar, targets.shape).copy(), targets
        )

        bounces, facets, valid, length, rho, wps = [], [], [], [], [], []
        for seq in self.sequences_:
            if len(seq) > cfg.max_bounces:
                continue
            if not seq:
                res = (return_ok.copy(), 2 * dnorm, np.ones(m), [np.broadcast_to(radar, targets.shape), targets])
            else:
                res = self._trace_sequence(seq, targets, cfg)
                if res is None:
                    continue
            v, L, r, w = res
            v = v & return_ok
            if not v.any():
                continue
            bounces.append(len(seq))
            facets.append(seq)
            valid.append(v)
            length.append(L)
            rho.append(r)
            if with_waypoints:
                wps.append(w + [np.broadcast_to(radar, targets.shape)])
        if not bounces:
            empty = np.zeros((m, 0))
            return PathBundle(np.zeros(0, dtype=int), [], empty.astype(bool), empty, empty, [] if with_waypoints else None)
        return PathBundle(
            np.asarray(bounces),
            facets,
            np.stack(valid, axis=1),
            np.stack(length, axis=1),
            np.stack(rho, axis=1),
            wps if with_waypoints else None,
        )

    def enumerate_paths(self, target, max_bounces: int | None = None, alpha: float | None = None) -> list[PropagationPath]:
        """All valid paths to one target, direct path first."""
        cfg = self._cfg
        max_bounces = cfg.max_bounces if max_bounces is None else max_bounces
        if not 0 <= max_bounces <= MAX_BOUNCES:
            raise ValueError("max_bounces must lie in 0..3")
        alpha = cfg.alpha if alpha is None else alpha
        bundle = self.trace(np.asarray(target, dtype=float).reshape(1, 3), with_waypoints=True)
        paths = []
        for p in range(len(bundle.bounces)):
            k = int(bundle.bounces[p])
            if k > max_bounces or not bundle.valid[0, p]:
                continue
            wp = np.stack([w[0] for w in bundle.waypoints[p]])
            paths.append(
                PropagationPath(
                    wp,
                    k,
                    float(bundle.length[0, p]),
                    float(bundle.rho[0, p] * (1.0 - alpha) ** k),
                    float(bundle.rho[0, p]),
                )
            )
        return paths

    def intensity(self, targets, rcs, counters: Counters | None = None, radar_config: RadarConfig | None = None) -> IntensityMap:
        """Accumulate per-point and per-voxel intensity for points with known RCS."""
        cfg = radar_config if radar_config is not None else self._cfg
        targets = check_points(targets, name="targets", allow_empty=True)
        rcs = np.asarray(rcs, dtype=float).reshape(-1)
        if len(rcs) != len(targets):
            raise ValueError("rcs and targets must have the same length")
        bundle = self.trace(targets)
        point_db = combine_paths(cfg, bundle, rcs, counters)
        return IntensityMap(point_db, voxel_average(self.scene_, targets, point_db))


def path_contribution(cfg: RadarConfig, path: PropagationPath, rcs: float, counters: Counters | None = None) -> float:
    """Radar-equation amplitude at half the round-trip length times the path attenuation.

    Contributions below ``cfg.noise_floor_db`` return 0.0 and are counted as dropped.
    """
    amp = attenuated_amplitude(cfg, rcs, path.total_length / 2) * path.attenuation_factor
    if amp <= 0 or 20 * np.log10(amp) < cfg.noise_floor_db:
        if counters is not None:
            counters.dropped_paths += 1
        return 0.0
    if counters is not None:
        counters.surviving_paths += 1
    return float(amp)


def combine_paths(cfg: RadarConfig, bundle: PathBundle, rcs: np.ndarray, counters: Counters | None = None) -> np.ndarray:
    """Per-point dB of the summed surviving path contributions (NaN if none survive)."""
    m = len(rcs)
    if bundle.length.shape[1] == 0:
        return np.full(m, np.nan)
    safe_len = np.where(bundle.valid, bundle.length, 1.0)
    amp = attenuated_amplitude(cfg, np.broadcast_to(rcs[:, None], safe_len.shape), safe_len / 2)
    amp = amp * bundle.attenuation(cfg.alpha)
    with np.errstate(divide="ignore"):
        db = 20 * np.log10(amp)
    alive = bundle.valid & (amp > 0) & (db >= cfg.noise_floor_db)
    if counters is not None:
        counters.surviving_paths += int(np.count_nonzero(alive))
        counters.dropped_paths += int(np.count_nonzero(bundle.valid & ~alive))
    if cfg.coherent:
        tau = safe_len / SPEED_OF_LIGHT
        phase = 2 * np.pi * (-cfg.f0 * tau + cfg.B * tau**2 / (2 * cfg.T)) + cfg.phi0
        total = np.abs(np.sum(np.where(alive, amp * np.exp(1j * phase), 0.0), axis=1))
    else:
        total = np.sum(np.where(alive, amp, 0.0), axis=1)
    out = np.full(m, np.nan)
    has = total > 0
    if has.any():
        out[has] = to_db(total[has], counters)
    if counters is not None:
        counters.dropped_points += int(np.count_nonzero(~has))
    return out


def voxel_average(scene: Scene, points: np.ndarray, point_db: np.ndarray) -> dict:
    """Mean dB of the points inside each voxel, keyed and ordered by voxel index."""
    idx = voxel_indices(scene, points)
    groups: dict = {}
    for key, value in zip(map(tuple, idx.tolist()), point_db):
        if np.isfinite(value):
            groups.setdefault(key, []).append(value)
    return {k: float(np.mean(groups[k])) for k in sorted(groups)}


def enumerate_paths(scene: Scene, radar_position, target, max_bounces: int = 3, cfg: RadarConfig | None = None) -> list[PropagationPath]:
    cfg = replace(cfg or RadarConfig(), radar_position=tuple(radar_position), max_bounces=max_bounces)
    return MultipathPropagator(cfg).fit(scene).enumerate_paths(target)


def accumulate_intensity(cfg: RadarConfig, scene: Scene, points, rcs, radar_position=None, counters: Counters | None = None) -> IntensityMap:
    if radar_position is not None:
        cfg = replace(cfg, radar_position=tuple(radar_position))
    return MultipathPropagator(cfg).fit(scene).intensity(points, rcs, counters)
