import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radarsynth.config import RadarConfig
from radarsynth.counters import Counters
from radarsynth.fixtures import mirror_scene
from radarsynth.fmcw import attenuated_amplitude, to_db
from radarsynth.propagation import (
    MultipathPropagator,
    PropagationPath,
    accumulate_intensity,
    enumerate_paths,
    extract_facets,
    path_contribution,
    voxel_average,
)
from radarsynth.scene import Reflector, Scene, voxel_indices

ORIGIN = np.zeros(3)
TARGET = np.array([0.5, 2.0, 0.0])
WALL = Reflector((1.0, 0.5, -1.0), (1.05, 5.0, 1.0), 1.0, name="mirror")


def test_voxel_index_examples():
    scene = Scene()
    assert scene.voxel_index((0, 0, 0)) == (64, 0, 32)
    corner = np.asarray(scene.origin) + 0.049
    assert scene.voxel_index(corner) == (0, 0, 0)
    assert scene.voxel_index((0, 10.0, 0)) is None
    assert scene.voxel_index((0, -0.01, 0)) is None


def test_voxel_round_trip_property(rng):
    scene = Scene()
    lo = np.asarray(scene.origin)
    pts = lo + rng.uniform(0, 1, (10_000, 3)) * scene.extent
    idx = voxel_indices(scene, pts)
    assert np.all(idx >= 0)
    centres = lo + (idx + 0.5) * 0.05
    assert np.all(np.linalg.norm(centres - pts, axis=1) <= 0.05 * math.sqrt(3) / 2 + 1e-12)


def test_empty_scene_single_direct_path():
    paths = enumerate_paths(Scene(), ORIGIN, TARGET, max_bounces=3)
    assert len(paths) == 1
    p = paths[0]
    assert p.bounce_count == 0
    assert p.attenuation_factor == 1.0
    assert p.total_length == pytest.approx(2 * np.linalg.norm(TARGET))
    assert np.allclose(p.segments, [ORIGIN, TARGET, ORIGIN])


def test_mirror_image_path_length():
    paths = enumerate_paths(Scene((WALL,)), ORIGIN, TARGET, max_bounces=1, cfg=RadarConfig(alpha=0.0))
    assert [p.bounce_count for p in paths] == [0, 1]
    bounced = paths[1]
    # radar image across x = 1.0 sits at (2, 0, 0); outbound |(2,0,0) - (0.5,2,0)| = 2.5
    hand = 2.5 + math.sqrt(0.5**2 + 2.0**2)
    assert bounced.total_length == pytest.approx(hand, rel=1e-12)
    assert bounced.attenuation_factor == 1.0
    # bounce point on the wall face at y = 4/3
    assert np.allclose(bounced.segments[1], (1.0, 4 / 3, 0.0))


def test_mirror_alpha_attenuation():
    paths = enumerate_paths(Scene((WALL,)), ORIGIN, TARGET, max_bounces=1, cfg=RadarConfig(alpha=0.15))
    assert paths[0].attenuation_factor == 1.0
    assert paths[1].attenuation_factor == pytest.approx(0.85)


def test_zero_bounce_budget_keeps_direct_only():
    paths = enumerate_paths(Scene((WALL,)), ORIGIN, TARGET, max_bounces=0)
    assert [p.bounce_count for p in paths] == [0]


def test_corridor_two_bounce_hand_lengths():
    scene = mirror_scene(gap=1.0, reflectivity=0.9)
    target = np.array([0.5, 3.0, 0.0])
    paths = enumerate_paths(scene, ORIGIN, target, max_bounces=2, cfg=RadarConfig(alpha=0.1))
    two = sorted(p.total_length for p in paths if p.bounce_count == 2)
    back = math.sqrt(0.5**2 + 3.0**2)
    # west first: images (-2,0,0) then (4,0,0); east first: (2,0,0) then (-4,0,0)
    hand = sorted([math.sqrt(3.5**2 + 9.0) + back, math.sqrt(4.5**2 + 9.0) + back])
    assert two == pytest.approx(hand, rel=1e-12)
    for p in paths:
        if p.bounce_count == 2:
            assert p.attenuation_factor == pytest.approx(0.9**2 * 0.9**2)
    assert all(p.bounce_count <= 3 for p in enumerate_paths(scene, ORIGIN, target, max_bounces=3))


def test_bounce_leaving_fov_is_rejected():
    # west-then-east to (0.5, 2, 0) would leave the radar at -60.3 deg azimuth
    paths = enumerate_paths(mirror_scene(), ORIGIN, TARGET, max_bounces=2)
    assert [p.bounce_count for p in paths] == [0, 1, 1]


def test_occluded_direct_path_is_dropped():
    blocker = Reflector((0.1, 0.9, -0.3), (0.5, 1.0, 0.3), 0.5)
    paths = enumerate_paths(Scene((blocker,)), ORIGIN, TARGET)
    assert paths == []


def test_target_outside_grid():
    with pytest.raises(ValueError, match="outside"):
        enumerate_paths(Scene(), ORIGIN, (0, 7.0, 0))


def test_path_invariants():
    with pytest.raises(AssertionError):
        PropagationPath(np.zeros((2, 3)), 4, 1.0, 0.5)
    with pytest.raises(ValueError):
        PropagationPath(np.zeros((2, 3)), 1, 1.0, 0.0)
    with pytest.raises(ValueError):
        PropagationPath(np.zeros((2, 3)), 1, 0.0, 0.5)


def test_path_contribution_direct_identity(cfg):
    path = PropagationPath(np.array([ORIGIN, TARGET, ORIGIN]), 0, 2 * 2.2, 1.0)
    assert path_contribution(cfg, path, 0.7) == attenuated_amplitude(cfg, 0.7, 2.2)


def test_path_contribution_alpha_cap_three_bounces():
    cfg = RadarConfig(alpha=0.3)
    factor = (1 - cfg.alpha) ** 3
    assert factor == pytest.approx(0.343)
    path = PropagationPath(np.zeros((5, 3)), 3, 5.0, factor)
    assert path_contribution(cfg, path, 1.0) == pytest.approx(attenuated_amplitude(cfg, 1.0, 2.5) * 0.343)


def test_path_contribution_below_floor_dropped(cfg):
    d = 2.0
    k = attenuated_amplitude(cfg, 1.0, d)
    rcs = (1e-8 / k) ** 2  # amplitude 1e-8 -> -160 dB
    assert to_db(attenuated_amplitude(cfg, rcs, d)) == -150.0
    assert 20 * math.log10(attenuated_amplitude(cfg, rcs, d)) == pytest.approx(-160.0)
    counters = Counters()
    path = PropagationPath(np.zeros((3, 3)), 0, 2 * d, 1.0)
    assert path_contribution(cfg, path, rcs, counters) == 0.0
    assert counters.dropped_paths == 1


def test_single_point_empty_scene_intensity(cfg):
    imap = accumulate_intensity(cfg, Scene(), [TARGET], [0.5], ORIGIN)
    expected = to_db(attenuated_amplitude(cfg, 0.5, np.linalg.norm(TARGET)))
    assert len(imap.voxel_db) == 1
    assert list(imap.voxel_db.values())[0] == pytest.approx(expected, rel=1e-12)
    assert imap.point_db[0] == pytest.approx(expected, rel=1e-12)


def test_voxel_mean_of_two_points():
    scene = Scene()
    pts = np.array([[0.01, 2.01, 0.01], [0.02, 2.02, 0.02]])
    assert voxel_average(scene, pts, np.array([10.0, 20.0])) == {scene.voxel_index(pts[0]): 15.0}


def test_zero_reflectivity_changes_nothing(cfg, rng):
    pts = np.column_stack([rng.uniform(-0.5, 0.5, 40), rng.uniform(1.5, 3, 40), rng.uniform(-0.5, 0.5, 40)])
    rcs = rng.uniform(0.01, 1, 40)
    base = accumulate_intensity(cfg, Scene(), pts, rcs)
    ghost = Reflector((0.6, 1.0, -1.0), (0.7, 4.0, 1.0), 0.0)
    again = accumulate_intensity(cfg, Scene((ghost,)), pts, rcs)
    assert np.array_equal(base.point_db, again.point_db)
    assert base.voxel_db == again.voxel_db


def test_empty_scene_is_radar_equation(cfg, rng):
    pts = np.column_stack([rng.uniform(-1, 1, 200), rng.uniform(2.0, 4.5, 200), rng.uniform(-0.8, 0.8, 200)])
    rcs = rng.uniform(1e-3, 2, 200)
    imap = accumulate_intensity(cfg, Scene(), pts, rcs)
    oracle = np.array([to_db(attenuated_amplitude(cfg, r, np.linalg.norm(p))) for p, r in zip(pts, rcs)])
    assert np.allclose(imap.point_db, oracle, rtol=1e-12)


def test_facets_of_single_box():
    facets = extract_facets(Scene((WALL,)))
    assert len(facets) == 6
    west = [f for f in facets if f.axis == 0 and f.sign == -1][0]
    assert west.plane == pytest.approx(1.0)
    assert np.count_nonzero(west.reflectivity) == 90 * 40


def test_ray_march_finds_lit_face():
    prop = MultipathPropagator(RadarConfig()).fit(Scene((WALL,)))
    lit = [prop.facets_[i].key for i in prop.illuminated_]
    assert (0, -1, 84) in lit  # x = 1.0 face, plane index (1.0 + 3.2) / 0.05
    assert all(prop.facets_[i].sign * (0.0 - prop.facets_[i].plane) > 0 for i in prop.illuminated_)


def test_surviving_paths_non_increasing_in_alpha(gesture, gesture_masks):
    from radarsynth.fixtures import sweep_config
    from radarsynth.pipeline import RadarSynthesizer

    base = sweep_config()
    synth = RadarSynthesizer(base.radar, base.camera, mirror_scene(), gesture_masks[:4]).fit()
    counts = []
    for k in range(7):
        synth.transform(gesture[:4], cfg=base.radar.with_alpha(round(0.05 * k, 10)))
        counts.append(synth.counters_.surviving_paths)
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    assert counts[0] > counts[-1]


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 0.3), st.floats(0.0, 0.3))
def test_contribution_monotone_in_alpha(a1, a2):
    scene = mirror_scene()
    prop = MultipathPropagator(RadarConfig()).fit(scene)
    bundle = prop.trace(TARGET[None, :])
    lo, hi = sorted((a1, a2))
    assert np.all(bundle.attenuation(hi) <= bundle.attenuation(lo))


def test_coherent_flag_bounded_by_incoherent(cfg):
    from dataclasses import replace

    scene = mirror_scene()
    inc = accumulate_intensity(cfg, scene, [TARGET], [0.5])
    coh = accumulate_intensity(replace(cfg, coherent=True), scene, [TARGET], [0.5])
    assert coh.point_db[0] <= inc.point_db[0] + 1e-9
