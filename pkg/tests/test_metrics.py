import itertools

import numpy as np
import pytest

from radarsynth.assembly import RadarFrame, fps_sample
from radarsynth.config import MetricsConfig
from radarsynth.metrics import MetricError, average_cumulative_error, chamfer, combined_loss, emd


def brute_emd(a, b):
    n = len(a)
    best = min(sum(np.linalg.norm(a[i] - b[p[i]]) for i in range(n)) for p in itertools.permutations(range(n)))
    return best / n


def test_chamfer_examples(rng):
    x = rng.normal(size=(10, 3))
    assert chamfer(x, x) == 0.0
    assert chamfer([[0, 0, 0]], [[1, 0, 0]]) == 2.0
    y = rng.normal(size=(7, 3))
    assert chamfer(x, y) == pytest.approx(chamfer(y, x))


def test_emd_hand_example():
    assert emd([[0, 0, 0], [2, 0, 0]], [[1, 0, 0], [3, 0, 0]]) == pytest.approx(1.0)


def test_emd_brute_force(rng):
    for _ in range(50):
        n = int(rng.integers(1, 5))
        a, b = rng.normal(size=(n, 3)), rng.normal(size=(n, 3))
        assert emd(a, b) == pytest.approx(brute_emd(a, b), rel=1e-9)
        assert emd(a, b[rng.permutation(n)]) == pytest.approx(emd(a, b), rel=1e-12)


def test_emd_size_errors(rng):
    with pytest.raises(MetricError, match="fps_sample"):
        emd(np.zeros((3, 3)), np.zeros((2, 3)))
    with pytest.raises(MetricError, match="exact"):
        emd(np.zeros((5, 3)), np.zeros((5, 3)), MetricsConfig(emd_exact_limit=4))


def test_emd_after_fps(rng):
    a, b = rng.normal(size=(30, 3)), rng.normal(size=(12, 3))
    assert emd(fps_sample(a, 12), b) >= 0


def test_combined_loss(rng):
    a, b = rng.normal(size=(6, 3)), rng.normal(size=(6, 3))
    assert combined_loss(a, b, MetricsConfig(loss_weight=1.0)) == chamfer(a, b)
    assert combined_loss(a, b) == pytest.approx(0.5 * chamfer(a, b) + 0.5 * emd(a, b))


def test_ace_examples():
    g = [RadarFrame(0, [[0, 1, 0, 0.2, 10.0]])]
    r = [RadarFrame(0, [[0, 1, 0, 0.5, 7.0]])]
    assert average_cumulative_error(g, r, "intensity") == 3.0
    assert average_cumulative_error(g, r, "radial_velocity") == pytest.approx(0.3)
    assert average_cumulative_error(g, g, "intensity") == 0.0


def test_ace_mean_over_frames():
    g = [RadarFrame(0, [[0, 1, 0, 0, 10.0], [5, 1, 0, 0, 10.0]]), RadarFrame(1, [[0, 1, 0, 0, 4.0]])]
    r = [RadarFrame(0, [[0, 1, 0, 0, 9.0], [5, 1, 0, 0, 8.0]]), RadarFrame(1, [[0, 1, 0, 0, 5.0]])]
    assert average_cumulative_error(g, r, "intensity") == pytest.approx((3.0 + 1.0) / 2)


def test_ace_errors():
    f = [RadarFrame(0, [[0, 1, 0, 0, 1.0]])]
    with pytest.raises(MetricError, match="mismatch"):
        average_cumulative_error(f, f + f, "intensity")
    with pytest.raises(MetricError):
        average_cumulative_error(f, f, "range")
    with pytest.raises(MetricError):
        average_cumulative_error([RadarFrame(0)], f, "intensity")
