"""Point-cloud distances and channel error metrics."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from ._validation import check_points
from .config import MetricsConfig

CHANNELS = {"radial_velocity": 3, "intensity": 4}


class MetricError(ValueError):
    pass


def chamfer(p_g, p_r) -> float:
    """Symmetric mean squared nearest-neighbour distance."""
    a = check_points(p_g, name="p_g")
    b = check_points(p_r, name="p_r")
    d2 = cdist(a, b, "sqeuclidean")
    return float(d2.min(axis=1).mean() + d2.min(axis=0).mean())


def emd(p_g, p_r, cfg: MetricsConfig | None = None) -> float:
    """Mean Euclidean distance under the optimal one-to-one pairing.

    Both sets must have the same size; downsample the larger one with
    farthest point sampling first.
    """
    cfg = cfg or MetricsConfig()
    a = check_points(p_g, name="p_g")
    b = check_points(p_r, name="p_r")
    if len(a) != len(b):
        raise MetricError(
            f"EMD needs equal-size point sets (got {len(a)} and {len(b)}); "
            "downsample the larger set with fps_sample first"
        )
    if len(a) > cfg.emd_exact_limit:
        raise MetricError(f"EMD is exact only up to {cfg.emd_exact_limit} points, got {len(a)}")
    cost = cdist(a, b)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum() / len(a))


def combined_loss(p_g, p_r, cfg: MetricsConfig | None = None) -> float:
    cfg = cfg or MetricsConfig()
    w = cfg.loss_weight
    return w * chamfer(p_g, p_r) + (1 - w) * emd(p_g, p_r, cfg)


def nearest_pairs(a, b) -> np.ndarray:
    """Index into ``b`` of the nearest point for every row of ``a`` (lowest index on ties)."""
    return np.argmin(cdist(np.asarray(a, dtype=float), np.asarray(b, dtype=float), "sqeuclidean"), axis=1)


def average_cumulative_error(generated, reference, channel: str) -> float:
    """Mean over frames of the summed absolute channel error after nearest-neighbour matching."""
    if channel not in CHANNELS:
        raise MetricError(f"channel must be one of {sorted(CHANNELS)}")
    generated, reference = list(generated), list(reference)
    if len(generated) != len(reference):
        raise MetricError(f"frame count mismatch: {len(generated)} vs {len(reference)}")
    if not generated:
        raise MetricError("no frames to compare")
    col = CHANNELS[channel]
    totals = []
    for g, r in zip(generated, reference):
        if len(g) == 0 or len(r) == 0:
            raise MetricError(f"frame {g.frame_index} has no points to compare")
        j = nearest_pairs(g.xyz, r.xyz)
        totals.append(np.abs(g.points[:, col] - r.points[j, col]).sum())
    return float(np.mean(totals))
