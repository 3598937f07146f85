"""Surface triangulation of reflection points and flat-plate RCS."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay

from ._validation import check_points

DEFAULT_RCS_FLOOR = 1e-6
_AREA_EPS = 1e-15


@dataclass(frozen=True)
class SurfaceTriangle:
    vertex_indices: tuple
    normal: np.ndarray
    area: float


def triangulate(points, image_coords) -> list[SurfaceTriangle]:
    """Delaunay-triangulate the (u, v) coordinates and lift the mesh to 3D.

    Vertices are ordered clockwise in the image so that, for an optical frame
    with y pointing down, normals face the camera. Zero-area triangles are
    dropped.
    """
    xyz = check_points(points)
    uv = check_points(image_coords, name="image_coords", n_dims=2)
    if len(xyz) != len(uv):
        raise ValueError("points and image_coords must have the same length")
    if len(uv) < 3:
        raise ValueError("need at least 3 points to triangulate")
    centered = uv - uv.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[0] == 0 or sv[1] <= 1e-12 * sv[0]:
        raise ValueError("image coordinates are collinear; cannot triangulate")
    simplices = Delaunay(uv).simplices
    tri = []
    for simplex in simplices:
        i, j, k = (int(s) for s in simplex)
        signed = (uv[j, 0] - uv[i, 0]) * (uv[k, 1] - uv[i, 1]) - (uv[k, 0] - uv[i, 0]) * (uv[j, 1] - uv[i, 1])
        if signed > 0:
            j, k = k, j
        cross = np.cross(xyz[j] - xyz[i], xyz[k] - xyz[i])
        norm = np.linalg.norm(cross)
        area = 0.5 * norm
        if area <= _AREA_EPS:
            continue
        tri.append(SurfaceTriangle((i, j, k), cross / norm, float(area)))
    return tri


def triangle_rcs(triangles, points, radar_position, wavelength: float) -> np.ndarray:
    """Physical-optics flat-plate RCS ``4 pi A^2 cos^2(theta) / lambda^2`` per triangle."""
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    if not triangles:
        return np.zeros(0)
    xyz = np.asarray(points, dtype=float)
    idx = np.array([t.vertex_indices for t in triangles])
    normals = np.stack([t.normal for t in triangles])
    areas = np.array([t.area for t in triangles])
    centroids = xyz[idx].mean(axis=1)
    los = np.asarray(radar_position, dtype=float) - centroids
    los /= np.linalg.norm(los, axis=1, keepdims=True)
    cos_theta = np.clip(np.einsum("ij,ij->i", normals, los), 0.0, 1.0)
    return 4 * np.pi * areas**2 * cos_theta**2 / wavelength**2


def rcs_per_point(triangles, points, radar_position, wavelength: float, rcs_floor: float = DEFAULT_RCS_FLOOR) -> np.ndarray:
    """Area-weighted mean of incident triangle RCS, floored at ``rcs_floor``."""
    n = len(points)
    sigma = triangle_rcs(triangles, points, radar_position, wavelength)
    num = np.zeros(n)
    den = np.zeros(n)
    for t, s in zip(triangles, sigma):
        for v in t.vertex_indices:
            num[v] += t.area * s
            den[v] += t.area
    out = np.full(n, float(rcs_floor))
    has = den > 0
    out[has] = np.maximum(num[has] / den[has], rcs_floor)
    return out
