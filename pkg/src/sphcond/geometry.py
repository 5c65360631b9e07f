"""Spherical Voronoi cells and the D-measure of point uniformity."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .errors import DegenerateGeometryError
from .points import PointSet


@dataclass(frozen=True)
class VoronoiCell:
    site_index: int
    area: float
    density: float


@dataclass(frozen=True)
class DMeasureReport:
    nu: float
    d_measure: float
    mean_density: float
    q: int

    def to_dict(self):
        return {"nu": self.nu, "d": self.d_measure, "q": self.q}


def _triangle_area(a, b, c):
    """Signed solid angle of spherical triangles (rows of unit vectors)."""
    num = np.einsum("ij,ij->i", a, np.cross(b, c))
    den = 1.0 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) + np.einsum("ij,ij->i", c, a)
    return 2.0 * np.arctan2(num, den)


def voronoi_areas(points: PointSet) -> np.ndarray:
    """Cell areas (steradians) of the spherical Voronoi diagram.

    Cell vertices are the outward facet normals of the convex hull (the
    circumcentres of the spherical Delaunay triangles); each cell is split
    into a fan of triangles around its site.
    """
    xyz = points.xyz()
    Q = len(xyz)
    if Q < 4:
        raise DegenerateGeometryError("spherical Voronoi needs at least 4 points")
    pairs = cKDTree(xyz).query_pairs(1e-10)
    if pairs:
        i, j = sorted(pairs)[0]
        raise DegenerateGeometryError(f"duplicate points {i} and {j}")
    try:
        hull = ConvexHull(xyz)
    except QhullError as exc:
        raise DegenerateGeometryError(f"points are degenerate (coplanar or on one circle): {exc}") from None
    if len(hull.vertices) != Q:
        raise DegenerateGeometryError("some points are not extreme points of their hull")
    centres = hull.equations[:, :3]
    centres = centres / np.linalg.norm(centres, axis=1, keepdims=True)

    incident = [[] for _ in range(Q)]
    for f, simplex in enumerate(hull.simplices):
        for v in simplex:
            incident[v].append(f)

    areas = np.empty(Q)
    for i in range(Q):
        site = xyz[i]
        verts = centres[incident[i]]
        # tangent-plane frame at the site for angular sorting
        ref = np.array([1.0, 0.0, 0.0]) if abs(site[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        e1 = np.cross(site, ref)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(site, e1)
        order = np.argsort(np.arctan2(verts @ e2, verts @ e1))
        verts = verts[order]
        nxt = np.roll(verts, -1, axis=0)
        a = np.broadcast_to(site, verts.shape)
        areas[i] = np.abs(_triangle_area(a, verts, nxt).sum())
    return areas


def spherical_voronoi(points: PointSet) -> list[VoronoiCell]:
    areas = voronoi_areas(points)
    return [VoronoiCell(i, float(a), float(1.0 / a)) for i, a in enumerate(areas)]


def d_measure(points: PointSet) -> DMeasureReport:
    """Area-weighted dispersion of Voronoi densities around ``Q / 4pi``."""
    a = voronoi_areas(points)
    Q = a.size
    d = 1.0 / a
    d_hat = Q / (4 * math.pi)
    nu = float(np.sum(a / (4 * math.pi) * (d - d_hat) ** 2))
    return DMeasureReport(nu, nu * math.sqrt(2 * math.pi) / d_hat, d_hat, Q)
