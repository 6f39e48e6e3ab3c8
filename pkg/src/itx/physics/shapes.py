"""Runtime geometry derived from collider shapes.

Every convex shape reduces to a core vertex set plus a margin radius for the
GJK/EPA path: spheres are a point with margin, capsules a segment with
margin, boxes and hulls their vertices with margin zero. Inertia tensors are
for solid bodies about the part origin (treated as the center of mass).
"""

from __future__ import annotations

import math

import numpy as np

from ..geometry import Pose, Vec3, rotation_matrix
from ..model import Box, Capsule, ColliderShape, ConvexHull, Sphere

Mat3 = tuple[Vec3, Vec3, Vec3]


def core_vertices(shape: ColliderShape) -> tuple[np.ndarray, float]:
    """Core polytope vertices (local frame) and margin radius."""
    if isinstance(shape, Sphere):
        return np.zeros((1, 3), dtype=np.float64), shape.radius
    if isinstance(shape, Capsule):
        h = shape.half_height
        return np.array([[0.0, 0.0, -h], [0.0, 0.0, h]], dtype=np.float64), shape.radius
    if isinstance(shape, Box):
        hx, hy, hz = shape.half_extents
        corners = [
            (sx * hx, sy * hy, sz * hz)
            for sx in (-1.0, 1.0)
            for sy in (-1.0, 1.0)
            for sz in (-1.0, 1.0)
        ]
        return np.array(corners, dtype=np.float64), 0.0
    if isinstance(shape, ConvexHull):
        return np.array(shape.vertices, dtype=np.float64), 0.0
    raise TypeError(f"not a collider shape: {shape!r}")


def aabb(shape: ColliderShape, pose: Pose) -> tuple[Vec3, Vec3]:
    """World-space axis-aligned bounds."""
    px, py, pz = pose.position
    if isinstance(shape, Sphere):
        r = shape.radius
        return (px - r, py - r, pz - r), (px + r, py + r, pz + r)
    if isinstance(shape, Box):
        rows = rotation_matrix(pose.orientation)
        hx, hy, hz = shape.half_extents
        ex = abs(rows[0][0]) * hx + abs(rows[0][1]) * hy + abs(rows[0][2]) * hz
        ey = abs(rows[1][0]) * hx + abs(rows[1][1]) * hy + abs(rows[1][2]) * hz
        ez = abs(rows[2][0]) * hx + abs(rows[2][1]) * hy + abs(rows[2][2]) * hz
        return (px - ex, py - ey, pz - ez), (px + ex, py + ey, pz + ez)
    if isinstance(shape, Capsule):
        a = pose.transform((0.0, 0.0, -shape.half_height))
        b = pose.transform((0.0, 0.0, shape.half_height))
        r = shape.radius
        return (
            (min(a[0], b[0]) - r, min(a[1], b[1]) - r, min(a[2], b[2]) - r),
            (max(a[0], b[0]) + r, max(a[1], b[1]) + r, max(a[2], b[2]) + r),
        )
    if isinstance(shape, ConvexHull):
        lo = [math.inf, math.inf, math.inf]
        hi = [-math.inf, -math.inf, -math.inf]
        for v in shape.vertices:
            w = pose.transform(v)
            for k in range(3):
                lo[k] = min(lo[k], w[k])
                hi[k] = max(hi[k], w[k])
        return (lo[0], lo[1], lo[2]), (hi[0], hi[1], hi[2])
    raise TypeError(f"not a collider shape: {shape!r}")


def _capsule_inertia(mass: float, r: float, h: float) -> Mat3:
    """Solid capsule about its center, axis along z."""
    vc = math.pi * r * r * (2.0 * h)
    vs = (4.0 / 3.0) * math.pi * r ** 3
    vol = vc + vs
    mc = mass * vc / vol
    ms = mass * vs / vol
    # cylinder about center
    iz = 0.5 * mc * r * r
    ix = mc * (r * r / 4.0 + h * h / 3.0)
    # two hemispheres: own-c.o.m. inertia plus offset term
    mh = 0.5 * ms
    d = h + 0.375 * r
    it_h = (83.0 / 320.0) * mh * r * r + mh * d * d
    iz += 2.0 * (0.4 * mh * r * r)  # 2/5 m r^2 each about axis
    ix += 2.0 * it_h
    return ((ix, 0.0, 0.0), (0.0, ix, 0.0), (0.0, 0.0, iz))


def _hull_inertia(vertices: tuple[Vec3, ...], mass: float) -> Mat3:
    """Solid convex polyhedron about the body origin.

    Signed tetrahedra from the origin over the hull's triangulated faces;
    density scaled so the total mass matches.
    """
    from scipy.spatial import ConvexHull as QHull

    pts = np.asarray(vertices, dtype=np.float64)
    hull = QHull(pts)
    volume = 0.0
    # inertia integrals of x^2 etc. (not yet density-scaled)
    ixx = iyy = izz = ixy = ixz = iyz = 0.0
    centroid = pts.mean(axis=0)
    for simplex in hull.simplices:
        a, b, c = pts[simplex[0]], pts[simplex[1]], pts[simplex[2]]
        n = np.cross(b - a, c - a)
        if np.dot(n, a - centroid) < 0.0:
            b, c = c, b
        det = float(np.dot(a, np.cross(b, c)))
        volume += det / 6.0

        # canonical tetra integrals (origin, a, b, c)
        def s2(k: int) -> float:
            return (
                a[k] * a[k] + b[k] * b[k] + c[k] * c[k] + a[k] * b[k] + a[k] * c[k] + b[k] * c[k]
            )

        def sxy(p: int, q: int) -> float:
            return (
                2.0 * (a[p] * a[q] + b[p] * b[q] + c[p] * c[q])
                + a[p] * b[q] + b[p] * a[q]
                + a[p] * c[q] + c[p] * a[q]
                + b[p] * c[q] + c[p] * b[q]
            )

        ixx += det * (s2(1) + s2(2)) / 60.0
        iyy += det * (s2(0) + s2(2)) / 60.0
        izz += det * (s2(0) + s2(1)) / 60.0
        ixy += det * sxy(0, 1) / 120.0
        ixz += det * sxy(0, 2) / 120.0
        iyz += det * sxy(1, 2) / 120.0

    density = mass / volume
    return (
        (density * ixx, -density * ixy, -density * ixz),
        (-density * ixy, density * iyy, -density * iyz),
        (-density * ixz, -density * iyz, density * izz),
    )


def inertia_tensor(shape: ColliderShape, mass: float) -> Mat3:
    """Body-frame inertia tensor of the solid shape about the part origin."""
    if isinstance(shape, Sphere):
        v = 0.4 * mass * shape.radius ** 2
        return ((v, 0.0, 0.0), (0.0, v, 0.0), (0.0, 0.0, v))
    if isinstance(shape, Box):
        hx, hy, hz = shape.half_extents
        f = mass / 3.0
        return (
            (f * (hy * hy + hz * hz), 0.0, 0.0),
            (0.0, f * (hx * hx + hz * hz), 0.0),
            (0.0, 0.0, f * (hx * hx + hy * hy)),
        )
    if isinstance(shape, Capsule):
        return _capsule_inertia(mass, shape.radius, shape.half_height)
    if isinstance(shape, ConvexHull):
        return _hull_inertia(shape.vertices, mass)
    raise TypeError(f"not a collider shape: {shape!r}")


def invert3(m: Mat3) -> Mat3:
    """Closed-form 3x3 inverse (adjugate over determinant)."""
    a, b, c = m[0]
    d, e, f = m[1]
    g, h, i = m[2]
    co_a = e * i - f * h
    co_b = f * g - d * i
    co_c = d * h - e * g
    det = a * co_a + b * co_b + c * co_c
    if det == 0.0:
        raise ValueError("singular inertia tensor")
    inv = 1.0 / det
    return (
        (co_a * inv, (c * h - b * i) * inv, (b * f - c * e) * inv),
        (co_b * inv, (a * i - c * g) * inv, (c * d - a * f) * inv),
        (co_c * inv, (b * g - a * h) * inv, (a * e - b * d) * inv),
    )
