"""Inertia tensors, AABBs, and core-vertex decompositions."""

import math

import numpy as np

from itx.geometry import Pose, quat_from_rpy
from itx.model import Box, Capsule, ConvexHull, Sphere
from itx.physics.shapes import aabb, core_vertices, inertia_tensor, invert3


def test_sphere_inertia():
    ine = inertia_tensor(Sphere(0.5), 2.0)
    assert abs(ine[0][0] - 0.4 * 2.0 * 0.25) < 1e-12
    assert ine[0][0] == ine[1][1] == ine[2][2]


def test_box_inertia_matches_formula():
    ine = inertia_tensor(Box((0.1, 0.2, 0.3)), 3.0)
    assert abs(ine[0][0] - 3.0 / 3.0 * (0.04 + 0.09)) < 1e-12
    assert abs(ine[2][2] - 3.0 / 3.0 * (0.01 + 0.04)) < 1e-12


def test_hull_of_box_corners_matches_box():
    # a solid box and the hull of its corners are the same solid
    h = (0.1, 0.15, 0.2)
    corners = tuple(
        (sx * h[0], sy * h[1], sz * h[2])
        for sx in (-1, 1)
        for sy in (-1, 1)
        for sz in (-1, 1)
    )
    ib = inertia_tensor(Box(h), 2.5)
    ih = inertia_tensor(ConvexHull(corners), 2.5)
    for i in range(3):
        for j in range(3):
            assert abs(ib[i][j] - ih[i][j]) < 1e-9


def _monte_carlo_inertia(sampler, mass, n, rng):
    pts = sampler(n, rng)
    m = mass / n
    out = np.zeros((3, 3))
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    out[0, 0] = m * np.sum(y * y + z * z)
    out[1, 1] = m * np.sum(x * x + z * z)
    out[2, 2] = m * np.sum(x * x + y * y)
    out[0, 1] = out[1, 0] = -m * np.sum(x * y)
    out[0, 2] = out[2, 0] = -m * np.sum(x * z)
    out[1, 2] = out[2, 1] = -m * np.sum(y * z)
    return out


def test_capsule_inertia_vs_monte_carlo():
    r, hh, mass = 0.1, 0.2, 1.7
    rng = np.random.default_rng(11)

    def sampler(n, rng):
        # rejection sample inside the capsule's bounding box
        pts = []
        while len(pts) < n:
            cand = rng.uniform([-r, -r, -hh - r], [r, r, hh + r], (n, 3))
            z = np.clip(cand[:, 2], -hh, hh)
            d = cand.copy()
            d[:, 2] -= z
            keep = (d * d).sum(axis=1) <= r * r
            pts.extend(cand[keep])
        return np.array(pts[:n])

    mc = _monte_carlo_inertia(sampler, mass, 200_000, rng)
    ine = np.array(inertia_tensor(Capsule(r, hh), mass))
    assert np.allclose(np.diag(ine), np.diag(mc), rtol=0.02)


def test_hull_inertia_vs_monte_carlo():
    rng = np.random.default_rng(5)
    pts = rng.uniform(-0.2, 0.2, (10, 3))
    from scipy.spatial import ConvexHull as QHull, Delaunay

    hull = QHull(pts)
    verts = tuple(map(tuple, pts[hull.vertices]))
    tri = Delaunay(pts)

    def sampler(n, rng):
        out = []
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        while len(out) < n:
            cand = rng.uniform(lo, hi, (n, 3))
            keep = tri.find_simplex(cand) >= 0
            out.extend(cand[keep])
        return np.array(out[:n])

    mc = _monte_carlo_inertia(sampler, 3.0, 200_000, rng)
    ine = np.array(inertia_tensor(ConvexHull(verts), 3.0))
    assert np.allclose(ine, mc, rtol=0.05, atol=1e-4)


def test_invert3_roundtrip():
    m = ((2.0, 0.3, 0.1), (0.3, 1.5, -0.2), (0.1, -0.2, 0.8))
    inv = invert3(m)
    prod = np.array(m) @ np.array(inv)
    assert np.allclose(prod, np.eye(3), atol=1e-12)


def test_aabb_contains_support_samples():
    rng = np.random.default_rng(9)
    shapes = [
        Sphere(0.3),
        Box((0.1, 0.2, 0.3)),
        Capsule(0.1, 0.25),
        ConvexHull(tuple(map(tuple, rng.uniform(-0.2, 0.2, (8, 3))))),
    ]
    for shape in shapes:
        pose = Pose(tuple(rng.uniform(-1, 1, 3)), quat_from_rpy(*rng.uniform(-2, 2, 3)))
        lo, hi = aabb(shape, pose)
        core, margin = core_vertices(shape)
        for _ in range(200):
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            local_dir = np.array(pose.inverse().rotate(tuple(d)))
            idx = np.argmax(core @ local_dir)
            world = np.array(pose.transform(tuple(core[idx]))) + d * margin
            for k in range(3):
                assert lo[k] - 1e-9 <= world[k] <= hi[k] + 1e-9


def test_core_vertices_margins():
    core, margin = core_vertices(Sphere(0.2))
    assert core.shape == (1, 3) and margin == 0.2
    core, margin = core_vertices(Capsule(0.1, 0.3))
    assert core.shape == (2, 3) and margin == 0.1
    assert core[0, 2] == -0.3 and core[1, 2] == 0.3
    core, margin = core_vertices(Box((0.1, 0.1, 0.1)))
    assert core.shape == (8, 3) and margin == 0.0
