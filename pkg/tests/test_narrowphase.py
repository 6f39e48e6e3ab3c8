"""Contact generation: analytic paths, SAT, GJK/EPA, and the sampling oracle."""

import math

import numpy as np
import pytest

from collision_oracle import bounding_radius, oracle_verdict, random_quat, random_shape
from itx.geometry import Pose, quat_from_rpy, vec_add, vec_scale
from itx.model import Box, Capsule, ConvexHull, Sphere
from itx.physics.narrowphase import collide_manifold, collide_pair, pair_distance


def test_sphere_sphere_example():
    c = collide_pair(Sphere(1.0), Pose((0, 0, 0)), Sphere(1.0), Pose((1.5, 0, 0)))
    assert abs(c.depth - 0.5) < 1e-15
    assert c.normal == (1.0, 0.0, 0.0)
    assert c.point == (0.75, 0.0, 0.0)


def test_unit_boxes_separated_with_distance():
    a = Box((0.5, 0.5, 0.5))
    assert collide_pair(a, Pose((0, 0, 0)), a, Pose((2.0, 0, 0))) is None
    assert abs(pair_distance(a, Pose((0, 0, 0)), a, Pose((2.0, 0, 0))) - 1.0) < 1e-9


def test_sphere_box_face_contact():
    c = collide_pair(Sphere(0.5), Pose((0, 0, 1.4)), Box((1, 1, 1)), Pose((0, 0, 0)))
    assert abs(c.depth - 0.1) < 1e-12
    assert np.allclose(c.normal, (0, 0, -1))


def test_contact_symmetry():
    rng = np.random.default_rng(8)
    for _ in range(100):
        sa, sb = random_shape(rng), random_shape(rng)
        ra, rb = bounding_radius(sa), bounding_radius(sb)
        pa = Pose(tuple(rng.uniform(-0.2, 0.2, 3)), random_quat(rng))
        offset = rng.normal(size=3)
        offset /= np.linalg.norm(offset)
        dist = (ra + rb) * rng.uniform(0.4, 1.2)
        pb = Pose(tuple(np.array(pa.position) + offset * dist), random_quat(rng))
        c1 = collide_pair(sa, pa, sb, pb)
        c2 = collide_pair(sb, pb, sa, pa)
        assert (c1 is None) == (c2 is None)
        if c1 is not None:
            assert abs(c1.depth - c2.depth) < 1e-12
            for k in range(3):
                assert abs(c1.normal[k] + c2.normal[k]) < 1e-12


def test_epa_depth_resolves_overlap():
    rng = np.random.default_rng(21)
    resolved = 0
    for _ in range(200):
        sa, sb = random_shape(rng), random_shape(rng)
        ra, rb = bounding_radius(sa), bounding_radius(sb)
        pa = Pose((0.0, 0.0, 0.0), random_quat(rng))
        offset = rng.normal(size=3)
        offset /= np.linalg.norm(offset)
        pb = Pose(tuple(offset * (ra + rb) * rng.uniform(0.05, 0.8)), random_quat(rng))
        c = collide_pair(sa, pa, sb, pb)
        if c is None or c.degenerate:
            continue
        moved = Pose(vec_add(pb.position, vec_scale(c.normal, c.depth)), pb.orientation)
        again = collide_pair(sa, pa, sb, moved)
        assert again is None or again.depth <= 1e-6, (sa, sb, c)
        resolved += 1
    assert resolved > 120  # the sweep actually exercised overlapping pairs


def test_box_box_edge_case_contact():
    # boxes rotated 45 degrees meeting edge-on
    a = Box((0.5, 0.5, 0.5))
    qa = quat_from_rpy(0.0, 0.0, math.pi / 4)
    c = collide_pair(a, Pose((0, 0, 0), qa), a, Pose((1.3, 0, 0), qa))
    assert c is not None
    assert c.depth > 0


def test_box_manifold_face_contact_points():
    floor = Box((2, 2, 0.5))
    crate = Box((0.2, 0.2, 0.2))
    contacts = collide_manifold(crate, Pose((0, 0, 0.195)), floor, Pose((0, 0, -0.5)))
    assert len(contacts) == 4  # full face patch
    for c in contacts:
        assert np.allclose(c.normal, (0, 0, -1))
        assert abs(c.depth - 0.005) < 1e-9


def test_capsule_box_contact():
    c = collide_pair(Capsule(0.2, 0.3), Pose((0, 0, 0.45)), Box((1, 1, 0.1)), Pose((0, 0, -0.05)))
    assert abs(c.depth - 0.1) < 1e-9
    assert np.allclose(c.normal, (0, 0, -1))


def test_verdicts_match_sampling_oracle_smoke():
    rng = np.random.default_rng(33)
    checked = disagreements = 0
    for _ in range(60):
        sa, sb = random_shape(rng), random_shape(rng)
        ra, rb = bounding_radius(sa), bounding_radius(sb)
        pa = Pose(tuple(rng.uniform(-0.1, 0.1, 3)), random_quat(rng))
        offset = rng.normal(size=3)
        offset /= np.linalg.norm(offset)
        d = (ra + rb) * rng.uniform(0.3, 1.3)
        pb = Pose(tuple(np.array(pa.position) + offset * d), random_quat(rng))
        ours = collide_pair(sa, pa, sb, pb)
        oracle_hit, deepest = oracle_verdict(sa, pa, sb, pb, rng, n=20_000)
        checked += 1
        if (ours is not None) != oracle_hit:
            disagreements += 1
            sep = pair_distance(sa, pa, sb, pb)
            near_surface = (
                (ours is not None and ours.depth <= 1e-3)
                or (ours is None and abs(deepest) <= 1e-3)
                or sep <= 1e-3
            )
            assert near_surface, (sa, sb, ours, deepest, sep)
    assert checked == 60
