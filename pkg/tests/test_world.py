"""World stepping: integration, contacts, welds, grabs, regions, determinism."""

import math

import numpy as np
import pytest

from itx.geometry import Pose, quat_from_rpy
from itx.model import Box, Region, Sphere
from itx.physics.world import (
    GrabError,
    RigidBody,
    SimulationDiverged,
    WeldError,
    World,
)


def make_floor(w, size=(5.0, 5.0, 0.5)):
    w.add_body(RigidBody("floor", Box(size), Pose((0, 0, -size[2])), mass=0.0))


def test_empty_world_tick_only_counter():
    w = World()
    report = w.step()
    assert w.tick == 1 and report.tick == 1
    assert report.contacts == [] and report.region_entries == []


def test_free_fall_matches_discrete_closed_form():
    w = World()
    w.add_body(RigidBody("ball", Sphere(0.1), Pose((0, 0, 10.0)), mass=1.0))
    for _ in range(120):
        w.step()
    z = w.bodies["ball"].pose.position[2]
    n = 120
    expected = 10.0 - 9.81 * w.dt * w.dt * (n * (n + 1) / 2)
    assert abs(z - expected) < 1e-6


def test_resting_contact_bounds():
    w = World()
    make_floor(w)
    w.add_body(RigidBody("ball", Sphere(0.1), Pose((0, 0, 0.1)), mass=1.0))
    for _ in range(240):
        w.step()
    b = w.bodies["ball"]
    assert 0.1 - b.pose.position[2] <= 2e-3
    assert math.sqrt(sum(v * v for v in b.velocity)) <= 1e-2


def test_friction_stop_time():
    w = World()
    make_floor(w, (50.0, 5.0, 0.5))
    body = RigidBody("box", Box((0.2, 0.2, 0.2)), Pose((0, 0, 0.2)), mass=2.0)
    body.velocity = (1.0, 0.0, 0.0)
    w.add_body(body)
    t_stop = None
    for k in range(1, 1200):
        w.step()
        if abs(w.bodies["box"].velocity[0]) < 1e-4:
            t_stop = k * w.dt
            break
    expected = 1.0 / (0.5 * 9.81)
    assert t_stop is not None
    assert abs(t_stop - expected) / expected < 0.10


def test_head_on_spheres_momentum():
    w = World(gravity=(0.0, 0.0, 0.0), bias_enabled=False)
    a = RigidBody("a", Sphere(0.5), Pose((-0.4, 0, 0)), mass=1.0)
    a.velocity = (1.0, 0.0, 0.0)
    b = RigidBody("b", Sphere(0.5), Pose((0.4, 0, 0)), mass=1.0)
    b.velocity = (-1.0, 0.0, 0.0)
    w.add_body(a)
    w.add_body(b)
    for _ in range(10):
        w.step()
    va, vb = w.bodies["a"].velocity, w.bodies["b"].velocity
    assert abs(va[0] + vb[0]) < 1e-9  # momentum
    assert abs(va[0]) < 1e-9 and abs(vb[0]) < 1e-9  # inelastic stop


def test_momentum_conserved_random_dynamic_pairs():
    rng = np.random.default_rng(4)
    for _ in range(20):
        w = World(gravity=(0.0, 0.0, 0.0), bias_enabled=False)
        a = RigidBody("a", Sphere(0.3), Pose((-0.25, 0, 0)), mass=float(rng.uniform(0.5, 3)))
        b = RigidBody("b", Sphere(0.3), Pose((0.25, 0, 0)), mass=float(rng.uniform(0.5, 3)))
        a.velocity = tuple(rng.uniform(-1, 1, 3))
        b.velocity = tuple(rng.uniform(-1, 1, 3))
        p0 = tuple(a.mass * av + b.mass * bv for av, bv in zip(a.velocity, b.velocity))
        w.add_body(a)
        w.add_body(b)
        w.step()
        p1 = tuple(
            w.bodies["a"].mass * av + w.bodies["b"].mass * bv
            for av, bv in zip(w.bodies["a"].velocity, w.bodies["b"].velocity)
        )
        for x, y in zip(p0, p1):
            assert abs(x - y) < 1e-9


class TestWelds:
    def test_welded_child_follows_parent(self):
        w = World(gravity=(0.0, 0.0, 0.0))
        parent = RigidBody("parent", Box((0.2, 0.2, 0.2)), Pose((0, 0, 1.0)), mass=0.0)
        child = RigidBody("child", Sphere(0.05), Pose((0.3, 0, 1.0)), mass=0.5)
        w.add_body(parent)
        w.add_body(child)
        rel = parent.pose.inverse().compose(child.pose)
        w.set_weld("child", "parent", rel)
        for k in range(60):
            parent.pose = Pose((0.01 * (k + 1), 0.0, 1.0))
            w.step()
            got = parent.pose.inverse().compose(w.bodies["child"].pose)
            for a, b in zip(got.position, rel.position):
                assert abs(a - b) < 1e-12

    def test_unweld_then_fall(self):
        w = World()
        parent = RigidBody("parent", Box((0.2, 0.2, 0.2)), Pose((0, 0, 5.0)), mass=0.0)
        child = RigidBody("child", Sphere(0.05), Pose((0.3, 0, 5.0)), mass=0.5)
        w.add_body(parent)
        w.add_body(child)
        w.set_weld("child", "parent", parent.pose.inverse().compose(child.pose))
        for _ in range(30):
            w.step()
        z0 = w.bodies["child"].pose.position[2]
        w.remove_weld("child")
        n = 120
        for _ in range(n):
            w.step()
        drop = z0 - w.bodies["child"].pose.position[2]
        expected = 9.81 * w.dt * w.dt * (n * (n + 1) / 2)
        assert abs(drop - expected) < 1e-6

    def test_weld_cycle_rejected(self):
        w = World()
        w.add_body(RigidBody("a", Sphere(0.1), Pose((0, 0, 0)), mass=1.0))
        w.add_body(RigidBody("b", Sphere(0.1), Pose((1, 0, 0)), mass=1.0))
        w.set_weld("a", "b", Pose((-1.0, 0.0, 0.0)))
        with pytest.raises(WeldError):
            w.set_weld("b", "a", Pose((1.0, 0.0, 0.0)))

    def test_unweld_inherits_point_velocity(self):
        w = World(gravity=(0.0, 0.0, 0.0))
        parent = RigidBody("parent", Box((0.2, 0.2, 0.2)), Pose((0, 0, 1.0)), mass=2.0)
        parent.velocity = (0.5, 0.0, 0.0)
        parent.omega = (0.0, 0.0, 1.0)
        child = RigidBody("child", Sphere(0.05), Pose((0.0, 0.4, 1.0)), mass=0.5)
        w.add_body(parent)
        w.add_body(child)
        w.set_weld("child", "parent", parent.pose.inverse().compose(child.pose))
        w.remove_weld("child")
        v = w.bodies["child"].velocity
        # v = v_p + omega x r, r = (0, 0.4, 0) -> omega x r = (-0.4, 0, 0)
        assert abs(v[0] - 0.1) < 1e-12
        assert abs(v[1]) < 1e-12
        assert w.bodies["child"].omega == (0.0, 0.0, 1.0)

    def test_welded_subtree_rigid_across_ticks(self):
        w = World()
        root = RigidBody("root", Box((0.2, 0.2, 0.2)), Pose((0, 0, 2.0)), mass=0.0)
        mid = RigidBody("mid", Sphere(0.05), Pose((0.3, 0, 2.0)), mass=0.5)
        leaf = RigidBody("leaf", Sphere(0.05), Pose((0.3, 0.3, 2.0)), mass=0.2)
        for b in (root, mid, leaf):
            w.add_body(b)
        w.set_weld("mid", "root", root.pose.inverse().compose(mid.pose))
        w.set_weld("leaf", "mid", mid.pose.inverse().compose(leaf.pose))
        rel0 = w.bodies["mid"].pose.inverse().compose(w.bodies["leaf"].pose)
        for k in range(60):
            root.pose = Pose((0.0, 0.01 * (k + 1), 2.0), quat_from_rpy(0, 0, 0.01 * k))
            w.step()
            rel = w.bodies["mid"].pose.inverse().compose(w.bodies["leaf"].pose)
            for a, b in zip(rel.position, rel0.position):
                assert abs(a - b) < 1e-12


class TestGrabs:
    def test_attach_moves_exactly_with_hand(self):
        w = World()
        w.add_body(RigidBody("p", Sphere(0.1), Pose((1.0, 2.0, 3.0)), mass=1.0, grabbable=True))
        hand = Pose((1.0, 2.0, 3.0))
        w.attach_grab("p", hand)
        moved = Pose((2.0, 2.0, 3.0))
        w.step(moved)
        assert w.bodies["p"].pose.position == (2.0, 2.0, 3.0)

    def test_detach_velocity_from_finite_difference(self):
        w = World(gravity=(0.0, 0.0, 0.0))
        w.add_body(RigidBody("p", Sphere(0.1), Pose((0, 0, 0)), mass=1.0, grabbable=True))
        w.attach_grab("p", Pose((0, 0, 0)))
        speed = 1.0
        for k in range(1, 11):
            w.step(Pose((speed * k * w.dt, 0.0, 0.0)))
        w.detach_grab("p")
        v = w.bodies["p"].velocity
        assert abs(v[0] - speed) < 1e-6

    def test_grab_non_grabbable_rejected(self):
        w = World()
        w.add_body(RigidBody("chassis", Box((1, 1, 1)), Pose((0, 0, 0)), mass=0.0))
        with pytest.raises(GrabError):
            w.attach_grab("chassis", Pose())

    def test_grab_welded_auto_unwelds(self):
        w = World()
        w.add_body(RigidBody("base", Box((0.2, 0.2, 0.2)), Pose((0, 0, 1)), mass=0.0))
        w.add_body(RigidBody("p", Sphere(0.05), Pose((0.3, 0, 1)), mass=0.5, grabbable=True))
        w.set_weld("p", "base", w.bodies["base"].pose.inverse().compose(w.bodies["p"].pose))
        assert w.attach_grab("p", w.bodies["p"].pose) is True
        assert w.bodies["p"].welded_to is None

    def test_grabbed_passes_through_but_reports_contact(self):
        w = World()
        make_floor(w)
        w.add_body(RigidBody("p", Box((0.1, 0.1, 0.1)), Pose((0, 0, 1.0)), mass=1.0, grabbable=True))
        w.attach_grab("p", Pose((0, 0, 1.0)))
        report = w.step(Pose((0, 0, -0.2)))  # push into the floor
        assert w.bodies["p"].pose.position[2] == -0.2  # no collision response
        pairs = {(c.body_a, c.body_b) for c in report.contacts}
        assert ("floor", "p") in pairs


def test_region_entry_once_per_crossing():
    w = World(gravity=(0.0, 0.0, 0.0))
    w.add_body(RigidBody("probe", Sphere(0.02), Pose((1.0, 0, 0)), mass=1.0, grabbable=True))
    w.add_region(Region("zone", (0.0, 0.0, 0.0), 0.3))
    w.attach_grab("probe", Pose((1.0, 0, 0)))
    entries = []
    for k in range(60):
        x = 1.0 - k * 0.05
        report = w.step(Pose((x, 0, 0)))
        entries.extend(report.region_entries)
    assert entries == [("probe", "zone")]


def test_divergence_detection():
    w = World()
    body = RigidBody("p", Sphere(0.1), Pose((0, 0, 0)), mass=1.0)
    w.add_body(body)
    body.velocity = (math.inf, 0.0, 0.0)
    with pytest.raises(SimulationDiverged) as err:
        w.step()
    assert "p" in str(err.value)


def test_determinism_bit_identical():
    def build():
        w = World()
        make_floor(w)
        for i in range(6):
            w.add_body(
                RigidBody(
                    f"b{i}",
                    Box((0.1, 0.1, 0.1)) if i % 2 else Sphere(0.08),
                    Pose((0.05 * i, 0.02 * i, 0.5 + 0.25 * i)),
                    mass=0.5 + 0.1 * i,
                )
            )
        return w

    w1, w2 = build(), build()
    for _ in range(240):
        w1.step()
        w2.step()
    assert w1.serialize() == w2.serialize()


def test_serialization_layout():
    w = World()
    w.add_body(RigidBody("a", Sphere(0.1), Pose((1.0, 2.0, 3.0)), mass=1.0))
    blob = w.serialize()
    assert blob.startswith(b"a\x00")
    import struct

    vals = struct.unpack_from("<13d", blob, 2)
    assert vals[0:3] == (1.0, 2.0, 3.0)  # position
    assert vals[3:7] == (1.0, 0.0, 0.0, 0.0)  # quaternion w,x,y,z
    flags = blob[2 + 13 * 8]
    assert flags & 1  # dynamic
    assert flags & 2  # active
