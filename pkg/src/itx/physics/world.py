"""Rigid-body world advanced at a fixed timestep.

Tick order: drive grabbed bodies from the hand pose, integrate dynamics,
broadphase + narrowphase, solve contacts, enforce welds (parents before
children), evaluate region entries, then step cables. Everything iterates in
sorted-id or declaration order, so two worlds fed the same inputs stay
bit-identical.

State serialization layout (consumed by replay hashing), little-endian f64:
for each body in sorted part-id order: utf-8 id, NUL, pose as 7 doubles
(px,py,pz,qw,qx,qy,qz), velocity 3 doubles, angular velocity 3 doubles, one
flags byte (bit0 dynamic-now, bit1 active, bit2 welded, bit3 grabbed, bit4
zero-mass); then for each cable in sorted id order: utf-8 id, NUL, node
count as u32, node positions 3 doubles each.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .. import cable as cable_mod
from .._kernels import integrate_bodies, solve_contacts
from ..geometry import (
    IDENTITY_POSE,
    Pose,
    Vec3,
    quat_conj,
    quat_mul,
    rotation_matrix,
    vec_add,
    vec_cross,
    vec_dist,
    vec_scale,
    vec_sub,
)
from ..model import PartDef, Region, Scenario
from .broadphase import broadphase_pairs
from .narrowphase import collide_manifold
from .shapes import aabb, core_vertices, inertia_tensor, invert3

DEFAULT_DT = 1.0 / 120.0
DEFAULT_GRAVITY: Vec3 = (0.0, 0.0, -9.81)
DEFAULT_ITERATIONS = 8
DEFAULT_BETA = 0.2
DEFAULT_SLOP = 1e-3


class WeldError(ValueError):
    pass


class GrabError(ValueError):
    pass


class SimulationDiverged(RuntimeError):
    def __init__(self, part_id: str):
        super().__init__(f"simulation diverged: non-finite state on body '{part_id}'")
        self.part_id = part_id


@dataclass(frozen=True)
class Contact:
    """Resolved contact between two bodies; ids ordered, normal a->b."""

    body_a: str
    body_b: str
    point: Vec3
    normal: Vec3
    depth: float
    friction: float
    degenerate: bool = False


@dataclass
class TickReport:
    tick: int
    contacts: list[Contact] = field(default_factory=list)
    region_entries: list[tuple[str, str]] = field(default_factory=list)  # (part, region)
    auto_unwelds: list[str] = field(default_factory=list)


@dataclass
class RigidBody:
    part_id: str
    shape: object
    pose: Pose
    mass: float
    material: str = "default"
    grabbable: bool = False
    velocity: Vec3 = (0.0, 0.0, 0.0)
    omega: Vec3 = (0.0, 0.0, 0.0)
    active: bool = True
    welded_to: str | None = None
    weld_rel: Pose = IDENTITY_POSE
    grabbed: bool = False
    grab_offset: Pose = IDENTITY_POSE
    prev_pose: Pose = IDENTITY_POSE

    def __post_init__(self):
        self.core, self.margin = core_vertices(self.shape)
        if self.mass > 0.0:
            self.inv_mass = 1.0 / self.mass
            self.inv_inertia_body = invert3(inertia_tensor(self.shape, self.mass))
        else:
            self.inv_mass = 0.0
            self.inv_inertia_body = ((0.0,) * 3,) * 3
        self.prev_pose = self.pose

    @property
    def kinematic(self) -> bool:
        return self.mass == 0.0

    @property
    def dynamic_now(self) -> bool:
        """Integrated and impulse-responsive this tick."""
        return (
            self.mass > 0.0
            and self.active
            and not self.grabbed
            and self.welded_to is None
        )

    def inv_inertia_world(self) -> tuple:
        if not self.dynamic_now:
            return ((0.0,) * 3,) * 3
        r = rotation_matrix(self.pose.orientation)
        ib = self.inv_inertia_body
        # R * I^-1 * R^T
        tmp = [[0.0] * 3 for _ in range(3)]
        for i in range(3):
            for j in range(3):
                tmp[i][j] = r[i][0] * ib[0][j] + r[i][1] * ib[1][j] + r[i][2] * ib[2][j]
        out = [[0.0] * 3 for _ in range(3)]
        for i in range(3):
            for j in range(3):
                out[i][j] = tmp[i][0] * r[j][0] + tmp[i][1] * r[j][1] + tmp[i][2] * r[j][2]
        return tuple(tuple(row) for row in out)


@dataclass
class WorldRegion:
    id: str
    center: Vec3
    radius: float
    parent: str | None = None
    active: bool = True


class World:
    def __init__(
        self,
        dt: float = DEFAULT_DT,
        gravity: Vec3 = DEFAULT_GRAVITY,
        iterations: int = DEFAULT_ITERATIONS,
        beta: float = DEFAULT_BETA,
        slop: float = DEFAULT_SLOP,
        bias_enabled: bool = True,
    ):
        self.dt = dt
        self.gravity = gravity
        self.iterations = iterations
        self.beta = beta
        self.slop = slop
        self.bias_enabled = bias_enabled
        self.tick = 0
        self.bodies: dict[str, RigidBody] = {}
        self.cables: dict[str, cable_mod.Cable] = {}
        self.regions: dict[str, WorldRegion] = {}
        self.materials: dict[tuple[str, str], float] = {}
        self.default_friction = 0.5
        self._prev_inside: set[tuple[str, str]] = set()

    # -- construction ----------------------------------------------------------

    def add_body(self, body: RigidBody) -> None:
        if body.part_id in self.bodies:
            raise ValueError(f"duplicate body id '{body.part_id}'")
        self.bodies[body.part_id] = body

    def add_part(self, part: PartDef) -> RigidBody:
        body = RigidBody(
            part_id=part.id,
            shape=part.shape,
            pose=part.initial_pose.to_pose(),
            mass=part.mass,
            material=part.material,
            grabbable=part.grabbable,
        )
        self.add_body(body)
        return body

    def add_region(self, region: Region) -> None:
        self.regions[region.id] = WorldRegion(region.id, region.center, region.radius, region.parent)

    def add_cable(self, cable: cable_mod.Cable) -> None:
        if cable.id in self.cables:
            raise ValueError(f"duplicate cable id '{cable.id}'")
        self.cables[cable.id] = cable

    def friction(self, mat_a: str, mat_b: str) -> float:
        key = (mat_a, mat_b) if mat_a <= mat_b else (mat_b, mat_a)
        return self.materials.get(key, self.default_friction)

    # -- welds ------------------------------------------------------------------

    def set_weld(self, child: str, parent: str, relative: Pose) -> None:
        cb = self.bodies[child]
        pb = self.bodies[parent]
        if cb.grabbed:
            raise WeldError(f"cannot weld grabbed part '{child}'")
        if cb.welded_to is not None:
            raise WeldError(f"part '{child}' is already welded")
        # acyclicity: walk up from parent
        cur: str | None = parent
        while cur is not None:
            if cur == child:
                raise WeldError(f"weld {child} -> {parent} would create a cycle")
            cur = self.bodies[cur].welded_to
        cb.welded_to = parent
        cb.weld_rel = relative
        cb.velocity = (0.0, 0.0, 0.0)
        cb.omega = (0.0, 0.0, 0.0)
        cb.pose = pb.pose.compose(relative)

    def remove_weld(self, child: str) -> None:
        cb = self.bodies[child]
        if cb.welded_to is None:
            raise WeldError(f"part '{child}' is not welded")
        pb = self.bodies[cb.welded_to]
        cb.welded_to = None
        # inherit the parent's velocity at the child's location
        r = vec_sub(cb.pose.position, pb.pose.position)
        cb.velocity = vec_add(pb.velocity, vec_cross(pb.omega, r))
        cb.omega = pb.omega

    def weld_children(self, parent: str) -> list[str]:
        return [bid for bid in sorted(self.bodies) if self.bodies[bid].welded_to == parent]

    # -- grabs ------------------------------------------------------------------

    def attach_grab(self, part: str, hand_pose: Pose) -> bool:
        """Returns True when the part had to be auto-unwelded first."""
        body = self.bodies[part]
        if not body.grabbable:
            raise GrabError(f"part '{part}' is not grabbable")
        if body.grabbed:
            raise GrabError(f"part '{part}' is already grabbed")
        auto_unwelded = False
        if body.welded_to is not None:
            self.remove_weld(part)
            auto_unwelded = True
        body.grabbed = True
        body.grab_offset = hand_pose.inverse().compose(body.pose)
        body.prev_pose = body.pose
        body.velocity = (0.0, 0.0, 0.0)
        body.omega = (0.0, 0.0, 0.0)
        return auto_unwelded

    def detach_grab(self, part: str) -> None:
        body = self.bodies[part]
        if not body.grabbed:
            raise GrabError(f"part '{part}' is not grabbed")
        body.grabbed = False
        inv_dt = 1.0 / self.dt
        body.velocity = vec_scale(vec_sub(body.pose.position, body.prev_pose.position), inv_dt)
        dq = quat_mul(body.pose.orientation, quat_conj(body.prev_pose.orientation))
        if dq[0] < 0.0:
            dq = (-dq[0], -dq[1], -dq[2], -dq[3])
        s = math.sqrt(dq[1] * dq[1] + dq[2] * dq[2] + dq[3] * dq[3])
        if s > 1e-12:
            angle = 2.0 * math.atan2(s, dq[0])
            body.omega = (
                dq[1] / s * angle * inv_dt,
                dq[2] / s * angle * inv_dt,
                dq[3] / s * angle * inv_dt,
            )
        else:
            body.omega = (0.0, 0.0, 0.0)

    # -- queries ----------------------------------------------------------------

    def region_world_center(self, region: WorldRegion) -> Vec3:
        if region.parent is not None:
            return self.bodies[region.parent].pose.transform(region.center)
        return region.center

    def set_active(self, entity: str, active: bool) -> None:
        if entity in self.bodies:
            self.bodies[entity].active = active
        elif entity in self.regions:
            self.regions[entity].active = active
        else:
            raise KeyError(f"unknown entity '{entity}'")

    # -- tick -------------------------------------------------------------------

    def step(self, hand_pose: Pose | None = None) -> TickReport:
        report = TickReport(tick=self.tick + 1)
        ids = sorted(self.bodies)

        # (1) drive grabbed bodies kinematically
        if hand_pose is not None:
            for bid in ids:
                body = self.bodies[bid]
                if body.grabbed:
                    body.prev_pose = body.pose
                    body.pose = hand_pose.compose(body.grab_offset)

        # (2) integrate dynamics
        n = len(ids)
        if n:
            pos = np.empty((n, 3), dtype=np.float64)
            quat = np.empty((n, 4), dtype=np.float64)
            vel = np.empty((n, 3), dtype=np.float64)
            omg = np.empty((n, 3), dtype=np.float64)
            dyn = np.zeros(n, dtype=np.uint8)
            for i, bid in enumerate(ids):
                b = self.bodies[bid]
                pos[i] = b.pose.position
                quat[i] = b.pose.orientation
                vel[i] = b.velocity
                omg[i] = b.omega
                dyn[i] = 1 if b.dynamic_now else 0
            integrate_bodies(pos, quat, vel, omg, dyn, np.asarray(self.gravity), self.dt)
            for i, bid in enumerate(ids):
                if dyn[i]:
                    b = self.bodies[bid]
                    b.pose = Pose(
                        (float(pos[i, 0]), float(pos[i, 1]), float(pos[i, 2])),
                        (float(quat[i, 0]), float(quat[i, 1]), float(quat[i, 2]), float(quat[i, 3])),
                    )
                    b.velocity = (float(vel[i, 0]), float(vel[i, 1]), float(vel[i, 2]))
                    b.omega = (float(omg[i, 0]), float(omg[i, 1]), float(omg[i, 2]))

        # (3) collision detection
        boxes = {}
        for bid in ids:
            b = self.bodies[bid]
            if b.active:
                boxes[bid] = aabb(b.shape, b.pose)
        contacts: list[Contact] = []
        for (ia, ib) in broadphase_pairs(boxes):
            ba = self.bodies[ia]
            bb = self.bodies[ib]
            for geom in collide_manifold(ba.shape, ba.pose, bb.shape, bb.pose):
                contacts.append(
                    Contact(
                        ia,
                        ib,
                        geom.point,
                        geom.normal,
                        geom.depth,
                        self.friction(ba.material, bb.material),
                        geom.degenerate,
                    )
                )
        report.contacts = contacts

        # (4) solve contacts (skip pairs with no responsive body)
        solvable = [
            c
            for c in contacts
            if self.bodies[c.body_a].dynamic_now or self.bodies[c.body_b].dynamic_now
        ]
        if solvable:
            index = {bid: i for i, bid in enumerate(ids)}
            m = len(solvable)
            inv_mass = np.zeros(n, dtype=np.float64)
            inv_inertia = np.zeros((n, 3, 3), dtype=np.float64)
            pos_arr = np.zeros((n, 3), dtype=np.float64)
            vel_arr = np.zeros((n, 3), dtype=np.float64)
            omg_arr = np.zeros((n, 3), dtype=np.float64)
            for i, bid in enumerate(ids):
                b = self.bodies[bid]
                inv_mass[i] = b.inv_mass if b.dynamic_now else 0.0
                inv_inertia[i] = b.inv_inertia_world()
                pos_arr[i] = b.pose.position
                vel_arr[i] = b.velocity
                omg_arr[i] = b.omega
            c_ia = np.empty(m, dtype=np.int32)
            c_ib = np.empty(m, dtype=np.int32)
            c_point = np.empty((m, 3), dtype=np.float64)
            c_normal = np.empty((m, 3), dtype=np.float64)
            c_depth = np.empty(m, dtype=np.float64)
            c_mu = np.empty(m, dtype=np.float64)
            for k, c in enumerate(solvable):
                c_ia[k] = index[c.body_a]
                c_ib[k] = index[c.body_b]
                c_point[k] = c.point
                c_normal[k] = c.normal
                c_depth[k] = c.depth
                c_mu[k] = c.friction
            solve_contacts(
                inv_mass,
                inv_inertia,
                pos_arr,
                vel_arr,
                omg_arr,
                c_ia,
                c_ib,
                c_point,
                c_normal,
                c_depth,
                c_mu,
                self.iterations,
                self.dt,
                self.beta,
                self.slop,
                1 if self.bias_enabled else 0,
            )
            for i, bid in enumerate(ids):
                b = self.bodies[bid]
                if b.dynamic_now:
                    b.velocity = (float(vel_arr[i, 0]), float(vel_arr[i, 1]), float(vel_arr[i, 2]))
                    b.omega = (float(omg_arr[i, 0]), float(omg_arr[i, 1]), float(omg_arr[i, 2]))
                    b.pose = Pose(
                        (float(pos_arr[i, 0]), float(pos_arr[i, 1]), float(pos_arr[i, 2])),
                        b.pose.orientation,
                    )

        # (5) enforce welds, roots first
        order: list[str] = []
        seen: set[str] = set()

        def push_chain(bid: str) -> None:
            chain = []
            cur: str | None = bid
            while cur is not None and cur not in seen:
                chain.append(cur)
                cur = self.bodies[cur].welded_to
            for item in reversed(chain):
                if self.bodies[item].welded_to is not None:
                    order.append(item)
                seen.add(item)

        for bid in ids:
            if self.bodies[bid].welded_to is not None:
                push_chain(bid)
        for bid in order:
            b = self.bodies[bid]
            parent = self.bodies[b.welded_to]
            b.pose = parent.pose.compose(b.weld_rel)

        # (6) region entries
        inside_now: set[tuple[str, str]] = set()
        for rid in sorted(self.regions):
            region = self.regions[rid]
            if not region.active:
                continue
            center = self.region_world_center(region)
            for bid in ids:
                b = self.bodies[bid]
                if not b.active:
                    continue
                if vec_dist(b.pose.position, center) <= region.radius:
                    inside_now.add((bid, rid))
                    if (bid, rid) not in self._prev_inside:
                        report.region_entries.append((bid, rid))
        self._prev_inside = inside_now

        # (7) cables
        for cid in sorted(self.cables):
            cable_mod.step_cable(self.cables[cid], self)

        self.tick += 1

        # divergence check
        for bid in ids:
            b = self.bodies[bid]
            vals = (*b.pose.position, *b.pose.orientation, *b.velocity, *b.omega)
            if not all(math.isfinite(v) for v in vals):
                raise SimulationDiverged(bid)
        return report

    # -- serialization ----------------------------------------------------------

    def serialize(self) -> bytes:
        out = bytearray()
        for bid in sorted(self.bodies):
            b = self.bodies[bid]
            out += bid.encode("utf-8")
            out.append(0)
            out += struct.pack(
                "<13d",
                b.pose.position[0],
                b.pose.position[1],
                b.pose.position[2],
                b.pose.orientation[0],
                b.pose.orientation[1],
                b.pose.orientation[2],
                b.pose.orientation[3],
                b.velocity[0],
                b.velocity[1],
                b.velocity[2],
                b.omega[0],
                b.omega[1],
                b.omega[2],
            )
            flags = 0
            if b.dynamic_now:
                flags |= 1
            if b.active:
                flags |= 2
            if b.welded_to is not None:
                flags |= 4
            if b.grabbed:
                flags |= 8
            if b.mass == 0.0:
                flags |= 16
            out.append(flags)
        for cid in sorted(self.cables):
            cable = self.cables[cid]
            out += cid.encode("utf-8")
            out.append(0)
            out += struct.pack("<I", cable.positions.shape[0])
            out += cable.positions.tobytes()
        return bytes(out)


def world_from_scenario(s: Scenario, **kwargs) -> World:
    world = World(**kwargs)
    for part in s.parts.values():
        world.add_part(part)
    for region in s.regions.values():
        world.add_region(region)
    world.materials = dict(s.materials)
    return world
