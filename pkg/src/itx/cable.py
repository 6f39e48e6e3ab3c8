"""Deformable cable simulation: a node chain with compliance-weighted
distance constraints (position-based dynamics), attachable at either end to
rigid bodies or fixed world points, plus a settling solver validated against
the analytic catenary in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import cable_tick
from .geometry import Vec3

DEFAULT_ITERATIONS = 20
STATIC_DAMPING = 0.99
STATIC_SPEED_TOL = 1e-5
STATIC_MAX_TICKS = 100_000


class CableTooShort(ValueError):
    code = "E_CABLE_TOO_SHORT"


@dataclass(frozen=True)
class Attachment:
    """Cable endpoint attachment; part_id None pins to a fixed world point."""

    point: Vec3
    part_id: str | None = None


class Cable:
    def __init__(
        self,
        cable_id: str,
        positions: np.ndarray,
        rest_len: float,
        node_mass: float = 0.05,
        compliance: float = 0.0,
        damping: float = 0.0,
        iterations: int = DEFAULT_ITERATIONS,
        attach_start: Attachment | None = None,
        attach_end: Attachment | None = None,
    ):
        self.id = cable_id
        self.positions = np.ascontiguousarray(positions, dtype=np.float64)
        self.velocities = np.zeros_like(self.positions)
        self.rest_len = rest_len
        self.node_mass = node_mass
        self.compliance = compliance
        self.damping = damping
        self.iterations = iterations
        self.attach_start = attach_start
        self.attach_end = attach_end
        n = self.positions.shape[0]
        self._inv_mass = np.full(n, 1.0 / node_mass, dtype=np.float64)
        self._pinned = np.zeros(n, dtype=np.uint8)
        self._pin_pos = np.zeros((n, 3), dtype=np.float64)

    @property
    def node_count(self) -> int:
        return self.positions.shape[0]

    @property
    def total_rest_length(self) -> float:
        return self.rest_len * (self.node_count - 1)

    def segment_lengths(self) -> np.ndarray:
        deltas = self.positions[1:] - self.positions[:-1]
        return np.sqrt((deltas * deltas).sum(axis=1))

    def max_strain(self) -> float:
        lengths = self.segment_lengths()
        return float(np.abs(lengths - self.rest_len).max() / self.rest_len)

    def arc_length(self) -> float:
        return float(self.segment_lengths().sum())

    def max_node_speed(self) -> float:
        return float(np.sqrt((self.velocities * self.velocities).sum(axis=1)).max())

    def kinetic_energy(self) -> float:
        return float(0.5 * self.node_mass * (self.velocities * self.velocities).sum())


def init_cable(
    cable_id: str,
    total_length: float,
    nodes: int,
    a: Vec3,
    b: Vec3,
    node_mass: float = 0.05,
    compliance: float = 0.0,
    damping: float = 0.0,
    iterations: int = DEFAULT_ITERATIONS,
    attach_start: Attachment | None = None,
    attach_end: Attachment | None = None,
) -> Cable:
    """Cable with `nodes` nodes interpolated between a and b, at rest.

    The span |a-b| must not exceed the total rest length.
    """
    if nodes < 2:
        raise ValueError("cable needs at least 2 nodes")
    if total_length <= 0.0:
        raise ValueError("cable length must be > 0")
    span = math.dist(a, b)
    if span > total_length:
        raise CableTooShort(
            f"endpoint span {span:.6g} m exceeds cable length {total_length:.6g} m"
        )
    pts = np.empty((nodes, 3), dtype=np.float64)
    for i in range(nodes):
        t = i / (nodes - 1)
        pts[i, 0] = a[0] + (b[0] - a[0]) * t
        pts[i, 1] = a[1] + (b[1] - a[1]) * t
        pts[i, 2] = a[2] + (b[2] - a[2]) * t
    rest = total_length / (nodes - 1)
    return Cable(
        cable_id,
        pts,
        rest,
        node_mass=node_mass,
        compliance=compliance,
        damping=damping,
        iterations=iterations,
        attach_start=attach_start,
        attach_end=attach_end,
    )


def _resolve_pin(cable: Cable, world, attachment: Attachment) -> Vec3:
    if attachment.part_id is None:
        return attachment.point
    if world is None:
        raise ValueError(f"cable '{cable.id}' is attached to a body but no world was given")
    return world.bodies[attachment.part_id].pose.transform(attachment.point)


def step_cable(cable: Cable, world=None, damping: float | None = None) -> None:
    """One cable tick; gravity/dt come from the world when given."""
    dt = world.dt if world is not None else 1.0 / 120.0
    gravity = world.gravity if world is not None else (0.0, 0.0, -9.81)

    cable._pinned[:] = 0
    n = cable.node_count
    if cable.attach_start is not None:
        cable._pinned[0] = 1
        cable._pin_pos[0] = _resolve_pin(cable, world, cable.attach_start)
    if cable.attach_end is not None:
        cable._pinned[n - 1] = 1
        cable._pin_pos[n - 1] = _resolve_pin(cable, world, cable.attach_end)

    cable_tick(
        cable.positions,
        cable.velocities,
        cable._inv_mass,
        cable._pinned,
        cable._pin_pos,
        cable.rest_len,
        cable.compliance,
        cable.damping if damping is None else damping,
        np.asarray(gravity, dtype=np.float64),
        dt,
        cable.iterations,
    )


@dataclass
class StaticReport:
    converged: bool
    ticks: int
    max_violation: float
    max_strain: float
    max_speed: float


def static_solve(cable: Cable, world=None, max_ticks: int = STATIC_MAX_TICKS) -> StaticReport:
    """Settle a doubly-pinned cable under gravity.

    Steps with heavy velocity damping until the fastest node drops below
    1e-5 m/s or the tick budget runs out.
    """
    if cable.attach_start is None or cable.attach_end is None:
        raise ValueError("static_solve needs both endpoints pinned")
    ticks = 0
    converged = False
    while ticks < max_ticks:
        step_cable(cable, world, damping=STATIC_DAMPING)
        ticks += 1
        if cable.max_node_speed() < STATIC_SPEED_TOL:
            converged = True
            break
    lengths = cable.segment_lengths()
    max_violation = float(np.abs(lengths - cable.rest_len).max())
    return StaticReport(
        converged=converged,
        ticks=ticks,
        max_violation=max_violation,
        max_strain=max_violation / cable.rest_len,
        max_speed=cable.max_node_speed(),
    )
