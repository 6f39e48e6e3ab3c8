"""Fixed-timestep rigid-body world with collision detection and constraints."""

from .world import (
    Contact,
    GrabError,
    RigidBody,
    SimulationDiverged,
    TickReport,
    WeldError,
    World,
    world_from_scenario,
)
from .broadphase import broadphase_pairs
from .narrowphase import collide_pair, pair_distance

__all__ = [
    "World",
    "RigidBody",
    "Contact",
    "TickReport",
    "WeldError",
    "GrabError",
    "SimulationDiverged",
    "world_from_scenario",
    "broadphase_pairs",
    "collide_pair",
    "pair_distance",
]
