"""Scenario domain model and static semantics.

A Scenario is the authored artifact: parts with collider shapes, steps with
unlock conditions, events, regions, difficulty levels, and pairwise friction.
This module owns validation (stable diagnostic codes), boolean condition
evaluation, and the optimistic reachability fixpoint that guards the step
graph against deadlock. Poses are stored the way they were authored
(position + roll/pitch/yaw) so the formatter can reproduce sources exactly;
`EulerPose.to_pose()` yields the quaternion form used by the runtime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import Diagnostic, error
from .geometry import Pose, Vec3, quat_from_rpy, pose_error  # noqa: F401  (re-export)

DEFAULT_FRICTION = 0.5
DEFAULT_DIFFICULTY_ID = "default"
DEFAULT_HINT_PENALTY = 15.0
DEFAULT_POS_TOL = 0.01
DEFAULT_ROT_TOL = 5.0 * math.pi / 180.0
DEFAULT_DWELL = 0.5
DEFAULT_PAR_TIME = 60.0


@dataclass(frozen=True)
class EulerPose:
    """Pose as authored: position in meters, roll/pitch/yaw in radians."""

    position: Vec3 = (0.0, 0.0, 0.0)
    rpy: Vec3 = (0.0, 0.0, 0.0)

    def to_pose(self) -> Pose:
        return Pose(self.position, quat_from_rpy(self.rpy[0], self.rpy[1], self.rpy[2]))


IDENTITY_EULER = EulerPose()


# --- collider shapes ---------------------------------------------------------


@dataclass(frozen=True)
class Sphere:
    radius: float


@dataclass(frozen=True)
class Box:
    half_extents: Vec3


@dataclass(frozen=True)
class Capsule:
    """Capsule with its axis along local z; half_height excludes the caps."""

    radius: float
    half_height: float


@dataclass(frozen=True)
class ConvexHull:
    vertices: tuple[Vec3, ...]


ColliderShape = Sphere | Box | Capsule | ConvexHull


def hull_rank_ok(vertices: tuple[Vec3, ...], rel_tol: float = 1e-9) -> bool:
    """True when the vertices span 3 dimensions (non-coplanar)."""
    pts = np.asarray(vertices, dtype=np.float64)
    centered = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    return bool(sv[-1] > rel_tol * sv[0])


# --- parts -------------------------------------------------------------------


@dataclass(frozen=True)
class PartDef:
    id: str
    shape: ColliderShape
    mass: float = 0.0
    initial_pose: EulerPose = IDENTITY_EULER
    grabbable: bool = False
    anchors: dict[str, EulerPose] = field(default_factory=dict)
    material: str = "default"


# --- unlock conditions -------------------------------------------------------


@dataclass(frozen=True)
class Start:
    pass


@dataclass(frozen=True)
class Done:
    step: str


@dataclass(frozen=True)
class Flag:
    name: str


@dataclass(frozen=True)
class Not:
    operand: "ConditionExpr"


@dataclass(frozen=True)
class And:
    operands: tuple["ConditionExpr", ...]


@dataclass(frozen=True)
class Or:
    operands: tuple["ConditionExpr", ...]


ConditionExpr = Start | Done | Flag | Not | And | Or

START = Start()


def evaluate_condition(expr: ConditionExpr, completed: set[str], flags: set[str]) -> bool:
    if isinstance(expr, Start):
        return True
    if isinstance(expr, Done):
        return expr.step in completed
    if isinstance(expr, Flag):
        return expr.name in flags
    if isinstance(expr, Not):
        return not evaluate_condition(expr.operand, completed, flags)
    if isinstance(expr, And):
        return all(evaluate_condition(op, completed, flags) for op in expr.operands)
    if isinstance(expr, Or):
        return any(evaluate_condition(op, completed, flags) for op in expr.operands)
    raise TypeError(f"not a condition: {expr!r}")


def done_atoms(expr: ConditionExpr) -> set[str]:
    """Step ids referenced by Done atoms anywhere in the expression."""
    if isinstance(expr, Done):
        return {expr.step}
    if isinstance(expr, Not):
        return done_atoms(expr.operand)
    if isinstance(expr, (And, Or)):
        out: set[str] = set()
        for op in expr.operands:
            out |= done_atoms(op)
        return out
    return set()


def flag_atoms(expr: ConditionExpr) -> set[str]:
    if isinstance(expr, Flag):
        return {expr.name}
    if isinstance(expr, Not):
        return flag_atoms(expr.operand)
    if isinstance(expr, (And, Or)):
        out: set[str] = set()
        for op in expr.operands:
            out |= flag_atoms(op)
        return out
    return set()


# --- steps -------------------------------------------------------------------


@dataclass(frozen=True)
class PlacingSpec:
    part: str
    target_part: str
    target_anchor: str
    pos_tol: float = DEFAULT_POS_TOL
    rot_tol: float = DEFAULT_ROT_TOL
    dwell: float = DEFAULT_DWELL


@dataclass(frozen=True)
class ActionSpec:
    action_id: str


@dataclass(frozen=True)
class ToolUseSpec:
    tool: str
    target: str
    contact_time: float


StepKind = PlacingSpec | ActionSpec | ToolUseSpec


@dataclass(frozen=True)
class StepDef:
    id: str
    kind: StepKind
    requires: ConditionExpr = START
    min_time: float = 0.0
    par_time: float = DEFAULT_PAR_TIME
    instruction: str = ""
    hint: str = ""

    @property
    def kind_name(self) -> str:
        if isinstance(self.kind, PlacingSpec):
            return "placing"
        if isinstance(self.kind, ActionSpec):
            return "action"
        return "tooluse"


# --- events ------------------------------------------------------------------


@dataclass(frozen=True)
class CompletedTrig:
    step: str


@dataclass(frozen=True)
class StartedTrig:
    step: str


@dataclass(frozen=True)
class EnteredTrig:
    part: str
    region: str


@dataclass(frozen=True)
class FlagSetTrig:
    name: str


@dataclass(frozen=True)
class TimeTrig:
    seconds: float


EventTrigger = CompletedTrig | StartedTrig | EnteredTrig | FlagSetTrig | TimeTrig


@dataclass(frozen=True)
class WeldAct:
    part: str
    parent: str
    anchor: str


@dataclass(frozen=True)
class UnweldAct:
    part: str


@dataclass(frozen=True)
class ActivateAct:
    entity: str


@dataclass(frozen=True)
class DeactivateAct:
    entity: str


@dataclass(frozen=True)
class SetFlagAct:
    name: str


@dataclass(frozen=True)
class ParticlesAct:
    region: str


EventAction = WeldAct | UnweldAct | ActivateAct | DeactivateAct | SetFlagAct | ParticlesAct


@dataclass(frozen=True)
class EventDef:
    id: str
    trigger: EventTrigger
    actions: tuple[EventAction, ...] = ()


@dataclass(frozen=True)
class Region:
    id: str
    center: Vec3
    radius: float
    parent: str | None = None


@dataclass(frozen=True)
class DifficultyLevel:
    id: str
    ghost_enabled: bool = True
    trajectory_enabled: bool = True
    instructions_enabled: bool = True
    hint_penalty: float = DEFAULT_HINT_PENALTY
    par_time_scale: float = 1.0


def default_difficulty() -> DifficultyLevel:
    return DifficultyLevel(id=DEFAULT_DIFFICULTY_ID)


# --- scenario ----------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    name: str
    environment: str = ""
    parts: dict[str, PartDef] = field(default_factory=dict)
    steps: dict[str, StepDef] = field(default_factory=dict)
    events: dict[str, EventDef] = field(default_factory=dict)
    regions: dict[str, Region] = field(default_factory=dict)
    difficulties: dict[str, DifficultyLevel] = field(default_factory=dict)
    materials: dict[tuple[str, str], float] = field(default_factory=dict)
    # Declaration order across item kinds, e.g. ("part", "lens"); the
    # canonical formatter preserves it.
    item_order: tuple[tuple[str, str], ...] = ()

    def friction(self, mat_a: str, mat_b: str) -> float:
        key = (mat_a, mat_b) if mat_a <= mat_b else (mat_b, mat_a)
        return self.materials.get(key, DEFAULT_FRICTION)

    def flag_vocabulary(self) -> set[str]:
        """Flags the scenario can set (via event set_flag actions)."""
        out: set[str] = set()
        for ev in self.events.values():
            for act in ev.actions:
                if isinstance(act, SetFlagAct):
                    out.add(act.name)
        return out


# --- validation --------------------------------------------------------------


def _check_pose(diags: list[Diagnostic], p: EulerPose, where: str) -> None:
    vals = (*p.position, *p.rpy)
    if not all(math.isfinite(v) for v in vals):
        diags.append(error("E_BAD_POSE", "pose has non-finite components", where))


def _check_shape(diags: list[Diagnostic], shape: ColliderShape, where: str) -> None:
    if isinstance(shape, Sphere):
        if not (shape.radius > 0.0 and math.isfinite(shape.radius)):
            diags.append(error("E_BAD_DIMENSION", "sphere radius must be > 0", where))
    elif isinstance(shape, Box):
        if not all(h > 0.0 and math.isfinite(h) for h in shape.half_extents):
            diags.append(error("E_BAD_DIMENSION", "box half-extents must be > 0", where))
    elif isinstance(shape, Capsule):
        if not (shape.radius > 0.0 and math.isfinite(shape.radius)):
            diags.append(error("E_BAD_DIMENSION", "capsule radius must be > 0", where))
        if not (shape.half_height >= 0.0 and math.isfinite(shape.half_height)):
            diags.append(error("E_BAD_DIMENSION", "capsule half-height must be >= 0", where))
    elif isinstance(shape, ConvexHull):
        if len(shape.vertices) < 4:
            diags.append(error("E_DEGENERATE_HULL", "hull needs at least 4 vertices", where))
        elif not all(math.isfinite(c) for v in shape.vertices for c in v):
            diags.append(error("E_DEGENERATE_HULL", "hull has non-finite vertices", where))
        elif not hull_rank_ok(shape.vertices):
            diags.append(error("E_DEGENERATE_HULL", "hull vertices are coplanar", where))


def _check_condition(
    diags: list[Diagnostic], expr: ConditionExpr, s: Scenario, flags: set[str], where: str
) -> None:
    if isinstance(expr, Done):
        if expr.step not in s.steps:
            diags.append(error("E_DANGLING_STEP", f"unknown step '{expr.step}'", where))
    elif isinstance(expr, Flag):
        if expr.name not in flags:
            diags.append(error("E_DANGLING_FLAG", f"flag '{expr.name}' is never set by any event", where))
    elif isinstance(expr, Not):
        _check_condition(diags, expr.operand, s, flags, where)
    elif isinstance(expr, (And, Or)):
        for op in expr.operands:
            _check_condition(diags, op, s, flags, where)


def _check_anchor_ref(diags: list[Diagnostic], s: Scenario, part: str, anchor: str, where: str) -> None:
    p = s.parts.get(part)
    if p is None:
        diags.append(error("E_DANGLING_PART", f"unknown part '{part}'", where))
    elif anchor not in p.anchors:
        diags.append(error("E_DANGLING_ANCHOR", f"part '{part}' has no anchor '{anchor}'", where))


def validate_scenario(s: Scenario) -> list[Diagnostic]:
    """Check every type invariant; empty result means the scenario is sound."""
    diags: list[Diagnostic] = []
    flags = s.flag_vocabulary()

    for part in s.parts.values():
        where = f"part:{part.id}"
        _check_shape(diags, part.shape, where)
        if not (part.mass >= 0.0 and math.isfinite(part.mass)):
            diags.append(error("E_BAD_VALUE", "mass must be >= 0", where))
        _check_pose(diags, part.initial_pose, where)
        for name, anchor in part.anchors.items():
            _check_pose(diags, anchor, f"{where}/anchor:{name}")

    for step in s.steps.values():
        where = f"step:{step.id}"
        k = step.kind
        if isinstance(k, PlacingSpec):
            if k.part not in s.parts:
                diags.append(error("E_DANGLING_PART", f"unknown part '{k.part}'", where))
            _check_anchor_ref(diags, s, k.target_part, k.target_anchor, where)
            if k.part == k.target_part:
                diags.append(error("E_SELF_PLACING", "placing part equals target part", where))
            if not (k.pos_tol > 0.0 and k.rot_tol > 0.0 and math.isfinite(k.pos_tol) and math.isfinite(k.rot_tol)):
                diags.append(error("E_BAD_VALUE", "tolerances must be > 0", where))
            if not (k.dwell >= 0.0 and math.isfinite(k.dwell)):
                diags.append(error("E_BAD_VALUE", "dwell must be >= 0", where))
        elif isinstance(k, ToolUseSpec):
            if k.tool not in s.parts:
                diags.append(error("E_DANGLING_PART", f"unknown part '{k.tool}'", where))
            if k.target not in s.parts:
                diags.append(error("E_DANGLING_PART", f"unknown part '{k.target}'", where))
            if not (k.contact_time > 0.0 and math.isfinite(k.contact_time)):
                diags.append(error("E_BAD_VALUE", "contact_time must be > 0", where))
        elif isinstance(k, ActionSpec):
            if not k.action_id:
                diags.append(error("E_BAD_VALUE", "action_id must be non-empty", where))
        if not (step.min_time >= 0.0 and math.isfinite(step.min_time)):
            diags.append(error("E_BAD_VALUE", "min_time must be >= 0", where))
        if not (step.par_time > 0.0 and math.isfinite(step.par_time)):
            diags.append(error("E_BAD_VALUE", "par_time must be > 0", where))
        elif step.par_time < step.min_time:
            diags.append(error("E_BAD_VALUE", "par_time must be >= min_time", where))
        _check_condition(diags, step.requires, s, flags, where)

    for ev in s.events.values():
        where = f"event:{ev.id}"
        t = ev.trigger
        if isinstance(t, (CompletedTrig, StartedTrig)):
            if t.step not in s.steps:
                diags.append(error("E_DANGLING_STEP", f"unknown step '{t.step}'", where))
        elif isinstance(t, EnteredTrig):
            if t.part not in s.parts:
                diags.append(error("E_DANGLING_PART", f"unknown part '{t.part}'", where))
            if t.region not in s.regions:
                diags.append(error("E_DANGLING_REGION", f"unknown region '{t.region}'", where))
        elif isinstance(t, FlagSetTrig):
            if t.name not in flags:
                diags.append(error("E_DANGLING_FLAG", f"flag '{t.name}' is never set by any event", where))
        elif isinstance(t, TimeTrig):
            if t.seconds < 0.0:
                diags.append(error("E_BAD_VALUE", "time trigger must be >= 0", where))
        for i, act in enumerate(ev.actions):
            aw = f"{where}/do[{i}]"
            if isinstance(act, WeldAct):
                if act.part not in s.parts:
                    diags.append(error("E_DANGLING_PART", f"unknown part '{act.part}'", aw))
                _check_anchor_ref(diags, s, act.parent, act.anchor, aw)
                if act.part == act.parent:
                    diags.append(error("E_SELF_PLACING", "cannot weld a part to itself", aw))
            elif isinstance(act, UnweldAct):
                if act.part not in s.parts:
                    diags.append(error("E_DANGLING_PART", f"unknown part '{act.part}'", aw))
            elif isinstance(act, (ActivateAct, DeactivateAct)):
                if act.entity not in s.parts and act.entity not in s.regions:
                    diags.append(error("E_DANGLING_ENTITY", f"unknown part or region '{act.entity}'", aw))
            elif isinstance(act, ParticlesAct):
                if act.region not in s.regions:
                    diags.append(error("E_DANGLING_REGION", f"unknown region '{act.region}'", aw))

    for region in s.regions.values():
        where = f"region:{region.id}"
        if not (region.radius > 0.0 and math.isfinite(region.radius)):
            diags.append(error("E_BAD_VALUE", "region radius must be > 0", where))
        if region.parent is not None and region.parent not in s.parts:
            diags.append(error("E_DANGLING_PART", f"unknown part '{region.parent}'", where))

    for diff in s.difficulties.values():
        where = f"difficulty:{diff.id}"
        if not (diff.hint_penalty >= 0.0 and math.isfinite(diff.hint_penalty)):
            diags.append(error("E_BAD_VALUE", "hint_penalty must be >= 0", where))
        if not (diff.par_time_scale > 0.0 and math.isfinite(diff.par_time_scale)):
            diags.append(error("E_BAD_VALUE", "par_time_scale must be > 0", where))

    for (ma, mb), mu in s.materials.items():
        if not (mu >= 0.0 and math.isfinite(mu)):
            diags.append(error("E_BAD_VALUE", "friction must be >= 0", f"material:{ma}/{mb}"))

    return diags


# --- reachability ------------------------------------------------------------


def reachability_check(s: Scenario) -> dict[str, set[str]]:
    """Optimistic fixpoint over the unlock graph.

    A step counts as reachable if its condition can hold assuming every
    already-reachable step completes; flags come only from events whose
    triggers are themselves optimistically attainable (region entries and
    timers always are).
    """
    reachable: set[str] = set()
    flags: set[str] = set()
    fired: set[str] = set()

    changed = True
    while changed:
        changed = False
        for ev in s.events.values():
            if ev.id in fired:
                continue
            t = ev.trigger
            if isinstance(t, (CompletedTrig, StartedTrig)):
                ok = t.step in reachable
            elif isinstance(t, FlagSetTrig):
                ok = t.name in flags
            else:  # EnteredTrig, TimeTrig: attainable in principle
                ok = True
            if ok:
                fired.add(ev.id)
                for act in ev.actions:
                    if isinstance(act, SetFlagAct) and act.name not in flags:
                        flags.add(act.name)
                changed = True
        for step in s.steps.values():
            if step.id in reachable:
                continue
            if evaluate_condition(step.requires, reachable, flags):
                reachable.add(step.id)
                changed = True

    return {
        "reachable": reachable,
        "unreachable": set(s.steps) - reachable,
    }
