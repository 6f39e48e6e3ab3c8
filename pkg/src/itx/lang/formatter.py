"""Canonical scenario formatter.

Deterministic output: declaration order preserved, one field per line,
two-space indent, every field emitted explicitly. Angles are written in
degrees with up to 9 significant digits, which round-trips bit-exactly for
values that were themselves authored with at most 9 significant digits.
Plain numbers use repr(), which always round-trips.
"""

from __future__ import annotations

from ..geometry import RAD2DEG, Vec3
from ..model import (
    ActionSpec,
    ActivateAct,
    And,
    Box,
    Capsule,
    CompletedTrig,
    ConditionExpr,
    ConvexHull,
    DeactivateAct,
    DifficultyLevel,
    Done,
    EnteredTrig,
    EulerPose,
    EventAction,
    EventDef,
    EventTrigger,
    Flag,
    FlagSetTrig,
    Not,
    Or,
    ParticlesAct,
    PartDef,
    PlacingSpec,
    Region,
    Scenario,
    SetFlagAct,
    Sphere,
    Start,
    StartedTrig,
    StepDef,
    TimeTrig,
    ToolUseSpec,
    UnweldAct,
    WeldAct,
    default_difficulty,
)


def fmt_num(x: float) -> str:
    return repr(float(x))


def fmt_angle(rad: float) -> str:
    return f"{rad * RAD2DEG:.9g}"


def fmt_string(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def fmt_bool(b: bool) -> str:
    return "true" if b else "false"


def _vec(v: Vec3) -> str:
    return f"({fmt_num(v[0])}, {fmt_num(v[1])}, {fmt_num(v[2])})"


def _pose(p: EulerPose) -> str:
    rpy = f"({fmt_angle(p.rpy[0])}, {fmt_angle(p.rpy[1])}, {fmt_angle(p.rpy[2])})"
    return f"{_vec(p.position)} rpy{rpy}"


def _shape(s) -> str:
    if isinstance(s, Sphere):
        return f"sphere({fmt_num(s.radius)})"
    if isinstance(s, Box):
        h = s.half_extents
        return f"box({fmt_num(h[0])}, {fmt_num(h[1])}, {fmt_num(h[2])})"
    if isinstance(s, Capsule):
        return f"capsule({fmt_num(s.radius)}, {fmt_num(s.half_height)})"
    if isinstance(s, ConvexHull):
        return "hull(" + ", ".join(_vec(v) for v in s.vertices) + ")"
    raise TypeError(f"not a shape: {s!r}")


def format_condition(c: ConditionExpr) -> str:
    if isinstance(c, Start):
        return "start"
    if isinstance(c, Done):
        return f"done({c.step})"
    if isinstance(c, Flag):
        return f"flag({c.name})"
    if isinstance(c, Not):
        inner = format_condition(c.operand)
        if isinstance(c.operand, (And, Or)):
            inner = f"({inner})"
        return f"!{inner}"
    if isinstance(c, And):
        parts = []
        for op in c.operands:
            text = format_condition(op)
            if isinstance(op, (And, Or)):
                text = f"({text})"
            parts.append(text)
        return " && ".join(parts)
    if isinstance(c, Or):
        parts = []
        for op in c.operands:
            text = format_condition(op)
            if isinstance(op, Or):
                text = f"({text})"
            parts.append(text)
        return " || ".join(parts)
    raise TypeError(f"not a condition: {c!r}")


def _trigger(t: EventTrigger) -> str:
    if isinstance(t, CompletedTrig):
        return f"completed({t.step})"
    if isinstance(t, StartedTrig):
        return f"started({t.step})"
    if isinstance(t, EnteredTrig):
        return f"entered({t.part}, {t.region})"
    if isinstance(t, FlagSetTrig):
        return f"flag({t.name})"
    if isinstance(t, TimeTrig):
        return f"time({fmt_num(t.seconds)})"
    raise TypeError(f"not a trigger: {t!r}")


def _action(a: EventAction) -> str:
    if isinstance(a, WeldAct):
        return f"weld({a.part}, {a.parent}.{a.anchor})"
    if isinstance(a, UnweldAct):
        return f"unweld({a.part})"
    if isinstance(a, ActivateAct):
        return f"activate({a.entity})"
    if isinstance(a, DeactivateAct):
        return f"deactivate({a.entity})"
    if isinstance(a, SetFlagAct):
        return f"set_flag({a.name})"
    if isinstance(a, ParticlesAct):
        return f"particles({a.region})"
    raise TypeError(f"not an action: {a!r}")


def _part_lines(p: PartDef, out: list[str]) -> None:
    out.append(f"  part {p.id} {{")
    out.append(f"    shape = {_shape(p.shape)};")
    out.append(f"    mass = {fmt_num(p.mass)};")
    out.append(f"    pose = {_pose(p.initial_pose)};")
    out.append(f"    grabbable = {fmt_bool(p.grabbable)};")
    for name, anchor in p.anchors.items():
        out.append(f"    anchor {name} = {_pose(anchor)};")
    out.append(f"    material = {p.material};")
    out.append("  }")


def _step_lines(s: StepDef, out: list[str]) -> None:
    out.append(f"  step {s.id} : {s.kind_name} {{")
    k = s.kind
    if isinstance(k, PlacingSpec):
        out.append(f"    part = {k.part};")
        out.append(f"    target = anchor({k.target_part}, {k.target_anchor});")
        out.append(f"    tol = pos {fmt_num(k.pos_tol)} rot {fmt_angle(k.rot_tol)} deg;")
        out.append(f"    dwell = {fmt_num(k.dwell)};")
    elif isinstance(k, ActionSpec):
        out.append(f"    action_id = {k.action_id};")
    elif isinstance(k, ToolUseSpec):
        out.append(f"    tool = {k.tool};")
        out.append(f"    target = {k.target};")
        out.append(f"    contact_time = {fmt_num(k.contact_time)};")
    out.append(f"    requires = {format_condition(s.requires)};")
    out.append(f"    min_time = {fmt_num(s.min_time)};")
    out.append(f"    par_time = {fmt_num(s.par_time)};")
    out.append(f"    instruction = {fmt_string(s.instruction)};")
    out.append(f"    hint = {fmt_string(s.hint)};")
    out.append("  }")


def _event_lines(e: EventDef, out: list[str]) -> None:
    out.append(f"  event {e.id} {{")
    out.append(f"    when = {_trigger(e.trigger)};")
    if e.actions:
        out.append("    do = " + ", ".join(_action(a) for a in e.actions) + ";")
    out.append("  }")


def _region_line(r: Region, out: list[str]) -> None:
    suffix = f" on {r.parent}" if r.parent else ""
    out.append(f"  region {r.id} = sphere({_vec(r.center)}, {fmt_num(r.radius)}){suffix};")


def _difficulty_lines(d: DifficultyLevel, out: list[str]) -> None:
    out.append(f"  difficulty {d.id} {{")
    out.append(f"    ghost = {fmt_bool(d.ghost_enabled)};")
    out.append(f"    trajectory = {fmt_bool(d.trajectory_enabled)};")
    out.append(f"    instructions = {fmt_bool(d.instructions_enabled)};")
    out.append(f"    hint_penalty = {fmt_num(d.hint_penalty)};")
    out.append(f"    par_time_scale = {fmt_num(d.par_time_scale)};")
    out.append("  }")


def format_canonical(s: Scenario) -> str:
    env = f" in {s.environment}" if s.environment else ""
    out: list[str] = [f"scenario {fmt_string(s.name)}{env} {{"]

    emitted: set[tuple[str, str]] = set()
    order = list(s.item_order)
    # Items missing from the declaration order (programmatically built
    # scenarios) come after the ordered ones; the auto-injected default
    # difficulty is not an authored item and stays implicit.
    injected = default_difficulty()
    for kind, table in (
        ("part", s.parts),
        ("step", s.steps),
        ("event", s.events),
        ("region", s.regions),
        ("difficulty", s.difficulties),
    ):
        for item_id in table:
            key = (kind, item_id)
            if key not in s.item_order and not (kind == "difficulty" and table[item_id] == injected):
                order.append(key)
    for (ma, mb) in s.materials:
        key = ("material", f"{ma} {mb}")
        if key not in s.item_order:
            order.append(key)

    for kind, item_id in order:
        if (kind, item_id) in emitted:
            continue
        emitted.add((kind, item_id))
        if kind == "part" and item_id in s.parts:
            _part_lines(s.parts[item_id], out)
        elif kind == "step" and item_id in s.steps:
            _step_lines(s.steps[item_id], out)
        elif kind == "event" and item_id in s.events:
            _event_lines(s.events[item_id], out)
        elif kind == "region" and item_id in s.regions:
            _region_line(s.regions[item_id], out)
        elif kind == "difficulty" and item_id in s.difficulties:
            _difficulty_lines(s.difficulties[item_id], out)
        elif kind == "material":
            ma, mb = item_id.split(" ", 1)
            mu = s.materials.get((ma, mb))
            if mu is not None:
                out.append(f"  material {ma} {mb} = {fmt_num(mu)};")

    out.append("}")
    return "\n".join(out) + "\n"
