"""Canonical JSON encodings for inputs, frames, score reports, and scenarios.

snake_case keys, SI units, quaternions in (w, x, y, z) order. These shapes
are the contract for trace files, the HTTP/streaming gateway, and the CLI's
stdout payloads.
"""

from __future__ import annotations

from typing import Any

from .geometry import Pose
from .model import (
    ActionSpec,
    ActivateAct,
    And,
    Box,
    Capsule,
    CompletedTrig,
    ConditionExpr,
    ConvexHull,
    DeactivateAct,
    Done,
    EnteredTrig,
    EventDef,
    Flag,
    FlagSetTrig,
    Not,
    Or,
    ParticlesAct,
    PlacingSpec,
    Scenario,
    SetFlagAct,
    Sphere,
    Start,
    StartedTrig,
    TimeTrig,
    UnweldAct,
    WeldAct,
)
from .session import (
    FrameReport,
    Grab,
    HandPose,
    HelperFrame,
    Hint,
    Press,
    Release,
    ScoreReport,
    Session,
    SetFlag,
    Skip,
    UserInput,
)

Json = dict[str, Any]


def pose_to_wire(p: Pose) -> Json:
    return {"pos": list(p.position), "quat": list(p.orientation)}


def pose_from_wire(obj: Json) -> Pose:
    pos = obj["pos"]
    quat = obj["quat"]
    return Pose(
        (float(pos[0]), float(pos[1]), float(pos[2])),
        (float(quat[0]), float(quat[1]), float(quat[2]), float(quat[3])),
    )


def input_to_wire(inp: UserInput) -> Json:
    if isinstance(inp, HandPose):
        return {"kind": "hand_pose", **pose_to_wire(inp.pose)}
    if isinstance(inp, Grab):
        return {"kind": "grab", "part": inp.part}
    if isinstance(inp, Release):
        return {"kind": "release"}
    if isinstance(inp, Press):
        return {"kind": "press", "action_id": inp.action_id}
    if isinstance(inp, Hint):
        return {"kind": "hint", "step": inp.step}
    if isinstance(inp, Skip):
        return {"kind": "skip", "step": inp.step}
    if isinstance(inp, SetFlag):
        return {"kind": "set_flag", "name": inp.name}
    raise TypeError(f"not a user input: {inp!r}")


def input_from_wire(obj: Json) -> UserInput:
    kind = obj["kind"]
    if kind == "hand_pose":
        return HandPose(pose_from_wire(obj))
    if kind == "grab":
        return Grab(str(obj["part"]))
    if kind == "release":
        return Release()
    if kind == "press":
        return Press(str(obj["action_id"]))
    if kind == "hint":
        return Hint(str(obj["step"]))
    if kind == "skip":
        return Skip(str(obj["step"]))
    if kind == "set_flag":
        return SetFlag(str(obj["name"]))
    raise ValueError(f"unknown input kind {kind!r}")


def score_report_to_wire(report: ScoreReport) -> Json:
    return {
        "total": report.total,
        "steps": [
            {
                "id": s.step_id,
                "status": s.status,
                "score": s.score,
                "time_factor": s.time_factor,
                "accuracy_factor": s.accuracy_factor,
                "hints": s.hints,
                "hint_penalty": s.hint_penalty,
                "skipped": s.skipped,
                "incomplete": s.incomplete,
                "time_used": s.time_used,
                "residual": None
                if s.residual is None
                else {"d_pos": s.residual[0], "d_rot": s.residual[1]},
            }
            for s in report.steps
        ],
    }


def _helper_to_wire(h: HelperFrame) -> Json:
    return {
        "step_id": h.step_id,
        "ghost": None if h.ghost is None else pose_to_wire(h.ghost),
        "trajectory": None if h.trajectory is None else [pose_to_wire(p) for p in h.trajectory],
        "instruction": h.instruction,
        "hint": h.hint,
    }


def frame_to_wire(session: Session, frame: FrameReport, final: ScoreReport | None = None) -> Json:
    bodies = []
    for bid in sorted(session.world.bodies):
        b = session.world.bodies[bid]
        bodies.append({"id": bid, "active": b.active, **pose_to_wire(b.pose)})
    cables = []
    for cid in sorted(session.world.cables):
        cable = session.world.cables[cid]
        cables.append({"id": cid, "nodes": cable.positions.tolist()})
    return {
        "tick": frame.tick,
        "clock": frame.clock,
        "bodies": bodies,
        "cables": cables,
        "step_statuses": {sid: session.steps[sid].status for sid in session.scenario.steps},
        "active_steps": [
            {"id": sid, "instruction": session.scenario.steps[sid].instruction}
            for sid in session.scenario.steps
            if session.steps[sid].status == "active"
        ],
        "helpers": [_helper_to_wire(h) for h in frame.helpers],
        "events": list(frame.fired_events),
        "completed": list(frame.completed),
        "region_entries": [list(e) for e in frame.region_entries],
        "rejected": list(frame.rejected),
        "score_partial": frame.score_partial,
        "finished": frame.finished,
        "final": None if final is None else score_report_to_wire(final),
    }


# --- scenario export ------------------------------------------------------------


def condition_to_wire(c: ConditionExpr) -> Json:
    if isinstance(c, Start):
        return {"op": "start"}
    if isinstance(c, Done):
        return {"op": "done", "step": c.step}
    if isinstance(c, Flag):
        return {"op": "flag", "name": c.name}
    if isinstance(c, Not):
        return {"op": "not", "operand": condition_to_wire(c.operand)}
    if isinstance(c, And):
        return {"op": "and", "operands": [condition_to_wire(o) for o in c.operands]}
    if isinstance(c, Or):
        return {"op": "or", "operands": [condition_to_wire(o) for o in c.operands]}
    raise TypeError(f"not a condition: {c!r}")


def _shape_to_wire(shape) -> Json:
    if isinstance(shape, Sphere):
        return {"kind": "sphere", "radius": shape.radius}
    if isinstance(shape, Box):
        return {"kind": "box", "half_extents": list(shape.half_extents)}
    if isinstance(shape, Capsule):
        return {"kind": "capsule", "radius": shape.radius, "half_height": shape.half_height}
    if isinstance(shape, ConvexHull):
        return {"kind": "hull", "vertices": [list(v) for v in shape.vertices]}
    raise TypeError(f"not a shape: {shape!r}")


def _trigger_to_wire(t) -> Json:
    if isinstance(t, CompletedTrig):
        return {"kind": "completed", "step": t.step}
    if isinstance(t, StartedTrig):
        return {"kind": "started", "step": t.step}
    if isinstance(t, EnteredTrig):
        return {"kind": "entered", "part": t.part, "region": t.region}
    if isinstance(t, FlagSetTrig):
        return {"kind": "flag", "name": t.name}
    if isinstance(t, TimeTrig):
        return {"kind": "time", "seconds": t.seconds}
    raise TypeError(f"not a trigger: {t!r}")


def _event_action_to_wire(a) -> Json:
    if isinstance(a, WeldAct):
        return {"kind": "weld", "part": a.part, "parent": a.parent, "anchor": a.anchor}
    if isinstance(a, UnweldAct):
        return {"kind": "unweld", "part": a.part}
    if isinstance(a, ActivateAct):
        return {"kind": "activate", "entity": a.entity}
    if isinstance(a, DeactivateAct):
        return {"kind": "deactivate", "entity": a.entity}
    if isinstance(a, SetFlagAct):
        return {"kind": "set_flag", "name": a.name}
    if isinstance(a, ParticlesAct):
        return {"kind": "particles", "region": a.region}
    raise TypeError(f"not an event action: {a!r}")


def _euler_pose_to_wire(p) -> Json:
    return {"pos": list(p.position), "rpy": list(p.rpy)}


def _step_to_wire(step) -> Json:
    k = step.kind
    if isinstance(k, PlacingSpec):
        kind: Json = {
            "kind": "placing",
            "part": k.part,
            "target_part": k.target_part,
            "target_anchor": k.target_anchor,
            "pos_tol": k.pos_tol,
            "rot_tol": k.rot_tol,
            "dwell": k.dwell,
        }
    elif isinstance(k, ActionSpec):
        kind = {"kind": "action", "action_id": k.action_id}
    else:
        kind = {"kind": "tooluse", "tool": k.tool, "target": k.target, "contact_time": k.contact_time}
    return {
        "id": step.id,
        **kind,
        "requires": condition_to_wire(step.requires),
        "min_time": step.min_time,
        "par_time": step.par_time,
        "instruction": step.instruction,
        "hint": step.hint,
    }


def _event_to_wire(ev: EventDef) -> Json:
    return {
        "id": ev.id,
        "trigger": _trigger_to_wire(ev.trigger),
        "actions": [_event_action_to_wire(a) for a in ev.actions],
    }


def scenario_to_wire(s: Scenario) -> Json:
    return {
        "name": s.name,
        "environment": s.environment,
        "parts": [
            {
                "id": p.id,
                "shape": _shape_to_wire(p.shape),
                "mass": p.mass,
                "pose": _euler_pose_to_wire(p.initial_pose),
                "grabbable": p.grabbable,
                "anchors": {name: _euler_pose_to_wire(a) for name, a in p.anchors.items()},
                "material": p.material,
            }
            for p in s.parts.values()
        ],
        "steps": [_step_to_wire(st) for st in s.steps.values()],
        "events": [_event_to_wire(ev) for ev in s.events.values()],
        "regions": [
            {"id": r.id, "center": list(r.center), "radius": r.radius, "parent": r.parent}
            for r in s.regions.values()
        ],
        "difficulties": [
            {
                "id": d.id,
                "ghost": d.ghost_enabled,
                "trajectory": d.trajectory_enabled,
                "instructions": d.instructions_enabled,
                "hint_penalty": d.hint_penalty,
                "par_time_scale": d.par_time_scale,
            }
            for d in s.difficulties.values()
        ],
        "materials": [{"a": a, "b": b, "mu": mu} for (a, b), mu in s.materials.items()],
    }
