"""Live execution of a scenario against a physics world.

A session advances in fixed ticks. Each tick applies the user inputs in
order, steps the world, checks active steps for completion (placement dwell,
tool contact accumulation, action presses), re-evaluates locked steps, fires
latching events, and emits a frame with the visual helpers the difficulty
allows. Dwell, contact, and minimum times are counted in whole ticks so that
two runs fed the same inputs agree exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import Pose, pose_error, quat_normalize, quat_slerp, vec_finite
from .model import (
    ActionSpec,
    CompletedTrig,
    DifficultyLevel,
    EnteredTrig,
    FlagSetTrig,
    PlacingSpec,
    Scenario,
    StartedTrig,
    StepDef,
    TimeTrig,
    ToolUseSpec,
    ActivateAct,
    DeactivateAct,
    ParticlesAct,
    SetFlagAct,
    UnweldAct,
    WeldAct,
    evaluate_condition,
)
from .physics import GrabError, WeldError, World, world_from_scenario

LOCKED = "locked"
ACTIVE = "active"
COMPLETED = "completed"
SKIPPED = "skipped"

TRAJECTORY_POINTS = 32


# --- user inputs ---------------------------------------------------------------


@dataclass(frozen=True)
class HandPose:
    pose: Pose


@dataclass(frozen=True)
class Grab:
    part: str


@dataclass(frozen=True)
class Release:
    pass


@dataclass(frozen=True)
class Press:
    action_id: str


@dataclass(frozen=True)
class Hint:
    step: str


@dataclass(frozen=True)
class Skip:
    step: str


@dataclass(frozen=True)
class SetFlag:
    name: str


UserInput = HandPose | Grab | Release | Press | Hint | Skip | SetFlag


# --- per-step live state ---------------------------------------------------------


@dataclass
class StepState:
    status: str = LOCKED
    activated_tick: int | None = None
    in_tol_ticks: int = 0
    in_tolerance_since: float | None = None
    contact_ticks: int = 0
    completed_tick: int | None = None
    residual: tuple[float, float] | None = None
    hints: int = 0
    hint_override: bool = False
    incomplete: bool = False

    @property
    def terminal(self) -> bool:
        return self.status in (COMPLETED, SKIPPED)


@dataclass
class HelperFrame:
    step_id: str
    ghost: Pose | None = None
    trajectory: list[Pose] | None = None
    instruction: str | None = None
    hint: str | None = None


@dataclass
class StepScore:
    step_id: str
    status: str
    score: float
    time_factor: float
    accuracy_factor: float
    hints: int
    hint_penalty: float
    skipped: bool
    incomplete: bool
    time_used: float | None
    residual: tuple[float, float] | None


@dataclass
class ScoreReport:
    total: float
    steps: list[StepScore]


@dataclass
class FrameReport:
    tick: int
    clock: float
    activated: list[str] = field(default_factory=list)
    completed: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    fired_events: list[str] = field(default_factory=list)
    region_entries: list[tuple[str, str]] = field(default_factory=list)
    helpers: list[HelperFrame] = field(default_factory=list)
    rejected: list[str] = field(default_factory=list)
    score_partial: float = 0.0
    finished: bool = False


def _ticks_needed(seconds: float, dt: float) -> int:
    if seconds <= 0.0:
        return 0
    return int(math.ceil(seconds / dt - 1e-9))


def round_half_away(x: float, digits: int = 1) -> float:
    scale = 10.0 ** digits
    return math.floor(x * scale + 0.5) / scale if x >= 0.0 else -math.floor(-x * scale + 0.5) / scale


class SessionError(ValueError):
    pass


class Session:
    def __init__(self, scenario: Scenario, difficulty: str):
        if difficulty not in scenario.difficulties:
            raise SessionError(
                f"unknown difficulty '{difficulty}'; valid: {', '.join(scenario.difficulties)}"
            )
        self.scenario = scenario
        self.difficulty: DifficultyLevel = scenario.difficulties[difficulty]
        self.world: World = world_from_scenario(scenario)
        self.steps: dict[str, StepState] = {sid: StepState() for sid in scenario.steps}
        self.flags: set[str] = set()
        self.fired_events: set[str] = set()
        self.entered_regions: set[tuple[str, str]] = set()
        self.event_log: list[dict] = []
        self.hand_pose: Pose = Pose()
        self.grabbed_part: str | None = None
        self.finalized = False
        self._report: ScoreReport | None = None
        self._pressed: set[str] = set()

        # initial activation, then time-zero events
        for sid, step in scenario.steps.items():
            if evaluate_condition(step.requires, set(), set()):
                self._activate(sid, 0)
        for ev in scenario.events.values():
            if isinstance(ev.trigger, TimeTrig) and ev.trigger.seconds <= 0.0:
                self._fire_event(ev.id, None)

    # -- bookkeeping ------------------------------------------------------------

    @property
    def clock(self) -> float:
        return self.world.tick * self.world.dt

    @property
    def all_terminal(self) -> bool:
        return all(st.terminal for st in self.steps.values())

    def log(self, kind: str, **payload) -> None:
        self.event_log.append({"tick": self.world.tick, "kind": kind, **payload})

    def _activate(self, step_id: str, tick: int) -> None:
        st = self.steps[step_id]
        st.status = ACTIVE
        st.activated_tick = tick
        self.log("activated", step=step_id)

    def completed_set(self) -> set[str]:
        """Step ids that count as done for unlock conditions (skip counts)."""
        return {sid for sid, st in self.steps.items() if st.terminal}

    # -- direct operations (also reachable as inputs) ------------------------------

    def request_hint(self, step_id: str) -> str:
        st = self.steps.get(step_id)
        if st is None or st.status != ACTIVE:
            raise SessionError(f"hint requested for non-active step '{step_id}'")
        st.hints += 1
        st.hint_override = True
        self.log("hint", step=step_id, count=st.hints)
        return self.scenario.steps[step_id].hint

    def skip_step(self, step_id: str) -> None:
        st = self.steps.get(step_id)
        if st is None or st.status != ACTIVE:
            raise SessionError(f"skip requested for non-active step '{step_id}'")
        step = self.scenario.steps[step_id]
        if isinstance(step.kind, PlacingSpec):
            # teleport to target and weld so downstream steps stay doable
            part = step.kind.part
            body = self.world.bodies[part]
            if body.grabbed:
                self.world.detach_grab(part)
                if self.grabbed_part == part:
                    self.grabbed_part = None
            if body.welded_to is not None:
                self.world.remove_weld(part)
            anchor_pose = self.scenario.parts[step.kind.target_part].anchors[
                step.kind.target_anchor
            ].to_pose()
            target_body = self.world.bodies[step.kind.target_part]
            body.pose = target_body.pose.compose(anchor_pose)
            body.velocity = (0.0, 0.0, 0.0)
            body.omega = (0.0, 0.0, 0.0)
            self.world.set_weld(part, step.kind.target_part, anchor_pose)
        st.status = SKIPPED
        st.completed_tick = self.world.tick
        self.log("skipped", step=step_id)

    # -- input application ---------------------------------------------------------

    def _apply_input(self, inp: UserInput, frame: FrameReport) -> None:
        def reject(reason: str) -> None:
            frame.rejected.append(reason)
            self.log("rejected", reason=reason)

        if isinstance(inp, HandPose):
            p = inp.pose
            if not (vec_finite(p.position) and all(math.isfinite(c) for c in p.orientation)):
                reject("hand pose has non-finite components")
                return
            self.hand_pose = Pose(p.position, quat_normalize(p.orientation))
        elif isinstance(inp, Grab):
            if inp.part not in self.world.bodies:
                reject(f"grab of unknown part '{inp.part}'")
                return
            if self.grabbed_part is not None:
                reject(f"grab of '{inp.part}' while holding '{self.grabbed_part}'")
                return
            try:
                auto = self.world.attach_grab(inp.part, self.hand_pose)
            except GrabError as e:
                reject(str(e))
                return
            self.grabbed_part = inp.part
            self.log("grab", part=inp.part, auto_unweld=auto)
        elif isinstance(inp, Release):
            if self.grabbed_part is None:
                reject("release with nothing grabbed")
                return
            self.world.detach_grab(self.grabbed_part)
            self.log("release", part=self.grabbed_part)
            self.grabbed_part = None
        elif isinstance(inp, Press):
            known = any(
                isinstance(st.kind, ActionSpec) and st.kind.action_id == inp.action_id
                for st in self.scenario.steps.values()
            )
            if not known:
                reject(f"press of unknown action '{inp.action_id}'")
                return
            self._pressed.add(inp.action_id)
            self.log("press", action=inp.action_id)
        elif isinstance(inp, Hint):
            try:
                self.request_hint(inp.step)
            except SessionError as e:
                reject(str(e))
        elif isinstance(inp, Skip):
            try:
                self.skip_step(inp.step)
                frame.skipped.append(inp.step)
            except SessionError as e:
                reject(str(e))
        elif isinstance(inp, SetFlag):
            if inp.name not in self.scenario.flag_vocabulary():
                reject(f"set_flag of unknown flag '{inp.name}'")
                return
            if inp.name not in self.flags:
                self.flags.add(inp.name)
                self.log("flag_set", name=inp.name)
        else:
            reject(f"unknown input {inp!r}")

    # -- completion checks -----------------------------------------------------------

    def _target_world_pose(self, spec: PlacingSpec) -> Pose:
        anchor = self.scenario.parts[spec.target_part].anchors[spec.target_anchor].to_pose()
        return self.world.bodies[spec.target_part].pose.compose(anchor)

    def _complete_placing(self, step: StepDef, st: StepState, residual: tuple[float, float]) -> None:
        spec = step.kind
        part = spec.part
        body = self.world.bodies[part]
        if body.grabbed:
            self.world.detach_grab(part)
            if self.grabbed_part == part:
                self.grabbed_part = None
            self.log("release", part=part, forced=True)
        if body.welded_to is not None:
            self.world.remove_weld(part)
        target_body = self.world.bodies[spec.target_part]
        rel = target_body.pose.inverse().compose(body.pose)
        try:
            self.world.set_weld(part, spec.target_part, rel)
        except WeldError as e:
            self.log("rejected", reason=f"completion weld failed: {e}")
        st.residual = residual

    def _check_step_completion(self, tick_contacts, frame: FrameReport) -> None:
        dt = self.world.dt
        tick = self.world.tick
        contact_pairs = {(c.body_a, c.body_b) for c in tick_contacts}

        for sid, step in self.scenario.steps.items():
            st = self.steps[sid]
            if st.status != ACTIVE:
                continue
            elapsed_ok = (tick - st.activated_tick) >= _ticks_needed(step.min_time, dt)
            k = step.kind
            if isinstance(k, PlacingSpec):
                body = self.world.bodies[k.part]
                target = self._target_world_pose(k)
                d_pos, d_rot = pose_error(body.pose, target)
                if d_pos <= k.pos_tol and d_rot <= k.rot_tol:
                    if st.in_tol_ticks == 0:
                        st.in_tolerance_since = self.clock
                    st.in_tol_ticks += 1
                else:
                    st.in_tol_ticks = 0
                    st.in_tolerance_since = None
                dwell_ticks = max(1, _ticks_needed(k.dwell, dt))
                if st.in_tol_ticks >= dwell_ticks and elapsed_ok:
                    st.status = COMPLETED
                    st.completed_tick = tick
                    self._complete_placing(step, st, (d_pos, d_rot))
                    frame.completed.append(sid)
                    self.log("completed", step=sid, d_pos=d_pos, d_rot=d_rot)
            elif isinstance(k, ToolUseSpec):
                a, b = (k.tool, k.target) if k.tool < k.target else (k.target, k.tool)
                if (a, b) in contact_pairs:
                    st.contact_ticks += 1
                if st.contact_ticks >= _ticks_needed(k.contact_time, dt) and elapsed_ok:
                    st.status = COMPLETED
                    st.completed_tick = tick
                    st.residual = None
                    frame.completed.append(sid)
                    self.log("completed", step=sid)
            elif isinstance(k, ActionSpec):
                if k.action_id in self._pressed and elapsed_ok:
                    st.status = COMPLETED
                    st.completed_tick = tick
                    st.residual = None
                    frame.completed.append(sid)
                    self.log("completed", step=sid)

    # -- events ------------------------------------------------------------------

    def _trigger_holds(self, trigger) -> bool:
        if isinstance(trigger, StartedTrig):
            return self.steps[trigger.step].activated_tick is not None
        if isinstance(trigger, CompletedTrig):
            return self.steps[trigger.step].terminal
        if isinstance(trigger, EnteredTrig):
            return (trigger.part, trigger.region) in self.entered_regions
        if isinstance(trigger, FlagSetTrig):
            return trigger.name in self.flags
        if isinstance(trigger, TimeTrig):
            return self.world.tick >= _ticks_needed(trigger.seconds, self.world.dt)
        return False

    def _fire_event(self, event_id: str, frame: FrameReport | None) -> None:
        ev = self.scenario.events[event_id]
        self.fired_events.add(event_id)
        self.log("event_fired", event=event_id)
        if frame is not None:
            frame.fired_events.append(event_id)
        for act in ev.actions:
            if isinstance(act, WeldAct):
                body = self.world.bodies[act.part]
                if body.grabbed:
                    self.log("rejected", reason=f"event weld of grabbed part '{act.part}'")
                    continue
                if body.welded_to is not None:
                    self.world.remove_weld(act.part)
                anchor_pose = self.scenario.parts[act.parent].anchors[act.anchor].to_pose()
                try:
                    parent_body = self.world.bodies[act.parent]
                    body.pose = parent_body.pose.compose(anchor_pose)
                    self.world.set_weld(act.part, act.parent, anchor_pose)
                    self.log("weld", part=act.part, parent=act.parent)
                except WeldError as e:
                    self.log("rejected", reason=str(e))
            elif isinstance(act, UnweldAct):
                body = self.world.bodies[act.part]
                if body.welded_to is not None:
                    self.world.remove_weld(act.part)
                    self.log("unweld", part=act.part)
            elif isinstance(act, ActivateAct):
                self.world.set_active(act.entity, True)
                self.log("activate", entity=act.entity)
            elif isinstance(act, DeactivateAct):
                self.world.set_active(act.entity, False)
                self.log("deactivate", entity=act.entity)
            elif isinstance(act, SetFlagAct):
                if act.name not in self.flags:
                    self.flags.add(act.name)
                    self.log("flag_set", name=act.name)
            elif isinstance(act, ParticlesAct):
                self.log("particles", region=act.region)

    def _fire_pending_events(self, frame: FrameReport) -> None:
        order = (StartedTrig, CompletedTrig, EnteredTrig, FlagSetTrig, TimeTrig)
        for cls in order:
            for ev in self.scenario.events.values():
                if ev.id in self.fired_events or not isinstance(ev.trigger, cls):
                    continue
                if self._trigger_holds(ev.trigger):
                    self._fire_event(ev.id, frame)

    # -- helpers -------------------------------------------------------------------

    def _build_helpers(self) -> list[HelperFrame]:
        out = []
        diff = self.difficulty
        for sid, step in self.scenario.steps.items():
            st = self.steps[sid]
            if st.status != ACTIVE:
                continue
            helper = HelperFrame(step_id=sid)
            if diff.instructions_enabled:
                helper.instruction = step.instruction
            if st.hints > 0:
                helper.hint = step.hint
            if isinstance(step.kind, PlacingSpec):
                show = diff.ghost_enabled or st.hint_override
                target = self._target_world_pose(step.kind)
                if show:
                    helper.ghost = target
                if diff.trajectory_enabled or st.hint_override:
                    body = self.world.bodies[step.kind.part]
                    pts = []
                    for i in range(TRAJECTORY_POINTS):
                        t = i / (TRAJECTORY_POINTS - 1)
                        pts.append(
                            Pose(
                                (
                                    body.pose.position[0]
                                    + (target.position[0] - body.pose.position[0]) * t,
                                    body.pose.position[1]
                                    + (target.position[1] - body.pose.position[1]) * t,
                                    body.pose.position[2]
                                    + (target.position[2] - body.pose.position[2]) * t,
                                ),
                                quat_slerp(body.pose.orientation, target.orientation, t),
                            )
                        )
                    helper.trajectory = pts
            out.append(helper)
        return out

    # -- scoring -------------------------------------------------------------------

    def score_step(self, step_id: str) -> StepScore:
        step = self.scenario.steps[step_id]
        st = self.steps[step_id]
        diff = self.difficulty
        dt = self.world.dt
        if st.status == SKIPPED:
            return StepScore(step_id, st.status, 0.0, 0.0, 0.0, st.hints, diff.hint_penalty, True, False, None, None)
        if st.status != COMPLETED:
            return StepScore(step_id, st.status, 0.0, 0.0, 0.0, st.hints, diff.hint_penalty, False, True, None, None)
        t = (st.completed_tick - st.activated_tick) * dt
        par = step.par_time * diff.par_time_scale
        if t <= par:
            tf = 1.0
        else:
            tf = max(0.5, 1.0 - 0.5 * (t - par) / par)
        af = 1.0
        if isinstance(step.kind, PlacingSpec) and st.residual is not None:
            d_pos, d_rot = st.residual
            af = 1.0 - 0.25 * (d_pos / step.kind.pos_tol + d_rot / step.kind.rot_tol)
        raw = 100.0 * tf * af - diff.hint_penalty * st.hints
        score = min(100.0, max(0.0, raw))
        return StepScore(
            step_id, st.status, score, tf, af, st.hints, diff.hint_penalty, False, False, t, st.residual
        )

    def partial_score(self) -> float:
        n = len(self.steps)
        if n == 0:
            return 0.0
        total = 0.0
        for sid, st in self.steps.items():
            if st.terminal:
                total += self.score_step(sid).score
        return total / n

    def finalize(self, abandon: bool = False) -> ScoreReport:
        if self._report is not None:
            return self._report
        if not abandon and not self.all_terminal:
            raise SessionError("cannot finalize: steps still open (pass abandon=True)")
        scores = []
        for sid in self.scenario.steps:
            st = self.steps[sid]
            if not st.terminal:
                st.incomplete = True
            scores.append(self.score_step(sid))
        total = round_half_away(sum(s.score for s in scores) / len(scores), 1) if scores else 0.0
        self._report = ScoreReport(total=total, steps=scores)
        self.finalized = True
        return self._report

    # -- main tick -------------------------------------------------------------------

    def tick(self, inputs: list[UserInput] | None = None) -> FrameReport:
        if self.finalized:
            raise SessionError("session is finalized")
        frame = FrameReport(tick=self.world.tick + 1, clock=(self.world.tick + 1) * self.world.dt)
        self._pressed: set[str] = set()

        for inp in inputs or []:
            self._apply_input(inp, frame)

        report = self.world.step(self.hand_pose)
        for (part, region) in report.region_entries:
            self.entered_regions.add((part, region))
            frame.region_entries.append((part, region))
            self.log("region_entered", part=part, region=region)

        self._check_step_completion(report.contacts, frame)

        completed = self.completed_set()
        for sid, step in self.scenario.steps.items():
            st = self.steps[sid]
            if st.status == LOCKED and evaluate_condition(step.requires, completed, self.flags):
                self._activate(sid, self.world.tick)
                frame.activated.append(sid)

        self._fire_pending_events(frame)

        frame.helpers = self._build_helpers()
        frame.score_partial = self.partial_score()
        frame.finished = self.all_terminal
        return frame


def start_session(scenario: Scenario, difficulty: str) -> Session:
    return Session(scenario, difficulty)
