"""Session lifecycle: activation, completion, events, helpers, scoring."""

import math
import random

import pytest

from itx.geometry import Pose, pose_error
from itx.lang import parse
from itx.model import evaluate_condition
from itx.session import (
    ACTIVE,
    COMPLETED,
    LOCKED,
    SKIPPED,
    Grab,
    HandPose,
    Hint,
    Press,
    Release,
    Session,
    SessionError,
    SetFlag,
    Skip,
    round_half_away,
)

DT = 1.0 / 120.0


def make_session(src: str, difficulty: str | None = None) -> Session:
    r = parse(src)
    assert r.ok, [d.message for d in r.diagnostics]
    return Session(r.scenario, difficulty or next(iter(r.scenario.difficulties)))


PLACING_SRC = """
scenario "place" {
  part base {
    shape = box(0.5, 0.5, 0.05);
    mass = 0;
    pose = (0, 0, 0.5) rpy(0, 0, 0);
    anchor seat = (0, 0, 0.2) rpy(0, 0, 0);
  }
  part widget {
    shape = box(0.05, 0.05, 0.05);
    mass = 0.5;
    pose = (1, 0, 1) rpy(0, 0, 0);
    grabbable = true;
  }
  step put : placing {
    part = widget;
    target = anchor(base, seat);
    tol = pos 0.02 rot 10 deg;
    dwell = 1;
    requires = start;
    par_time = 30;
    instruction = "put it";
    hint = "grab and place";
  }
  step after : action {
    action_id = done_btn;
    requires = done(put);
    par_time = 10;
    instruction = "press";
    hint = "press it";
  }
  difficulty d { ghost = true; trajectory = true; instructions = true; hint_penalty = 15; par_time_scale = 1; }
}
"""

TARGET = (0.0, 0.0, 0.7)  # base pose + seat anchor


class TestStart:
    def test_initial_activation(self):
        s = make_session(PLACING_SRC)
        assert s.steps["put"].status == ACTIVE
        assert s.steps["after"].status == LOCKED

    def test_unknown_difficulty(self):
        r = parse(PLACING_SRC)
        with pytest.raises(SessionError) as err:
            Session(r.scenario, "nope")
        assert "d" in str(err.value)

    def test_laser_corpus_starts_with_power_off(self, laser_scenario):
        s = Session(laser_scenario, "standard")
        active = [sid for sid, st in s.steps.items() if st.status == ACTIVE]
        assert active == ["turn_off"]


def drive_to_target(s: Session, settle: int = 0):
    s.tick([HandPose(Pose((1, 0, 1))), Grab("widget")])
    s.tick([HandPose(Pose(TARGET))])
    for _ in range(settle):
        s.tick([])


class TestPlacing:
    def test_completes_on_120th_in_tolerance_tick(self):
        s = make_session(PLACING_SRC)
        drive_to_target(s)
        # in tolerance starting at this tick; dwell 1 s = 120 ticks
        ticks_in_tol = 1
        while s.steps["put"].status == ACTIVE:
            s.tick([])
            ticks_in_tol += 1
            assert ticks_in_tol < 200
        assert s.steps["put"].status == COMPLETED
        assert ticks_in_tol == 120

    def test_never_completes_just_outside_rot_tol(self):
        s = make_session(PLACING_SRC)
        rot_tol = s.scenario.steps["put"].kind.rot_tol
        angle = rot_tol + 1e-6
        q = (math.cos(angle / 2), 0.0, 0.0, math.sin(angle / 2))
        s.tick([HandPose(Pose((1, 0, 1))), Grab("widget")])
        s.tick([HandPose(Pose(TARGET, q))])
        for _ in range(300):
            s.tick([])
        assert s.steps["put"].status == ACTIVE
        assert s.steps["put"].in_tol_ticks == 0

    def test_completion_welds_and_unlocks(self):
        s = make_session(PLACING_SRC)
        drive_to_target(s, settle=130)
        assert s.steps["put"].status == COMPLETED
        assert s.world.bodies["widget"].welded_to == "base"
        assert s.grabbed_part is None  # force-released
        assert s.steps["after"].status == ACTIVE
        assert s.steps["put"].residual == (0.0, 0.0)

    def test_min_time_gates_completion(self):
        src = PLACING_SRC.replace("requires = start;", "requires = start;\n    min_time = 3;")
        s = make_session(src)
        drive_to_target(s, settle=130)
        assert s.steps["put"].status == ACTIVE  # dwell done but min_time not
        for _ in range(240):
            s.tick([])
        assert s.steps["put"].status == COMPLETED


TOOLUSE_SRC = """
scenario "wipe" {
  part target_plate { shape = box(0.2, 0.2, 0.01); mass = 0; pose = (0, 0, 0.5) rpy(0, 0, 0); }
  part rag { shape = box(0.05, 0.05, 0.01); mass = 0.1; pose = (1, 0, 0.6) rpy(0, 0, 0); grabbable = true; }
  step wipe : tooluse {
    tool = rag;
    target = target_plate;
    contact_time = 0.5;
    requires = start;
    par_time = 20;
    instruction = "wipe";
    hint = "rub it";
  }
  difficulty d { ghost = true; trajectory = true; instructions = true; hint_penalty = 15; par_time_scale = 1; }
}
"""


class TestToolUse:
    def test_contact_accumulation(self):
        s = make_session(TOOLUSE_SRC)
        s.tick([HandPose(Pose((1, 0, 0.6))), Grab("rag")])
        s.tick([HandPose(Pose((0, 0, 0.505)))])  # overlapping the plate
        ticks = 0
        while s.steps["wipe"].status == ACTIVE:
            s.tick([])
            ticks += 1
            assert ticks < 120
        assert s.steps["wipe"].status == COMPLETED
        assert s.steps["wipe"].contact_ticks == 60  # 0.5 s at dt=1/120

    def test_no_accumulation_without_contact(self):
        s = make_session(TOOLUSE_SRC)
        s.tick([HandPose(Pose((1, 0, 0.6))), Grab("rag")])
        for _ in range(100):
            s.tick([])
        assert s.steps["wipe"].contact_ticks == 0


class TestActionAndInputs:
    def test_press_completes(self, minimal_scenario):
        s = Session(minimal_scenario, "default")
        s.tick([Press("go")])
        assert s.steps["go"].status == COMPLETED

    def test_unknown_press_rejected(self, minimal_scenario):
        s = Session(minimal_scenario, "default")
        frame = s.tick([Press("nothing")])
        assert frame.rejected
        assert s.steps["go"].status == ACTIVE

    def test_min_time_blocks_early_press(self):
        src = TOOLUSE_SRC  # reuse parts; build a fresh action scenario
        src = """
scenario "t" {
  part p { shape = sphere(0.1); mass = 0; pose = (0,0,0) rpy(0,0,0); }
  step a : action { action_id = go; requires = start; min_time = 1; par_time = 10; instruction = "x"; hint = "h"; }
  event use_p { when = completed(a); do = activate(p); }
  difficulty d { hint_penalty = 10; par_time_scale = 1; }
}
"""
        s = make_session(src)
        s.tick([Press("go")])
        assert s.steps["a"].status == ACTIVE  # pressed before min_time
        for _ in range(130):
            s.tick([])
        assert s.steps["a"].status == ACTIVE  # press does not latch
        s.tick([Press("go")])
        assert s.steps["a"].status == COMPLETED

    def test_single_grab_at_a_time(self):
        s = make_session(PLACING_SRC)
        s.tick([HandPose(Pose((1, 0, 1))), Grab("widget")])
        frame = s.tick([Grab("widget")])
        assert frame.rejected

    def test_set_flag_input_vocabulary(self, laser_scenario):
        s = Session(laser_scenario, "standard")
        frame = s.tick([SetFlag("powered_off")])
        assert "powered_off" in s.flags
        frame = s.tick([SetFlag("made_up")])
        assert frame.rejected


class TestHintsAndSkips:
    def test_hint_counts_and_text(self):
        s = make_session(PLACING_SRC)
        text = s.request_hint("put")
        assert text == "grab and place"
        assert s.steps["put"].hints == 1

    def test_hint_on_locked_step_errors(self):
        s = make_session(PLACING_SRC)
        with pytest.raises(SessionError):
            s.request_hint("after")

    def test_two_hints_score_70(self):
        s = make_session(PLACING_SRC)
        s.tick([HandPose(Pose((1, 0, 1))), Grab("widget"), Hint("put"), Hint("put")])
        s.tick([HandPose(Pose(TARGET))])
        for _ in range(130):
            s.tick([])
        assert s.steps["put"].status == COMPLETED
        score = s.score_step("put")
        assert score.score == 70.0  # 100 - 2*15

    def test_skip_teleports_welds_unlocks(self):
        s = make_session(PLACING_SRC)
        s.tick([])
        s.tick([Skip("put")])
        body = s.world.bodies["widget"]
        assert s.steps["put"].status == SKIPPED
        assert body.welded_to == "base"
        d_pos, d_rot = pose_error(body.pose, Pose(TARGET))
        assert d_pos < 1e-12 and d_rot < 1e-12
        assert s.steps["after"].status == ACTIVE

    def test_skip_then_perfect_other_step_totals_50(self):
        s = make_session(PLACING_SRC)
        s.tick([Skip("put")])
        s.tick([Press("done_btn")])
        assert s.all_terminal
        report = s.finalize()
        assert report.total == 50.0


class TestScoring:
    def test_time_factor_floor_at_double_par(self):
        s = make_session(PLACING_SRC)
        st = s.steps["put"]
        st.status = COMPLETED
        st.activated_tick = 0
        st.completed_tick = int(60.0 / DT)  # t = 2*par (par 30)
        st.residual = (0.0, 0.0)
        assert s.score_step("put").score == 50.0

    def test_accuracy_factor_at_tolerance_is_half(self):
        s = make_session(PLACING_SRC)
        st = s.steps["put"]
        spec = s.scenario.steps["put"].kind
        st.status = COMPLETED
        st.activated_tick = 0
        st.completed_tick = 10
        st.residual = (spec.pos_tol, spec.rot_tol)
        sc = s.score_step("put")
        assert abs(sc.accuracy_factor - 0.5) < 1e-12
        assert abs(sc.score - 50.0) < 1e-9

    def test_score_clamped_at_zero(self):
        s = make_session(PLACING_SRC)
        st = s.steps["put"]
        st.status = COMPLETED
        st.activated_tick = 0
        st.completed_tick = 10
        st.residual = (0.0, 0.0)
        st.hints = 10  # 150 points of penalty
        assert s.score_step("put").score == 0.0

    def test_round_half_away(self):
        assert round_half_away(89.16666666, 1) == 89.2
        assert round_half_away(99.95, 1) == 100.0
        assert round_half_away(0.04999, 1) == 0.0

    def test_finalize_requires_terminal_or_abandon(self):
        s = make_session(PLACING_SRC)
        with pytest.raises(SessionError):
            s.finalize()
        report = s.finalize(abandon=True)
        assert report.total == 0.0
        assert all(step.incomplete for step in report.steps)


EVENTS_SRC = """
scenario "ev" {
  part stand { shape = box(0.2, 0.2, 0.4); mass = 0; pose = (0, 0, 0.4) rpy(0, 0, 0); anchor top = (0, 0, 0.5) rpy(0, 0, 0); }
  part ball { shape = sphere(0.05); mass = 0.2; pose = (0, 0, 0.9) rpy(0, 0, 0); grabbable = true; }
  part probe { shape = sphere(0.03); mass = 0.1; pose = (1, 0, 1) rpy(0, 0, 0); grabbable = true; }
  step begin : action { action_id = go; requires = start; par_time = 10; instruction = "x"; hint = "h"; }
  step use_flag : action { action_id = fin; requires = flag(dropped); par_time = 10; instruction = "x"; hint = "h"; }
  event mount { when = time(0); do = weld(ball, stand.top); }
  event drop_ball { when = completed(begin); do = unweld(ball), set_flag(dropped); }
  event spot { when = entered(probe, zone); do = particles(zone), deactivate(probe); }
  region zone = sphere((0, 0, 1.2), 0.1);
  difficulty d { hint_penalty = 10; par_time_scale = 1; }
}
"""


class TestEvents:
    def test_time_zero_weld_fires_at_start(self):
        s = make_session(EVENTS_SRC)
        assert "mount" in s.fired_events
        assert s.world.bodies["ball"].welded_to == "stand"
        assert s.world.bodies["ball"].pose.position == (0.0, 0.0, 0.9)

    def test_completion_event_unwelds_and_sets_flag(self):
        s = make_session(EVENTS_SRC)
        s.tick([Press("go")])
        assert "drop_ball" in s.fired_events
        assert s.world.bodies["ball"].welded_to is None
        assert "dropped" in s.flags
        s.tick([])
        assert s.steps["use_flag"].status == ACTIVE
        # the ball is dynamic now and falls
        z0 = s.world.bodies["ball"].pose.position[2]
        for _ in range(30):
            s.tick([])
        assert s.world.bodies["ball"].pose.position[2] < z0

    def test_events_fire_once(self):
        s = make_session(EVENTS_SRC)
        s.tick([Press("go")])
        log_fires = [e for e in s.event_log if e["kind"] == "event_fired"]
        for _ in range(60):
            s.tick([])
        log_fires2 = [e for e in s.event_log if e["kind"] == "event_fired"]
        assert len(log_fires2) == len(log_fires)
        assert len({e["event"] for e in log_fires2}) == len(log_fires2)

    def test_region_entry_triggers_particles_and_deactivate(self):
        s = make_session(EVENTS_SRC)
        s.tick([HandPose(Pose((1, 0, 1))), Grab("probe")])
        s.tick([HandPose(Pose((0, 0, 1.2)))])
        assert "spot" in s.fired_events
        assert not s.world.bodies["probe"].active
        assert any(e["kind"] == "particles" for e in s.event_log)


class TestHelpers:
    def test_helpers_present_when_enabled(self):
        s = make_session(PLACING_SRC)
        frame = s.tick([])
        helper = next(h for h in frame.helpers if h.step_id == "put")
        assert helper.ghost is not None
        assert helper.ghost.position == TARGET
        assert helper.trajectory is not None and len(helper.trajectory) == 32
        assert helper.trajectory[0].position == s.world.bodies["widget"].pose.position
        assert helper.trajectory[-1].position == TARGET
        assert helper.instruction == "put it"
        assert helper.hint is None

    def test_helpers_gated_by_difficulty(self):
        src = PLACING_SRC.replace(
            "difficulty d { ghost = true; trajectory = true; instructions = true;",
            "difficulty d { ghost = false; trajectory = false; instructions = false;",
        )
        s = make_session(src)
        frame = s.tick([])
        helper = next(h for h in frame.helpers if h.step_id == "put")
        assert helper.ghost is None and helper.trajectory is None and helper.instruction is None

    def test_hint_overrides_ghost_and_trajectory(self):
        src = PLACING_SRC.replace(
            "difficulty d { ghost = true; trajectory = true; instructions = true;",
            "difficulty d { ghost = false; trajectory = false; instructions = false;",
        )
        s = make_session(src)
        s.tick([Hint("put")])
        frame = s.tick([])
        helper = next(h for h in frame.helpers if h.step_id == "put")
        assert helper.ghost is not None and helper.trajectory is not None
        assert helper.hint == "grab and place"
        assert helper.instruction is None  # hint does not force instructions


class TestProperties:
    def test_status_monotonicity_random_traces(self, laser_scenario):
        rng = random.Random(42)
        parts = [p for p in laser_scenario.parts if laser_scenario.parts[p].grabbable]
        steps = list(laser_scenario.steps)
        for _ in range(10):
            s = Session(laser_scenario, "standard")
            terminal_seen: dict[str, str] = {}
            for _ in range(120):
                inputs = []
                roll = rng.random()
                if roll < 0.3:
                    inputs.append(
                        HandPose(
                            Pose(
                                (
                                    rng.uniform(-1, 2),
                                    rng.uniform(-1, 1),
                                    rng.uniform(0.3, 1.2),
                                )
                            )
                        )
                    )
                elif roll < 0.45:
                    inputs.append(Grab(rng.choice(parts)))
                elif roll < 0.55:
                    inputs.append(Release())
                elif roll < 0.7:
                    inputs.append(Press("power_switch"))
                elif roll < 0.8:
                    inputs.append(Skip(rng.choice(steps)))
                elif roll < 0.9:
                    inputs.append(Hint(rng.choice(steps)))
                s.tick(inputs)
                for sid, st in s.steps.items():
                    if sid in terminal_seen:
                        assert st.status == terminal_seen[sid]
                    elif st.terminal:
                        terminal_seen[sid] = st.status
                partial = s.partial_score()
                assert 0.0 <= partial <= 100.0

    def test_unlock_soundness_from_event_log(self, laser_scenario):
        """Re-check every activation against an independent replay of the log."""
        import sys

        sys.path.insert(0, "tests")
        from trace_builder import laser_cutter_trace
        from itx.replay import run_session

        res = run_session(laser_scenario, "standard", laser_cutter_trace())
        completed: set[str] = set()
        flags: set[str] = set()
        for entry in res.session.event_log:
            kind = entry["kind"]
            if kind == "activated":
                step = laser_scenario.steps[entry["step"]]
                assert evaluate_condition(step.requires, completed, flags), entry
            elif kind in ("completed", "skipped"):
                completed.add(entry["step"])
            elif kind == "flag_set":
                flags.add(entry["name"])

    def test_hint_never_increases_score(self):
        s = make_session(PLACING_SRC)
        st = s.steps["put"]
        st.status = COMPLETED
        st.activated_tick = 0
        st.completed_tick = 100
        st.residual = (0.005, 0.01)
        base = s.score_step("put").score
        for hints in range(1, 5):
            st.hints = hints
            assert s.score_step("put").score <= base
            base = s.score_step("put").score
