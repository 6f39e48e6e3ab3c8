"""Deterministic recording and replay with state hashing.

Trace/replay files are JSON Lines (UTF-8, snake_case, SI units, quaternions
w,x,y,z): an optional header line, one record per input
(`{"tick": N, "input": {...}}`), checkpoint lines every 120 ticks
(`{"checkpoint": {"tick": N, "hash": "hex16"}}`), and a final score report.
State hashes are 64-bit FNV-1a over the canonical world serialization
followed by the session-status serialization (statuses in scenario order,
flags sorted, clock tick). Scenario identity is hashed over the canonical
formatted text, so reformatting a file never invalidates its replays.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

from . import __version__
from .lang import format_canonical
from .model import Scenario
from .session import (
    ACTIVE,
    COMPLETED,
    LOCKED,
    SKIPPED,
    FrameReport,
    Grab,
    HandPose,
    Hint,
    Press,
    Release,
    ScoreReport,
    Session,
    SetFlag,
    Skip,
    UserInput,
)
from .wire import input_from_wire, input_to_wire, score_report_to_wire

CHECKPOINT_INTERVAL = 120

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes, h: int = _FNV_OFFSET) -> int:
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


_STATUS_TAG = {LOCKED: 0, ACTIVE: 1, COMPLETED: 2, SKIPPED: 3}


def session_status_bytes(session: Session) -> bytes:
    out = bytearray()
    for sid in session.scenario.steps:
        st = session.steps[sid]
        out.append(_STATUS_TAG[st.status])
        out += struct.pack(
            "<iiiii",
            -1 if st.activated_tick is None else st.activated_tick,
            st.in_tol_ticks,
            st.contact_ticks,
            -1 if st.completed_tick is None else st.completed_tick,
            st.hints,
        )
        if st.residual is not None:
            out += struct.pack("<2d", st.residual[0], st.residual[1])
        else:
            out += struct.pack("<2d", -1.0, -1.0)
    for flag in sorted(session.flags):
        out += flag.encode("utf-8")
        out.append(0)
    out += struct.pack("<Q", session.world.tick)
    return bytes(out)


def state_hash(session: Session) -> int:
    h = fnv1a64(session.world.serialize())
    return fnv1a64(session_status_bytes(session), h)


def state_hash_hex(session: Session) -> str:
    return f"{state_hash(session):016x}"


def scenario_hash(scenario: Scenario) -> str:
    return f"{fnv1a64(format_canonical(scenario).encode('utf-8')):016x}"


# --- trace records ----------------------------------------------------------------


@dataclass(frozen=True)
class TraceRecord:
    tick: int
    input: UserInput


@dataclass
class ReplayLog:
    scenario_name: str
    scenario_hash: str
    difficulty: str
    dt: float
    engine_version: str = __version__
    records: list[TraceRecord] = field(default_factory=list)
    checkpoints: dict[int, str] = field(default_factory=dict)
    final_report: ScoreReport | None = None

    def to_jsonl(self) -> str:
        lines = [
            json.dumps(
                {
                    "header": {
                        "scenario_name": self.scenario_name,
                        "scenario_hash": self.scenario_hash,
                        "difficulty": self.difficulty,
                        "dt": self.dt,
                        "engine_version": self.engine_version,
                    }
                },
                separators=(",", ":"),
            )
        ]
        ticks_with_cp = sorted(self.checkpoints)
        cp_idx = 0
        for rec in self.records:
            while cp_idx < len(ticks_with_cp) and ticks_with_cp[cp_idx] < rec.tick:
                t = ticks_with_cp[cp_idx]
                lines.append(
                    json.dumps({"checkpoint": {"tick": t, "hash": self.checkpoints[t]}}, separators=(",", ":"))
                )
                cp_idx += 1
            lines.append(
                json.dumps({"tick": rec.tick, "input": input_to_wire(rec.input)}, separators=(",", ":"))
            )
        while cp_idx < len(ticks_with_cp):
            t = ticks_with_cp[cp_idx]
            lines.append(
                json.dumps({"checkpoint": {"tick": t, "hash": self.checkpoints[t]}}, separators=(",", ":"))
            )
            cp_idx += 1
        if self.final_report is not None:
            lines.append(json.dumps({"final": score_report_to_wire(self.final_report)}, separators=(",", ":")))
        return "\n".join(lines) + "\n"


class TraceFormatError(ValueError):
    pass


def parse_trace(text: str) -> ReplayLog:
    """Parse a JSONL trace/replay file; header and checkpoints are optional."""
    log = ReplayLog(scenario_name="", scenario_hash="", difficulty="", dt=1.0 / 120.0)
    records: list[TraceRecord] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise TraceFormatError(f"line {lineno}: invalid JSON: {e}") from None
        if "header" in obj:
            h = obj["header"]
            log.scenario_name = h.get("scenario_name", "")
            log.scenario_hash = h.get("scenario_hash", "")
            log.difficulty = h.get("difficulty", "")
            log.dt = float(h.get("dt", 1.0 / 120.0))
            log.engine_version = h.get("engine_version", "")
        elif "checkpoint" in obj:
            cp = obj["checkpoint"]
            log.checkpoints[int(cp["tick"])] = str(cp["hash"])
        elif "final" in obj:
            pass  # regenerated on replay; compared via wire encoding
        elif "tick" in obj and "input" in obj:
            try:
                inp = input_from_wire(obj["input"])
            except (KeyError, TypeError, ValueError) as e:
                raise TraceFormatError(f"line {lineno}: bad input: {e}") from None
            records.append(TraceRecord(int(obj["tick"]), inp))
        else:
            raise TraceFormatError(f"line {lineno}: unrecognized record")
    records.sort(key=lambda r: r.tick)  # stable: file order within a tick
    log.records = records
    return log


def _final_wire(obj) -> dict | None:
    for line in obj.splitlines():
        line = line.strip()
        if line:
            parsed = json.loads(line)
            if "final" in parsed:
                return parsed["final"]
    return None


# --- record / run / replay -----------------------------------------------------------


@dataclass
class RunResult:
    session: Session
    log: ReplayLog
    report: ScoreReport
    frames: list[FrameReport]


def run_session(
    scenario: Scenario,
    difficulty: str,
    records: list[TraceRecord],
    max_ticks: int | None = None,
    collect_frames: bool = False,
) -> RunResult:
    """Execute a trace: tick until every step is terminal or the budget ends.

    Inputs stamped with tick k are applied during the k-th tick. The default
    budget allows a 10-second grace period after the last input.
    """
    session = Session(scenario, difficulty)
    by_tick: dict[int, list[UserInput]] = {}
    for rec in records:
        by_tick.setdefault(max(1, rec.tick), []).append(rec.input)
    last_input = max(by_tick) if by_tick else 0
    if max_ticks is None:
        max_ticks = last_input + CHECKPOINT_INTERVAL * 10

    log = ReplayLog(
        scenario_name=scenario.name,
        scenario_hash=scenario_hash(scenario),
        difficulty=difficulty,
        dt=session.world.dt,
        records=[TraceRecord(max(1, r.tick), r.input) for r in records],
    )
    frames: list[FrameReport] = []
    finished_at: int | None = None
    while session.world.tick < max_ticks:
        tick_no = session.world.tick + 1
        frame = session.tick(by_tick.get(tick_no, []))
        if collect_frames:
            frames.append(frame)
        if tick_no % CHECKPOINT_INTERVAL == 0:
            log.checkpoints[tick_no] = state_hash_hex(session)
        if session.all_terminal and tick_no >= last_input:
            finished_at = tick_no
            break
    report = session.finalize(abandon=finished_at is None)
    log.final_report = report
    return RunResult(session=session, log=log, report=report, frames=frames)


@dataclass
class ReplayOutcome:
    ok: bool
    divergent_tick: int | None = None
    reason: str = ""


def replay(log: ReplayLog, scenario: Scenario, difficulty: str | None = None) -> ReplayOutcome:
    """Re-execute a log and compare every checkpoint plus the final report."""
    want_hash = log.scenario_hash
    have_hash = scenario_hash(scenario)
    if want_hash and want_hash != have_hash:
        return ReplayOutcome(False, None, f"scenario hash mismatch: log {want_hash}, file {have_hash}")
    diff = difficulty or log.difficulty
    last_cp = max(log.checkpoints) if log.checkpoints else 0

    session = Session(scenario, diff)
    by_tick: dict[int, list[UserInput]] = {}
    for rec in log.records:
        by_tick.setdefault(max(1, rec.tick), []).append(rec.input)
    last_input = max(by_tick) if by_tick else 0
    horizon = max(last_cp, last_input + CHECKPOINT_INTERVAL * 10)

    finished = False
    while session.world.tick < horizon:
        tick_no = session.world.tick + 1
        session.tick(by_tick.get(tick_no, []))
        if tick_no in log.checkpoints:
            if state_hash_hex(session) != log.checkpoints[tick_no]:
                return ReplayOutcome(False, tick_no, f"checkpoint mismatch at tick {tick_no}")
        if session.all_terminal and tick_no >= last_input and tick_no >= last_cp:
            finished = True
            break
    report = session.finalize(abandon=not finished)
    if log.final_report is not None:
        if score_report_to_wire(report) != score_report_to_wire(log.final_report):
            return ReplayOutcome(False, session.world.tick, "final report mismatch")
    return ReplayOutcome(True)


def record(scenario: Scenario, difficulty: str, records: list[TraceRecord], **kwargs) -> ReplayLog:
    return run_session(scenario, difficulty, records, **kwargs).log
