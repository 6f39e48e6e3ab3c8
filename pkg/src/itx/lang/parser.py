"""Recursive-descent parser for scenario source text.

Error handling contract: any input (including arbitrary bytes) produces a
ParseResult; the parser never raises. On a syntax error inside a block it
records a diagnostic and skips to the matching close brace, so one pass can
report several independent problems. A scenario value is present only when
no error-severity diagnostics were produced.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..diagnostics import Diagnostic, SourceSpan, error, has_errors
from ..geometry import DEG2RAD, Vec3
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
    validate_scenario,
)
from .lexer import EOF, IDENT, NUMBER, PUNCT, STRING, Token, tokenize

DeclSpans = dict[tuple[str, str], SourceSpan]


@dataclass
class ParseResult:
    scenario: Scenario | None
    diagnostics: list[Diagnostic]
    decl_spans: DeclSpans = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.scenario is not None


@dataclass(frozen=True)
class _Ref:
    """A reference site to be resolved after the whole file is parsed."""

    kind: str  # step | flag | part | region | entity | anchor
    name: str
    span: SourceSpan
    where: str
    anchor: str = ""


class _Parser:
    def __init__(self, tokens: list[Token], diags: list[Diagnostic]):
        self.tokens = tokens
        self.pos = 0
        self.diags = diags
        self.refs: list[_Ref] = []
        self.decl_spans: DeclSpans = {}
        self.flag_defs: set[str] = set()

        self.name = ""
        self.environment = ""
        self.parts: dict[str, PartDef] = {}
        self.steps: dict[str, StepDef] = {}
        self.events: dict[str, EventDef] = {}
        self.regions: dict[str, Region] = {}
        self.difficulties: dict[str, DifficultyLevel] = {}
        self.materials: dict[tuple[str, str], float] = {}
        self.item_order: list[tuple[str, str]] = []

    # -- token helpers --------------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != EOF:
            self.pos += 1
        return tok

    def at(self, kind: str, value: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (value is None or tok.text == value)

    def accept(self, kind: str, value: str | None = None) -> Token | None:
        if self.at(kind, value):
            return self.advance()
        return None

    def expect(self, kind: str, value: str | None = None, what: str = "") -> Token | None:
        if self.at(kind, value):
            return self.advance()
        tok = self.peek()
        wanted = what or (value if value else kind)
        found = tok.text if tok.kind != EOF else "end of input"
        self.error(f"expected {wanted}, found {found!r}", tok.span)
        return None

    def error(self, message: str, span: SourceSpan, code: str = "E_SYNTAX") -> None:
        self.diags.append(error(code, message, span=span))

    # -- recovery -------------------------------------------------------------

    def skip_to_semicolon(self) -> None:
        """Consume up to and including the next ';' at depth 0 of this item."""
        depth = 0
        while not self.at(EOF):
            tok = self.peek()
            if tok.kind == PUNCT:
                if tok.text == "{":
                    depth += 1
                elif tok.text == "}":
                    if depth == 0:
                        return  # let the block loop see the close brace
                    depth -= 1
                elif tok.text == ";" and depth == 0:
                    self.advance()
                    return
            self.advance()

    def skip_block(self) -> None:
        """Consume tokens until the matching '}' of an already-open block."""
        depth = 1
        while not self.at(EOF):
            tok = self.advance()
            if tok.kind == PUNCT:
                if tok.text == "{":
                    depth += 1
                elif tok.text == "}":
                    depth -= 1
                    if depth == 0:
                        return

    # -- value parsers --------------------------------------------------------

    def parse_number(self) -> float | None:
        tok = self.expect(NUMBER, what="number")
        return None if tok is None else float(tok.value)  # type: ignore[arg-type]

    def parse_ident(self, what: str = "identifier") -> str | None:
        tok = self.expect(IDENT, what=what)
        return None if tok is None else tok.text

    def parse_bool(self) -> bool | None:
        tok = self.expect(IDENT, what="true or false")
        if tok is None:
            return None
        if tok.text == "true":
            return True
        if tok.text == "false":
            return False
        self.error(f"expected true or false, found {tok.text!r}", tok.span)
        return None

    def parse_vec3(self) -> Vec3 | None:
        if self.expect(PUNCT, "(") is None:
            return None
        x = self.parse_number()
        self.expect(PUNCT, ",")
        y = self.parse_number()
        self.expect(PUNCT, ",")
        z = self.parse_number()
        if self.expect(PUNCT, ")") is None or None in (x, y, z):
            return None
        return (x, y, z)  # type: ignore[return-value]

    def parse_pose(self) -> EulerPose | None:
        pos = self.parse_vec3()
        if pos is None:
            return None
        if self.expect(IDENT, "rpy") is None:
            return None
        rpy_deg = self.parse_vec3()
        if rpy_deg is None:
            return None
        rpy = (rpy_deg[0] * DEG2RAD, rpy_deg[1] * DEG2RAD, rpy_deg[2] * DEG2RAD)
        return EulerPose(pos, rpy)

    def parse_shape(self):
        tok = self.expect(IDENT, what="shape (sphere/box/capsule/hull)")
        if tok is None:
            return None
        name = tok.text
        if self.expect(PUNCT, "(") is None:
            return None
        if name == "sphere":
            r = self.parse_number()
            if self.expect(PUNCT, ")") is None or r is None:
                return None
            return Sphere(r)
        if name == "box":
            x = self.parse_number()
            self.expect(PUNCT, ",")
            y = self.parse_number()
            self.expect(PUNCT, ",")
            z = self.parse_number()
            if self.expect(PUNCT, ")") is None or None in (x, y, z):
                return None
            return Box((x, y, z))  # type: ignore[arg-type]
        if name == "capsule":
            r = self.parse_number()
            self.expect(PUNCT, ",")
            h = self.parse_number()
            if self.expect(PUNCT, ")") is None or None in (r, h):
                return None
            return Capsule(r, h)  # type: ignore[arg-type]
        if name == "hull":
            verts: list[Vec3] = []
            v = self.parse_vec3()
            if v is None:
                return None
            verts.append(v)
            while self.accept(PUNCT, ","):
                v = self.parse_vec3()
                if v is None:
                    return None
                verts.append(v)
            if self.expect(PUNCT, ")") is None:
                return None
            return ConvexHull(tuple(verts))
        self.error(f"unknown shape {name!r}", tok.span)
        return None

    # -- conditions -----------------------------------------------------------

    def parse_condition(self, where: str) -> ConditionExpr | None:
        left = self.parse_and(where)
        if left is None:
            return None
        operands = [left]
        while self.accept(PUNCT, "||"):
            nxt = self.parse_and(where)
            if nxt is None:
                return None
            operands.append(nxt)
        return operands[0] if len(operands) == 1 else Or(tuple(operands))

    def parse_and(self, where: str) -> ConditionExpr | None:
        left = self.parse_unary(where)
        if left is None:
            return None
        operands = [left]
        while self.accept(PUNCT, "&&"):
            nxt = self.parse_unary(where)
            if nxt is None:
                return None
            operands.append(nxt)
        return operands[0] if len(operands) == 1 else And(tuple(operands))

    def parse_unary(self, where: str) -> ConditionExpr | None:
        if self.accept(PUNCT, "!"):
            op = self.parse_unary(where)
            return None if op is None else Not(op)
        if self.accept(PUNCT, "("):
            inner = self.parse_condition(where)
            if self.expect(PUNCT, ")") is None:
                return None
            return inner
        tok = self.peek()
        if tok.kind != IDENT:
            self.error(f"expected condition, found {tok.text!r}", tok.span)
            return None
        self.advance()
        if tok.text == "start":
            return Start()
        if tok.text in ("done", "flag"):
            if self.expect(PUNCT, "(") is None:
                return None
            name_tok = self.expect(IDENT, what="name")
            if name_tok is None or self.expect(PUNCT, ")") is None:
                return None
            if tok.text == "done":
                self.refs.append(_Ref("step", name_tok.text, name_tok.span, where))
                return Done(name_tok.text)
            self.refs.append(_Ref("flag", name_tok.text, name_tok.span, where))
            return Flag(name_tok.text)
        self.error(f"expected condition, found {tok.text!r}", tok.span)
        return None

    # -- items ----------------------------------------------------------------

    def declare(self, kind: str, id_tok: Token, table: dict) -> bool:
        if id_tok.text in table:
            self.error(f"duplicate {kind} id '{id_tok.text}'", id_tok.span, "E_DUP_ID")
            return False
        self.decl_spans[(kind, id_tok.text)] = id_tok.span
        self.item_order.append((kind, id_tok.text))
        return True

    def parse_part(self) -> None:
        id_tok = self.expect(IDENT, what="part id")
        if id_tok is None or self.expect(PUNCT, "{") is None:
            self.skip_to_semicolon()
            return
        fresh = self.declare("part", id_tok, self.parts)

        shape = None
        mass = 0.0
        pose = EulerPose()
        grabbable = False
        anchors: dict[str, EulerPose] = {}
        material = "default"

        while not self.at(PUNCT, "}") and not self.at(EOF):
            f = self.peek()
            if f.kind != IDENT:
                self.error(f"expected part field, found {f.text!r}", f.span)
                self.skip_to_semicolon()
                continue
            self.advance()
            if f.text == "anchor":
                name_tok = self.expect(IDENT, what="anchor name")
                if name_tok is None or self.expect(PUNCT, "=") is None:
                    self.skip_to_semicolon()
                    continue
                p = self.parse_pose()
                if p is None:
                    self.skip_to_semicolon()
                    continue
                if name_tok.text in anchors:
                    self.error(f"duplicate anchor '{name_tok.text}'", name_tok.span, "E_DUP_ANCHOR")
                else:
                    anchors[name_tok.text] = p
                self.expect(PUNCT, ";")
                continue
            if self.expect(PUNCT, "=") is None:
                self.skip_to_semicolon()
                continue
            if f.text == "shape":
                shape = self.parse_shape()
                if shape is None:
                    self.skip_to_semicolon()
                    continue
            elif f.text == "mass":
                v = self.parse_number()
                if v is None:
                    self.skip_to_semicolon()
                    continue
                mass = v
            elif f.text == "pose":
                p = self.parse_pose()
                if p is None:
                    self.skip_to_semicolon()
                    continue
                pose = p
            elif f.text == "grabbable":
                b = self.parse_bool()
                if b is None:
                    self.skip_to_semicolon()
                    continue
                grabbable = b
            elif f.text == "material":
                m = self.parse_ident("material name")
                if m is None:
                    self.skip_to_semicolon()
                    continue
                material = m
            else:
                self.error(f"unknown part field {f.text!r}", f.span, "E_UNKNOWN_FIELD")
                self.skip_to_semicolon()
                continue
            self.expect(PUNCT, ";")
        self.expect(PUNCT, "}")

        if shape is None:
            self.error(f"part '{id_tok.text}' has no shape", id_tok.span, "E_MISSING_FIELD")
            shape = Sphere(1.0)
        if fresh:
            self.parts[id_tok.text] = PartDef(
                id=id_tok.text,
                shape=shape,
                mass=mass,
                initial_pose=pose,
                grabbable=grabbable,
                anchors=anchors,
                material=material,
            )

    def parse_step(self) -> None:
        id_tok = self.expect(IDENT, what="step id")
        if id_tok is None or self.expect(PUNCT, ":") is None:
            self.skip_to_semicolon()
            return
        kind_tok = self.expect(IDENT, what="placing, action, or tooluse")
        if kind_tok is None or kind_tok.text not in ("placing", "action", "tooluse"):
            if kind_tok is not None:
                self.error(f"unknown step kind {kind_tok.text!r}", kind_tok.span)
            self.skip_to_semicolon()
            return
        if self.expect(PUNCT, "{") is None:
            self.skip_to_semicolon()
            return
        fresh = self.declare("step", id_tok, self.steps)
        kind = kind_tok.text
        where = f"step:{id_tok.text}"

        part = target_part = target_anchor = tool = target = action_id = None
        pos_tol, rot_tol = 0.01, 5.0 * DEG2RAD
        dwell = 0.5
        contact_time = None
        requires: ConditionExpr = Start()
        min_time = 0.0
        par_time = 60.0
        instruction = ""
        hint = ""

        allowed = {
            "placing": {"part", "target", "tol", "dwell"},
            "action": {"action_id"},
            "tooluse": {"tool", "target", "contact_time"},
        }[kind]
        common = {"requires", "min_time", "par_time", "instruction", "hint"}

        while not self.at(PUNCT, "}") and not self.at(EOF):
            f = self.peek()
            if f.kind != IDENT:
                self.error(f"expected step field, found {f.text!r}", f.span)
                self.skip_to_semicolon()
                continue
            self.advance()
            if f.text not in allowed and f.text not in common:
                self.error(f"field {f.text!r} not valid for {kind} step", f.span, "E_UNKNOWN_FIELD")
                self.skip_to_semicolon()
                continue
            if self.expect(PUNCT, "=") is None:
                self.skip_to_semicolon()
                continue
            if f.text == "part":
                tok = self.expect(IDENT, what="part id")
                if tok is None:
                    self.skip_to_semicolon()
                    continue
                part = tok.text
                self.refs.append(_Ref("part", tok.text, tok.span, where))
            elif f.text == "tool":
                tok = self.expect(IDENT, what="part id")
                if tok is None:
                    self.skip_to_semicolon()
                    continue
                tool = tok.text
                self.refs.append(_Ref("part", tok.text, tok.span, where))
            elif f.text == "target":
                if kind == "placing":
                    if self.expect(IDENT, "anchor") is None or self.expect(PUNCT, "(") is None:
                        self.skip_to_semicolon()
                        continue
                    p_tok = self.expect(IDENT, what="part id")
                    self.expect(PUNCT, ",")
                    a_tok = self.expect(IDENT, what="anchor name")
                    if self.expect(PUNCT, ")") is None or p_tok is None or a_tok is None:
                        self.skip_to_semicolon()
                        continue
                    target_part, target_anchor = p_tok.text, a_tok.text
                    self.refs.append(_Ref("anchor", p_tok.text, a_tok.span, where, anchor=a_tok.text))
                else:
                    tok = self.expect(IDENT, what="part id")
                    if tok is None:
                        self.skip_to_semicolon()
                        continue
                    target = tok.text
                    self.refs.append(_Ref("part", tok.text, tok.span, where))
            elif f.text == "tol":
                if self.expect(IDENT, "pos") is None:
                    self.skip_to_semicolon()
                    continue
                pv = self.parse_number()
                if self.expect(IDENT, "rot") is None or pv is None:
                    self.skip_to_semicolon()
                    continue
                rv = self.parse_number()
                if self.expect(IDENT, "deg") is None or rv is None:
                    self.skip_to_semicolon()
                    continue
                pos_tol, rot_tol = pv, rv * DEG2RAD
            elif f.text == "dwell":
                v = self.parse_number()
                if v is None:
                    self.skip_to_semicolon()
                    continue
                dwell = v
            elif f.text == "contact_time":
                v = self.parse_number()
                if v is None:
                    self.skip_to_semicolon()
                    continue
                contact_time = v
            elif f.text == "action_id":
                a = self.parse_ident("action id")
                if a is None:
                    self.skip_to_semicolon()
                    continue
                action_id = a
            elif f.text == "requires":
                c = self.parse_condition(where)
                if c is None:
                    self.skip_to_semicolon()
                    continue
                requires = c
            elif f.text == "min_time":
                v = self.parse_number()
                if v is None:
                    self.skip_to_semicolon()
                    continue
                min_time = v
            elif f.text == "par_time":
                v = self.parse_number()
                if v is None:
                    self.skip_to_semicolon()
                    continue
                par_time = v
            elif f.text == "instruction":
                tok = self.expect(STRING, what="string")
                if tok is None:
                    self.skip_to_semicolon()
                    continue
                instruction = str(tok.value)
            elif f.text == "hint":
                tok = self.expect(STRING, what="string")
                if tok is None:
                    self.skip_to_semicolon()
                    continue
                hint = str(tok.value)
            self.expect(PUNCT, ";")
        self.expect(PUNCT, "}")

        if kind == "placing":
            if part is None or target_part is None:
                self.error(
                    f"placing step '{id_tok.text}' needs part and target", id_tok.span, "E_MISSING_FIELD"
                )
                return
            spec = PlacingSpec(part, target_part, target_anchor or "", pos_tol, rot_tol, dwell)
        elif kind == "action":
            if action_id is None:
                self.error(f"action step '{id_tok.text}' needs action_id", id_tok.span, "E_MISSING_FIELD")
                return
            spec = ActionSpec(action_id)
        else:
            if tool is None or target is None or contact_time is None:
                self.error(
                    f"tooluse step '{id_tok.text}' needs tool, target, and contact_time",
                    id_tok.span,
                    "E_MISSING_FIELD",
                )
                return
            spec = ToolUseSpec(tool, target, contact_time)

        if fresh:
            self.steps[id_tok.text] = StepDef(
                id=id_tok.text,
                kind=spec,
                requires=requires,
                min_time=min_time,
                par_time=par_time,
                instruction=instruction,
                hint=hint,
            )

    def parse_trigger(self, where: str) -> EventTrigger | None:
        tok = self.expect(IDENT, what="trigger")
        if tok is None or self.expect(PUNCT, "(") is None:
            return None
        if tok.text in ("completed", "started"):
            name = self.expect(IDENT, what="step id")
            if name is None or self.expect(PUNCT, ")") is None:
                return None
            self.refs.append(_Ref("step", name.text, name.span, where))
            return CompletedTrig(name.text) if tok.text == "completed" else StartedTrig(name.text)
        if tok.text == "entered":
            p = self.expect(IDENT, what="part id")
            self.expect(PUNCT, ",")
            r = self.expect(IDENT, what="region id")
            if p is None or r is None or self.expect(PUNCT, ")") is None:
                return None
            self.refs.append(_Ref("part", p.text, p.span, where))
            self.refs.append(_Ref("region", r.text, r.span, where))
            return EnteredTrig(p.text, r.text)
        if tok.text == "flag":
            name = self.expect(IDENT, what="flag name")
            if name is None or self.expect(PUNCT, ")") is None:
                return None
            self.refs.append(_Ref("flag", name.text, name.span, where))
            return FlagSetTrig(name.text)
        if tok.text == "time":
            v = self.parse_number()
            if v is None or self.expect(PUNCT, ")") is None:
                return None
            return TimeTrig(v)
        self.error(f"unknown trigger {tok.text!r}", tok.span)
        return None

    def parse_action(self, where: str) -> EventAction | None:
        tok = self.expect(IDENT, what="event action")
        if tok is None or self.expect(PUNCT, "(") is None:
            return None
        if tok.text == "weld":
            child = self.expect(IDENT, what="part id")
            self.expect(PUNCT, ",")
            parent = self.expect(IDENT, what="part id")
            self.expect(PUNCT, ".")
            anchor = self.expect(IDENT, what="anchor name")
            if None in (child, parent, anchor) or self.expect(PUNCT, ")") is None:
                return None
            self.refs.append(_Ref("part", child.text, child.span, where))
            self.refs.append(_Ref("anchor", parent.text, anchor.span, where, anchor=anchor.text))
            return WeldAct(child.text, parent.text, anchor.text)
        if tok.text in ("unweld", "activate", "deactivate", "set_flag", "particles"):
            name = self.expect(IDENT, what="name")
            if name is None or self.expect(PUNCT, ")") is None:
                return None
            if tok.text == "unweld":
                self.refs.append(_Ref("part", name.text, name.span, where))
                return UnweldAct(name.text)
            if tok.text == "activate":
                self.refs.append(_Ref("entity", name.text, name.span, where))
                return ActivateAct(name.text)
            if tok.text == "deactivate":
                self.refs.append(_Ref("entity", name.text, name.span, where))
                return DeactivateAct(name.text)
            if tok.text == "set_flag":
                self.flag_defs.add(name.text)
                return SetFlagAct(name.text)
            self.refs.append(_Ref("region", name.text, name.span, where))
            return ParticlesAct(name.text)
        self.error(f"unknown event action {tok.text!r}", tok.span)
        return None

    def parse_event(self) -> None:
        id_tok = self.expect(IDENT, what="event id")
        if id_tok is None or self.expect(PUNCT, "{") is None:
            self.skip_to_semicolon()
            return
        fresh = self.declare("event", id_tok, self.events)
        where = f"event:{id_tok.text}"
        trigger: EventTrigger | None = None
        actions: list[EventAction] = []

        while not self.at(PUNCT, "}") and not self.at(EOF):
            f = self.peek()
            if f.kind != IDENT or f.text not in ("when", "do"):
                self.error(f"expected 'when' or 'do', found {f.text!r}", f.span)
                self.skip_to_semicolon()
                continue
            self.advance()
            if self.expect(PUNCT, "=") is None:
                self.skip_to_semicolon()
                continue
            if f.text == "when":
                t = self.parse_trigger(where)
                if t is None:
                    self.skip_to_semicolon()
                    continue
                trigger = t
            else:
                act = self.parse_action(where)
                if act is None:
                    self.skip_to_semicolon()
                    continue
                actions.append(act)
                while self.accept(PUNCT, ","):
                    act = self.parse_action(where)
                    if act is None:
                        break
                    actions.append(act)
            self.expect(PUNCT, ";")
        self.expect(PUNCT, "}")

        if trigger is None:
            self.error(f"event '{id_tok.text}' has no trigger", id_tok.span, "E_MISSING_FIELD")
            return
        if fresh:
            self.events[id_tok.text] = EventDef(id_tok.text, trigger, tuple(actions))

    def parse_region(self) -> None:
        id_tok = self.expect(IDENT, what="region id")
        if id_tok is None or self.expect(PUNCT, "=") is None:
            self.skip_to_semicolon()
            return
        if self.expect(IDENT, "sphere") is None or self.expect(PUNCT, "(") is None:
            self.skip_to_semicolon()
            return
        center = self.parse_vec3()
        self.expect(PUNCT, ",")
        radius = self.parse_number()
        if self.expect(PUNCT, ")") is None or center is None or radius is None:
            self.skip_to_semicolon()
            return
        parent = None
        if self.accept(IDENT, "on"):
            p_tok = self.expect(IDENT, what="part id")
            if p_tok is not None:
                parent = p_tok.text
                self.refs.append(_Ref("part", p_tok.text, p_tok.span, f"region:{id_tok.text}"))
        self.expect(PUNCT, ";")
        if self.declare("region", id_tok, self.regions):
            self.regions[id_tok.text] = Region(id_tok.text, center, radius, parent)

    def parse_difficulty(self) -> None:
        id_tok = self.expect(IDENT, what="difficulty id")
        if id_tok is None or self.expect(PUNCT, "{") is None:
            self.skip_to_semicolon()
            return
        fresh = self.declare("difficulty", id_tok, self.difficulties)
        ghost = trajectory = instructions = True
        hint_penalty = 15.0
        par_time_scale = 1.0

        while not self.at(PUNCT, "}") and not self.at(EOF):
            f = self.peek()
            if f.kind != IDENT:
                self.error(f"expected difficulty field, found {f.text!r}", f.span)
                self.skip_to_semicolon()
                continue
            self.advance()
            if self.expect(PUNCT, "=") is None:
                self.skip_to_semicolon()
                continue
            if f.text in ("ghost", "trajectory", "instructions"):
                b = self.parse_bool()
                if b is None:
                    self.skip_to_semicolon()
                    continue
                if f.text == "ghost":
                    ghost = b
                elif f.text == "trajectory":
                    trajectory = b
                else:
                    instructions = b
            elif f.text in ("hint_penalty", "par_time_scale"):
                v = self.parse_number()
                if v is None:
                    self.skip_to_semicolon()
                    continue
                if f.text == "hint_penalty":
                    hint_penalty = v
                else:
                    par_time_scale = v
            else:
                self.error(f"unknown difficulty field {f.text!r}", f.span, "E_UNKNOWN_FIELD")
                self.skip_to_semicolon()
                continue
            self.expect(PUNCT, ";")
        self.expect(PUNCT, "}")

        if fresh:
            self.difficulties[id_tok.text] = DifficultyLevel(
                id=id_tok.text,
                ghost_enabled=ghost,
                trajectory_enabled=trajectory,
                instructions_enabled=instructions,
                hint_penalty=hint_penalty,
                par_time_scale=par_time_scale,
            )

    def parse_material(self) -> None:
        a = self.expect(IDENT, what="material name")
        b = self.expect(IDENT, what="material name")
        if a is None or b is None or self.expect(PUNCT, "=") is None:
            self.skip_to_semicolon()
            return
        mu = self.parse_number()
        if mu is None:
            self.skip_to_semicolon()
            return
        self.expect(PUNCT, ";")
        key = (a.text, b.text) if a.text <= b.text else (b.text, a.text)
        if key in self.materials:
            self.error(f"duplicate material pair '{a.text} {b.text}'", a.span, "E_DUP_ID")
            return
        self.materials[key] = mu
        self.item_order.append(("material", f"{key[0]} {key[1]}"))

    def parse_scenario_file(self) -> None:
        if self.expect(IDENT, "scenario") is None:
            return
        name_tok = self.expect(STRING, what="scenario name string")
        if name_tok is None:
            return
        self.name = str(name_tok.value)
        if self.accept(IDENT, "in"):
            env = self.expect(IDENT, what="environment name")
            if env is not None:
                self.environment = env.text
        if self.expect(PUNCT, "{") is None:
            return
        while not self.at(PUNCT, "}") and not self.at(EOF):
            tok = self.peek()
            if tok.kind != IDENT:
                self.error(f"expected item, found {tok.text!r}", tok.span)
                self.advance()
                continue
            self.advance()
            if tok.text == "part":
                self.parse_part()
            elif tok.text == "step":
                self.parse_step()
            elif tok.text == "event":
                self.parse_event()
            elif tok.text == "region":
                self.parse_region()
            elif tok.text == "difficulty":
                self.parse_difficulty()
            elif tok.text == "material":
                self.parse_material()
            else:
                self.error(f"unknown item {tok.text!r}", tok.span)
                self.skip_to_semicolon()
        self.expect(PUNCT, "}")
        tail = self.peek()
        if tail.kind != EOF:
            self.error(f"unexpected trailing input {tail.text!r}", tail.span)

    # -- reference resolution ---------------------------------------------------

    def resolve_refs(self) -> None:
        for ref in self.refs:
            if ref.kind == "step":
                if ref.name not in self.steps:
                    self.error(f"unknown step '{ref.name}'", ref.span, "E_DANGLING_STEP")
            elif ref.kind == "flag":
                if ref.name not in self.flag_defs:
                    self.error(
                        f"flag '{ref.name}' is never set by any event", ref.span, "E_DANGLING_FLAG"
                    )
            elif ref.kind == "part":
                if ref.name not in self.parts:
                    self.error(f"unknown part '{ref.name}'", ref.span, "E_DANGLING_PART")
            elif ref.kind == "region":
                if ref.name not in self.regions:
                    self.error(f"unknown region '{ref.name}'", ref.span, "E_DANGLING_REGION")
            elif ref.kind == "entity":
                if ref.name not in self.parts and ref.name not in self.regions:
                    self.error(f"unknown part or region '{ref.name}'", ref.span, "E_DANGLING_ENTITY")
            elif ref.kind == "anchor":
                part = self.parts.get(ref.name)
                if part is None:
                    self.error(f"unknown part '{ref.name}'", ref.span, "E_DANGLING_PART")
                elif ref.anchor not in part.anchors:
                    self.error(
                        f"part '{ref.name}' has no anchor '{ref.anchor}'", ref.span, "E_DANGLING_ANCHOR"
                    )


def parse(text: str) -> ParseResult:
    """Parse scenario source into a validated Scenario plus diagnostics."""
    tokens, diags, _ = tokenize(text)
    p = _Parser(tokens, diags)
    p.parse_scenario_file()
    p.resolve_refs()

    if not p.difficulties:
        d = default_difficulty()
        p.difficulties[d.id] = d

    scenario = Scenario(
        name=p.name,
        environment=p.environment,
        parts=p.parts,
        steps=p.steps,
        events=p.events,
        regions=p.regions,
        difficulties=p.difficulties,
        materials=p.materials,
        item_order=tuple(p.item_order),
    )

    # Non-reference invariants (tolerances, hull rank, ...) mapped back onto
    # declaration spans; dangling references were already reported with exact
    # spans above.
    for d in validate_scenario(scenario):
        if d.code.startswith("E_DANGLING"):
            continue
        span = None
        head = d.location.split("/", 1)[0]
        if ":" in head:
            kind, name = head.split(":", 1)
            span = p.decl_spans.get((kind, name))
        diags.append(Diagnostic(d.severity, d.code, d.message, d.location, span))

    if has_errors(diags):
        return ParseResult(None, diags, p.decl_spans)
    return ParseResult(scenario, diags, p.decl_spans)
