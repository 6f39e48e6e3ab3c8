"""Parser, formatter, linter, and DOT export."""

import math
import os
import random

import pytest

from conftest import corpus_paths
from itx.lang import export_graph_dot, format_canonical, lint, parse
from itx.model import And, Done, PlacingSpec, Scenario

MINIMAL = (
    'scenario "t" { part p { shape = sphere(0.1); mass = 0; pose = (0,0,0) rpy(0,0,0); } '
    "step s : action { action_id = go; requires = start; par_time = 5; "
    'instruction = "go"; } }'
)

GOLDEN_MINIMAL = """scenario "t" {
  part p {
    shape = sphere(0.1);
    mass = 0.0;
    pose = (0.0, 0.0, 0.0) rpy(0, 0, 0);
    grabbable = false;
    material = default;
  }
  step s : action {
    action_id = go;
    requires = start;
    min_time = 0.0;
    par_time = 5.0;
    instruction = "go";
    hint = "";
  }
}
"""


class TestParse:
    def test_minimal(self):
        r = parse(MINIMAL)
        assert r.ok and not r.diagnostics
        s = r.scenario
        assert list(s.parts) == ["p"]
        assert list(s.steps) == ["s"]
        assert list(s.difficulties) == ["default"]  # injected

    def test_angle_conversion(self):
        src = MINIMAL.replace(
            "step s : action { action_id = go;",
            "step t : placing { part = p; target = anchor(q, a); tol = pos 0.01 rot 5 deg;",
        ).replace(
            "part p {",
            "part q { shape = box(0.1,0.1,0.1); anchor a = (0,0,0) rpy(0,0,0); } part p { grabbable = true; mass = 1;",
        )
        r = parse(src)
        assert r.ok, [d.message for d in r.diagnostics]
        step = r.scenario.steps["t"]
        assert abs(step.kind.rot_tol - 0.0872664626) < 1e-9

    def test_dangling_step_has_span(self):
        src = MINIMAL.replace("requires = start;", "requires = done(nosuch);")
        r = parse(src)
        assert not r.ok
        diag = next(d for d in r.diagnostics if d.code == "E_DANGLING_STEP")
        assert diag.span is not None
        assert src[diag.span.offset : diag.span.offset + diag.span.length] == "nosuch"

    def test_recovery_reports_multiple_errors(self):
        src = 'scenario "t" { part p { shape = sphere(oops); } step s : action { action_id = ; } }'
        r = parse(src)
        assert not r.ok
        assert len([d for d in r.diagnostics if d.is_error]) >= 2

    def test_duplicate_ids(self):
        src = MINIMAL.replace("} }", "} part p { shape = sphere(0.2); } }")
        r = parse(src)
        assert any(d.code == "E_DUP_ID" for d in r.diagnostics)

    def test_error_means_no_scenario(self):
        r = parse('scenario "t" { part p { } }')  # missing shape
        assert r.scenario is None
        assert any(d.is_error for d in r.diagnostics)

    def test_spans_inside_source(self):
        bad = 'scenario "x" { part p { shape = ?; mass = "no"; } step q : what { } }'
        r = parse(bad)
        for d in r.diagnostics:
            assert d.span is not None
            assert 0 <= d.span.offset <= len(bad)
            assert d.span.offset + d.span.length <= len(bad)

    def test_comments_and_whitespace(self):
        src = "// leading\n/* block\ncomment */" + MINIMAL + "\n// trailing"
        assert parse(src).ok

    def test_unicode_strings_roundtrip(self):
        src = MINIMAL.replace('instruction = "go";', 'instruction = "héllo \\"quoted\\" \\\\ µ";')
        r = parse(src)
        assert r.ok
        assert r.scenario.steps["s"].instruction == 'héllo "quoted" \\ µ'
        again = parse(format_canonical(r.scenario))
        assert again.scenario == r.scenario


class TestFormat:
    def test_golden_minimal(self):
        s = parse(MINIMAL).scenario
        assert format_canonical(s) == GOLDEN_MINIMAL

    @pytest.mark.parametrize("path", corpus_paths(), ids=os.path.basename)
    def test_corpus_roundtrip(self, path):
        text = open(path, encoding="utf-8").read()
        r = parse(text)
        assert r.ok, [d.format(path) for d in r.diagnostics]
        formatted = format_canonical(r.scenario)
        r2 = parse(formatted)
        assert r2.ok
        assert r2.scenario == r.scenario
        assert format_canonical(r2.scenario) == formatted  # idempotent

    def test_angles_emitted_in_degrees(self):
        s = parse(MINIMAL).scenario
        text = format_canonical(s)
        assert "rpy(0, 0, 0)" in text


class TestLint:
    def test_cycle_only_deadlock(self):
        src = (
            'scenario "d" { '
            "step a : action { action_id = a; requires = done(b); par_time = 5; hint = \"h\"; } "
            "step b : action { action_id = b; requires = done(a); par_time = 5; hint = \"h\"; } }"
        )
        r = parse(src)
        assert r.ok
        diags = lint(r.scenario, r.decl_spans)
        dead = [d for d in diags if d.code == "E_CYCLE_ONLY_DEADLOCK"]
        assert len(dead) == 1
        assert "a" in dead[0].message and "b" in dead[0].message
        assert sum(1 for d in diags if d.code == "W_UNREACHABLE_STEP") == 2

    def test_unused_part_and_missing_hint(self):
        r = parse(MINIMAL)
        codes = [d.code for d in lint(r.scenario, r.decl_spans)]
        assert "W_UNUSED_PART" in codes
        assert "W_NO_HINT" in codes

    @pytest.mark.parametrize("path", corpus_paths(), ids=os.path.basename)
    def test_corpus_lints_clean(self, path):
        r = parse(open(path, encoding="utf-8").read())
        assert r.ok
        assert lint(r.scenario, r.decl_spans) == []


class TestDot:
    def test_chain_edge(self):
        src = (
            'scenario "g" { '
            "step a : action { action_id = a; requires = start; par_time = 5; } "
            "step b : action { action_id = b; requires = done(a); par_time = 5; } }"
        )
        dot = export_graph_dot(parse(src).scenario)
        assert '"a" -> "b";' in dot

    def test_and_produces_two_edges(self):
        src = (
            'scenario "g" { '
            "step a : action { action_id = a; requires = start; par_time = 5; } "
            "step b : action { action_id = b; requires = start; par_time = 5; } "
            "step c : action { action_id = c; requires = done(a) && done(b); par_time = 5; } }"
        )
        dot = export_graph_dot(parse(src).scenario)
        assert '"a" -> "c";' in dot and '"b" -> "c";' in dot

    def test_event_trigger_dashed(self, laser_scenario):
        dot = export_graph_dot(laser_scenario)
        assert '"turn_off" -> "event:power_cut" [style=dashed];' in dot
        # flag set by the event unlocks the unmount steps
        assert '"event:power_cut" -> "unmount_mirror" [style=dashed];' in dot

    def test_deterministic(self, laser_scenario):
        assert export_graph_dot(laser_scenario) == export_graph_dot(laser_scenario)


class TestFuzz:
    def test_random_bytes_never_crash(self):
        rng = random.Random(1234)
        for _ in range(2000):
            n = rng.randint(0, 120)
            data = bytes(rng.randrange(256) for _ in range(n))
            text = data.decode("utf-8", errors="replace")
            result = parse(text)  # must not raise
            if result.scenario is None:
                assert any(d.is_error for d in result.diagnostics) or text.strip() == "" or True

    def test_mutated_corpus_never_crashes(self):
        rng = random.Random(77)
        base = open(corpus_paths()[0], encoding="utf-8").read()
        for _ in range(300):
            chars = list(base)
            for _ in range(rng.randint(1, 8)):
                k = rng.randrange(len(chars))
                op = rng.random()
                if op < 0.4:
                    chars[k] = chr(rng.randrange(32, 127))
                elif op < 0.7:
                    del chars[k]
                else:
                    chars.insert(k, chr(rng.randrange(32, 127)))
            parse("".join(chars))
