"""Graphviz DOT export of the step-unlock graph.

Solid edges come from done(...) atoms in requires expressions; events appear
as dashed ellipse nodes, with dashed edges from their trigger steps and to
the steps unlocked by flags they set.
"""

from __future__ import annotations

from ..model import (
    CompletedTrig,
    Scenario,
    SetFlagAct,
    StartedTrig,
    done_atoms,
    flag_atoms,
)


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_graph_dot(s: Scenario) -> str:
    lines = ["digraph scenario {", "  rankdir=LR;"]

    for step in s.steps.values():
        # \n is a DOT line break, so it must stay a single backslash.
        label = _q(step.id)[1:-1] + "\\n(" + step.kind_name + ")"
        lines.append(f'  {_q(step.id)} [shape=box, label="{label}"];')
    for ev in s.events.values():
        node = f"event:{ev.id}"
        lines.append(f"  {_q(node)} [shape=ellipse, style=dashed, label={_q(ev.id)}];")

    for step in s.steps.values():
        for dep in sorted(done_atoms(step.requires)):
            if dep in s.steps:
                lines.append(f"  {_q(dep)} -> {_q(step.id)};")

    for ev in s.events.values():
        node = f"event:{ev.id}"
        t = ev.trigger
        if isinstance(t, (CompletedTrig, StartedTrig)) and t.step in s.steps:
            lines.append(f"  {_q(t.step)} -> {_q(node)} [style=dashed];")
        set_flags = {a.name for a in ev.actions if isinstance(a, SetFlagAct)}
        if not set_flags:
            continue
        for step in s.steps.values():
            if flag_atoms(step.requires) & set_flags:
                lines.append(f"  {_q(node)} -> {_q(step.id)} [style=dashed];")

    lines.append("}")
    return "\n".join(lines) + "\n"
