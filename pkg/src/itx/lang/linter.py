"""Scenario lint: validation plus step-graph sanity checks."""

from __future__ import annotations

from ..diagnostics import Diagnostic, SourceSpan, error, warning
from ..model import (
    ActivateAct,
    DeactivateAct,
    EnteredTrig,
    PlacingSpec,
    Scenario,
    ToolUseSpec,
    UnweldAct,
    WeldAct,
    done_atoms,
    reachability_check,
    validate_scenario,
)

DeclSpans = dict[tuple[str, str], SourceSpan]


def _used_parts(s: Scenario) -> set[str]:
    used: set[str] = set()
    for step in s.steps.values():
        k = step.kind
        if isinstance(k, PlacingSpec):
            used.add(k.part)
            used.add(k.target_part)
        elif isinstance(k, ToolUseSpec):
            used.add(k.tool)
            used.add(k.target)
    for ev in s.events.values():
        t = ev.trigger
        if isinstance(t, EnteredTrig):
            used.add(t.part)
        for act in ev.actions:
            if isinstance(act, WeldAct):
                used.add(act.part)
                used.add(act.parent)
            elif isinstance(act, UnweldAct):
                used.add(act.part)
            elif isinstance(act, (ActivateAct, DeactivateAct)):
                used.add(act.entity)
    for region in s.regions.values():
        if region.parent:
            used.add(region.parent)
    return used


def _dependency_sccs(s: Scenario, restrict: set[str]) -> list[list[str]]:
    """Strongly connected components of the done-edge graph over `restrict`.

    Iterative Tarjan; components returned in scenario declaration order.
    """
    edges: dict[str, list[str]] = {sid: [] for sid in s.steps if sid in restrict}
    for step in s.steps.values():
        if step.id not in restrict:
            continue
        for dep in sorted(done_atoms(step.requires)):
            if dep in restrict:
                edges[dep].append(step.id)

    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    sccs: list[list[str]] = []
    counter = 0

    for root in edges:
        if root in index:
            continue
        work = [(root, iter(edges[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(edges[nxt])))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    top = stack.pop()
                    on_stack.discard(top)
                    comp.append(top)
                    if top == node:
                        break
                sccs.append(comp)

    cyclic = []
    for comp in sccs:
        if len(comp) > 1:
            cyclic.append(comp)
        elif comp[0] in edges.get(comp[0], []):
            cyclic.append(comp)
    decl = {sid: i for i, sid in enumerate(s.steps)}
    for comp in cyclic:
        comp.sort(key=lambda sid: decl[sid])
    cyclic.sort(key=lambda comp: decl[comp[0]])
    return cyclic


def lint(s: Scenario, decl_spans: DeclSpans | None = None) -> list[Diagnostic]:
    spans = decl_spans or {}

    def span_of(kind: str, name: str) -> SourceSpan | None:
        return spans.get((kind, name))

    diags = list(validate_scenario(s))
    if any(d.is_error for d in diags):
        return diags  # graph checks need resolvable references

    reach = reachability_check(s)
    unreachable = reach["unreachable"]
    for comp in _dependency_sccs(s, unreachable):
        ids = ", ".join(comp)
        diags.append(
            error(
                "E_CYCLE_ONLY_DEADLOCK",
                f"steps deadlock on each other: {ids}",
                f"step:{comp[0]}",
                span_of("step", comp[0]),
            )
        )
    for step in s.steps.values():
        if step.id in unreachable:
            diags.append(
                warning(
                    "W_UNREACHABLE_STEP",
                    f"step '{step.id}' can never unlock",
                    f"step:{step.id}",
                    span_of("step", step.id),
                )
            )
        if not step.hint:
            diags.append(
                warning(
                    "W_NO_HINT",
                    f"step '{step.id}' has no hint text",
                    f"step:{step.id}",
                    span_of("step", step.id),
                )
            )

    used = _used_parts(s)
    for part in s.parts.values():
        if part.id not in used:
            diags.append(
                warning(
                    "W_UNUSED_PART",
                    f"part '{part.id}' is never referenced by any step or event",
                    f"part:{part.id}",
                    span_of("part", part.id),
                )
            )
    return diags
