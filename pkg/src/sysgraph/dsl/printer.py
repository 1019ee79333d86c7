"""Pretty printer producing source text that parses back to an equal model."""
from __future__ import annotations

from ..core.graph import Named, Receive, Send, SystemGraph, action_label
from ..core.guards import TRUE, render
from ..core.values import render_value


def print_graph(g: SystemGraph) -> str:
    lines = [f"system {g.name} {{"]
    if g.signatures:
        lines.append("  vars {")
        for s in g.signatures:
            lines.append(f"    {s.name}: {s.domain.render()} = {render_value(s.default)};")
        lines.append("  }")
    for c in g.channels:
        text = f"  chan {c.name}: {c.domain.render()} cap {c.capacity}"
        if c.external:
            text += " external"
        if c.initial:
            text += " = [" + ", ".join(render_value(v) for v in c.initial) + "]"
        lines.append(text + ";")
    for d in g.declarators:
        body = ", ".join(f"{k}={render_value(v)}" for k, v in d.partial.items())
        text = f"  state {d.name} {{{body}}}"
        if d.name == g.initial:
            text += " init"
            if g.initial_guard != TRUE:
                text += f" when {render(g.initial_guard)}"
        lines.append(text + ";")
    for t in g.transitions:
        when = "" if t.guard == TRUE else f" when {render(t.guard)}"
        lines.append(f"  trans {t.source} -> {t.target}{when} on {_action(t.action)};")
    for p in g.propositions:
        lines.append(f"  prop {p.name} := {render(p.formula)};")
    for r in g.labeling:
        lines.append(f"  label when {render(r.guard)} => {r.prop};")
    if g.terminals:
        lines.append("  terminal " + ", ".join(g.terminals) + ";")
    if g.refinable:
        lines.append("  refinable;")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _action(a) -> str:
    assert isinstance(a, (Named, Send, Receive))
    return action_label(a)


def print_model(model) -> str:
    """Render every declaration of a parsed :class:`Model` in order."""
    chunks = []
    for name in model.order:
        if name in model.compositions:
            comp = model.compositions[name]
            text = f"parallel {comp.name} = " + " | ".join(comp.members)
            if comp.shared:
                text += " shared " + ", ".join(comp.shared)
            chunks.append(text + ";\n")
        elif name in model.embeds:
            e = model.embeds[name]
            chunks.append(f"embed {e.inner} into {e.outer} at {e.at} as {e.name};\n")
        else:
            chunks.append(print_graph(model.graphs[name]))
    return "\n".join(chunks)
