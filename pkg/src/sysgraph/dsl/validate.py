"""Static well-formedness checks for system graphs."""
from __future__ import annotations

from ..core.graph import Named, Receive, Send, SystemGraph
from ..core.guards import ORDER_OPS, And, Cmp, Const, Implies, Not, Or, VarRef
from ..core.values import INT, kind_of, render_value
from . import diagnostics as dg
from .diagnostics import Diagnostic


def validate_graph(g: SystemGraph, path: str = "<input>") -> list[Diagnostic]:
    """All violations of the graph invariants, as diagnostics (never raises)."""
    out: list[Diagnostic] = []

    def err(code, message, *key):
        span = g.spans.get(key) or g.spans.get(("system",))
        out.append(dg.error(code, message, span, path))

    sigs = {}
    for s in g.signatures:
        if s.name in sigs:
            err(dg.DUPLICATE_NAME, f"variable {s.name!r} declared twice", "dup-var", s.name)
        sigs.setdefault(s.name, s)
    chans = {}
    for c in g.channels:
        if c.name in chans:
            err(dg.DUPLICATE_NAME, f"channel {c.name!r} declared twice", "chan", c.name)
        chans.setdefault(c.name, c)
        for v in c.initial:
            if v not in c.domain:
                err(dg.KIND_MISMATCH, f"initial message {render_value(v)} of {c.name} is not in {c.domain.render()}",
                    "chan", c.name)

    names = set()
    for d in g.declarators:
        if d.name in names:
            err(dg.DUPLICATE_DECLARATOR, f"duplicate declarator {d.name!r}", "dup-state", d.name)
        names.add(d.name)
        for var, value in d.partial.items():
            sig = sigs.get(var)
            if sig is None:
                err(dg.UNRESOLVED, f"declarator {d.name} pins undeclared variable {var!r}", "bind", d.name, var)
            elif value not in sig.domain:
                err(dg.KIND_MISMATCH,
                    f"declarator {d.name}: {render_value(value)} is not in {sig.domain.render()} (variable {var})",
                    "bind", d.name, var)

    if not g.initial:
        err(dg.MISSING_INITIAL, "missing initial declarator", "system")
    elif g.initial not in names:
        err(dg.UNRESOLVED, f"initial declarator {g.initial!r} is not declared", "init")
    out.extend(_check_guard(g.initial_guard, sigs, g, path, ("init",)))

    for i, t in enumerate(g.transitions):
        if t.source not in names:
            err(dg.UNRESOLVED, f"unknown declarator {t.source!r}", "trans-src", i)
        if t.target not in names:
            err(dg.UNRESOLVED, f"unknown declarator {t.target!r}", "trans-dst", i)
        out.extend(_check_guard(t.guard, sigs, g, path, ("trans", i)))
        a = t.action
        if isinstance(a, (Send, Receive)):
            c = chans.get(a.channel)
            if c is None:
                err(dg.UNRESOLVED, f"undeclared channel {a.channel!r}", "trans", i)
                continue
        if isinstance(a, Receive):
            sig = sigs.get(a.var)
            if sig is None:
                err(dg.UNRESOLVED, f"receive into undeclared variable {a.var!r}", "trans", i)
            elif not sig.domain.contains_domain(c.domain):
                err(dg.KIND_MISMATCH,
                    f"{a.channel}?{a.var}: variable domain {sig.domain.render()} does not contain "
                    f"channel domain {c.domain.render()}", "trans", i)
        elif isinstance(a, Send):
            if isinstance(a.message, VarRef):
                sig = sigs.get(a.message.name)
                if sig is None:
                    err(dg.UNRESOLVED, f"send of undeclared variable {a.message.name!r}", "trans", i)
                elif not c.domain.contains_domain(sig.domain):
                    err(dg.KIND_MISMATCH,
                        f"{a.channel}!{a.message.name}: variable domain {sig.domain.render()} is not "
                        f"within channel domain {c.domain.render()}", "trans", i)
            elif a.message not in c.domain:
                err(dg.KIND_MISMATCH,
                    f"message {render_value(a.message)} is not in {c.domain.render()}", "trans", i)
        elif not isinstance(a, Named):
            err(dg.SYNTAX, f"bad action {a!r}", "trans", i)

    for name in g.terminals:
        if name not in names:
            err(dg.UNRESOLVED, f"unknown terminal declarator {name!r}", "terminal", name)

    props = set()
    for p in g.propositions:
        if p.name in props:
            err(dg.DUPLICATE_PROPOSITION, f"proposition {p.name!r} declared twice", "prop", p.name)
        props.add(p.name)
        out.extend(_check_guard(p.formula, sigs, g, path, ("prop", p.name)))
    for i, rule in enumerate(g.labeling):
        if rule.prop not in props:
            err(dg.UNRESOLVED, f"label rule for unknown proposition {rule.prop!r}", "label", i)
        out.extend(_check_guard(rule.guard, sigs, g, path, ("label", i)))
    return out


def _check_guard(guard, sigs, g, path, key) -> list[Diagnostic]:
    out = []
    span = g.spans.get(key) or g.spans.get(("system",))

    def err(code, message):
        out.append(dg.error(code, message, span, path))

    def walk(node):
        match node:
            case Const():
                pass
            case Cmp(var, op, rhs):
                sig = sigs.get(var)
                if sig is None:
                    err(dg.UNRESOLVED, f"unresolved name {var!r}")
                    return
                if isinstance(rhs, VarRef):
                    other = sigs.get(rhs.name)
                    if other is None:
                        err(dg.UNRESOLVED, f"unresolved name {rhs.name!r}")
                        return
                    rkind = other.kind
                else:
                    rkind = kind_of(rhs)
                    if sig.kind != INT and rhs not in sig.domain:
                        err(dg.KIND_MISMATCH, f"{render_value(rhs)} is not a value of {var} ({sig.domain.render()})")
                        return
                if rkind != sig.kind:
                    err(dg.KIND_MISMATCH, f"cannot compare {var} ({sig.kind}) with a {rkind}")
                elif op in ORDER_OPS and sig.kind != INT:
                    err(dg.KIND_MISMATCH, f"ordering comparison {op} on non-integer {var}")
            case Not(arg):
                walk(arg)
            case And(args) | Or(args):
                for a in args:
                    walk(a)
            case Implies(lhs, rhs):
                walk(lhs)
                walk(rhs)

    walk(guard)
    return out

