"""Promela emission for cross-checking with an external Spin installation.

Each declarator becomes a ``D_<name>`` macro (its pinned variables plus
critical variables) and an ``enter_<name>`` inline performing the
override; each component becomes one proctype looping over its
transitions; each LTL property becomes an ``ltl`` block.
"""
from __future__ import annotations

from ..core.graph import Named, Receive, Send, SystemGraph
from ..core.guards import TRUE, And, Cmp, Const, Implies, Not, Or, VarRef, variables
from ..core.values import BOOL, INT, SYM
from ..errors import UnsupportedFeature
from .formula import CTL, Formula, Node, parse_formula

MAX_ENUMERANTS = 255


def _value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def promela_guard(g) -> str:
    match g:
        case Const(value):
            return "true" if value else "false"
        case Cmp(var, op, rhs):
            rhs_text = rhs.name if isinstance(rhs, VarRef) else _value(rhs)
            return f"{var} {op} {rhs_text}"
        case Not(arg):
            return f"!({promela_guard(arg)})"
        case And(args):
            return " && ".join(f"({promela_guard(a)})" for a in args) if args else "true"
        case Or(args):
            return " || ".join(f"({promela_guard(a)})" for a in args) if args else "false"
        case Implies(lhs, rhs):
            return f"(!({promela_guard(lhs)}) || ({promela_guard(rhs)}))"
    raise TypeError(f"not a guard: {g!r}")


_LTL_UNARY = {"not": "!", "X": "X ", "F": "<> ", "G": "[] "}
_LTL_BINARY = {"and": "&&", "or": "||", "implies": "->", "U": "U", "R": "V"}


def promela_ltl(node: Node) -> str:
    op = node.op
    if op == "ap":
        return node.name
    if op in ("true", "false"):
        return op
    if op in _LTL_UNARY:
        return f"{_LTL_UNARY[op]}({promela_ltl(node.args[0])})"
    if op in _LTL_BINARY:
        return f"({promela_ltl(node.args[0])}) {_LTL_BINARY[op]} ({promela_ltl(node.args[1])})"
    raise UnsupportedFeature(f"operator {op} has no Promela LTL counterpart")


def _int_type(lo: int, hi: int) -> str:
    if 0 <= lo and hi <= 255:
        return "byte"
    if -32768 <= lo and hi <= 32767:
        return "short"
    return "int"


def _type_of(domain) -> str:
    if domain.kind == BOOL:
        return "bool"
    if domain.kind == INT:
        return _int_type(domain.lo, domain.hi)
    return "mtype"


def _reachable_values(graph: SystemGraph) -> dict[str, dict[str, set]]:
    """Values each variable takes at each declarator, over the open semantics."""
    from ..elaboration import interpret_graph

    ts = interpret_graph(graph)
    seen: dict[str, dict[str, set]] = {d.name: {} for d in graph.declarators}
    for info in ts.info:
        loc = info.locations[0]
        for k, v in info.evaluation.items():
            seen[loc].setdefault(k, set()).add(v)
    return seen


def critical_variables(graph: SystemGraph, decl: str) -> list[str]:
    """Unpinned variables read by guards on transitions touching ``decl``."""
    pinned = graph.declarator(decl).partial
    read = set()
    for t in graph.transitions:
        if decl in (t.source, t.target):
            read |= variables(t.guard)
    return [s.name for s in graph.signatures if s.name in read and s.name not in pinned]


def emit_promela(system, props=()) -> str:
    """Deterministic Promela text for a graph (or channel system) and its LTL properties."""
    from ..elaboration import ChannelSystem

    cs = system if isinstance(system, ChannelSystem) else ChannelSystem.of(system)
    formulas = []
    for p in props:
        f = parse_formula(p) if isinstance(p, str) else p
        if isinstance(f, Formula) and f.logic == CTL:
            raise UnsupportedFeature(f"CTL property {f.canonical!r} cannot be expressed in Promela")
        formulas.append(f.ast if isinstance(f, Formula) else f)

    sigs = cs.signatures
    symbols: list[str] = []
    for s in sigs:
        if s.domain.kind == SYM:
            for sym in s.domain.symbols:
                if sym not in symbols:
                    symbols.append(sym)
    for c in cs.channels:
        if c.domain.kind == SYM:
            for sym in c.domain.symbols:
                if sym not in symbols:
                    symbols.append(sym)
    if len(symbols) > MAX_ENUMERANTS:
        raise UnsupportedFeature(f"{len(symbols)} symbolic values exceed the Promela mtype limit of {MAX_ENUMERANTS}")

    out = [f"/* {' | '.join(g.name for g in cs.components)} */", ""]
    if symbols:
        out += ["mtype = { " + ", ".join(symbols) + " };", ""]
    for c in cs.channels:
        kind = "external" if c.external else ("rendezvous" if c.capacity == 0 else "buffered")
        out.append(f"chan {c.name} = [{c.capacity}] of {{ {_type_of(c.domain)} }};  /* {kind} */")
    if cs.channels:
        out.append("")
    for s in sigs:
        out.append(f"{_type_of(s.domain)} {s.name} = {_value(s.default)};")
    out.append("")

    for g in cs.components:
        out += _component_defs(g)
    labeled = set()
    for g in cs.components:
        ruled: dict = {}
        for rule in g.labeling:
            ruled.setdefault(rule.prop, []).append(rule.guard)
        for p in g.propositions:
            if p.name in labeled:
                continue
            labeled.add(p.name)
            body = promela_guard(p.formula)
            if p.name in ruled:
                body = f"({body}) && ({' || '.join('(' + promela_guard(r) + ')' for r in ruled[p.name])})"
            out.append(f"#define {p.name} ({body})")
    if labeled:
        out.append("")

    for g in cs.components:
        out += _proctype(g, cs)
    for i, f in enumerate(formulas):
        out.append(f"ltl p{i} {{ {promela_ltl(f)} }}")
    return "\n".join(out).rstrip() + "\n"


def _loc(g: SystemGraph) -> str:
    return f"loc_{g.name}"


def _component_defs(g: SystemGraph) -> list[str]:
    values = _reachable_values(g)
    out = [f"/* {g.name}: declarators */"]
    for i, d in enumerate(g.declarators):
        out.append(f"#define L_{g.name}_{d.name} {i}")
    out.append(f"byte {_loc(g)} = L_{g.name}_{g.initial};")
    for d in g.declarators:
        parts = [f"{k} == {_value(v)}" for k, v in d.partial.items()]
        for var in critical_variables(g, d.name):
            seen = values[d.name].get(var)
            dom = g.signature(var).domain.values()
            if seen and len(seen) < len(dom):
                choices = [x for x in dom if x in seen]
                parts.append("(" + " || ".join(f"{var} == {_value(x)}" for x in choices) + ")")
        out.append(f"#define D_{d.name} ({' && '.join(parts) if parts else 'true'})")
    for d in g.declarators:
        body = [f"{k} = {_value(v)}" for k, v in d.partial.items()] + [f"{_loc(g)} = L_{g.name}_{d.name}"]
        out.append(f"inline enter_{d.name}() {{ " + "; ".join(body) + " }")
    out.append("")
    return out


def _proctype(g: SystemGraph, cs) -> list[str]:
    out = [f"active proctype {g.name}() {{"]
    init_guard = "" if g.initial_guard == TRUE else f"  ({promela_guard(g.initial_guard)});"
    if init_guard:
        out.append(init_guard)
    out.append("  do")
    terminal_only = True
    for t in g.transitions:
        terminal_only = False
        cond = f"{_loc(g)} == L_{g.name}_{t.source}"
        if t.guard != TRUE:
            cond += f" && ({promela_guard(t.guard)})"
        a = t.action
        ch = cs_channel(cs, a)
        if isinstance(a, Named):
            step = f"printf(\"{a.name}\\n\")"
        elif isinstance(a, Send):
            msg = a.message.name if isinstance(a.message, VarRef) else _value(a.message)
            if ch.external:
                step = f"printf(\"{a.channel}!%d\\n\", {msg})"
            else:
                if ch.capacity > 0:
                    cond += f" && nfull({a.channel})"
                step = f"{a.channel}!{msg}"
        elif isinstance(a, Receive):
            if ch.external:
                alts = " ".join(f":: {a.var} = {_value(v)}" for v in ch.domain.values())
                step = f"if {alts} fi"
            else:
                if ch.capacity > 0:
                    cond += f" && nempty({a.channel})"
                step = f"{a.channel}?{a.var}"
        out.append(f"  :: atomic {{ {cond} -> {step}; enter_{t.target}() }}")
    if terminal_only:
        out.append("  :: false")
    out += ["  od", "}", ""]
    return out


def cs_channel(cs, action):
    if isinstance(action, (Send, Receive)):
        for c in cs.channels:
            if c.name == action.channel:
                return c
    return None
