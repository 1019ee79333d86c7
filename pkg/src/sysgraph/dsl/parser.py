"""Lexer, recursive-descent parser and name resolution for ``.sg`` files.

A file holds one or more ``system`` blocks plus optional ``parallel`` and
``embed`` declarations.  The last declaration is the file's main model.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..core.graph import (
    ChannelDecl,
    GraphTransition,
    LabelRule,
    Named,
    Proposition,
    Receive,
    Send,
    StateDeclarator,
    SystemGraph,
)
from ..core.guards import FALSE, TRUE, And, Cmp, Const, Implies, Not, Or, VarRef
from ..core.values import BOOL, SYM, Domain, Evaluation, VarSignature
from ..errors import ModelError
from . import diagnostics as dg
from .diagnostics import Diagnostic, Span


@dataclass(frozen=True)
class SourceUnit:
    path: str
    text: str

    @classmethod
    def from_file(cls, path) -> SourceUnit:
        try:
            with open(path, "rb") as fh:
                data = fh.read()
        except OSError as exc:
            d = dg.error(dg.IO, f"cannot read {path}: {exc.strerror or exc}", path=str(path))
            raise ModelError(d.message, [d]) from exc
        try:
            return cls(str(path), data.decode("utf-8"))
        except UnicodeDecodeError as exc:
            line = data[:exc.start].count(b"\n") + 1
            col = exc.start - (data.rfind(b"\n", 0, exc.start) + 1) + 1
            d = dg.error(dg.LEXICAL, "source is not valid UTF-8", Span(line, col, 1), str(path))
            raise ModelError(d.message, [d]) from exc


# -- lexer ----------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str  # word, int, op, eof
    text: str
    line: int
    col: int

    @property
    def span(self) -> Span:
        return Span(self.line, self.col, max(len(self.text), 1))


_OPS = sorted(
    ["==", "!=", "<=", ">=", "&&", "||", "->", "=>", ":=", "..",
     "{", "}", "(", ")", "[", "]", ";", ":", ",", "=", "<", ">", "!", "?", "|", "-"],
    key=len,
    reverse=True,
)
_WORD = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INT = re.compile(r"[0-9]+")


class _LexError(Exception):
    def __init__(self, diag):
        self.diag = diag


def tokenize(src: SourceUnit) -> list[Token]:
    tokens = []
    for lineno, line in enumerate(src.text.splitlines(), start=1):
        i = 0
        while i < len(line):
            ch = line[i]
            if ch in " \t\r\f\v":
                i += 1
                continue
            if ch == "#":
                break
            m = _WORD.match(line, i)
            if m:
                tokens.append(Token("word", m.group(), lineno, i + 1))
                i = m.end()
                continue
            m = _INT.match(line, i)
            if m:
                tokens.append(Token("int", m.group(), lineno, i + 1))
                i = m.end()
                continue
            for op in _OPS:
                if line.startswith(op, i):
                    tokens.append(Token("op", op, lineno, i + 1))
                    i += len(op)
                    break
            else:
                raise _LexError(dg.error(
                    dg.LEXICAL, f"unexpected character {ch!r}", Span(lineno, i + 1, 1), src.path
                ))
    last = len(src.text.splitlines()) or 1
    tokens.append(Token("eof", "", last, 1))
    return tokens


# -- raw syntax -------------------------------------------------------------------

@dataclass
class RawVar:
    name: str
    domain: object  # Domain or None when malformed
    default: object
    span: Span


@dataclass
class RawSystem:
    name: str
    span: Span
    vars: list = field(default_factory=list)
    chans: list = field(default_factory=list)  # (name, domain, cap, external, initial, span)
    states: list = field(default_factory=list)  # (name, bindings, is_init, init_guard, span)
    trans: list = field(default_factory=list)  # (src, dst, guard, action, span)
    props: list = field(default_factory=list)  # (name, guard, span)
    labels: list = field(default_factory=list)  # (guard, prop, span)
    terminals: list = field(default_factory=list)  # (name, span)
    refinable: bool = False


@dataclass(frozen=True)
class Composition:
    """``parallel Name = A | B shared x, y;``"""

    name: str
    members: tuple[str, ...]
    shared: tuple[str, ...] = ()


@dataclass(frozen=True)
class EmbedDecl:
    """``embed Inner into Outer at decl as Name;``"""

    name: str
    inner: str
    outer: str
    at: str


class _SyntaxError(Exception):
    def __init__(self, token: Token, message: str):
        self.token = token
        self.message = message


class _Parser:
    def __init__(self, tokens, src: SourceUnit):
        self.toks = tokens
        self.pos = 0
        self.src = src
        self.diags: list[Diagnostic] = []

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def at(self, text) -> bool:
        t = self.tok
        return t.kind in ("word", "op") and t.text == text

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def expect(self, text) -> Token:
        if not self.at(text):
            self.fail(f"expected '{text}'")
        return self.advance()

    def accept(self, text) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def fail(self, message):
        t = self.tok
        found = "end of file" if t.kind == "eof" else repr(t.text)
        raise _SyntaxError(t, f"{message}, found {found}")

    def name(self, what="name") -> Token:
        t = self.tok
        if t.kind != "word" or t.text in ("true", "false"):
            self.fail(f"expected {what}")
        return self.advance()

    def integer(self) -> int:
        neg = self.accept("-")
        t = self.tok
        if t.kind != "int":
            self.fail("expected integer")
        self.advance()
        return -int(t.text) if neg else int(t.text)

    def record(self, exc: _SyntaxError):
        self.diags.append(dg.error(dg.SYNTAX, exc.message, exc.token.span, self.src.path))

    def sync(self):
        """Skip to just past the next ';' at this nesting level (or stop
        before a closing brace)."""
        depth = 0
        while self.tok.kind != "eof":
            t = self.tok
            if t.text == "{" and t.kind == "op":
                depth += 1
            elif t.text == "}" and t.kind == "op":
                if depth == 0:
                    return
                depth -= 1
            elif t.text == ";" and t.kind == "op" and depth == 0:
                self.advance()
                return
            self.advance()

    # grammar
    def parse_file(self) -> list:
        items = []
        while self.tok.kind != "eof":
            try:
                if self.at("system"):
                    items.append(self.system())
                elif self.at("parallel"):
                    items.append(self.parallel())
                elif self.at("embed"):
                    items.append(self.embed())
                else:
                    self.fail("expected 'system', 'parallel' or 'embed'")
            except _SyntaxError as exc:
                self.record(exc)
                self.sync()
                if self.at("}"):
                    self.advance()
        return items

    def parallel(self):
        start = self.advance()
        name = self.name().text
        self.expect("=")
        members = [self.name("system name").text]
        while self.accept("|"):
            members.append(self.name("system name").text)
        shared = []
        if self.accept("shared"):
            shared.append(self.name("variable").text)
            while self.accept(","):
                shared.append(self.name("variable").text)
        self.expect(";")
        return (Composition(name, tuple(members), tuple(shared)), start.span)

    def embed(self):
        start = self.advance()
        inner = self.name().text
        self.expect("into")
        outer = self.name().text
        self.expect("at")
        at = self.name("declarator").text
        self.expect("as")
        name = self.name().text
        self.expect(";")
        return (EmbedDecl(name, inner, outer, at), start.span)

    def system(self) -> RawSystem:
        self.advance()
        name_tok = self.name("system name")
        raw = RawSystem(name_tok.text, name_tok.span)
        self.expect("{")
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.fail("expected '}'")
            try:
                self.member(raw)
            except _SyntaxError as exc:
                self.record(exc)
                self.sync()
        self.expect("}")
        return raw

    def member(self, raw: RawSystem):
        t = self.tok
        if self.accept("vars"):
            self.expect("{")
            while not self.at("}"):
                if self.tok.kind == "eof":
                    self.fail("expected '}'")
                try:
                    vt = self.name("variable name")
                    self.expect(":")
                    domain = self.domain()
                    default = None
                    if self.accept("="):
                        default = self.value()
                    self.expect(";")
                    raw.vars.append(RawVar(vt.text, domain, default, vt.span))
                except _SyntaxError as exc:
                    self.record(exc)
                    self.sync()
            self.expect("}")
        elif self.accept("chan"):
            ct = self.name("channel name")
            self.expect(":")
            domain = self.domain()
            self.expect("cap")
            cap = self.integer()
            external = self.accept("external")
            initial = []
            if self.accept("="):
                self.expect("[")
                if not self.at("]"):
                    initial.append(self.value())
                    while self.accept(","):
                        initial.append(self.value())
                self.expect("]")
            self.expect(";")
            raw.chans.append((ct.text, domain, cap, external, tuple(initial), ct.span))
        elif self.accept("state"):
            st = self.name("declarator name")
            self.expect("{")
            bindings = []
            if not self.at("}"):
                bindings.append(self.binding())
                while self.accept(","):
                    bindings.append(self.binding())
            self.expect("}")
            is_init, init_guard = False, None
            if self.accept("init"):
                is_init = True
                if self.accept("when"):
                    init_guard = self.guard()
            self.expect(";")
            raw.states.append((st.text, bindings, is_init, init_guard, st.span))
        elif self.accept("trans"):
            src = self.name("declarator name")
            self.expect("->")
            dst = self.name("declarator name")
            guard = None
            if self.accept("when"):
                guard = self.guard()
            self.expect("on")
            action = self.action()
            self.expect(";")
            raw.trans.append((src, dst, guard, action, t.span))
        elif self.accept("prop"):
            pt = self.name("proposition name")
            self.expect(":=")
            g = self.guard()
            self.expect(";")
            raw.props.append((pt.text, g, pt.span))
        elif self.accept("label"):
            self.expect("when")
            g = self.guard()
            self.expect("=>")
            pt = self.name("proposition name")
            self.expect(";")
            raw.labels.append((g, pt.text, pt.span))
        elif self.accept("terminal"):
            nt = self.name("declarator name")
            raw.terminals.append((nt.text, nt.span))
            while self.accept(","):
                nt = self.name("declarator name")
                raw.terminals.append((nt.text, nt.span))
            self.expect(";")
        elif self.accept("refinable"):
            self.expect(";")
            raw.refinable = True
        else:
            self.fail("expected a system member (vars, chan, state, trans, prop, label, terminal)")

    def domain(self):
        if self.accept("bool"):
            return Domain.boolean()
        if self.at("int"):
            t = self.advance()
            if not self.at("["):
                raise _SyntaxError(t, "integer types need an explicit range, e.g. int[0..4]")
            self.advance()
            lo = self.integer()
            self.expect("..")
            hi = self.integer()
            close = self.expect("]")
            try:
                return Domain.integer(lo, hi)
            except ValueError as exc:
                self.diags.append(dg.error(dg.BAD_DOMAIN, str(exc), close.span, self.src.path))
                return None
        if self.at("{"):
            t = self.advance()
            names = [self.name("enumerant").text]
            while self.accept(","):
                names.append(self.name("enumerant").text)
            self.expect("}")
            try:
                return Domain.enum(*names)
            except ValueError as exc:
                self.diags.append(dg.error(dg.BAD_DOMAIN, str(exc), t.span, self.src.path))
                return None
        self.fail("expected a type (bool, int[lo..hi] or {a, b, ...})")

    def value(self):
        if self.accept("true"):
            return True
        if self.accept("false"):
            return False
        if self.tok.kind == "int" or self.at("-"):
            return self.integer()
        return ("sym", self.name("value").text)

    def binding(self):
        nt = self.name("variable")
        self.expect("=")
        return (nt.text, self.value(), nt.span)

    def action(self):
        first = self.name("action or channel")
        if self.accept("?"):
            var = self.name("variable")
            return ("recv", first.text, var.text, first.span)
        if self.accept("!"):
            if self.tok.kind == "word" and self.tok.text not in ("true", "false"):
                msg = ("name", self.advance().text)
            else:
                msg = ("lit", self.value())
            return ("send", first.text, msg, first.span)
        return ("named", first.text, None, first.span)

    # guards
    def guard(self):
        lhs = self.disjunction()
        if self.accept("->"):
            return ("imp", lhs, self.guard())
        return lhs

    def disjunction(self):
        parts = [self.conjunction()]
        while self.accept("||"):
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else ("or", parts)

    def conjunction(self):
        parts = [self.unary()]
        while self.accept("&&"):
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else ("and", parts)

    def unary(self):
        if self.accept("!"):
            return ("not", self.unary())
        if self.accept("("):
            g = self.guard()
            self.expect(")")
            return ("paren", g)
        if self.accept("true"):
            return ("const", True)
        if self.accept("false"):
            return ("const", False)
        nt = self.name("variable or '('")
        for op in ("==", "!=", "<=", ">=", "<", ">"):
            if self.accept(op):
                if self.tok.kind == "word" and self.tok.text not in ("true", "false"):
                    rhs = ("name", self.advance().text)
                else:
                    rhs = ("lit", self.value())
                return ("cmp", nt.text, op, rhs, nt.span)
        return ("atom", nt.text, nt.span)


# -- resolution -------------------------------------------------------------------

def _resolve_value(value, domain: Domain | None):
    if isinstance(value, tuple) and value[0] == "sym":
        return value[1]
    return value


class _Resolver:
    def __init__(self, raw: RawSystem, path: str, diags: list):
        self.raw = raw
        self.path = path
        self.diags = diags
        self.sigs: dict[str, VarSignature] = {}
        self.symbols: set[str] = set()

    def err(self, code, message, span):
        self.diags.append(dg.error(code, message, span, self.path))

    def build(self) -> SystemGraph:
        raw = self.raw
        spans: dict = {("system",): raw.span}
        signatures = []
        for rv in raw.vars:
            if ("var", rv.name) in spans:
                spans[("dup-var", rv.name)] = rv.span
            spans.setdefault(("var", rv.name), rv.span)
            if rv.domain is None:
                continue
            default = None if rv.default is None else _resolve_value(rv.default, rv.domain)
            if default is not None and default not in rv.domain:
                self.err(dg.KIND_MISMATCH, f"default of {rv.name} is not in {rv.domain.render()}", rv.span)
                default = None
            sig = VarSignature(rv.name, rv.domain, default)
            signatures.append(sig)
            self.sigs.setdefault(rv.name, sig)
            if rv.domain.kind == SYM:
                self.symbols |= set(rv.domain.symbols)
        channels = []
        for name, domain, cap, external, initial, span in raw.chans:
            spans.setdefault(("chan", name), span)
            if domain is None:
                continue
            if domain.kind == SYM:
                self.symbols |= set(domain.symbols)
            init_vals = tuple(_resolve_value(v, domain) for v in initial)
            if cap < 0:
                self.err(dg.BAD_DOMAIN, f"channel {name} has negative capacity", span)
                continue
            if len(init_vals) > cap:
                self.err(dg.BAD_DOMAIN, f"initial contents of {name} exceed its capacity", span)
                init_vals = init_vals[:cap]
            channels.append(ChannelDecl(name, cap, domain, external, init_vals))

        declarators, initial, init_guard = [], "", TRUE
        for name, bindings, is_init, g, span in raw.states:
            if ("state", name) in spans:
                spans[("dup-state", name)] = span
            spans.setdefault(("state", name), span)
            partial = []
            for var, value, bspan in bindings:
                partial.append((var, _resolve_value(value, None)))
                spans.setdefault(("bind", name, var), bspan)
            declarators.append(StateDeclarator(name, Evaluation(partial)))
            if is_init:
                if initial:
                    self.err(dg.MULTIPLE_INITIAL, f"second initial declarator {name!r} (first was {initial!r})", span)
                else:
                    initial = name
                    spans[("init",)] = span
                    if g is not None:
                        init_guard = self.guard(g)

        transitions = []
        for i, (src, dst, g, action, span) in enumerate(raw.trans):
            spans[("trans", i)] = span
            spans[("trans-src", i)] = src.span
            spans[("trans-dst", i)] = dst.span
            guard = TRUE if g is None else self.guard(g)
            transitions.append(GraphTransition(src.text, guard, self.action(action), dst.text))

        props = []
        for name, g, span in raw.props:
            spans.setdefault(("prop", name), span)
            props.append(Proposition(name, self.guard(g)))
        labels = []
        for i, (g, prop, span) in enumerate(raw.labels):
            spans[("label", i)] = span
            labels.append(LabelRule(self.guard(g), prop))
        terminals = []
        for name, span in raw.terminals:
            spans.setdefault(("terminal", name), span)
            if name not in terminals:
                terminals.append(name)

        return SystemGraph(
            name=raw.name,
            signatures=tuple(signatures),
            channels=tuple(channels),
            declarators=tuple(declarators),
            transitions=tuple(transitions),
            initial=initial,
            initial_guard=init_guard,
            terminals=tuple(terminals),
            propositions=tuple(props),
            labeling=tuple(labels),
            refinable=raw.refinable,
            spans=spans,
        )

    def action(self, action):
        kind, first, second, _ = action
        if kind == "recv":
            return Receive(first, second)
        if kind == "send":
            tag, payload = second
            if tag == "name":
                if payload in self.sigs or payload not in self.symbols:
                    return Send(first, VarRef(payload))
                return Send(first, payload)
            return Send(first, _resolve_value(payload, None))
        return Named(first)

    def guard(self, g):
        tag = g[0]
        if tag == "const":
            return TRUE if g[1] else FALSE
        if tag == "paren":
            return self.guard(g[1])
        if tag == "not":
            return Not(self.guard(g[1]))
        if tag == "and":
            return And(tuple(self.guard(x) for x in g[1]))
        if tag == "or":
            return Or(tuple(self.guard(x) for x in g[1]))
        if tag == "imp":
            return Implies(self.guard(g[1]), self.guard(g[2]))
        if tag == "atom":
            return Cmp(g[1], "==", True)
        _, var, op, rhs, _span = g
        rtag, payload = rhs
        if rtag == "name":
            sig = self.sigs.get(var)
            if payload in self.sigs:
                return Cmp(var, op, VarRef(payload))
            if sig is not None and sig.kind == SYM and payload in sig.domain.symbols:
                return Cmp(var, op, payload)
            if payload in self.symbols:
                return Cmp(var, op, payload)
            return Cmp(var, op, VarRef(payload))
        return Cmp(var, op, _resolve_value(payload, None))


@dataclass
class Model:
    """Everything declared in one source file."""

    path: str
    graphs: dict[str, SystemGraph]
    compositions: dict[str, Composition]
    embeds: dict[str, EmbedDecl]
    order: list[str]
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def main(self) -> str:
        return self.order[-1]

    def graph(self, name: str | None = None) -> SystemGraph:
        name = name or self.main
        if name not in self.graphs:
            raise ModelError(f"{name!r} is a parallel composition, not a single system graph")
        return self.graphs[name]

    def is_composite(self, name: str | None = None) -> bool:
        return (name or self.main) in self.compositions

    def channel_system(self, name: str | None = None):
        """The main (or named) declaration as a channel system."""
        from ..elaboration import ChannelSystem

        name = name or self.main
        comp = self.compositions.get(name)
        if comp is None:
            return ChannelSystem.of(self.graphs[name])
        return ChannelSystem.of(*(self.graphs[m] for m in comp.members), shared=comp.shared)

    def propositions(self, name: str | None = None) -> list[str]:
        name = name or self.main
        members = self.compositions[name].members if name in self.compositions else (name,)
        out = []
        for m in members:
            for p in self.graphs[m].propositions:
                if p.name not in out:
                    out.append(p.name)
        return out


def parse_model(src: SourceUnit | str, path: str = "<input>") -> Model:
    """Parse and validate a whole file; raises :class:`ModelError` with the
    collected diagnostics when any error is found."""
    from .validate import validate_graph

    if isinstance(src, str):
        src = SourceUnit(path, src)
    try:
        tokens = tokenize(src)
    except _LexError as exc:
        raise ModelError(exc.diag.format(), [exc.diag]) from None
    parser = _Parser(tokens, src)
    items = parser.parse_file()
    diags = list(parser.diags)

    graphs: dict[str, SystemGraph] = {}
    compositions: dict[str, Composition] = {}
    embeds: dict[str, EmbedDecl] = {}
    order: list[str] = []

    def declare(name, span) -> bool:
        if name in order:
            diags.append(dg.error(dg.DUPLICATE_NAME, f"duplicate declaration {name!r}", span, src.path))
            return False
        order.append(name)
        return True

    for item in items:
        if isinstance(item, RawSystem):
            g = _Resolver(item, src.path, diags).build()
            if declare(g.name, item.span):
                diags.extend(validate_graph(g, src.path))
                graphs[g.name] = g
        else:
            decl, span = item
            if not declare(decl.name, span):
                continue
            if isinstance(decl, Composition):
                compositions[decl.name] = decl
                diags.extend(_check_composition(decl, graphs, span, src.path))
            else:
                embeds[decl.name] = decl
                graph = _apply_embed(decl, graphs, span, src.path, diags)
                if graph is not None:
                    graphs[decl.name] = graph

    if not order and not any(d.is_error for d in diags):
        diags.append(dg.error(
            dg.MISSING_INITIAL, "missing initial declarator: no system declared", Span(1, 1, 0), src.path
        ))
    if any(d.is_error for d in diags):
        first = next(d for d in diags if d.is_error)
        raise ModelError(first.format(), diags)
    return Model(src.path, graphs, compositions, embeds, order, diags)


def parse_source(src: SourceUnit | str, path: str = "<input>") -> SystemGraph:
    """Parse a file whose main declaration is a single system graph."""
    return parse_model(src, path).graph()


def load_model(path) -> Model:
    return parse_model(SourceUnit.from_file(path))


def _check_composition(comp: Composition, graphs, span, path) -> list[Diagnostic]:
    out = []
    members = []
    for m in comp.members:
        if m not in graphs:
            out.append(dg.error(dg.UNRESOLVED, f"unknown system {m!r} in parallel {comp.name}", span, path))
        else:
            members.append(graphs[m])
    if out:
        return out
    from ..elaboration import check_composable

    for message in check_composable(members, comp.shared):
        out.append(dg.error(dg.COMPOSITION, message, span, path))
    return out


def _apply_embed(decl: EmbedDecl, graphs, span, path, diags):
    from ..errors import EmbeddingError
    from ..increment import embed

    for ref in (decl.inner, decl.outer):
        if ref not in graphs:
            diags.append(dg.error(dg.UNRESOLVED, f"unknown system {ref!r} in embed {decl.name}", span, path))
            return None
    try:
        return embed(graphs[decl.inner], graphs[decl.outer], decl.at, name=decl.name)
    except EmbeddingError as exc:
        diags.append(dg.error(dg.COMPOSITION, str(exc), span, path))
        return None
