"""Temporal formulas: AST, parser, rendering and logic classification.

Accepted syntax (ASCII and unicode spellings are interchangeable)::

    atoms      Name, true, false
    boolean    !p  ~p  ¬p     p && q  p & q  p ∧ q     p || q  p | q  p ∨ q
               p -> q  p => q  p → q
    LTL        X p  ◯ p    F p  <> p  ◇ p    G p  [] p  □ p    p U q    p R q
    CTL        AX AF AG EX EF EG (also ∀◯ ∀◇ ∀□ ∃◯ ∃◇ ∃□, A G p, ...)
               A[p U q]  E[p U q]  (also ∀(p U q), ∃(p U q))
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import PropertyError

LTL = "LTL"
CTL = "CTL"

BOOL_OPS = {"not", "and", "or", "implies"}
LTL_OPS = {"X", "F", "G", "U", "R"}
CTL_OPS = {"EX", "EF", "EG", "EU", "AX", "AF", "AG", "AU"}


@dataclass(frozen=True)
class Node:
    op: str  # "ap", "true", "false", a boolean, LTL or CTL operator
    args: tuple = ()
    name: str = ""

    def __str__(self) -> str:
        return render(self)


TRUE = Node("true")
FALSE = Node("false")


def ap(name: str) -> Node:
    return Node("ap", (), name)


def mk(op: str, *args: Node) -> Node:
    return Node(op, tuple(args))


@dataclass(frozen=True)
class Formula:
    logic: str
    ast: Node
    text: str = ""

    @property
    def canonical(self) -> str:
        return render(self.ast)

    def __str__(self) -> str:
        return self.canonical


def propositions(node: Node) -> set[str]:
    if node.op == "ap":
        return {node.name}
    out = set()
    for a in node.args:
        out |= propositions(a)
    return out


def depth(node: Node) -> int:
    """Temporal nesting depth."""
    inner = max((depth(a) for a in node.args), default=0)
    return inner + (1 if node.op in LTL_OPS or node.op in CTL_OPS else 0)


def subformulas(node: Node) -> list[Node]:
    out = []
    for a in node.args:
        out.extend(subformulas(a))
    out.append(node)
    return out


# -- rendering ----------------------------------------------------------------------------

_BIN = {"and": "&&", "or": "||", "implies": "->", "U": "U", "R": "R"}
_PREC = {"implies": 1, "or": 2, "and": 3, "U": 4, "R": 4}


def render(node: Node) -> str:
    op = node.op
    if op == "ap":
        return node.name
    if op in ("true", "false"):
        return op
    if op == "not":
        return "!" + _paren(node.args[0], 5)
    if op in ("X", "F", "G", "AX", "AF", "AG", "EX", "EF", "EG"):
        return f"{op} " + _paren(node.args[0], 5)
    if op in ("AU", "EU"):
        return f"{op[0]}[{render(node.args[0])} U {render(node.args[1])}]"
    left, right = node.args
    prec = _PREC[op]
    # -> associates to the right, the rest to the left
    lp, rp = (prec + 1, prec) if op == "implies" else (prec, prec + 1)
    return f"{_paren(left, lp)} {_BIN[op]} {_paren(right, rp)}"


def _paren(node: Node, min_prec: int) -> str:
    text = render(node)
    prec = _PREC.get(node.op, 6 if node.op in ("ap", "true", "false") else 5)
    return f"({text})" if prec < min_prec else text


# -- lexer / parser ------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<word>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>->|=>|&&|\|\||<>|\[\]|[()\[\]!~&|¬∧∨→□◇◯∀∃]))"
)
_UNICODE = {"¬": "!", "~": "!", "∧": "&&", "&": "&&", "∨": "||", "|": "||", "→": "->", "=>": "->",
            "□": "G", "[]": "G", "◇": "F", "<>": "F", "◯": "X", "∀": "A", "∃": "E"}


def _tokenize(text: str) -> list[tuple[str, int]]:
    out, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise PropertyError(f"syntax error at column {pos + 1}: unexpected {text[pos:].strip()[:1]!r}")
        tok = m.group("word") or m.group("op")
        out.append((_UNICODE.get(tok, tok), m.start(m.lastindex) + 1))
        pos = m.end()
    out.append(("<end>", len(text) + 1))
    return out


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i][0]

    def fail(self, message):
        raise PropertyError(f"syntax error at column {self.toks[self.i][1]}: {message}")

    def eat(self, t):
        if self.tok != t:
            self.fail(f"expected {t!r}, found {self.tok!r}")
        self.i += 1

    def parse(self) -> Node:
        node = self.implication()
        if self.tok != "<end>":
            self.fail(f"unexpected {self.tok!r}")
        return node

    def implication(self):
        left = self.disjunction()
        if self.tok == "->":
            self.i += 1
            return mk("implies", left, self.implication())
        return left

    def disjunction(self):
        node = self.conjunction()
        while self.tok == "||":
            self.i += 1
            node = mk("or", node, self.conjunction())
        return node

    def conjunction(self):
        node = self.binary_temporal()
        while self.tok == "&&":
            self.i += 1
            node = mk("and", node, self.binary_temporal())
        return node

    def binary_temporal(self):
        left = self.unary()
        if self.tok in ("U", "R"):
            op = self.tok
            self.i += 1
            return mk(op, left, self.binary_temporal())
        return left

    def unary(self):
        t = self.tok
        if t == "!":
            self.i += 1
            return mk("not", self.unary())
        if t in ("X", "F", "G"):
            self.i += 1
            return mk(t, self.unary())
        if t in CTL_OPS and t not in ("EU", "AU"):
            self.i += 1
            return mk("Q" + t[0], mk(t[1], self.unary()))
        if t in ("A", "E"):
            self.i += 1
            if self.tok in ("[", "("):
                close = "]" if self.tok == "[" else ")"
                self.i += 1
                inner = self.implication()
                self.eat(close)
                return mk("Q" + t, inner)
            return mk("Q" + t, self.unary())
        if t == "(":
            self.i += 1
            node = self.implication()
            self.eat(")")
            return node
        if t == "true":
            self.i += 1
            return TRUE
        if t == "false":
            self.i += 1
            return FALSE
        if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", t) and t not in ("U", "R"):
            self.i += 1
            return ap(t)
        self.fail(f"unexpected {t!r}")


def _classify(node: Node) -> tuple[str, Node]:
    has_q = any(n.op in ("QA", "QE") for n in subformulas(node))
    if not has_q:
        return LTL, node
    return CTL, _to_ctl(node, quantified=False)


def _to_ctl(node: Node, quantified: bool) -> Node:
    op = node.op
    if op in ("QA", "QE"):
        inner = node.args[0]
        if inner.op not in ("X", "F", "G", "U"):
            raise PropertyError("mixed-logic formula: a path quantifier must be followed by X, F, G or U")
        return Node(op[1] + inner.op, tuple(_to_ctl(a, False) for a in inner.args))
    if op in LTL_OPS:
        raise PropertyError(f"mixed-logic formula: temporal operator {op} without a path quantifier")
    return Node(op, tuple(_to_ctl(a, False) for a in node.args), node.name)


def parse_formula(text: str) -> Formula:
    if not text or not text.strip():
        raise PropertyError("empty property")
    raw = _Parser(text).parse()
    logic, ast = _classify(raw)
    return Formula(logic, ast, text)


def _known_propositions(source) -> set[str] | None:
    if source is None:
        return None
    if hasattr(source, "propositions") and callable(source.propositions):
        return set(source.propositions())  # Model
    if hasattr(source, "proposition_names"):
        return set(source.proposition_names)  # ChannelSystem
    if hasattr(source, "propositions"):
        return {p.name for p in source.propositions}  # SystemGraph
    if hasattr(source, "atomic_propositions"):
        return set(source.atomic_propositions)
    return set(source)


def compile_property(text: str, graph=None) -> Formula:
    """Parse ``text`` and resolve its atoms against the propositions of ``graph``.

    ``graph`` may be a system graph, a channel system, a parsed model, a
    transition system or a plain collection of names.
    """
    f = parse_formula(text)
    known = _known_propositions(graph)
    if known is not None:
        unknown = sorted(propositions(f.ast) - known)
        if unknown:
            raise PropertyError(f"unknown proposition {unknown[0]!r}" +
                                (f" (declared: {', '.join(sorted(known))})" if known else ""))
    return f
