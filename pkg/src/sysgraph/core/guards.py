"""Guard formulas: quantifier-free comparisons closed under the usual
connectives, with evaluation, normal forms and rendering."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .values import kind_of, render_value

CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")
ORDER_OPS = ("<", "<=", ">", ">=")

_NEGATED_OP = {"==": "!=", "!=": "==", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class VarRef:
    """A variable used as the right-hand side of a comparison."""

    name: str


@dataclass(frozen=True)
class Cmp:
    var: str
    op: str
    rhs: object  # literal value or VarRef


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class And:
    args: tuple


@dataclass(frozen=True)
class Or:
    args: tuple


@dataclass(frozen=True)
class Implies:
    lhs: object
    rhs: object


TRUE = Const(True)
FALSE = Const(False)

Guard = Const | Cmp | Not | And | Or | Implies


def conj(*args) -> Guard:
    args = tuple(a for a in args if a != TRUE)
    if not args:
        return TRUE
    return args[0] if len(args) == 1 else And(args)


def _compare(lhs, op, rhs) -> bool:
    if op == "==":
        return kind_of(lhs) == kind_of(rhs) and lhs == rhs
    if op == "!=":
        return not (kind_of(lhs) == kind_of(rhs) and lhs == rhs)
    if op == "<":
        return lhs < rhs
    if op == "<=":
        return lhs <= rhs
    if op == ">":
        return lhs > rhs
    if op == ">=":
        return lhs >= rhs
    raise ValueError(op)


def guard_sat(v, g) -> bool:
    """``v |= g`` for an evaluation ``v``."""
    match g:
        case Const(value):
            return value
        case Cmp(var, op, rhs):
            right = v[rhs.name] if isinstance(rhs, VarRef) else rhs
            return _compare(v[var], op, right)
        case Not(arg):
            return not guard_sat(v, arg)
        case And(args):
            return all(guard_sat(v, a) for a in args)
        case Or(args):
            return any(guard_sat(v, a) for a in args)
        case Implies(lhs, rhs):
            return (not guard_sat(v, lhs)) or guard_sat(v, rhs)
    raise TypeError(f"not a guard: {g!r}")


def variables(g) -> set[str]:
    match g:
        case Const():
            return set()
        case Cmp(var, _, rhs):
            return {var, rhs.name} if isinstance(rhs, VarRef) else {var}
        case Not(arg):
            return variables(arg)
        case And(args) | Or(args):
            out = set()
            for a in args:
                out |= variables(a)
            return out
        case Implies(lhs, rhs):
            return variables(lhs) | variables(rhs)
    raise TypeError(f"not a guard: {g!r}")


def comparisons(g) -> list[Cmp]:
    """Every comparison occurring in ``g``, in first-occurrence order."""
    out: list[Cmp] = []

    def walk(node):
        match node:
            case Cmp():
                if node not in out:
                    out.append(node)
            case Not(arg):
                walk(arg)
            case And(args) | Or(args):
                for a in args:
                    walk(a)
            case Implies(lhs, rhs):
                walk(lhs)
                walk(rhs)

    walk(g)
    return out


# -- normal forms -------------------------------------------------------------

def to_nnf(g, negate: bool = False):
    """Negation normal form; negations end up directly above comparisons."""
    match g:
        case Const(value):
            return Const(value != negate)
        case Cmp():
            return Not(g) if negate else g
        case Not(arg):
            return to_nnf(arg, not negate)
        case And(args):
            parts = tuple(to_nnf(a, negate) for a in args)
            return Or(parts) if negate else And(parts)
        case Or(args):
            parts = tuple(to_nnf(a, negate) for a in args)
            return And(parts) if negate else Or(parts)
        case Implies(lhs, rhs):
            return to_nnf(Or((Not(lhs), rhs)), negate)
    raise TypeError(f"not a guard: {g!r}")


def cnf_clauses(g) -> tuple[tuple[tuple[Cmp, bool], ...], ...]:
    """Conjunctive normal form as clauses of ``(comparison, polarity)``.

    Tautological clauses are dropped and duplicates removed; an empty
    clause tuple means *true*, a tuple containing an empty clause *false*.
    Clause and literal order follow first occurrence, so the result is
    deterministic for syntactically equal input.
    """

    def go(node) -> list[tuple]:
        match node:
            case Const(True):
                return []
            case Const(False):
                return [()]
            case Cmp():
                return [((node, True),)]
            case Not(Cmp() as c):
                return [((c, False),)]
            case And(args):
                out = []
                for a in args:
                    for clause in go(a):
                        if clause not in out:
                            out.append(clause)
                return out
            case Or(args):
                acc = [()]
                for a in args:
                    sub = go(a)
                    acc = [_join(x, y) for x, y in product(acc, sub)]
                    acc = [c for c in acc if c is not None]
                out = []
                for c in acc:
                    if c not in out:
                        out.append(c)
                return out
        raise TypeError(f"not in NNF: {node!r}")

    clauses = go(to_nnf(g))
    if () in clauses:
        return ((),)
    return tuple(clauses)


def _join(a: tuple, b: tuple):
    out = list(a)
    for lit in b:
        if (lit[0], not lit[1]) in out:
            return None  # tautology
        if lit not in out:
            out.append(lit)
    return tuple(out)


def to_cnf(g):
    clauses = cnf_clauses(g)
    if not clauses:
        return TRUE
    if clauses == ((),):
        return FALSE
    parts = []
    for clause in clauses:
        lits = tuple(c if pos else Not(c) for c, pos in clause)
        parts.append(lits[0] if len(lits) == 1 else Or(lits))
    return parts[0] if len(parts) == 1 else And(tuple(parts))


def atoms(g) -> frozenset[Cmp]:
    """Atomic comparisons contained in the CNF of ``g`` (polarity dropped)."""
    return frozenset(c for clause in cnf_clauses(g) for c, _ in clause)


def negate_cmp(c: Cmp) -> Cmp:
    return Cmp(c.var, _NEGATED_OP[c.op], c.rhs)


# -- rendering ----------------------------------------------------------------

def _render_rhs(rhs) -> str:
    return rhs.name if isinstance(rhs, VarRef) else render_value(rhs)


def render(g) -> str:
    """Source syntax; nested binary connectives are parenthesised so the
    text parses back to an identical tree."""
    match g:
        case Const(value):
            return "true" if value else "false"
        case Cmp(var, op, rhs):
            return f"{var} {op} {_render_rhs(rhs)}"
        case Not(arg):
            return "!" + _wrap(arg, unary=True)
        case And(args):
            return " && ".join(_wrap(a) for a in args)
        case Or(args):
            return " || ".join(_wrap(a) for a in args)
        case Implies(lhs, rhs):
            return f"{_wrap(lhs)} -> {_wrap(rhs)}"
    raise TypeError(f"not a guard: {g!r}")


def _wrap(g, unary=False) -> str:
    if isinstance(g, (Const, Not)) or (isinstance(g, Cmp) and not unary):
        return render(g)
    return f"({render(g)})"


def atom_label(c: Cmp) -> str:
    """Whitespace-free rendering used as an atomic-proposition name."""
    return f"{c.var}{c.op}{_render_rhs(c.rhs)}"
