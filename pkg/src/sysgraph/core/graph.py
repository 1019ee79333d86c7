"""System graphs: named state declarators joined by guarded action
transitions, plus channels, propositions and labeling rules."""
from __future__ import annotations

from dataclasses import dataclass, field

from .guards import TRUE, VarRef, atoms, guard_sat
from .values import Domain, Evaluation, VarSignature, render_value


@dataclass(frozen=True)
class Named:
    name: str


@dataclass(frozen=True)
class Send:
    channel: str
    message: object  # literal value or VarRef


@dataclass(frozen=True)
class Receive:
    channel: str
    var: str


Action = Named | Send | Receive


def action_label(a) -> str:
    match a:
        case Named(name):
            return name
        case Send(ch, VarRef(name)):
            return f"{ch}!{name}"
        case Send(ch, value):
            return f"{ch}!{render_value(value)}"
        case Receive(ch, var):
            return f"{ch}?{var}"
    raise TypeError(f"not an action: {a!r}")


def is_communication(a) -> bool:
    return isinstance(a, (Send, Receive))


@dataclass(frozen=True)
class ChannelDecl:
    """A bounded FIFO channel.  Capacity 0 is a rendezvous channel.

    An ``external`` channel is fed from outside the system: a receive may
    bind any value of the domain, and sends leave the system.
    """

    name: str
    capacity: int
    domain: Domain
    external: bool = False
    initial: tuple = ()

    def __post_init__(self):
        if self.capacity < 0:
            raise ValueError(f"channel {self.name}: negative capacity")
        if len(self.initial) > self.capacity:
            raise ValueError(f"channel {self.name}: initial contents exceed capacity")

    @property
    def synchronous(self) -> bool:
        return self.capacity == 0


@dataclass(frozen=True)
class StateDeclarator:
    name: str
    partial: Evaluation = field(default_factory=Evaluation)


@dataclass(frozen=True)
class GraphTransition:
    source: str
    guard: object
    action: object
    target: str

    @property
    def label(self) -> str:
        return action_label(self.action)


@dataclass(frozen=True)
class Proposition:
    name: str
    formula: object


@dataclass(frozen=True)
class LabelRule:
    guard: object
    prop: str


@dataclass(frozen=True)
class SystemGraph:
    name: str
    signatures: tuple[VarSignature, ...]
    channels: tuple[ChannelDecl, ...]
    declarators: tuple[StateDeclarator, ...]
    transitions: tuple[GraphTransition, ...]
    initial: str
    initial_guard: object = TRUE
    terminals: tuple[str, ...] = ()
    propositions: tuple[Proposition, ...] = ()
    labeling: tuple[LabelRule, ...] = ()
    refinable: bool = False
    # source positions keyed by ("state", name), ("trans", index), ...
    spans: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def declarator(self, name: str) -> StateDeclarator:
        for d in self.declarators:
            if d.name == name:
                return d
        raise KeyError(name)

    def signature(self, name: str) -> VarSignature:
        for s in self.signatures:
            if s.name == name:
                return s
        raise KeyError(name)

    def channel(self, name: str) -> ChannelDecl:
        for c in self.channels:
            if c.name == name:
                return c
        raise KeyError(name)

    def proposition(self, name: str) -> Proposition:
        for p in self.propositions:
            if p.name == name:
                return p
        raise KeyError(name)

    @property
    def var_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.signatures)

    @property
    def declarator_names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.declarators)

    @property
    def actions(self) -> tuple[str, ...]:
        seen = []
        for t in self.transitions:
            if t.label not in seen:
                seen.append(t.label)
        return tuple(seen)

    @property
    def named_actions(self) -> tuple[str, ...]:
        seen = []
        for t in self.transitions:
            if isinstance(t.action, Named) and t.action.name not in seen:
                seen.append(t.action.name)
        return tuple(seen)

    def outgoing(self, name: str) -> list[tuple[int, GraphTransition]]:
        return [(i, t) for i, t in enumerate(self.transitions) if t.source == name]

    def atom_set(self):
        """Atoms of every proposition, as comparisons."""
        out = set()
        for p in self.propositions:
            out |= atoms(p.formula)
        return out


def label_state(graph: SystemGraph, v) -> frozenset[str]:
    """Propositions of ``graph`` that hold in evaluation ``v``.

    A proposition with explicit labeling rules is attached only where one
    of its rules also holds; rules can restrict the default, never extend it.
    """
    ruled: dict[str, list] = {}
    for rule in graph.labeling:
        ruled.setdefault(rule.prop, []).append(rule.guard)
    out = set()
    for p in graph.propositions:
        if not guard_sat(v, p.formula):
            continue
        guards = ruled.get(p.name)
        if guards is None or any(guard_sat(v, g) for g in guards):
            out.add(p.name)
    return frozenset(out)
