"""Integration-stage operations: embedding one graph into another
(horizontal increment), module detection, vertical composition and the
next-move decision."""
from __future__ import annotations

from dataclasses import dataclass

from .core.graph import (
    GraphTransition,
    LabelRule,
    Named,
    Proposition,
    StateDeclarator,
    SystemGraph,
)
from .elaboration import ChannelSystem
from .errors import EmbeddingError, OverlapError

RENAME_SUFFIX = "_inner"


def _labeling_of(g: SystemGraph, props) -> dict:
    return {p: sorted((repr(r.guard) for r in g.labeling if r.prop == p)) for p in props}


def is_module(inner: SystemGraph, outer: SystemGraph) -> bool:
    """Does ``inner`` share its declarators, actions, propositions, naming
    and labeling with ``outer``?"""
    outer_decls = {d.name: d.partial for d in outer.declarators}
    for d in inner.declarators:
        if outer_decls.get(d.name) != d.partial:
            return False
    if not set(inner.actions) <= set(outer.actions):
        return False
    outer_props = {p.name: p.formula for p in outer.propositions}
    for p in inner.propositions:
        if outer_props.get(p.name) != p.formula:
            return False
    names = [p.name for p in inner.propositions]
    return _labeling_of(inner, names) == _labeling_of(outer, names)


def _fresh(name: str, taken: set) -> str:
    new = name + RENAME_SUFFIX
    while new in taken:
        new += RENAME_SUFFIX
    return new


@dataclass
class EmbedResult:
    graph: SystemGraph
    renames: dict  # kind -> {old: new}


def embed_with_renames(inner: SystemGraph, outer: SystemGraph, at: str, name: str | None = None) -> EmbedResult:
    if at not in outer.declarator_names:
        raise EmbeddingError(f"unknown declarator {at!r} in {outer.name}")
    inbound = [t for t in outer.transitions if t.target == at]
    outbound = [t for t in outer.transitions if t.source == at]
    if any(t.source == at and t.target == at for t in outer.transitions):
        raise EmbeddingError(f"declarator {at!r} has a self-loop; it cannot be both re-entered and left")
    if outbound and not inner.terminals:
        raise EmbeddingError(
            f"{inner.name} has no terminal declarator, so the outbound transitions of {at!r} cannot be re-wired"
        )

    sigs = {s.name: s for s in outer.signatures}
    for s in inner.signatures:
        if s.name in sigs and sigs[s.name] != s:
            raise EmbeddingError(f"variable {s.name!r} is typed differently in {inner.name} and {outer.name}")
    chans = {c.name: c for c in outer.channels}
    for c in inner.channels:
        if c.name in chans and chans[c.name] != c:
            raise EmbeddingError(f"channel {c.name!r} is declared differently in {inner.name} and {outer.name}")

    module = is_module(inner, outer)
    renames = {"declarator": {}, "action": {}, "proposition": {}}
    if not module:
        # disjoint union: rename the inner side of every collision
        taken = set(outer.declarator_names) | set(inner.declarator_names)
        for d in inner.declarators:
            if d.name in outer.declarator_names:
                renames["declarator"][d.name] = new = _fresh(d.name, taken)
                taken.add(new)
        outer_named = set(outer.named_actions)
        taken = outer_named | set(inner.named_actions)
        for a in inner.named_actions:
            if a in outer_named:
                renames["action"][a] = new = _fresh(a, taken)
                taken.add(new)
        outer_props = {p.name for p in outer.propositions}
        taken = outer_props | {p.name for p in inner.propositions}
        for p in inner.propositions:
            if p.name in outer_props:
                renames["proposition"][p.name] = new = _fresh(p.name, taken)
                taken.add(new)

    rd = lambda n: renames["declarator"].get(n, n)  # noqa: E731
    rp = lambda n: renames["proposition"].get(n, n)  # noqa: E731

    def ra(a):
        if isinstance(a, Named) and a.name in renames["action"]:
            return Named(renames["action"][a.name])
        return a

    in_decls = [StateDeclarator(rd(d.name), d.partial) for d in inner.declarators]
    in_trans = [GraphTransition(rd(t.source), t.guard, ra(t.action), rd(t.target)) for t in inner.transitions]
    i1 = rd(inner.initial)
    f1 = [rd(f) for f in inner.terminals]

    # inner declarators take the place of ``at``; under plain union a shared
    # declarator keeps its first position
    declarators: dict[str, StateDeclarator] = {}
    for d in outer.declarators:
        for x in (in_decls if d.name == at else [d]):
            declarators.setdefault(x.name, x)

    transitions: list[GraphTransition] = list(in_trans)
    for t in outer.transitions:
        if t.target == at:
            transitions.append(GraphTransition(t.source, inner.initial_guard, t.action, i1))
        elif t.source == at:
            continue
        else:
            transitions.append(t)
    for f in f1:
        for t in outbound:
            transitions.append(GraphTransition(f, t.guard, t.action, t.target))
    seen = set()
    transitions = [t for t in transitions if not (t in seen or seen.add(t))]

    if at == outer.initial:
        initial, g0 = i1, inner.initial_guard
    else:
        initial, g0 = outer.initial, outer.initial_guard
    if at in outer.terminals:
        terminals = [f for f in outer.terminals if f != at]
        terminals += [f for f in f1 if f not in terminals]
    else:
        terminals = list(outer.terminals)

    props = list(outer.propositions)
    known = {p.name for p in props}
    for p in inner.propositions:
        if rp(p.name) not in known:
            props.append(Proposition(rp(p.name), p.formula))
            known.add(rp(p.name))
    labeling = list(outer.labeling)
    for r in inner.labeling:
        rule = LabelRule(r.guard, rp(r.prop))
        if rule not in labeling:
            labeling.append(rule)

    signatures = list(outer.signatures) + [s for s in inner.signatures if s.name not in sigs]
    channels = list(outer.channels) + [c for c in inner.channels if c.name not in chans]
    graph = SystemGraph(
        name=name or f"{outer.name}_{inner.name}",
        signatures=tuple(signatures),
        channels=tuple(channels),
        declarators=tuple(declarators.values()),
        transitions=tuple(transitions),
        initial=initial,
        initial_guard=g0,
        terminals=tuple(terminals),
        propositions=tuple(props),
        labeling=tuple(labeling),
        refinable=outer.refinable or inner.refinable,
    )
    return EmbedResult(graph, {k: v for k, v in renames.items() if v})


def embed(inner: SystemGraph, outer: SystemGraph, at: str, name: str | None = None) -> SystemGraph:
    """Splice ``inner`` into ``outer`` in place of declarator ``at``.

    Edges into ``at`` are redirected to the inner initial declarator under
    the inner initial guard; each inner terminal inherits a copy of every
    edge that left ``at``; ``at`` itself disappears.
    """
    return embed_with_renames(inner, outer, at, name).graph


def compose_vertical(parts, channels=(), shared=()) -> ChannelSystem:
    """Integrate graphs as communicating components of one channel system."""
    parts = list(parts)
    for c in channels:
        for g in parts:
            for own in g.channels:
                if own.name == c.name and own != c:
                    raise OverlapError(f"{g.name} declares channel {c.name!r} differently")
    return ChannelSystem(tuple(parts), frozenset(shared))


DELIVER = "deliver"
INTEGRATE = "integrate"
ITERATE = "iterate"


@dataclass(frozen=True)
class NextMove:
    refinable: bool
    dependent: bool

    @property
    def decision(self) -> str:
        if self.refinable:
            return ITERATE
        return INTEGRATE if self.dependent else DELIVER


def classify_next_move(g: SystemGraph, registry=None, refinable: bool | None = None) -> str:
    """``deliver``, ``integrate`` or ``iterate``.

    ``registry`` tells whether ``g`` is integrated into another archived
    graph: a version store, a collection of dependent graph names, or a bool.
    """
    if registry is None:
        dependent = False
    elif isinstance(registry, bool):
        dependent = registry
    elif hasattr(registry, "is_dependent"):
        dependent = registry.is_dependent(g)
    else:
        dependent = g.name in set(registry)
    flag = g.refinable if refinable is None else refinable
    return NextMove(flag, dependent).decision


__all__ = [
    "EmbedResult",
    "NextMove",
    "classify_next_move",
    "compose_vertical",
    "embed",
    "embed_with_renames",
    "is_module",
]
