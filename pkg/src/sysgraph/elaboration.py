"""Lowering system graphs to explicit transition systems.

State inference completes a declarator's partial evaluation against the
predecessor state; channel semantics add bounded FIFO queues and
rendezvous; components interleave one move at a time.  Exploration is
breadth-first, and successors are generated in (component index,
transition source order) so the resulting state numbering is reproducible.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

from .core.graph import (
    ChannelDecl,
    Named,
    Receive,
    Send,
    StateDeclarator,
    SystemGraph,
    action_label,
    label_state,
)
from .core.guards import VarRef, And, atom_label, guard_sat
from .core.ts import StateInfo, Transition, TransitionSystem
from .core.values import Evaluation, VarSignature, eval_merge, eval_override
from .errors import ExplorationLimit, InitialGuardViolated, ModelError, OverlapError

GlobalState = StateInfo


class Move(NamedTuple):
    """One enabled step of a channel system."""

    label: str
    guard: object
    target: StateInfo
    movers: tuple  # component indices that move (two for a handshake)
    fired: tuple  # the graph transitions taken, receiver first for handshakes
    value: object = None  # message sent or received, if any


@dataclass(frozen=True)
class ExplorationConfig:
    max_states: int = 1_000_000
    max_depth: int = 100_000
    on_limit: str = "error"  # or "truncate"

    def __post_init__(self):
        if self.max_states < 1 or self.max_depth < 1:
            raise ValueError("exploration bounds must be >= 1")
        if self.on_limit not in ("error", "truncate"):
            raise ValueError(f"on_limit must be 'error' or 'truncate', not {self.on_limit!r}")


DEFAULT_CONFIG = ExplorationConfig()


def check_composable(graphs, shared=()) -> list[str]:
    """Reasons why ``graphs`` cannot run side by side (empty if they can)."""
    problems = []
    shared = set(shared)
    owner: dict[str, tuple[str, VarSignature]] = {}
    for g in graphs:
        for sig in g.signatures:
            if sig.name in owner:
                other_graph, other = owner[sig.name]
                if sig.name not in shared:
                    problems.append(
                        f"variable {sig.name!r} is declared by both {other_graph} and {g.name} "
                        f"but is not shared"
                    )
                elif other.domain != sig.domain or other.default != sig.default:
                    problems.append(
                        f"shared variable {sig.name!r} declared with conflicting types "
                        f"({other.domain.render()} vs {sig.domain.render()})"
                    )
            else:
                owner[sig.name] = (g.name, sig)
    for name in shared:
        if name not in owner:
            problems.append(f"shared variable {name!r} is not declared by any component")
    chans: dict[str, ChannelDecl] = {}
    for g in graphs:
        for c in g.channels:
            if c.name in chans and chans[c.name] != c:
                problems.append(f"channel {c.name!r} declared inconsistently")
            chans.setdefault(c.name, c)
    props: dict = {}
    for g in graphs:
        for p in g.propositions:
            if p.name in props and props[p.name] != p.formula:
                problems.append(f"proposition {p.name!r} defined differently by two components")
            props.setdefault(p.name, p.formula)
    return problems


@dataclass(frozen=True)
class ChannelSystem:
    """Components running in parallel over a common channel set.

    Non-shared variables of different components must be disjoint.
    """

    components: tuple[SystemGraph, ...]
    shared: frozenset = frozenset()

    def __post_init__(self):
        problems = check_composable(self.components, self.shared)
        if problems:
            if any("not shared" in p for p in problems):
                raise OverlapError("; ".join(problems))
            raise ModelError("; ".join(problems))

    @classmethod
    def of(cls, *graphs: SystemGraph, shared=()) -> ChannelSystem:
        return cls(tuple(graphs), frozenset(shared))

    @property
    def channels(self) -> tuple[ChannelDecl, ...]:
        out, seen = [], set()
        for g in self.components:
            for c in g.channels:
                if c.name not in seen:
                    seen.add(c.name)
                    out.append(c)
        return tuple(out)

    @property
    def signatures(self) -> tuple[VarSignature, ...]:
        out, seen = [], set()
        for g in self.components:
            for s in g.signatures:
                if s.name not in seen:
                    seen.add(s.name)
                    out.append(s)
        return tuple(out)

    @property
    def proposition_names(self) -> list[str]:
        out = []
        for g in self.components:
            for p in g.propositions:
                if p.name not in out:
                    out.append(p.name)
        return out

    def component_states(self, state: GlobalState) -> list[Evaluation]:
        """Per-component view of ``state`` (own variables plus shared ones)."""
        return [state.evaluation.restrict(g.var_names) for g in self.components]


# -- state inference ----------------------------------------------------------------

def initial_state(g: SystemGraph) -> Evaluation:
    """Initial evaluation: pinned by the initial declarator, defaults elsewhere."""
    pinned = g.declarator(g.initial).partial
    v = Evaluation((s.name, pinned[s.name] if s.name in pinned else s.default) for s in g.signatures)
    if not guard_sat(v, g.initial_guard):
        raise InitialGuardViolated(f"{g.name}: initial evaluation {v!r} violates the initial guard")
    return v


def infer_successor(current: Evaluation, target: StateDeclarator) -> Evaluation:
    return eval_override(current, target.partial)


# -- exploration engine ------------------------------------------------------------------

class Engine:
    def __init__(self, cs: ChannelSystem, open_channels: bool):
        self.cs = cs
        self.graphs = cs.components
        self.chans = {c.name: c for c in cs.channels}
        self.chan_order = [c.name for c in cs.channels]
        self.external = {c.name: open_channels or c.external for c in cs.channels}
        self.decls = [{d.name: d for d in g.declarators} for g in self.graphs]
        self.out = [
            {d.name: [t for t in g.transitions if t.source == d.name] for d in g.declarators}
            for g in self.graphs
        ]
        atoms = set()
        for g in self.graphs:
            atoms |= g.atom_set()
        self.atoms = sorted(atoms, key=atom_label)
        self.ap = frozenset(cs.proposition_names) | {atom_label(a) for a in self.atoms}

    def initial(self) -> GlobalState:
        values: dict = {}
        for g in self.graphs:
            for k, v in initial_state(g).items():
                if k in values and values[k] != v:
                    raise ModelError(f"components disagree on the initial value of shared variable {k!r}")
                values[k] = v
        v = Evaluation((s.name, values[s.name]) for s in self.cs.signatures)
        channels = tuple(
            (name, () if self.external[name] else self.chans[name].initial) for name in self.chan_order
        )
        return StateInfo(tuple(g.initial for g in self.graphs), v, channels)

    def labels(self, state: GlobalState) -> frozenset:
        v = state.evaluation
        out = set()
        for g in self.graphs:
            out |= label_state(g, v)
        out |= {atom_label(a) for a in self.atoms if guard_sat(v, a)}
        return frozenset(out)

    @staticmethod
    def _message(msg, v):
        return v[msg.name] if isinstance(msg, VarRef) else msg

    def moves(self, state: GlobalState) -> list[Move]:
        """Enabled moves in canonical (component, transition, value) order."""
        locs, v, channels = state
        queues = dict(channels)
        result = []
        for i, g in enumerate(self.graphs):
            for t in self.out[i][locs[i]]:
                if not guard_sat(v, t.guard):
                    continue
                a = t.action
                target = self.decls[i][t.target]
                new_locs = locs[:i] + (t.target,) + locs[i + 1:]
                if isinstance(a, Named):
                    result.append(Move(a.name, t.guard, StateInfo(new_locs, infer_successor(v, target), channels),
                                       (i,), (t,)))
                elif isinstance(a, Send):
                    ch = self.chans[a.channel]
                    msg = self._message(a.message, v)
                    if self.external[a.channel]:
                        result.append(Move(action_label(a), t.guard,
                                           StateInfo(new_locs, infer_successor(v, target), channels), (i,), (t,), msg))
                    elif ch.capacity > 0:
                        q = queues[a.channel]
                        if len(q) < ch.capacity:
                            nq = self._with(channels, a.channel, q + (msg,))
                            result.append(Move(action_label(a), t.guard,
                                               StateInfo(new_locs, infer_successor(v, target), nq), (i,), (t,), msg))
                    # rendezvous sends fire together with a receive, below
                elif isinstance(a, Receive):
                    ch = self.chans[a.channel]
                    label = action_label(a)
                    if self.external[a.channel]:
                        for value in ch.domain.values():
                            v1 = eval_override(v, {a.var: value})
                            result.append(Move(label, t.guard, StateInfo(new_locs, infer_successor(v1, target), channels),
                                               (i,), (t,), value))
                    elif ch.capacity > 0:
                        q = queues[a.channel]
                        if q:
                            v1 = eval_override(v, {a.var: q[0]})
                            nq = self._with(channels, a.channel, q[1:])
                            result.append(Move(label, t.guard, StateInfo(new_locs, infer_successor(v1, target), nq),
                                               (i,), (t,), q[0]))
                    else:
                        result.extend(self._handshakes(i, t, state))
        return result

    def _handshakes(self, i, recv_t, state):
        locs, v, channels = state
        a = recv_t.action
        out = []
        for j, g in enumerate(self.graphs):
            if j == i:
                continue
            for s in self.out[j][locs[j]]:
                sa = s.action
                if not (isinstance(sa, Send) and sa.channel == a.channel and guard_sat(v, s.guard)):
                    continue
                value = self._message(sa.message, v)
                v1 = infer_successor(v, self.decls[j][s.target])
                v2 = eval_override(v1, {a.var: value})
                v3 = infer_successor(v2, self.decls[i][recv_t.target])
                new_locs = list(locs)
                new_locs[j] = s.target
                new_locs[i] = recv_t.target
                out.append(Move(action_label(a), And((s.guard, recv_t.guard)),
                                StateInfo(tuple(new_locs), v3, channels), (i, j), (recv_t, s), value))
        return out

    @staticmethod
    def _with(channels, name, queue):
        return tuple((n, queue if n == name else q) for n, q in channels)


def _bfs(initials, expand, label_of, cfg: ExplorationConfig, ap, source):
    index: dict = {}
    infos, labels, transitions = [], [], []
    truncated = False

    def add(info) -> int | None:
        nonlocal truncated
        sid = index.get(info)
        if sid is not None:
            return sid
        if len(infos) >= cfg.max_states:
            if cfg.on_limit == "error":
                raise ExplorationLimit(f"more than {cfg.max_states} reachable states")
            truncated = True
            return None
        sid = len(infos)
        index[info] = sid
        infos.append(info)
        labels.append(label_of(info))
        return sid

    init_ids = []
    for info in initials:
        sid = add(info)
        if sid is not None and sid not in init_ids:
            init_ids.append(sid)
    depth = {sid: 0 for sid in init_ids}
    queue = deque(init_ids)
    while queue:
        sid = queue.popleft()
        succ = expand(infos[sid])
        if depth[sid] >= cfg.max_depth:
            if succ:
                if cfg.on_limit == "error":
                    raise ExplorationLimit(f"exploration deeper than {cfg.max_depth}")
                truncated = True
            continue
        for label, guard, nxt in succ:
            before = len(infos)
            did = add(nxt)
            if did is None:
                continue
            if len(infos) > before:
                depth[did] = depth[sid] + 1
                queue.append(did)
            transitions.append(Transition(sid, label, did, guard))
    return TransitionSystem(labels, transitions, init_ids, infos, frozenset(ap), truncated, source)


def explore(system, cfg: ExplorationConfig | None = None, open_channels: bool = False) -> TransitionSystem:
    """The explicit transition system of a channel system (or single graph).

    With ``open_channels`` every channel behaves like an external one, which
    gives the conditional transition system of the components in isolation.
    """
    cs = system if isinstance(system, ChannelSystem) else ChannelSystem.of(system)
    engine = Engine(cs, open_channels)
    return _bfs(
        [engine.initial()],
        lambda info: [(m.label, m.guard, m.target) for m in engine.moves(info)],
        engine.labels,
        cfg or DEFAULT_CONFIG,
        engine.ap,
        cs,
    )


def interpret_graph(g: SystemGraph, cfg: ExplorationConfig | None = None) -> TransitionSystem:
    """Reachable state-level conditional transitions of a single graph.

    Communication is left open: a receive may bind any value of the
    channel's domain and a send always succeeds.
    """
    return explore(ChannelSystem.of(g), cfg, open_channels=True)


def compose_shared(components, shared, cfg: ExplorationConfig | None = None) -> TransitionSystem:
    """Interleaving over shared variables: one component moves per step and
    reads/writes the shared variables atomically."""
    graphs = []
    for c in components:
        if isinstance(c, SystemGraph):
            graphs.append(c)
        elif isinstance(c, TransitionSystem) and isinstance(c.source, ChannelSystem):
            graphs.extend(c.source.components)
        else:
            raise TypeError("compose_shared needs system graphs or systems lowered from them")
    names = {s.name if isinstance(s, VarSignature) else s for s in shared}
    return explore(ChannelSystem(tuple(graphs), frozenset(names)), cfg, open_channels=True)


def compose_interleave(components: list[TransitionSystem], cfg: ExplorationConfig | None = None) -> TransitionSystem:
    """Pure interleaving product of explicit systems over disjoint variables."""
    components = list(components)
    if len(components) == 1:
        return components[0]
    seen_vars: dict[str, int] = {}
    for k, ts in enumerate(components):
        for s in ts.initials[:1]:
            info = ts.info[s]
            for var in (info.evaluation if info else ()):
                if var in seen_vars:
                    raise OverlapError(f"variable {var!r} belongs to components {seen_vars[var]} and {k}")
                seen_vars[var] = k

    def merge(parts) -> StateInfo:
        infos = [components[k].info[s] for k, s in enumerate(parts)]
        if any(i is None for i in infos):
            return parts  # hand-built systems: the index tuple is the state
        return StateInfo(
            sum((i.locations for i in infos), ()),
            eval_merge(i.evaluation for i in infos),
            sum((i.channels for i in infos), ()),
        )

    # product states are index tuples; map them to content at the end
    initials = [()]
    for ts in components:
        initials = [p + (s,) for p in initials for s in ts.initials]

    def expand(parts):
        out = []
        for k, ts in enumerate(components):
            for label, dst in ts.successors(parts[k]):
                out.append((label, None, parts[:k] + (dst,) + parts[k + 1:]))
        return out

    def label_of(parts):
        out = set()
        for k, s in enumerate(parts):
            out |= components[k].labels[s]
        return frozenset(out)

    ap = frozenset().union(*(ts.atomic_propositions for ts in components))
    product = _bfs(initials, expand, label_of, cfg or DEFAULT_CONFIG, ap, None)
    product.info = [merge(p) for p in product.info]
    if all(isinstance(i, StateInfo) for i in product.info):
        graphs = []
        for ts in components:
            if isinstance(ts.source, ChannelSystem):
                graphs.extend(ts.source.components)
        if len(graphs) == sum(len(ts.source.components) for ts in components if ts.source):
            try:
                product.source = ChannelSystem(tuple(graphs))
            except (OverlapError, ModelError):
                product.source = None
    else:
        product.info = [None] * product.n_states
    return product
