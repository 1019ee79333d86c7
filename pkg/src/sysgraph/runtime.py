"""Executable semantics: run system graphs with action effects, divergence
resolution, channel waiting and trace recording.

The interpreter steps the same move relation that exploration uses, so
every recorded trace is a path of the explored transition system.
Effects observe immutable snapshots and cannot influence control flow.
"""
from __future__ import annotations

import random as _random
import sys
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .core.graph import GraphTransition, Receive, Send, SystemGraph
from .core.guards import guard_sat, render
from .core.ts import StateInfo, TransitionSystem, parse_state_body, parse_value_token
from .core.values import Evaluation, render_value
from .elaboration import ChannelSystem, Engine, Move
from .errors import (
    DeadlockError,
    EffectError,
    ModelError,
    RuntimeFault,
    StepLimitExceeded,
    UnresolvedDivergence,
)

DEFAULT_STEP_LIMIT = 10_000


# -- effects ----------------------------------------------------------------------------

@dataclass(frozen=True)
class EffectContext:
    action: str
    step: int
    source: str
    target: str
    guard: str
    component: str
    value: object = None


class EffectRegistry:
    """Overridable action effects keyed by action label.

    Handlers are called as ``handler(snapshot, context)`` after the state
    update; the return value is ignored.
    """

    def __init__(self, handlers: dict | None = None):
        self._handlers: dict[str, Callable] = dict(handlers or {})

    def register(self, action: str, handler: Callable | None = None):
        if handler is None:
            def deco(fn):
                self._handlers[action] = fn
                return fn
            return deco
        self._handlers[action] = handler
        return handler

    def __contains__(self, action) -> bool:
        return action in self._handlers

    def names(self) -> list[str]:
        return sorted(self._handlers)

    def invoke(self, snapshot: Evaluation, ctx: EffectContext) -> None:
        handler = self._handlers.get(ctx.action)
        if handler is None:
            return
        try:
            handler(snapshot, ctx)
        except Exception as exc:  # any handler failure aborts the run
            raise EffectError(f"effect for {ctx.action!r} failed at step {ctx.step}: {exc!r}") from exc


# -- divergence resolution -------------------------------------------------------------------

@dataclass
class DivergenceResolver:
    """How to pick among several enabled transitions.

    ``scripted`` consumes ``choices`` (action labels) in order, ``policy``
    applies a fixed rule (``first``, ``last`` or an index), ``prompt`` reads
    one line per decision and ``random`` draws from a seeded generator.
    """

    strategy: str
    choices: list = field(default_factory=list)
    rule: object = "first"
    seed: int | None = None
    stream: object = None
    out: object = None

    def __post_init__(self):
        if self.strategy not in ("scripted", "policy", "prompt", "random"):
            raise ValueError(f"unknown resolver strategy {self.strategy!r}")
        self._queue = list(self.choices)
        self._rng = _random.Random(self.seed)

    @classmethod
    def scripted(cls, *choices: str) -> DivergenceResolver:
        return cls("scripted", list(choices))

    @classmethod
    def policy(cls, rule="first") -> DivergenceResolver:
        return cls("policy", rule=rule)

    @classmethod
    def prompt(cls, stream=None, out=None) -> DivergenceResolver:
        return cls("prompt", stream=stream, out=out)

    @classmethod
    def random(cls, seed: int | None = 0) -> DivergenceResolver:
        return cls("random", seed=seed)

    @classmethod
    def parse(cls, text: str) -> DivergenceResolver:
        """``scripted:a,b``, ``policy:first|last|<n>``, ``prompt`` or ``random:<seed>``."""
        kind, _, arg = text.partition(":")
        if kind == "scripted":
            return cls.scripted(*[x for x in arg.split(",") if x])
        if kind == "policy":
            return cls.policy(int(arg) if arg.lstrip("-").isdigit() else (arg or "first"))
        if kind == "prompt":
            return cls.prompt()
        if kind == "random":
            return cls.random(int(arg) if arg else 0)
        raise ValueError(f"bad resolver {text!r}; expected scripted:, policy:, random: or prompt")

    def choose(self, options: list[str], where: str) -> int:
        """Index into ``options`` (action labels of the enabled moves)."""
        if self.strategy == "scripted":
            if not self._queue:
                raise UnresolvedDivergence(f"divergence at {where} between {options}: no scripted choice left")
            want = self._queue.pop(0)
            if want not in options:
                raise UnresolvedDivergence(f"divergence at {where}: scripted choice {want!r} is not among {options}")
            return options.index(want)
        if self.strategy == "policy":
            if self.rule == "first":
                return 0
            if self.rule == "last":
                return len(options) - 1
            return int(self.rule) % len(options)
        if self.strategy == "random":
            return self._rng.randrange(len(options))
        stream = self.stream or sys.stdin
        out = self.out or sys.stderr
        print(f"divergence at {where}; choose one of: {', '.join(options)}", file=out)
        line = stream.readline()
        if not line:
            raise UnresolvedDivergence(f"divergence at {where}: no input left")
        line = line.strip()
        if line in options:
            return options.index(line)
        if line.isdigit() and int(line) < len(options):
            return int(line)
        raise UnresolvedDivergence(f"divergence at {where}: {line!r} is not one of {options}")


# -- channel endpoints -----------------------------------------------------------------------

class ValueFeed:
    """A finite list of messages, e.g. loaded from a file with one value per line."""

    def __init__(self, values: Iterable):
        self._values = list(values)
        self._pos = 0

    @classmethod
    def from_file(cls, path) -> ValueFeed:
        with open(path, encoding="utf-8") as fh:
            return cls(parse_value_token(line.strip()) for line in fh if line.strip() and not line.startswith("#"))

    def peek(self):
        return self._values[self._pos] if self._pos < len(self._values) else None

    def take(self):
        value = self.peek()
        self._pos += 1
        return value


class StreamFeed:
    """Messages read lazily from a text stream (one per line), e.g. a pipe
    or an in-memory loopback buffer."""

    def __init__(self, stream):
        self._stream = stream
        self._next = None
        self._eof = False

    def peek(self):
        while self._next is None and not self._eof:
            line = self._stream.readline()
            if not line:
                self._eof = True
            elif line.strip():
                self._next = parse_value_token(line.strip())
        return self._next

    def take(self):
        value = self.peek()
        self._next = None
        return value


@dataclass
class ChannelEndpoint:
    channel: str
    mode: str = "external"  # or "internal"
    feed: object = None
    sent: list = field(default_factory=list)


# -- traces -------------------------------------------------------------------------------------

@dataclass
class Step:
    state: StateInfo
    action: str | None = None
    guard: str | None = None
    component: int | None = None
    timestamp: float = field(default=0.0, compare=False)

    @property
    def evaluation(self) -> Evaluation:
        return self.state.evaluation

    @property
    def channels(self):
        return self.state.channels


@dataclass
class Trace:
    steps: list[Step] = field(default_factory=list)
    terminal: bool = False
    deadlock: bool = False
    limit_reached: bool = False
    joins: list = field(default_factory=list)  # (confluence index, step index)

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def states(self) -> list[StateInfo]:
        return [s.state for s in self.steps]

    @property
    def actions(self) -> list[str]:
        return [s.action for s in self.steps[1:]]

    @property
    def final(self) -> StateInfo:
        return self.steps[-1].state

    def to_text(self) -> str:
        """The ``ts v1`` step format with a ``stamp`` line per step."""
        lines = ["ts v1"]
        for i, st in enumerate(self.steps):
            lines.append(f"state {i} {st.state.render()}")
        if self.steps:
            lines.append("init 0")
        for i, st in enumerate(self.steps[1:]):
            lines.append(f"trans {i} {st.action} {i + 1}")
        for i, st in enumerate(self.steps[1:], start=1):
            lines.append(f"fired {i} {st.component} {st.guard}")
        for i, st in enumerate(self.steps):
            lines.append(f"stamp {i} {st.timestamp:.6f}")
        status = "terminal" if self.terminal else "deadlock" if self.deadlock else "limit" if self.limit_reached else "open"
        lines.append(f"end {status}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Trace:
        states, actions, stamps, fired = {}, {}, {}, {}
        status = "open"
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != "ts v1":
            raise ModelError("missing 'ts v1' header")
        for ln in lines[1:]:
            head, _, rest = ln.partition(" ")
            if head == "state":
                idx, _, body = rest.partition(" ")
                states[int(idx)] = parse_state_body(body.split(" ")[0])
            elif head == "trans":
                src, action, _dst = rest.split(" ")
                actions[int(src) + 1] = action
            elif head == "fired":
                idx, comp, guard = rest.split(" ", 2)
                fired[int(idx)] = (int(comp), guard)
            elif head == "stamp":
                idx, value = rest.split(" ")
                stamps[int(idx)] = float(value)
            elif head == "end":
                status = rest
            elif head != "init":
                raise ModelError(f"unrecognised trace line: {ln}")
        steps = []
        for i in range(len(states)):
            comp, guard = fired.get(i, (None, None))
            steps.append(Step(states[i], actions.get(i), guard, comp, stamps.get(i, 0.0)))
        return cls(steps, terminal=status == "terminal", deadlock=status == "deadlock",
                   limit_reached=status == "limit")


# -- divergence detection --------------------------------------------------------------------------

@dataclass(frozen=True)
class Divergence:
    declarator: str
    pair: tuple[GraphTransition, GraphTransition]

    def describe(self) -> str:
        a, b = self.pair
        return f"{self.declarator}: {a.label} -> {a.target} / {b.label} -> {b.target}"


def reachable_evaluations(g: SystemGraph) -> dict[str, set[Evaluation]]:
    from .elaboration import interpret_graph

    ts = interpret_graph(g)
    out: dict[str, set] = {d.name: set() for d in g.declarators}
    for info in ts.info:
        out[info.locations[0]].add(info.evaluation)
    return out


def detect_divergences(g: SystemGraph) -> list[Divergence]:
    """Pairs of transitions leaving one declarator that the guards cannot tell apart.

    Two transitions diverge when they differ in action or target, both
    guards hold together in some reachable evaluation at the source, and
    one guard implies the other over all reachable evaluations there.
    """
    reach = reachable_evaluations(g)
    out = []
    for d in g.declarators:
        evals = sorted(reach[d.name], key=lambda e: e.render())
        outgoing = [t for t in g.transitions if t.source == d.name]
        for i, t1 in enumerate(outgoing):
            for t2 in outgoing[i + 1:]:
                if t1.action == t2.action and t1.target == t2.target:
                    continue
                both = [guard_sat(v, t1.guard) and guard_sat(v, t2.guard) for v in evals]
                if not any(both):
                    continue
                imp12 = all(guard_sat(v, t2.guard) for v in evals if guard_sat(v, t1.guard))
                imp21 = all(guard_sat(v, t1.guard) for v in evals if guard_sat(v, t2.guard))
                if imp12 or imp21:
                    out.append(Divergence(d.name, (t1, t2)))
    return out


# -- the interpreter ----------------------------------------------------------------------------------

class _Runner:
    def __init__(self, cs: ChannelSystem, effects, resolver, endpoints, step_limit, clock):
        self.cs = cs
        self.engine = Engine(cs, open_channels=False)
        self.effects = effects or EffectRegistry()
        self.resolver = resolver
        self.step_limit = step_limit
        self.clock = clock or time.time
        self.endpoints = {}
        for ep in endpoints or ():
            ch = self.engine.chans.get(ep.channel)
            if ch is None:
                raise ModelError(f"endpoint for undeclared channel {ep.channel!r}")
            self.endpoints[ep.channel] = ep
        self.terminals = [set(g.terminals) for g in cs.components]
        self.trace = Trace()
        self.steps = 0

    def available(self, state: StateInfo) -> tuple[list[Move], set[str]]:
        """Moves that can fire now, and whether some transition is waiting on a channel."""
        moves = self.engine.moves(state)
        ready = []
        for m in moves:
            t = m.fired[0]
            a = t.action
            if isinstance(a, Receive) and self.engine.external[a.channel]:
                ep = self.endpoints.get(a.channel)
                nxt = ep.feed.peek() if ep is not None and ep.feed is not None else None
                if nxt is None or nxt != m.value:
                    continue
            ready.append(m)
        waiting = self._waiting(state, ready)
        return ready, waiting

    def _waiting(self, state: StateInfo, ready: list[Move]) -> set[str]:
        """Kinds of channel ("internal"/"external") some guard-enabled
        communication is blocked on."""
        v = state.evaluation
        fired = {id(t) for m in ready for t in m.fired}
        kinds = set()
        for i, g in enumerate(self.cs.components):
            for t in self.engine.out[i][state.locations[i]]:
                if id(t) in fired or not guard_sat(v, t.guard):
                    continue
                if isinstance(t.action, (Send, Receive)):
                    kinds.add("external" if self.engine.external[t.action.channel] else "internal")
        return kinds

    def record(self, state, move: Move | None):
        ts = self.clock()
        if move is None:
            self.trace.steps.append(Step(state, timestamp=ts))
            return
        self.trace.steps.append(Step(state, move.label, render(move.guard), move.movers[0], ts))

    def fire(self, state: StateInfo, move: Move) -> StateInfo:
        t = move.fired[0]
        a = t.action
        if isinstance(a, Receive) and self.engine.external[a.channel]:
            ep = self.endpoints[a.channel]
            value = ep.feed.take()
            if value not in self.engine.chans[a.channel].domain:
                raise RuntimeFault(f"fed value {render_value(value)} is not in the domain of {a.channel}")
        if isinstance(a, Send) and self.engine.external[a.channel]:
            ep = self.endpoints.setdefault(a.channel, ChannelEndpoint(a.channel))
            ep.sent.append(move.value)
        self.steps += 1
        new = move.target
        self.record(new, move)
        comp = self.cs.components[move.movers[0]]
        ctx = EffectContext(move.label, self.steps, t.source, t.target, render(t.guard), comp.name, move.value)
        self.effects.invoke(new.evaluation, ctx)
        return new

    def pick(self, moves: list[Move], where: str) -> Move:
        if len(moves) == 1:
            return moves[0]
        if self.resolver is None:
            raise UnresolvedDivergence(f"divergence at {where} between {[m.label for m in moves]} and no resolver")
        return moves[self.resolver.choose([m.label for m in moves], where)]

    def wait(self, state):
        """Consume one step while blocked; fail once the budget is gone."""
        self.steps += 1
        if self.steps >= self.step_limit:
            raise StepLimitExceeded(
                f"still waiting on a channel at {'|'.join(state.locations)} after {self.step_limit} steps", self.trace
            )


def _as_system(system) -> ChannelSystem:
    if isinstance(system, ChannelSystem):
        return system
    if isinstance(system, SystemGraph):
        return ChannelSystem.of(system)
    if isinstance(system, TransitionSystem) and isinstance(system.source, ChannelSystem):
        return system.source
    if hasattr(system, "channel_system"):
        return system.channel_system()
    raise TypeError("expected a system graph, a channel system or a parsed model")


def run(g, effects: EffectRegistry | None = None, resolver: DivergenceResolver | None = None,
        endpoints: Iterable[ChannelEndpoint] = (), step_limit: int = DEFAULT_STEP_LIMIT, clock=None) -> Trace:
    """Execute a single system graph from its initial state."""
    cs = _as_system(g)
    if len(cs.components) != 1:
        raise ModelError("run() takes a single component; use run_parallel() for compositions")
    r = _Runner(cs, effects, resolver, endpoints, step_limit, clock)
    state = r.engine.initial()
    r.record(state, None)
    terminals = r.terminals[0]
    while True:
        if state.locations[0] in terminals:
            r.trace.terminal = True
            return r.trace
        if r.steps >= step_limit:
            r.trace.limit_reached = True
            return r.trace
        moves, waiting = r.available(state)
        if not moves:
            if waiting:
                r.wait(state)
                continue
            r.trace.deadlock = True
            return r.trace
        state = r.fire(state, r.pick(moves, state.locations[0]))


def run_parallel(system, effects: EffectRegistry | None = None, resolver: DivergenceResolver | None = None,
                 endpoints: Iterable[ChannelEndpoint] = (), step_limit: int = DEFAULT_STEP_LIMIT,
                 seed: int | None = 0, confluence: Iterable[dict] = (), clock=None) -> Trace:
    """Execute a composition, one component per step, chosen by a seeded scheduler.

    ``confluence`` lists partial evaluations acting as barriers: a component
    whose own variables match a point stops until every component that owns
    a variable of the point has arrived too.
    """
    cs = _as_system(system)
    r = _Runner(cs, effects, resolver, endpoints, step_limit, clock)
    rng = _random.Random(seed)
    points = [dict(p) for p in confluence]
    own = [set(g.var_names) for g in cs.components]
    joined = [False] * len(points)
    state = r.engine.initial()
    r.record(state, None)
    n = len(cs.components)
    while True:
        locs = state.locations
        if all(locs[i] in r.terminals[i] for i in range(n)):
            r.trace.terminal = True
            return r.trace
        if r.steps >= step_limit:
            r.trace.limit_reached = True
            return r.trace
        held = set()
        for k, point in enumerate(points):
            if joined[k]:
                continue
            members = [i for i in range(n) if own[i] & point.keys()]
            arrived = [i for i in members
                       if all(state.evaluation[x] == val for x, val in point.items() if x in own[i])]
            if members and len(arrived) == len(members):
                joined[k] = True
                r.trace.joins.append((k, len(r.trace.steps) - 1))
            else:
                held.update(arrived)
        moves, waiting = r.available(state)
        by_comp: dict[int, list[Move]] = {}
        for m in moves:
            if not held.intersection(m.movers):
                by_comp.setdefault(m.movers[0], []).append(m)
        if not by_comp:
            # only an external feed can still unblock a stuck composition
            if "external" in waiting and not held:
                r.wait(state)
                continue
            if all(locs[i] in r.terminals[i] or not r.engine.out[i][locs[i]] for i in range(n)) and not held:
                r.trace.deadlock = True
                return r.trace
            raise DeadlockError(f"no component can move at {'|'.join(locs)}", r.trace)
        comps = sorted(by_comp)
        i = comps[rng.randrange(len(comps))]
        state = r.fire(state, r.pick(by_comp[i], f"{cs.components[i].name}.{locs[i]}"))


def trace_conformance(t: Trace, ts: TransitionSystem) -> bool:
    """Is every step of ``t`` a transition of ``ts``, starting from an initial state?"""
    if not t.steps:
        return False
    first = ts.index_of(t.steps[0].state)
    if first is None or first not in ts.initials:
        return False
    edges = ts.keyed_edges()
    for prev, nxt in zip(t.steps, t.steps[1:]):
        if (prev.state, nxt.action, nxt.state) not in edges:
            return False
    return True
