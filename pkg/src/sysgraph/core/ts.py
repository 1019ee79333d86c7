"""Explicit labeled transition systems and the ``ts v1`` text format."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import NamedTuple

from ..errors import ModelError
from .values import Evaluation, render_value


class StateInfo(NamedTuple):
    """Concrete content of a global state.

    ``locations`` holds the current declarator of each component, and
    ``channels`` the queue contents as ``(name, values)`` pairs in channel
    declaration order.  The whole tuple is the state's identity.
    """

    locations: tuple[str, ...]
    evaluation: Evaluation
    channels: tuple[tuple[str, tuple], ...] = ()

    def channel(self, name):
        for n, q in self.channels:
            if n == name:
                return q
        raise KeyError(name)

    def render(self) -> str:
        parts = [self.evaluation.render(), "@=" + "|".join(self.locations)]
        for name, queue in self.channels:
            parts.append(f"{name}=[" + " ".join(render_value(x) for x in queue) + "]")
        return "{" + ";".join(parts) + "}"


class Transition(NamedTuple):
    src: int
    action: str
    dst: int
    guard: object = None


@dataclass
class TransitionSystem:
    """States are the integers ``0..n-1``; ``info[i]`` carries the global
    state content when the system came from a model (``None`` for
    hand-built systems)."""

    labels: list[frozenset]
    transitions: list[Transition]
    initials: list[int]
    info: list[StateInfo | None] = field(default_factory=list)
    atomic_propositions: frozenset = frozenset()
    truncated: bool = False
    # the channel system this was lowered from, if any
    source: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.info:
            self.info = [None] * len(self.labels)
        if not self.atomic_propositions:
            ap = set()
            for lab in self.labels:
                ap |= lab
            self.atomic_propositions = frozenset(ap)
        self._succ = None
        self._index = None

    @property
    def n_states(self) -> int:
        return len(self.labels)

    @property
    def states(self) -> range:
        return range(len(self.labels))

    @property
    def actions(self) -> frozenset:
        return frozenset(t.action for t in self.transitions)

    def successors(self, s: int) -> list[tuple[str, int]]:
        if self._succ is None:
            succ = [[] for _ in self.labels]
            for t in self.transitions:
                succ[t.src].append((t.action, t.dst))
            self._succ = succ
        return self._succ[s]

    def deadlocks(self) -> list[int]:
        return [s for s in self.states if not self.successors(s)]

    def index_of(self, info: StateInfo) -> int | None:
        if self._index is None:
            self._index = {inf: i for i, inf in enumerate(self.info) if inf is not None}
        return self._index.get(info)

    def edge_set(self) -> set[tuple[int, str, int]]:
        return {(t.src, t.action, t.dst) for t in self.transitions}

    def keyed_edges(self) -> set:
        """Transitions expressed over state content instead of indices."""
        return {(self.info[t.src], t.action, self.info[t.dst]) for t in self.transitions}

    def with_stutter(self, action: str = "(stutter)") -> TransitionSystem:
        """Copy with a self-loop on every deadlock state."""
        extra = [Transition(s, action, s) for s in self.deadlocks()]
        if not extra:
            return self
        return TransitionSystem(
            list(self.labels),
            list(self.transitions) + extra,
            list(self.initials),
            list(self.info),
            self.atomic_propositions,
            self.truncated,
            self.source,
        )


# -- ts v1 text format ----------------------------------------------------------

def dump_ts(ts: TransitionSystem) -> str:
    lines = ["ts v1"]
    for s in ts.states:
        info = ts.info[s]
        body = info.render() if info is not None else "{}"
        lines.append(" ".join(["state", str(s), body, *sorted(ts.labels[s])]))
    for s in ts.initials:
        lines.append(f"init {s}")
    for t in ts.transitions:
        lines.append(f"trans {t.src} {t.action} {t.dst}")
    return "\n".join(lines) + "\n"


_STATE_RE = re.compile(r"^state (\d+) (\{[^ ]*\})((?: \S+)*)$")


def parse_value_token(tok: str):
    if tok == "true":
        return True
    if tok == "false":
        return False
    if re.fullmatch(r"-?\d+", tok):
        return int(tok)
    return tok


def parse_state_body(body: str) -> StateInfo | None:
    inner = body[1:-1]
    if not inner:
        return None
    sections = inner.split(";")
    bindings = []
    if sections[0]:
        for pair in sections[0].split(","):
            k, _, v = pair.partition("=")
            bindings.append((k, parse_value_token(v)))
    locations: tuple = ()
    channels = []
    for sec in sections[1:]:
        name, _, rest = sec.partition("=")
        if name == "@":
            locations = tuple(rest.split("|")) if rest else ()
        else:
            items = rest[1:-1].split()
            channels.append((name, tuple(parse_value_token(x) for x in items)))
    return StateInfo(locations, Evaluation(bindings), tuple(channels))


def load_ts(text: str) -> TransitionSystem:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != "ts v1":
        raise ModelError("missing 'ts v1' header")
    labels: dict[int, frozenset] = {}
    info: dict[int, StateInfo | None] = {}
    initials, transitions = [], []
    for ln in lines[1:]:
        if ln.startswith("state "):
            m = _STATE_RE.match(ln)
            if not m:
                raise ModelError(f"bad state line: {ln}")
            sid = int(m.group(1))
            info[sid] = parse_state_body(m.group(2))
            labels[sid] = frozenset(m.group(3).split())
        elif ln.startswith("init "):
            initials.append(int(ln.split()[1]))
        elif ln.startswith("trans "):
            _, src, action, dst = ln.split()
            transitions.append(Transition(int(src), action, int(dst)))
        else:
            raise ModelError(f"unrecognised line: {ln}")
    n = len(labels)
    if sorted(labels) != list(range(n)):
        raise ModelError("state ids must be 0..n-1")
    for t in transitions:
        if t.src not in labels or t.dst not in labels:
            raise ModelError(f"transition references unknown state: {t}")
    return TransitionSystem(
        [labels[i] for i in range(n)], transitions, initials, [info[i] for i in range(n)]
    )
