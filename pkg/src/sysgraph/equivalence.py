"""Bisimulation equivalence and the simulation preorder on transition systems.

Both relations are strong and label-respecting: related states carry
exactly the same label set.  By default transitions are matched on their
target only (state-based relations); pass ``match_actions=True`` to also
require equal action names.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from .core.ts import TransitionSystem

BISIM = "bisimulation"
SIM = "simulation"

_MODES = {"bisim": BISIM, BISIM: BISIM, "~": BISIM, "sim": SIM, SIM: SIM, "<=": SIM}


@dataclass
class RefinementReport:
    mode: str
    holds: bool
    # on success: pairs (state of left system, state of right system)
    relation: frozenset = frozenset()
    partition: list = field(default_factory=list)
    # on failure
    pair: tuple | None = None
    move: tuple | None = None  # (side, action, successor) with no matching answer
    reason: str = ""

    @property
    def verdict(self) -> str:
        return "holds" if self.holds else "fails"

    def to_dict(self) -> dict:
        out = {"mode": self.mode, "verdict": self.verdict}
        if self.holds:
            out["relation"] = sorted([list(p) for p in self.relation])
        else:
            out["pair"] = list(self.pair) if self.pair else None
            out["move"] = list(self.move) if self.move else None
            out["reason"] = self.reason
        return out

    def describe(self, left: TransitionSystem | None = None, right: TransitionSystem | None = None) -> str:
        if self.holds:
            return f"{self.mode} holds ({len(self.relation)} related pairs)"

        def name(ts, s):
            if ts is not None and ts.info[s] is not None:
                return f"{s} {ts.info[s].render()}"
            return str(s)

        s, t = self.pair
        text = f"{self.mode} fails at pair ({name(left, s)}, {name(right, t)}): {self.reason}"
        if self.move:
            side, action, dst = self.move
            ts = left if side == "left" else right
            text += f"\n  unmatched move on the {side}: --{action}--> {name(ts, dst)}"
        return text


def _key(action, match_actions):
    return action if match_actions else None


def _post(ts: TransitionSystem, s: int, match_actions: bool):
    return [(_key(a, match_actions), d) for a, d in ts.successors(s)]


def bisim_equiv(a: TransitionSystem, b: TransitionSystem, match_actions: bool = False) -> RefinementReport:
    """Coarsest stable partition of the disjoint union, then initial matching."""
    na = a.n_states
    n = na + b.n_states

    def labels(x):
        return a.labels[x] if x < na else b.labels[x - na]

    def post(x):
        if x < na:
            return _post(a, x, match_actions)
        return [(k, d + na) for k, d in _post(b, x - na, match_actions)]

    succ = [post(x) for x in range(n)]
    ids: dict = {}
    block = [ids.setdefault(labels(x), len(ids)) for x in range(n)]
    count = len(ids)
    while True:
        ids = {}
        new = [
            ids.setdefault((block[x], frozenset((k, block[d]) for k, d in succ[x])), len(ids))
            for x in range(n)
        ]
        block = new
        if len(ids) == count:
            break
        count = len(ids)

    blocks = defaultdict(list)
    for x in range(n):
        blocks[block[x]].append(x)
    partition = [
        [("left", x) if x < na else ("right", x - na) for x in members]
        for _, members in sorted(blocks.items(), key=lambda kv: kv[1][0])
    ]

    b_init_blocks = {block[t + na] for t in b.initials}
    a_init_blocks = {block[s] for s in a.initials}
    bad = [(s, "left") for s in sorted(a.initials) if block[s] not in b_init_blocks]
    bad += [(t, "right") for t in sorted(b.initials) if block[t + na] not in a_init_blocks]
    if not bad:
        relation = frozenset(
            (s, t) for s in range(na) for t in range(b.n_states) if block[s] == block[t + na]
        )
        return RefinementReport(BISIM, True, relation, partition)

    state, side = bad[0]
    if side == "left":
        others = sorted(b.initials)
        pair = (state, others[0]) if others else (state, None)
    else:
        others = sorted(a.initials)
        pair = (others[0], state) if others else (None, state)
    if None in pair:
        return RefinementReport(BISIM, False, pair=pair, reason="no initial state on the other side",
                                partition=partition)
    s, t = pair
    if labels(s) != labels(t + na):
        reason = f"labels differ: {sorted(labels(s))} vs {sorted(labels(t + na))}"
        return RefinementReport(BISIM, False, pair=pair, reason=reason, partition=partition)
    move = _unmatched(a, s, b, t, lambda x, y: block[x] == block[y + na], match_actions)
    if move is not None:
        return RefinementReport(BISIM, False, pair=pair, move=("left",) + move,
                                reason="a move of the left state has no bisimilar answer", partition=partition)
    move = _unmatched(b, t, a, s, lambda y, x: block[x] == block[y + na], match_actions)
    return RefinementReport(BISIM, False, pair=pair, move=("right",) + move,
                            reason="a move of the right state has no bisimilar answer", partition=partition)


def _unmatched(p_ts, p, q_ts, q, related, match_actions):
    """First move of ``p`` that ``q`` cannot answer into a related state."""
    answers = q_ts.successors(q)
    for action, dst in p_ts.successors(p):
        k = _key(action, match_actions)
        if not any(_key(a2, match_actions) == k and related(dst, d2) for a2, d2 in answers):
            return (action, dst)
    return None


def simulation_relation(concrete: TransitionSystem, abstract: TransitionSystem,
                        match_actions: bool = False) -> set:
    """Greatest simulation between the two systems (worklist with counters)."""
    c_succ = [_post(concrete, s, match_actions) for s in concrete.states]
    a_succ = [_post(abstract, t, match_actions) for t in abstract.states]
    c_pred = defaultdict(list)  # s' -> [(key, s)]
    for s, outs in enumerate(c_succ):
        for k, d in outs:
            c_pred[d].append((k, s))
    a_pred = defaultdict(list)
    for t, outs in enumerate(a_succ):
        for k, d in outs:
            a_pred[d].append((k, t))

    rel = {
        (s, t)
        for s in concrete.states
        for t in abstract.states
        if concrete.labels[s] == abstract.labels[t]
    }
    # cnt[(k, s2, t)] = number of k-moves t -> t2 with (s2, t2) still related
    cnt = defaultdict(int)
    for t, outs in enumerate(a_succ):
        for k, t2 in outs:
            for s2 in concrete.states:
                if (s2, t2) in rel:
                    cnt[(k, s2, t)] += 1
    work = []
    for s, t in list(rel):
        for k, s2 in c_succ[s]:
            if cnt[(k, s2, t)] == 0:
                rel.discard((s, t))
                work.append((s, t))
                break
    while work:
        s2, t2 = work.pop()
        for k, t in a_pred[t2]:
            cnt[(k, s2, t)] -= 1
            if cnt[(k, s2, t)] == 0:
                for k1, s in c_pred[s2]:
                    if k1 == k and (s, t) in rel:
                        rel.discard((s, t))
                        work.append((s, t))
    return rel


def simulates(concrete: TransitionSystem, abstract: TransitionSystem, match_actions: bool = False) -> RefinementReport:
    """Does ``abstract`` simulate ``concrete`` (concrete ⪯ abstract)?"""
    rel = simulation_relation(concrete, abstract, match_actions)
    missing = [s for s in sorted(concrete.initials) if not any((s, t) in rel for t in abstract.initials)]
    if not missing:
        return RefinementReport(SIM, True, frozenset(rel))
    s = missing[0]
    inits = sorted(abstract.initials)
    if not inits:
        return RefinementReport(SIM, False, pair=(s, None), reason="the abstract system has no initial state")
    t = inits[0]
    if concrete.labels[s] != abstract.labels[t]:
        reason = f"labels differ: {sorted(concrete.labels[s])} vs {sorted(abstract.labels[t])}"
        return RefinementReport(SIM, False, pair=(s, t), reason=reason)
    move = _unmatched(concrete, s, abstract, t, lambda x, y: (x, y) in rel, match_actions)
    return RefinementReport(SIM, False, pair=(s, t), move=("left",) + move,
                            reason="a concrete move cannot be simulated")


def check_relation(a: TransitionSystem, b: TransitionSystem, relation, mode: str,
                   match_actions: bool = False) -> bool:
    """Validate a witness pair by pair against the transfer condition."""
    relation = set(relation)
    for s, t in relation:
        if a.labels[s] != b.labels[t]:
            return False
        if _unmatched(a, s, b, t, lambda x, y: (x, y) in relation, match_actions):
            return False
        if mode == BISIM and _unmatched(b, t, a, s, lambda y, x: (x, y) in relation, match_actions):
            return False
    return True


def refine_check(old_graph, new_graph, mode: str = "bisim", cfg=None, match_actions: bool = False) -> RefinementReport:
    """Lower both graphs and compare them.

    In simulation mode the refinement must be simulated by the original,
    i.e. the check is ``new ⪯ old``.
    """
    from .elaboration import explore

    mode = _MODES.get(mode)
    if mode is None:
        raise ValueError("mode must be 'bisim' or 'sim'")
    old_ts = explore(old_graph, cfg)
    new_ts = explore(new_graph, cfg)
    if mode == BISIM:
        return bisim_equiv(old_ts, new_ts, match_actions)
    return simulates(new_ts, old_ts, match_actions)
