"""Explicit-state model checking of LTL (Büchi product, nested DFS) and CTL
(fixpoint labeling) over transition systems."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..core.ts import TransitionSystem
from ..errors import PropertyError
from .buchi import Buchi, ltl_to_buchi
from .formula import CTL, LTL, Formula, Node, mk, parse_formula, render

STUTTER = "(stutter)"


@dataclass
class Lasso:
    """An ultimately periodic run: ``prefix`` ends at the cycle entry and
    ``cycle`` starts there, so ``cycle[0] == prefix[-1]``.  ``actions[i]``
    labels the step from position i to i+1 of ``prefix + cycle[1:]``, the
    last one closing the loop back to the entry."""

    prefix: list[int]
    cycle: list[int]
    actions: list[str] = field(default_factory=list)

    @property
    def states(self) -> list[int]:
        return self.prefix + self.cycle[1:]

    @property
    def cycle_at(self) -> int:
        return len(self.prefix) - 1

    def words(self, ts: TransitionSystem):
        """(prefix letters, cycle letters) with the cycle starting at the entry."""
        pre = [ts.labels[s] for s in self.prefix[:-1]]
        cyc = [ts.labels[s] for s in self.cycle]
        return pre, cyc


@dataclass
class Verdict:
    satisfied: bool
    formula: Formula
    counterexample: Lasso | None = None
    # CTL failures
    failing_state: int | None = None
    failing_subformula: str | None = None
    product_states: int = 0

    def to_dict(self) -> dict:
        out = {"satisfied": self.satisfied, "formula": self.formula.canonical, "logic": self.formula.logic}
        if self.counterexample is not None:
            out["counterexample"] = {
                "prefix": self.counterexample.prefix,
                "cycle": self.counterexample.cycle,
                "actions": self.counterexample.actions,
            }
        if self.failing_state is not None:
            out["failing_state"] = self.failing_state
            out["failing_subformula"] = self.failing_subformula
        return out


def _as_formula(f, logic=None) -> Formula:
    if isinstance(f, str):
        f = parse_formula(f)
    elif isinstance(f, Node):
        f = Formula(logic or LTL, f, render(f))
    if logic and f.logic != logic:
        raise PropertyError(f"expected an {logic} formula, got {f.logic}")
    return f


def _prepare(ts: TransitionSystem, no_stutter: bool) -> TransitionSystem:
    return ts if no_stutter else ts.with_stutter(STUTTER)


def check_ltl(ts: TransitionSystem, f, no_stutter: bool = False) -> Verdict:
    """Does every infinite run from an initial state satisfy ``f``?

    Deadlock states get an implicit self-loop unless ``no_stutter``; then
    finite maximal runs are simply not considered.
    """
    f = _as_formula(f, LTL)
    ts = _prepare(ts, no_stutter)
    neg = ltl_to_buchi(mk("not", f.ast))
    lasso, size = _ndfs(ts, neg)
    if lasso is None:
        return Verdict(True, f, product_states=size)
    return Verdict(False, f, counterexample=lasso, product_states=size)


def _ndfs(ts: TransitionSystem, aut: Buchi):
    aps = aut.aps
    letter = [lab & aps for lab in ts.labels]
    succ_cache: dict = {}

    def post(node):
        out = succ_cache.get(node)
        if out is None:
            s, q = node
            out = []
            for action, s2 in ts.successors(s):
                for q2 in aut.succ[q]:
                    if aut.letters[q2] == letter[s2]:
                        out.append(((s2, q2), action))
            succ_cache[node] = out
        return out

    starts = [(s, q) for s in ts.initials for q in aut.initials if aut.letters[q] == letter[s]]
    outer_seen, inner_seen = set(), set()
    for start in starts:
        if start in outer_seen:
            continue
        outer_seen.add(start)
        # frames: (node, action into node, successor iterator)
        stack = [(start, None, iter(post(start)))]
        while stack:
            node, _, it = stack[-1]
            pushed = False
            for nxt, action in it:
                if nxt not in outer_seen:
                    outer_seen.add(nxt)
                    stack.append((nxt, action, iter(post(nxt))))
                    pushed = True
                    break
            if pushed:
                continue
            # postorder: seed an inner search from accepting nodes
            if node[1] in aut.accepting:
                cycle = _inner(node, post, inner_seen)
                if cycle is not None:
                    # tighten the witness: shortest stem to the seed, shortest loop back
                    path = _bfs_path(starts, node, post) or [(n, a) for n, a, _ in stack]
                    cycle = _bfs_path([node], node, post, loop=True) or cycle
                    return _lasso(path, cycle), len(outer_seen)
            stack.pop()
    return None, len(outer_seen)


def _inner(seed, post, seen):
    stack = [(seed, None, iter(post(seed)))]
    while stack:
        node, _, it = stack[-1]
        pushed = False
        for nxt, action in it:
            if nxt == seed:
                return [(n, a) for n, a, _ in stack] + [(nxt, action)]
            if nxt not in seen:
                seen.add(nxt)
                stack.append((nxt, action, iter(post(nxt))))
                pushed = True
                break
        if not pushed:
            stack.pop()
    return None


def _bfs_path(starts, target, post, loop=False):
    """Shortest ``[(node, action into node), ...]`` from a start to ``target``;
    with ``loop`` the path must take at least one step."""
    parent = {}
    queue = []
    for st in starts:
        if st == target and not loop:
            return [(st, None)]
        if st not in parent:
            parent[st] = None
            queue.append(st)
    i = 0
    while i < len(queue):
        node = queue[i]
        i += 1
        for nxt, action in post(node):
            if nxt == target:
                path = [(nxt, action)]
                cur = node
                while cur is not None:
                    prev = parent[cur]
                    path.append((cur, prev[1] if prev else None))
                    cur = prev[0] if prev else None
                return path[::-1]
            if nxt not in parent:
                parent[nxt] = (node, action)
                queue.append(nxt)
    return None


def _lasso(path, cycle) -> Lasso:
    prefix = [n[0] for n, _ in path]
    actions = [a for _, a in path[1:]]
    loop = [n[0] for n, _ in cycle[:-1]]
    actions += [a for _, a in cycle[1:]]
    return Lasso(prefix, loop, actions)


# -- CTL --------------------------------------------------------------------------------

def ctl_sat(ts: TransitionSystem, node: Node) -> set[int]:
    """States of ``ts`` satisfying a CTL state formula."""
    states = set(ts.states)
    pred: dict[int, list[int]] = {s: [] for s in ts.states}
    for t in ts.transitions:
        pred[t.dst].append(t.src)
    memo: dict = {}

    def ex(target: set) -> set:
        return {p for s in target for p in pred[s]}

    def eu(a: set, b: set) -> set:
        res = set(b)
        work = list(b)
        while work:
            s = work.pop()
            for p in pred[s]:
                if p in a and p not in res:
                    res.add(p)
                    work.append(p)
        return res

    def eg(a: set) -> set:
        res = set(a)
        count = {s: sum(1 for _, d in ts.successors(s) if d in res) for s in res}
        work = [s for s in res if count[s] == 0]
        while work:
            s = work.pop()
            if s not in res:
                continue
            res.discard(s)
            for p in pred[s]:
                if p in res:
                    count[p] -= 1
                    if count[p] == 0:
                        work.append(p)
        return res

    def sat(n: Node) -> set:
        if n in memo:
            return memo[n]
        op, a = n.op, n.args
        if op == "true":
            r = set(states)
        elif op == "false":
            r = set()
        elif op == "ap":
            r = {s for s in ts.states if n.name in ts.labels[s]}
        elif op == "not":
            r = states - sat(a[0])
        elif op == "and":
            r = sat(a[0]) & sat(a[1])
        elif op == "or":
            r = sat(a[0]) | sat(a[1])
        elif op == "implies":
            r = (states - sat(a[0])) | sat(a[1])
        elif op == "EX":
            r = ex(sat(a[0]))
        elif op == "EF":
            r = eu(states, sat(a[0]))
        elif op == "EU":
            r = eu(sat(a[0]), sat(a[1]))
        elif op == "EG":
            r = eg(sat(a[0]))
        elif op == "AX":
            r = states - ex(states - sat(a[0]))
        elif op == "AF":
            r = states - eg(states - sat(a[0]))
        elif op == "AG":
            r = states - eu(states, states - sat(a[0]))
        elif op == "AU":
            na, nb = states - sat(a[0]), states - sat(a[1])
            r = states - (eu(nb, na & nb) | eg(nb))
        else:
            raise PropertyError(f"operator {op} is not CTL")
        memo[n] = r
        return r

    return sat(node)


def check_ctl(ts: TransitionSystem, f, no_stutter: bool = False) -> Verdict:
    f = _as_formula(f, CTL) if not isinstance(f, Node) else _as_formula(f, None)
    ts = _prepare(ts, no_stutter)
    good = ctl_sat(ts, f.ast)
    bad = sorted(s for s in ts.initials if s not in good)
    if not bad:
        return Verdict(True, f)
    s = bad[0]
    node = f.ast
    # descend through conjunctions to the conjunct that actually fails
    while node.op == "and":
        left = node.args[0]
        node = left if s not in ctl_sat(ts, left) else node.args[1]
    return Verdict(False, f, failing_state=s, failing_subformula=render(node))


def check(ts: TransitionSystem, f, no_stutter: bool = False) -> Verdict:
    f = _as_formula(f)
    if f.logic == CTL:
        return check_ctl(ts, f, no_stutter)
    return check_ltl(ts, f, no_stutter)


def counterexample_text(ts: TransitionSystem, verdict: Verdict) -> str:
    """A failing lasso in the ``ts v1`` format, one state line per position,
    followed by a ``cycle-at`` marker naming the loop entry."""
    lasso = verdict.counterexample
    if lasso is None:
        return ""
    lines = ["ts v1"]
    seq = lasso.states
    for i, s in enumerate(seq):
        info = ts.info[s] if s < len(ts.info) else None
        body = info.render() if info is not None else "{}"
        lines.append(" ".join(["state", str(i), body, *sorted(ts.labels[s])]))
    lines.append("init 0")
    for i, action in enumerate(lasso.actions):
        dst = i + 1 if i + 1 < len(seq) else lasso.cycle_at
        lines.append(f"trans {i} {action} {dst}")
    lines.append(f"cycle-at {lasso.cycle_at}")
    return "\n".join(lines) + "\n"
