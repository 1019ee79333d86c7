"""LTL to Büchi automata by the closure / elementary-set tableau.

Automaton states are elementary sets of the closure; each state carries
the letter (set of true propositions) it reads, so a run ``B0 B1 ...``
accepts the word ``letter(B0) letter(B1) ...``.  The generalized
acceptance condition (one set per until-subformula) is degeneralized with
the usual counter construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

from .formula import TRUE, Formula, Node, mk, propositions


def to_core(node: Node) -> Node:
    """Rewrite into {ap, true, not, and, X, U} with double negations removed."""
    op = node.op
    a = [to_core(x) for x in node.args]
    if op == "ap" or op == "true":
        return node
    if op == "false":
        return _neg(TRUE)
    if op == "not":
        return _neg(a[0])
    if op == "and":
        return mk("and", a[0], a[1])
    if op == "or":
        return _neg(mk("and", _neg(a[0]), _neg(a[1])))
    if op == "implies":
        return _neg(mk("and", a[0], _neg(a[1])))
    if op == "X":
        return mk("X", a[0])
    if op == "U":
        return mk("U", a[0], a[1])
    if op == "F":
        return mk("U", TRUE, a[0])
    if op == "G":
        return _neg(mk("U", TRUE, _neg(a[0])))
    if op == "R":
        return _neg(mk("U", _neg(a[0]), _neg(a[1])))
    raise ValueError(f"not an LTL operator: {op}")


def _neg(node: Node) -> Node:
    return node.args[0] if node.op == "not" else mk("not", node)


def closure_positive(node: Node) -> list[Node]:
    """Non-negated subformulas, children before parents, no duplicates."""
    out: list[Node] = []

    def walk(n):
        for a in n.args:
            walk(a)
        base = n.args[0] if n.op == "not" else n
        if base not in out:
            out.append(base)

    walk(node)
    if TRUE not in out:
        out.insert(0, TRUE)
    return out


@dataclass
class Buchi:
    """Nondeterministic Büchi automaton with state-carried letters."""

    aps: frozenset
    letters: list[frozenset]  # letter read in each state
    initials: list[int]
    succ: list[list[int]]
    accepting: set[int]
    sets: list = field(default_factory=list, repr=False)  # elementary set per state

    @property
    def n_states(self) -> int:
        return len(self.letters)

    def transitions(self):
        return [(q, self.letters[q], r) for q in range(self.n_states) for r in self.succ[q]]

    def accepts(self, prefix: list[frozenset], cycle: list[frozenset]) -> bool:
        """Membership of the ultimately periodic word ``prefix cycle^ω``."""
        if not cycle:
            raise ValueError("the cycle of a lasso word must be non-empty")
        word = [frozenset(x) & self.aps for x in prefix + cycle]
        n, k = len(word), len(prefix)

        def nxt(i):
            return i + 1 if i + 1 < n else k

        # product of automaton with the lasso-shaped word graph
        start = [(q, 0) for q in self.initials if self.letters[q] == word[0]]
        edges = {}
        seen = set(start)
        stack = list(start)
        while stack:
            q, i = stack.pop()
            j = nxt(i)
            out = [(r, j) for r in self.succ[q] if self.letters[r] == word[j]]
            edges[(q, i)] = out
            for x in out:
                if x not in seen:
                    seen.add(x)
                    stack.append(x)
        return _has_accepting_cycle(seen, edges, lambda x: x[0] in self.accepting)


def _has_accepting_cycle(nodes, edges, accepting) -> bool:
    index, low, on, st, sccs = {}, {}, set(), [], []
    counter = [0]

    def strong(v):
        work = [(v, iter(edges.get(v, ())))]
        index[v] = low[v] = counter[0]
        counter[0] += 1
        st.append(v)
        on.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    st.append(w)
                    on.add(w)
                    work.append((w, iter(edges.get(w, ()))))
                    advanced = True
                    break
                if w in on:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = st.pop()
                    on.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                sccs.append(comp)

    for v in nodes:
        if v not in index:
            strong(v)
    for comp in sccs:
        members = set(comp)
        nontrivial = len(comp) > 1 or any(w in members for w in edges.get(comp[0], ()))
        if nontrivial and any(accepting(w) for w in comp):
            return True
    return False


def _elementary_sets(phi: Node):
    cl = closure_positive(phi)
    free = [n for n in cl if n.op in ("ap", "X", "U")]
    sets = []
    for bits in product((False, True), repeat=len(free)):
        val = dict(zip(free, bits))
        ok = True
        for n in cl:
            if n.op == "true":
                val[n] = True
            elif n.op == "and":
                val[n] = _truth(val, n.args[0]) and _truth(val, n.args[1])
            elif n.op == "U":
                l_val, r_val = _truth(val, n.args[0]), _truth(val, n.args[1])
                if r_val and not val[n]:
                    ok = False
                elif val[n] and not r_val and not l_val:
                    ok = False
            if not ok:
                break
        if ok:
            sets.append(val)
    return cl, sets


def _truth(val, node: Node) -> bool:
    if node.op == "not":
        return not val[node.args[0]]
    return val[node]


def ltl_to_buchi(f: Formula | Node, trim: bool = True) -> Buchi:
    node = f.ast if isinstance(f, Formula) else f
    aps = sorted(propositions(node))
    phi = to_core(node)
    cl, sets = _elementary_sets(phi)
    xs = [n for n in cl if n.op == "X"]
    us = [n for n in cl if n.op == "U"]
    m = len(sets)
    letters = [frozenset(p for p in aps if s[Node("ap", (), p)]) for s in sets]
    init = [i for i, s in enumerate(sets) if _truth(s, phi)]
    succ = [[] for _ in range(m)]
    for i, b in enumerate(sets):
        for j, b2 in enumerate(sets):
            if all(b[x] == _truth(b2, x.args[0]) for x in xs) and all(
                b[u] == (_truth(b, u.args[1]) or (_truth(b, u.args[0]) and b2[u])) for u in us
            ):
                succ[i].append(j)
    acc_sets = [{i for i, b in enumerate(sets) if not b[u] or _truth(b, u.args[1])} for u in us]

    # degeneralize: state (i, k) tracks which acceptance set is awaited
    k = max(1, len(acc_sets))
    if not acc_sets:
        acc_sets = [set(range(m))]
    ids: dict = {}
    d_letters, d_succ, d_sets, accepting = [], [], [], set()

    def sid(i, c):
        key = (i, c)
        if key not in ids:
            ids[key] = len(d_letters)
            d_letters.append(letters[i])
            d_succ.append(None)
            d_sets.append(sets[i])
            if c == 0 and i in acc_sets[0]:
                accepting.add(ids[key])
        return ids[key]

    initials = [sid(i, 0) for i in init]
    stack = [(i, 0) for i in init]
    done = set()
    while stack:
        i, c = stack.pop()
        if (i, c) in done:
            continue
        done.add((i, c))
        c2 = (c + 1) % k if i in acc_sets[c] else c
        out = []
        for j in succ[i]:
            out.append(sid(j, c2))
            if (j, c2) not in done:
                stack.append((j, c2))
        d_succ[ids[(i, c)]] = out
    d_succ = [s if s is not None else [] for s in d_succ]
    aut = Buchi(frozenset(aps), d_letters, initials, d_succ, accepting, d_sets)
    return _trim(aut) if trim else aut


def _trim(aut: Buchi) -> Buchi:
    """Drop states from which no accepting cycle is reachable."""
    n = aut.n_states
    edges = {q: aut.succ[q] for q in range(n)}
    # states on an accepting cycle: accepting q that can reach itself
    reach_cache = {}

    def reach(q):
        if q not in reach_cache:
            seen, stack = set(), list(aut.succ[q])
            while stack:
                x = stack.pop()
                if x not in seen:
                    seen.add(x)
                    stack.extend(aut.succ[x])
            reach_cache[q] = seen
        return reach_cache[q]

    good_acc = {q for q in aut.accepting if q in reach(q)}
    live = {q for q in range(n) if q in good_acc or reach(q) & good_acc}
    if not live:
        return Buchi(aut.aps, [], [], [], set(), [])
    order = sorted(live)
    remap = {q: i for i, q in enumerate(order)}
    return Buchi(
        aut.aps,
        [aut.letters[q] for q in order],
        [remap[q] for q in aut.initials if q in live],
        [[remap[r] for r in edges[q] if r in live] for q in order],
        {remap[q] for q in aut.accepting if q in live},
        [aut.sets[q] for q in order],
    )
