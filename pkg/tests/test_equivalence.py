import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES, fixture_graph, fixture_model
from gen import random_ts_pair
from oracles import naive_bisim, naive_simulates, valid_relation
from sysgraph.core.ts import Transition, TransitionSystem
from sysgraph.elaboration import explore
from sysgraph.equivalence import bisim_equiv, check_relation, refine_check, simulates


def cycle(labels):
    n = len(labels)
    return TransitionSystem([frozenset(x) for x in labels], [Transition(i, "a", (i + 1) % n) for i in range(n)], [0])


def lowered(name):
    return explore(fixture_model(name).channel_system())


class TestBisim:
    def test_reflexive_identity_witness(self):
        ts = lowered("txclient")
        rep = bisim_equiv(ts, ts)
        assert rep.holds
        assert {(s, s) for s in ts.states} <= rep.relation

    def test_accelerate_is_bisimilar(self):
        assert refine_check(fixture_graph("txclient_base"), fixture_graph("txclient")).holds

    def test_retargeted_notify_fails(self):
        rep = refine_check(fixture_graph("txclient"), fixture_graph("txclient_retargeted"))
        assert not rep.holds
        assert rep.pair is not None

    def test_cycles_of_different_length(self):
        two = cycle([{"p"}, set()])
        three = cycle([{"p"}, set(), {"q"}])
        rep = bisim_equiv(two, three)
        assert not rep.holds
        s, t = rep.pair
        assert s in two.states and t in three.states
        assert not naive_bisim(two, three)

    def test_action_matching_is_opt_in(self):
        a = TransitionSystem([frozenset(), frozenset()], [Transition(0, "x", 1)], [0])
        b = TransitionSystem([frozenset(), frozenset()], [Transition(0, "y", 1)], [0])
        assert bisim_equiv(a, b).holds
        assert not bisim_equiv(a, b, match_actions=True).holds


class TestSimulation:
    def test_without_accelerate_refines(self):
        assert refine_check(fixture_graph("txclient"), fixture_graph("txclient_base"), mode="sim").holds

    def test_extra_branch_unmatched(self):
        abstract = TransitionSystem([frozenset(), frozenset()], [Transition(0, "a", 1)], [0])
        concrete = TransitionSystem([frozenset(), frozenset(), frozenset({"p"})],
                                    [Transition(0, "a", 1), Transition(0, "b", 2)], [0])
        rep = simulates(concrete, abstract)
        assert not rep.holds
        side, action, dst = rep.move
        assert (side, action, dst) == ("left", "b", 2)
        assert simulates(abstract, concrete).holds

    @pytest.mark.parametrize("name", FIXTURES)
    def test_reflexive(self, name):
        ts = lowered(name)
        rep = simulates(ts, ts)
        assert rep.holds
        assert check_relation(ts, ts, rep.relation, rep.mode)

    def test_transitive_on_fixture_triples(self):
        systems = {n: lowered(n) for n in ("txclient", "txclient_base", "txclient_pending", "txclient_retargeted")}
        for x, y, z in itertools.permutations(systems, 3):
            a, b, c = systems[x], systems[y], systems[z]
            if simulates(a, b).holds and simulates(b, c).holds:
                assert simulates(a, c).holds, (x, y, z)


def test_unknown_mode():
    g = fixture_graph("txclient")
    with pytest.raises(ValueError):
        refine_check(g, g, mode="weak")


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 2**32), st.booleans())
def test_agrees_with_naive_fixpoints(seed, match_actions):
    a, b = random_ts_pair(random.Random(seed), max_states=12)
    rep = bisim_equiv(a, b, match_actions)
    assert rep.holds == naive_bisim(a, b, match_actions)
    if rep.holds:
        assert valid_relation(a, b, rep.relation, True, match_actions)
    fwd = simulates(a, b, match_actions)
    assert fwd.holds == naive_simulates(a, b, match_actions)
    if fwd.holds:
        assert valid_relation(a, b, fwd.relation, False, match_actions)
    if rep.holds:
        assert fwd.holds and simulates(b, a, match_actions).holds
