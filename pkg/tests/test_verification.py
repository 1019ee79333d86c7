import itertools
import random
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES, fixture_model
from gen import random_ltl, random_ts
from oracles import eval_lasso, ltl_holds
from sysgraph.core.ts import Transition, TransitionSystem
from sysgraph.elaboration import explore
from sysgraph.errors import PropertyError, UnsupportedFeature
from sysgraph.verification import check, check_ctl, check_ltl, compile_property, emit_promela, parse_formula
from sysgraph.verification.buchi import ltl_to_buchi
from sysgraph.verification.checker import STUTTER, counterexample_text
from sysgraph.verification.formula import ap, mk

EXAMPLE = "G (PaidGas -> F Notified)"


@pytest.fixture(scope="module")
def tx_ts():
    return explore(fixture_model("txclient").channel_system())


def lasso_is_real(ts, lasso):
    seq = lasso.states
    edges = ts.edge_set()
    dead = set(ts.deadlocks())
    if lasso.cycle[0] != lasso.prefix[-1] or seq[0] not in ts.initials:
        return False
    targets = seq[1:] + [seq[lasso.cycle_at]]
    for s, a, t in zip(seq, lasso.actions, targets):
        if (s, a, t) not in edges and not (a == STUTTER and s == t and s in dead):
            return False
    return len(lasso.actions) == len(seq)


class TestParse:
    def test_example_property(self, txclient):
        f = compile_property(EXAMPLE, txclient)
        assert f.logic == "LTL"
        assert f.ast == mk("G", mk("implies", ap("PaidGas"), mk("F", ap("Notified"))))

    def test_ctl_mapping(self):
        f = parse_formula("AG (ForkFree)")
        assert f.logic == "CTL"
        assert f.ast.op == "AG"

    def test_unknown_proposition(self, txclient):
        with pytest.raises(PropertyError):
            compile_property("G (Unknown)", txclient)

    def test_mixed_logic_rejected(self):
        with pytest.raises(PropertyError):
            parse_formula("AG (F p)")

    def test_unquantified_ctl_rejected(self):
        with pytest.raises(PropertyError):
            parse_formula("EF p & G q")

    def test_empty_rejected(self):
        with pytest.raises(PropertyError):
            parse_formula("   ")


P, Q, PQ, NONE = frozenset({"p"}), frozenset({"q"}), frozenset({"p", "q"}), frozenset()


class TestBuchi:
    def test_eventually(self):
        aut = ltl_to_buchi(parse_formula("F p"))
        # letters live on states, which costs one state over the edge-labeled textbook automaton
        assert aut.n_states == 3
        for pre, cyc in _words(["p"], 2):
            assert aut.accepts(pre, cyc) == any("p" in x for x in pre + cyc)

    def test_always(self):
        aut = ltl_to_buchi(parse_formula("G p"))
        assert aut.n_states == 1
        assert aut.succ == [[0]] and aut.accepting == {0} and aut.letters == [P]

    @pytest.mark.parametrize("prefix, cycle, expected", [
        ([], [NONE], True),
        ([], [P], False),
        ([], [PQ], True),
        ([P], [Q], True),
        ([P, NONE], [P, Q], True),
        ([Q], [P, NONE], False),
    ])
    def test_response_spot_checks(self, prefix, cycle, expected):
        f = parse_formula("G (p -> F q)")
        assert ltl_to_buchi(f).accepts(prefix, cycle) is expected
        assert eval_lasso(f.ast, prefix, cycle) is expected
        assert ltl_to_buchi(mk("not", f.ast)).accepts(prefix, cycle) is not expected

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 2**32))
    def test_language_matches_semantics(self, seed):
        f = random_ltl(random.Random(seed), depth=3)
        aut = ltl_to_buchi(f)
        for pre, cyc in _words(["p", "q"], 2):
            assert aut.accepts(pre, cyc) == eval_lasso(f, pre, cyc)


def _words(aps, max_len):
    letters = [frozenset(c) for r in range(len(aps) + 1) for c in itertools.combinations(aps, r)]
    for n_pre in range(max_len + 1):
        for n_cyc in range(1, max_len + 1):
            for pre in itertools.product(letters, repeat=n_pre):
                for cyc in itertools.product(letters, repeat=n_cyc):
                    yield list(pre), list(cyc)


class TestLTL:
    def test_true_always_holds(self, tx_ts):
        assert check_ltl(tx_ts, parse_formula("G true")).satisfied

    def test_always_p_two_state(self):
        ts = TransitionSystem([P, NONE], [Transition(0, "a", 1)], [0])
        v = check_ltl(ts, parse_formula("G p"))
        assert not v.satisfied
        assert v.counterexample.prefix == [0, 1]
        assert v.counterexample.cycle == [1]
        assert v.counterexample.actions == ["a", STUTTER]

    def test_example_property_matches_oracle(self, tx_ts):
        f = parse_formula(EXAMPLE)
        v = check_ltl(tx_ts, f)
        assert v.satisfied == ltl_holds(tx_ts, f.ast)
        assert not v.satisfied
        assert lasso_is_real(tx_ts, v.counterexample)
        pre, cyc = v.counterexample.words(tx_ts)
        assert not eval_lasso(f.ast, pre, cyc)

    def test_counterexample_text(self, tx_ts):
        v = check_ltl(tx_ts, parse_formula(EXAMPLE))
        text = counterexample_text(tx_ts, v)
        assert text.startswith("ts v1\n")
        assert f"cycle-at {v.counterexample.cycle_at}" in text

    def test_no_stutter_ignores_finite_runs(self):
        ts = TransitionSystem([P, NONE], [Transition(0, "a", 1)], [0])
        assert check_ltl(ts, parse_formula("G p"), no_stutter=True).satisfied

    def test_ctl_formula_rejected(self, tx_ts):
        with pytest.raises(PropertyError):
            check_ltl(tx_ts, parse_formula("AG PaidGas"))


class TestCTL:
    def test_ag_true(self, tx_ts):
        assert check_ctl(tx_ts, parse_formula("AG true")).satisfied

    def test_ef_notified(self, tx_ts):
        assert check_ctl(tx_ts, parse_formula("EF Notified")).satisfied

    def test_af_notified_fails(self, tx_ts):
        v = check_ctl(tx_ts, parse_formula("AF Notified"))
        assert not v.satisfied
        assert v.failing_state in tx_ts.initials

    def test_dispatch(self, tx_ts):
        assert check(tx_ts, "EF Notified").satisfied
        assert not check(tx_ts, EXAMPLE).satisfied


@pytest.mark.parametrize("name", FIXTURES)
def test_ctl_agrees_with_ltl_on_fixtures(name):
    model = fixture_model(name)
    ts = explore(model.channel_system())
    for p in model.propositions():
        for ctl, ltl in (("AG", "G"), ("AF", "F")):
            a = check_ctl(ts, parse_formula(f"{ctl} {p}")).satisfied
            b = check_ltl(ts, parse_formula(f"{ltl} {p}")).satisfied
            assert a == b, (p, ctl)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32))
def test_ltl_matches_oracle(seed):
    rng = random.Random(seed)
    ts = random_ts(rng, max_states=20)
    f = random_ltl(rng, depth=3)
    v = check_ltl(ts, f)
    assert v.satisfied == ltl_holds(ts, f)
    if not v.satisfied:
        assert lasso_is_real(ts, v.counterexample)
        pre, cyc = v.counterexample.words(ts)
        assert not eval_lasso(f, pre, cyc)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_duality_on_deterministic_systems(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 8)
    labels = [frozenset(x for x in ("p", "q") if rng.random() < 0.5) for _ in range(n)]
    trans = [Transition(i, "a", rng.randrange(n)) for i in range(n) if rng.random() < 0.8]
    ts = TransitionSystem(labels, trans, [0])
    f = random_ltl(rng, depth=3)
    pos = check_ltl(ts, f).satisfied
    neg = check_ltl(ts, mk("not", f)).satisfied
    # exactly one run, so exactly one of f and its negation holds
    assert pos != neg


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32))
def test_universal_fragment_agreement(seed):
    rng = random.Random(seed)
    ts = random_ts(rng, max_states=20)
    for p in ("p", "q"):
        assert check_ctl(ts, parse_formula(f"AG {p}")).satisfied == check_ltl(ts, parse_formula(f"G {p}")).satisfied
        assert check_ctl(ts, parse_formula(f"AF {p}")).satisfied == check_ltl(ts, parse_formula(f"F {p}")).satisfied


class TestPromela:
    def test_txclient_counts(self):
        text = emit_promela(fixture_model("txclient").channel_system(), [EXAMPLE])
        assert len(re.findall(r"^#define D_", text, re.M)) == 6
        assert len(re.findall(r"^inline ", text, re.M)) == 6
        chans = re.findall(r"^chan \w+ = \[(\d+)\]", text, re.M)
        assert chans == ["1"]
        assert len(re.findall(r"^ltl ", text, re.M)) == 1

    def test_deterministic(self):
        cs = fixture_model("txclient").channel_system()
        assert emit_promela(cs, [EXAMPLE]) == emit_promela(cs, [EXAMPLE])

    def test_no_propositions_no_ltl(self):
        text = emit_promela(fixture_model("pc_sync").channel_system())
        assert "ltl" not in text
        assert "proctype" in text

    def test_ctl_rejected(self):
        with pytest.raises(UnsupportedFeature):
            emit_promela(fixture_model("txclient").channel_system(), ["AG PaidGas"])
