import json
import random
import threading
from dataclasses import replace

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import fixture_graph
from gen import random_graph
from sysgraph.elaboration import explore
from sysgraph.errors import StorageError
from sysgraph.verification import check_ltl, parse_formula
from sysgraph.versioning import VersionStore, canonical_json, graph_digest

EXAMPLE = "G (PaidGas -> F Notified)"


def retarget(g, label, target):
    trans = tuple(replace(t, target=target) if t.label == label else t for t in g.transitions)
    return replace(g, transitions=trans)


class TestDigest:
    def test_stable_across_parses(self):
        assert graph_digest(fixture_graph("txclient")) == graph_digest(fixture_graph("txclient"))

    def test_independent_of_transition_order(self, txclient):
        shuffled = replace(txclient, transitions=tuple(reversed(txclient.transitions)))
        assert graph_digest(shuffled) == graph_digest(txclient)

    def test_sensitive_to_edges(self, txclient):
        assert graph_digest(retarget(txclient, "notify", "dropped")) != graph_digest(txclient)

    def test_canonical_json_sorted(self):
        assert canonical_json({"b": 1, "a": [2]}) == '{"a":[2],"b":1}'


class TestStore:
    def test_idempotent(self, store, txclient):
        a = store.archive(txclient)
        b = store.archive(txclient)
        assert a.id == b.id == graph_digest(txclient)
        assert store.ids() == [a.id]

    def test_edit_links_parent(self, store, txclient):
        first = store.archive(txclient)
        second = store.archive(retarget(txclient, "notify", "dropped"))
        assert second.id != first.id
        assert second.parents == [first.id]
        assert second.kind == "refinement"
        assert second.refinement["verdict"] == "fails"
        assert [r.id for r in store.log("TxClient")] == [second.id, first.id]

    def test_refinement_record(self, store):
        store.archive(fixture_graph("txclient_base"))
        rec = store.archive(replace(fixture_graph("txclient"), name="TxClientBase"))
        assert rec.refinement == {"mode": "bisimulation", "verdict": "holds"}

    def test_label_query(self, store, txclient):
        v = check_ltl(explore(txclient), parse_formula(EXAMPLE))
        rec = store.archive(txclient, labels=[v])
        (found,) = store.find_by_formula("G(PaidGas->F Notified)")
        assert found.id == rec.id
        assert found.label_for(EXAMPLE).verdict == "fails"
        assert store.find_by_formula("F Notified") == []

    def test_labels_merge_on_rearchive(self, store, txclient):
        store.archive(txclient, labels=[("EF Notified", True)])
        rec = store.archive(txclient, labels=[(EXAMPLE, False)])
        assert {lab.formula for lab in rec.labels} == {"EF Notified", parse_formula(EXAMPLE).canonical}
        assert len(store.ids()) == 1

    def test_dangling_parent(self, store, txclient):
        with pytest.raises(StorageError):
            store.archive(txclient, parents=["0" * 64])

    def test_tampered_record_detected(self, store, txclient):
        rec = store.archive(txclient)
        path = store.records_dir / f"{rec.id}.json"
        data = json.loads(path.read_text())
        data["source"] = data["source"].replace("status=4", "status=3")
        path.write_text(json.dumps(data))
        with pytest.raises(StorageError):
            store.load(rec.id)
        assert store.verify_all() == [rec.id]

    def test_record_rebuilds_graph(self, store, txclient):
        rec = store.archive(txclient)
        assert store.show(rec.id[:10]).graph() == txclient

    def test_concurrent_archive(self, tmp_path, txclient):
        errors = []

        def work():
            try:
                VersionStore(tmp_path / ".sgv").archive(txclient)
            except Exception as exc:  # pragma: no cover - surfaced below
                errors.append(exc)

        threads = [threading.Thread(target=work) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert errors == []
        assert VersionStore(tmp_path / ".sgv").ids() == [graph_digest(txclient)]


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.integers(0, 2**32))
def test_dag_acyclic_and_verified(tmp_path_factory, seed):
    rng = random.Random(seed)
    store = VersionStore(tmp_path_factory.mktemp("sgv"))
    graphs = [random_graph(rng, rng.choice(["A", "B"])) for _ in range(8)]
    for g in graphs:
        parents = None
        if rng.random() < 0.3 and store.ids():
            parents = [rng.choice(store.ids())]
        store.archive(g, kind="origin" if parents is None and rng.random() < 0.2 else None, parents=parents)
    recs = {r.id: r for r in store.records()}
    assert store.verify_all() == []
    state = {}

    def visit(rid):
        if state.get(rid) == "open":
            raise AssertionError("cycle through " + rid)
        if state.get(rid) == "done":
            return
        state[rid] = "open"
        for p in recs[rid].parents:
            visit(p)
        state[rid] = "done"

    for rid in recs:
        visit(rid)
        assert graph_digest(recs[rid].graph()) == rid
