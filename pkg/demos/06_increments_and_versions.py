"""Grow a model by embedding and keep every version in a content-addressed store.

Run: python3 demos/06_increments_and_versions.py
"""
import tempfile
from pathlib import Path

from _common import fixture

from sysgraph import VersionStore, check, classify_next_move, embed, explore, is_module, parse_source
from sysgraph.increment import embed_with_renames

outer = parse_source("""system Order {
  vars { x: int[0..3] = 0; }
  state placed {} init; state paying {x=1}; state done {x=2};
  trans placed -> paying on pay; trans paying -> done when x == 1 on ship;
  terminal done;
}""")
inner = parse_source("""system Payment {
  vars { x: int[0..3] = 0; }
  state auth {x=3} init when x == 3; state captured {};
  trans auth -> captured on capture;
  terminal captured;
}""")

# Replace the paying step with the payment workflow.
g = embed(inner, outer, "paying")
print("declarators:", [d.name for d in g.declarators])
print("edges:", sorted((t.source, t.label, t.target) for t in g.transitions))

# When names collide the inner graph is renamed; the renames are reported.
clash = parse_source("""system Retry {
  vars { x: int[0..3] = 0; }
  state placed {x=3} init; state done {};
  trans placed -> done on pay;
  terminal done;
}""")
res = embed_with_renames(clash, outer, "paying")
print("module?", is_module(clash, outer), "renames:", res.renames)

tx, pending = fixture("txclient").graph(), fixture("txclient_pending").graph()
print("pending is a module of txclient:", is_module(pending, tx))

with tempfile.TemporaryDirectory() as tmp:
    store = VersionStore(Path(tmp) / ".sgv")
    v = check(explore(fixture("txclient").channel_system()), "EF Notified")
    first = store.archive(tx, labels=[v])
    again = store.archive(tx)
    print("same content, same id:", first.id == again.id, first.id[:12])
    child = store.archive(embed(pending, tx, "pending"), kind="horizontal-increment", parents=[first.id])
    print("child:", child.name, child.kind, "parent", child.parents[0][:8])
    print("log:", [(r.id[:8], r.kind) for r in store.log("TxClient")])
    print("found by formula:", [r.id[:8] for r in store.find_by_formula("EF Notified")])
    print("next move:", classify_next_move(tx, store))
