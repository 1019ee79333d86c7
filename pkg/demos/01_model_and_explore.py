"""Write a small model, check it, and elaborate it into a transition system.

Run: python3 demos/01_model_and_explore.py
"""
from _common import fixture

from sysgraph import ChannelSystem, explore, interpret_graph, parse_source, validate_graph
from sysgraph.errors import ModelError

SRC = """
system Door {
  vars { open: bool = false; locked: bool = false; }
  state closed {open=false} init;
  state opened {open=true};
  state shut {locked=true};
  trans closed -> opened when locked == false on push;
  trans opened -> closed on pull;
  trans closed -> shut on lock;
  trans shut -> closed on unlock;
}
"""

door = parse_source(SRC)
print(f"{door.name}: {len(door.declarators)} declarators, {len(door.transitions)} transitions")
print("diagnostics:", validate_graph(door))

# Every state carries the locations plus the full variable evaluation.
ts = interpret_graph(door)
for i, info in enumerate(ts.info):
    print(f"  s{i}", info.locations, dict(info.evaluation.items()))

# Diagnostics come back with positions instead of a traceback.
try:
    parse_source("system Bad { vars { x: int[0..2] = 0; } state a {x=7} init; }")
except ModelError as exc:
    for d in exc.diagnostics:
        print("rejected:", d)

# The transaction client talks to the outside world over channel c.  A closed
# exploration lets the environment send any value in c's domain.
tx = fixture("txclient").graph()
closed = explore(ChannelSystem.of(tx))
print(f"TxClient: {closed.n_states} states, {len(closed.transitions)} transitions, "
      f"{len(closed.deadlocks())} deadlocks")

# A composition whose components share the counter n.
counter = explore(fixture("counter").channel_system())
print("SharedCounter states:", counter.n_states)
