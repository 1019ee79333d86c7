"""Generate an implementation skeleton once properties are verified.

Run: python3 demos/05_skeleton.py
"""
import json

from _common import fixture

from sysgraph import bisim_equiv, bundle_to_graph, generate_skeleton, interpret_graph
from sysgraph.errors import StageGateError

tx = fixture("txclient").graph()

try:
    generate_skeleton(tx)
except StageGateError as exc:
    print("blocked:", exc)

bundle, text = generate_skeleton(tx, verified=True)
doc = json.loads(text)
print("sections:", sorted(doc))
print("control-flow rows:", len(bundle.control_flow))
print("effect hooks:", [h["action"] for h in bundle.effect_hooks])
print("divergence interfaces:", [i["declarator"] for i in bundle.divergence_interfaces])

# The bundle keeps enough to rebuild the model.
back = bundle_to_graph(text)
print("rebuilt graph bisimilar:", bisim_equiv(interpret_graph(tx), interpret_graph(back)).holds)

_, ref = generate_skeleton(tx, backend="reference-text", verified=True)
print()
print("\n".join(ref.splitlines()[:20]))
