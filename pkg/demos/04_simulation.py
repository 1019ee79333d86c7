"""Execute models: external feeds, divergence resolution, effects, parallel runs.

Run: python3 demos/04_simulation.py
"""
from _common import fixture

from sysgraph import DivergenceResolver, EffectRegistry, detect_divergences, explore, run, run_parallel
from sysgraph import trace_conformance
from sysgraph.runtime import ChannelEndpoint, ValueFeed

tx = fixture("txclient").graph()

# pending offers cancel and accelerate under the same guard.
for d in detect_divergences(tx):
    print("divergence:", d.describe())

# Effects observe read-only snapshots; they cannot steer the run.
effects = EffectRegistry()
effects.register("payGas", lambda snap, ctx: print(f"  [effect] paying gas, status={snap['status']}"))

trace = run(tx, effects=effects, resolver=DivergenceResolver.scripted("accelerate"),
            endpoints=[ChannelEndpoint("c", feed=ValueFeed([1]))])
print("actions:", trace.actions, "terminal:", trace.terminal)

trace = run(tx, endpoints=[ChannelEndpoint("c", feed=ValueFeed([3]))])
print("high gas:", trace.actions)

# Compositions run one component per step under a seeded scheduler.  The
# confluence point makes both counters wait until n reaches 2.
cs = fixture("counter").channel_system()
t = run_parallel(cs, seed=5, confluence=[{"n": 2}])
print("counter:", t.actions, "joins:", t.joins)
print("conforms to explored system:", trace_conformance(t, explore(cs)))

cs = fixture("pc_once").channel_system()
print("producer/consumer:", run_parallel(cs, seed=2).actions)
