"""Temporal properties: LTL with lasso counterexamples, CTL, and Promela export.

Run: python3 demos/03_model_checking.py
"""
from _common import fixture

from sysgraph import check, check_ctl, emit_promela, explore
from sysgraph.verification.checker import counterexample_text

model = fixture("txclient")
ts = explore(model.channel_system())

# Every paid transaction is eventually notified?  No: a low-gas one is dropped.
v = check(ts, "G (PaidGas -> F Notified)")
print("G (PaidGas -> F Notified):", v.satisfied)
lasso = v.counterexample
print("  prefix:", [ts.info[s].locations[0] for s in lasso.prefix])
print("  cycle: ", [ts.info[s].locations[0] for s in lasso.cycle])
print("  actions:", lasso.actions)

for f in ("EF Notified", "AF Notified", "AG (Notified -> !PaidGas)"):
    print(f"{f}:", check_ctl(ts, f).satisfied)

print()
print(counterexample_text(ts, v).splitlines()[0], "... (replayable trace format)")

pml = emit_promela(model.channel_system(), ["G (PaidGas -> F Notified)"])
print()
print("\n".join(pml.splitlines()[:12]))
print("...")
