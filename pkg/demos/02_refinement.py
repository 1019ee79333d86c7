"""Refinement checking: bisimulation and simulation between two versions.

Run: python3 demos/02_refinement.py
"""
from _common import fixture

from sysgraph import ChannelSystem, bisim_equiv, explore, refine_check, simulates


def lower(name):
    return explore(ChannelSystem.of(fixture(name).graph()))


base, tx, retargeted = lower("txclient_base"), lower("txclient"), lower("txclient_retargeted")

# Adding "accelerate" next to "cancel" is invisible to an observer of
# propositions: both lead to the same dropped state.
rep = bisim_equiv(base, tx)
print("base ~ txclient:", rep.holds, f"({len(rep.relation)} related pairs)")

# Matching action names as well makes the extra label observable.
print("with actions matched:", bisim_equiv(base, tx, match_actions=True).holds)

# Sending notify somewhere else breaks equivalence; the report explains why.
rep = bisim_equiv(tx, retargeted)
print("txclient ~ retargeted:", rep.holds)
print("  distinguishing move:", rep.move)

print("base simulated by txclient:", simulates(base, tx).holds)
# refine_check works on graphs directly and reports a verdict string.
rep = refine_check(fixture("txclient").graph(), fixture("txclient_base").graph(), mode="sim")
print("refine_check sim:", rep.verdict)
