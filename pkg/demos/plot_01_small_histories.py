"""
Checking two tiny histories
===========================

A history records, per client session, the committed transactions and the
values their reads returned.  Here two writers put the same value into ``x``
and a later transaction reads it, so the checker has to work out which
write it saw.
"""

from isochk import build_history, verify

# s0t0 and s1t0 both write x=1; s1t1 reads x=1.
ambiguous = build_history([
    [[("w", "x", 1)]],
    [[("w", "x", 1)], [("r", "x", 1)]],
])
v = verify(ambiguous)
print("ambiguous read, serializable:", v.satisfied)
print("version order:", v.witness["version_order"])
print("reads from:", v.witness["reads_from"])

###############################################################################
# A second history where no version order explains the reads.  s2t0 sees
# x=1 but y=0, while the only writer of y=1 is also a writer of x=1 and the
# other writer of x read y=1.

tangled = build_history([
    [[("r", "y", 1), ("w", "x", 1)]],
    [[("w", "x", 1), ("w", "y", 1)]],
    [[("r", "x", 1), ("r", "y", 0)]],
])
v = verify(tangled)
print("\ntangled history, serializable:", v.satisfied)
for choice in v.core["NoChoice"]["choices"]:
    print("if", choice["choice"], "then cycle:")
    for edge in choice["cycle"]:
        print("   ", edge)

###############################################################################
# Pruning settled the second history before any SAT solving: every way of
# explaining the read of x closes a cycle with edges already known.

print("\nstages:", v.to_json()["stats"]["timings_us"])
