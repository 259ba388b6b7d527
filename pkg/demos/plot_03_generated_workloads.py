"""
Generated workloads and solver statistics
=========================================

The generator replays random transactions serially, so its histories are
serializable.  Duplicate values drawn from a Zipf distribution make reads
ambiguous, which is where the solver has to search.
"""

import numpy as np

from isochk.generator import generate, preset
from isochk.verify import VerifyOptions, verify

params = preset("hd", sessions=20, txns_per_session=50, num_keys=1000, seed=4)
h = generate(params)
print(f"{len(h) - 1} transactions over {len(h.key_universe)} keys")

###############################################################################
# Compare the ordering heuristic against plain phase saving.

for label, opts in (("with H", VerifyOptions()),
                    ("without H", VerifyOptions(polarity=False))):
    v = verify(h, opts)
    s = v.to_json()["stats"]
    print(f"{label:10s} satisfied={v.satisfied} conflicts={s['conflicts']:3d} "
          f"constraints {s['constraints_before']} -> {s['constraints_after']}")

###############################################################################
# Widths of the cycles behind each conflict: the number of distinct WW/WR
# choices involved.  Most are short.

v = verify(h, VerifyOptions(two_width=False, polarity=False, min_width_debug=True))
hist = v.stats.min_cycle_width_histogram
widths = np.array(sorted(hist))
counts = np.array([hist[w] for w in widths])
for w, c in zip(widths, counts):
    print(f"width {w}: {c:4d} {'#' * max(1, round(40 * c / counts.max()))}")
print("share at width 2:", round(float(counts[widths == 2].sum() / counts.sum()), 2))
