"""
Planting anomalies
==================

Starting from a serializable workload, splice in a stale read, a lost
update or a write skew and see which isolation levels still accept it.
"""

from isochk.generator import ANOMALIES, GenParams, generate, inject_anomaly
from isochk.verify import VerifyOptions, verify

base = generate(GenParams(sessions=8, txns_per_session=25, ops_per_txn=6, num_keys=60, seed=2))
print("clean:", verify(base).satisfied, verify(base, VerifyOptions(isolation="si")).satisfied)

for kind in ANOMALIES:
    h = inject_anomaly(base, kind, seed=1)
    ser = verify(h)
    si = verify(h, VerifyOptions(isolation="si"))
    print(f"{kind:16s} SER={ser.satisfied!s:5s} SI={si.satisfied!s:5s} "
          f"core={sorted((ser.core or {}).keys())}")
