"""Exhaustive maximum-likelihood decoding as a yardstick for the heuristics.

Run:  python demos/ml_oracle.py
"""

from gtlab import harness
from gtlab.core import NOISELESS, ChannelKind, ChannelModel

# With p = 10 and k = 2 there are only 45 candidate sets, so ML can score all
# of them.  It should never lose to a heuristic beyond sampling noise.
for channel in (NOISELESS, *(ChannelModel(kind, 0.1) for kind in (ChannelKind.REVERSE_Z, ChannelKind.Z,
                                                                  ChannelKind.SYMMETRIC))):
    report = harness.oracle_compare(10, 2, 20, channel, 300, master_seed=1)
    summary = ", ".join(f"{name} {rec['rate']:.2f}" for name, rec in report["decoders"].items())
    verdict = "ML dominates" if report["ml_dominates"] else "ML beaten"
    print(f"{channel.kind.value:<9} {summary}  -> {verdict}")
