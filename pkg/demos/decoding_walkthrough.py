"""Noisy group testing decoded stage by stage, with and without enough tests.

Run:  python demos/decoding_walkthrough.py
"""

from gtlab import rates
from gtlab.core import ChannelKind, ChannelModel, apply_channel, generate_bernoulli_matrix, noiseless_outcomes
from gtlab.core import sample_defective_set
from gtlab.decoders import Algorithm, DecoderConfig, comp_decode, dd_decode, ndd_rz_decode

p, k, rho, seed = 2000, 45, 0.2, 2024
channel = ChannelModel(ChannelKind.REVERSE_Z, rho)
budget = rates.test_budget_ndd_rz(p, k, rho)
print(f"p={p}, k={k}, reverse-Z noise rho={rho}: NDD_RZ budget {budget.n_required:.0f} tests "
      f"(binding condition: {budget.binding})")

defectives = set(sample_defective_set(p, k, seed).tolist())


def errors(estimate):
    est = set(estimate.tolist())
    return f"{len(defectives - est):2d} missed, {len(est - defectives):3d} false"


# Reverse-Z noise never hides a positive, so an item in any negative test is
# certainly clean.  COMP stops there and keeps every survivor.  Classic DD
# accepts a survivor alone in even one positive test, which a flipped negative
# can fake; the noisy variant demands a number of such tests that grows with n.
# At this size plain DD is often the better of the two: the thresholds are
# tuned for the large-p limit and cost missed defectives when n is small.
print("\nmultiple      n   flips   COMP kept   DD                    NDD_RZ")
for multiple in (0.1, 0.15, 0.2, 0.3, 1.0):
    n = budget.n_tests(multiple)
    matrix = generate_bernoulli_matrix(n, p, k, 1.0, seed + 1)
    noisy = apply_channel(noiseless_outcomes(matrix, sorted(defectives)), channel, seed + 2)
    comp = comp_decode(matrix, noisy.y)
    dd = dd_decode(matrix, noisy.y)
    ndd = ndd_rz_decode(matrix, noisy.y, DecoderConfig(Algorithm.NDD_RZ, k, rho=rho))
    print(f"{multiple:<8} {n:6d} {int(noisy.flips.sum()):7d}   {comp.estimate.size:9d}   "
          f"{errors(dd.estimate)}   {errors(ndd.estimate)}")
