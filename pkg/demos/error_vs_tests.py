"""Monte-Carlo error probability as the number of tests grows.

Run:  python demos/error_vs_tests.py   (honours GTLAB_THREADS)
"""

from gtlab import harness, rates
from gtlab.core import ChannelKind, ChannelModel

p, k, rho = 1000, 10, 0.1
channel = ChannelModel(ChannelKind.Z, rho)
budget = rates.test_budget_ndd_z(p, k, rho)
print(f"Z noise rho={rho}, p={p}, k={k}: theoretical NDD_Z budget {budget.n_required:.0f} tests")

# Sweep from well below to above the budget.  Each row is an exact-recovery
# error estimate with a 95% Wilson interval.
grid = [budget.n_tests(m) for m in (0.4, 0.6, 0.8, 1.0, 1.3, 1.6)]
base = harness.ExperimentConfig.build(p, k, grid[0], channel, "ndd-z", 100, master_seed=5)
rows = harness.sweep_n(base, grid)

print("\n    n   rate    p_hat   95% CI            mean PD size")
for r in rows:
    print(f"{r['n']:5d}  {r['rate']:.3f}  {r['p_hat']:.3f}   [{r['ci_low']:.3f}, {r['ci_high']:.3f}]   {r['mean_pd_size']:.1f}")

# Re-running with the same seed reproduces the table byte for byte.
again = harness.sweep_n(base, grid, workers=1)
same = harness.write_csv(rows, harness.SWEEP_COLUMNS) == harness.write_csv(again, harness.SWEEP_COLUMNS)
print(f"\nserial re-run identical: {same}")
