"""
Simulation against the closed form
==================================

Simulate the retailer's order stream and compare the empirical variance ratio
with the closed form for a handful of (n, m) pairs.
"""

from bullwhip import SimulationConfig, run

# %%
for n, m in [(5, 1), (5, 5), (10, 10), (30, 50)]:
    config = SimulationConfig(n=n, m=m, horizon=300_000, replications=16, seed=n * 1000 + m)
    r = run(config)
    z = (r.bm - r.analytic_bm) / r.bm_se
    print(f"n={n:>2} m={m:>2}  empirical {r.bm:8.4f} [{r.bm_ci[0]:.4f}, {r.bm_ci[1]:.4f}]"
          f"  closed form {r.analytic_bm:8.4f}  z={z:+.2f}")

# %%
# The lead-time-demand forecast error has the variance used for safety stock.
r = run(SimulationConfig(n=5, m=5, horizon=300_000, replications=16, seed=5))
print(f"forecast error variance: empirical {r.sigma_hat_sq:.3f} +/- {r.sigma_hat_sq_se:.3f},"
      f" closed form {r.analytic_sigma_hat_sq:.3f}")
