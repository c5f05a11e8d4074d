"""
Other lead-time-demand forecasts, and service levels
====================================================

Compare the product forecast with a moving average of completed lead-time
demands (kim-ma), the infeasible forecast that knows each order's true lead
time (hindsight), and a fixed lead time (deterministic). Then track inventory
to see what the safety factor z buys.
"""

from bullwhip import LtdStrategy, SimulationConfig, run

base = dict(n=5, m=5, horizon=200_000, replications=8, seed=11)

# %%
for strategy in [LtdStrategy(), LtdStrategy("kim-ma", p=5), LtdStrategy("hindsight"),
                 LtdStrategy("deterministic", lead_time=3)]:
    r = run(SimulationConfig(strategy=strategy, **base))
    closed = "" if r.analytic_bm is None else f" (closed form {r.analytic_bm:.4f})"
    print(f"{str(strategy):>18}: BM {r.bm:8.4f} +/- {r.bm_se:.4f}{closed}")

# %%
# Orders do not depend on z (the safety stock is constant), but stock-outs do.
for z in (0.0, 1.0, 2.0, 3.0):
    r = run(SimulationConfig(z=z, track_inventory=True, **base))
    print(f"z={z:.1f}: fraction of periods without stock-out {r.service_level:.4f}")
