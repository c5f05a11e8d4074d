"""
Closed-form bullwhip measure
============================

Evaluate the bullwhip measure and its three amplifying terms, then print the
four published tables (n = 5, 10, 20, 30).
"""

from bullwhip import bullwhip_measure, forecast_error_variance, order_variance, table_params
from bullwhip.analytics import bm_limit_m_inf, bm_limit_n_inf
from bullwhip.experiments import TABLE_N, fmt5, table_rows

# %%
# One parameter set: n = 5 past demands, m = 5 past lead times.
p = table_params(n=5, m=5)
d = bullwhip_measure(p)
print(f"BM1={d.bm1:.5f}  BM2={d.bm2:.5f}  BM3={d.bm3:.5f}  BM={d.bm:.5f}")
print("Var q / Var D =", order_variance(p) / p.var_D)
print("forecast error variance =", forecast_error_variance(p))

# %%
# Lead-time forecasting dominates for short lead-time windows. BM2 falls as 1/m^2
# while BM1 falls as 1/m, so BM1 is the slower of the two to vanish.
for table_id, n in TABLE_N.items():
    print(f"\nn = {n}")
    print(f"{'m':>3} {'BM1':>9} {'BM2':>9} {'BM':>9}")
    for m, bm1, bm2, bm in table_rows(table_id):
        print(f"{m:>3} {fmt5(bm1):>9} {fmt5(bm2):>9} {fmt5(bm):>9}")

# %%
# Growing either window kills only part of the effect.
print("\nm -> inf:", bm_limit_m_inf(p), "(demand forecasting remains)")
print("n -> inf:", bm_limit_n_inf(p), "(lead-time forecasting remains)")
