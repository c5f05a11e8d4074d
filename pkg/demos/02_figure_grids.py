"""
Surface grids behind the figures
================================

Each preset evaluates the bullwhip measure over a two-parameter grid and writes
it as long-format CSV. Plotting is left to whatever tool you prefer; if
matplotlib is installed a contour plot of the first grid is saved as well.
"""

import sys
from pathlib import Path

from bullwhip.experiments import FIGURE_PRESETS, rows_to_csv, sweep

out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "figure-grids")
out_dir.mkdir(exist_ok=True)

# %%
for name, preset in FIGURE_PRESETS.items():
    rows = sweep(preset["axes"], preset["fixed"])
    with open(out_dir / f"{name}.csv", "w", newline="") as fh:
        rows_to_csv(rows, fh)
    lo = min(rows, key=lambda r: r["BM"])
    hi = max(rows, key=lambda r: r["BM"])
    a, b = (ax.name for ax in preset["axes"])
    print(f"{name}: {len(rows)} points, BM from {lo['BM']:.4f} at {a}={lo[a]}, {b}={lo[b]} "
          f"to {hi['BM']:.4f} at {a}={hi[a]}, {b}={hi[b]}")

# %%
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np
except ImportError:
    sys.exit(0)

rows = sweep(FIGURE_PRESETS["fig1"]["axes"], FIGURE_PRESETS["fig1"]["fixed"])
ms = sorted({r["m"] for r in rows})
sig = sorted({r["sigL"] for r in rows})
grid = np.array([[next(r["BM"] for r in rows if r["m"] == m and r["sigL"] == s) for m in ms] for s in sig])
fig, ax = plt.subplots()
cs = ax.contourf(ms, sig, grid, levels=20)
fig.colorbar(cs, label="BM")
ax.set_xlabel("m")
ax.set_ylabel("sigma_L")
fig.savefig(out_dir / "fig1.png", dpi=120)
