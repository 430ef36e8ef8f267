# %% [markdown]
# # Reading a finished sweep
#
# Run the default sweep first (about 12 minutes on one core):
#
#     python3 -m katolab sweep configs/default.ini
#
# This script reads out/default and prints the rank correlations and the
# exceedance probabilities per viscosity.

# %%
import json
import sys
from pathlib import Path

from katolab.experiments import read_sweep_csv

out = Path(__file__).resolve().parents[1] / "out" / "default"
if not (out / "summary.json").is_file():
    sys.exit(f"no sweep found in {out}; run the sweep first")

summary = json.loads((out / "summary.json").read_text())
print("median Spearman(sup E, D) over seeds:")
for k, v in summary["rank_correlations"]["median"].items():
    print(f"  {k:9s} {v:.3f}")

# %%
print("\nP[sup E > eps] by viscosity (95% interval):")
for eps, by_nu in summary["exceedance"].items():
    cells = "  ".join(f"{nu}: {e['p']:.2f} [{e['lower']:.2f}, {e['upper']:.2f}]" for nu, e in by_nu.items())
    print(f"  eps = {eps:5s} {cells}")

# %%
rows = read_sweep_csv(out / "sweep.csv")
print("\nsweep rows:", len(rows), " checks:", {k: v for k, v in summary["checks"].items() if k.endswith("ok")})
