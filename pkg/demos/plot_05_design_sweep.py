"""
Sweeping the encoder design space
=================================

Run the ResNet grid and look at the trade-off between how much the
encoder shrinks the frame and what the frame then costs.
"""

# %%
import csv
import io
from pathlib import Path

from insensor import dse

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"

grid = dse.load_grid(SCENARIOS / "vww_resnet_grid.json")
rows = dse.run_sweep(grid, seed=0, workers=4)
print(f"{len(rows)} rows")

# %%
# The cheapest in-sensor points at 4 bits.
ins = [r for r in rows if r["scenario_id"].startswith("tiny_")
       and r["topology"] == "InSensor" and r["bits"] == 4 and not r["error"]]
for r in sorted(ins, key=lambda r: r["e_total"])[:5]:
    print(f"{r['scenario_id']:<42} {r['bandwidth_reduction']:>10.0f}x  "
          f"{r['e_total'] * 1e6:.3f} uJ")

# %%
# Rows that check the model against reported reductions.
for r in rows:
    if not r["scenario_id"].startswith("tiny_"):
        print(f"{r['scenario_id']:<42} {r['bandwidth_reduction']:>8.1f}x  {r['note']}")

# %%
# The report is plain CSV, so any spreadsheet or dataframe library reads it.
text = dse.write_report(rows)
header = next(csv.reader(io.StringIO(text)))
print(", ".join(header))
