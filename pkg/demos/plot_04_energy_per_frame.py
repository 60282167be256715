"""
Per-frame energy: in-sensor encoder versus raw readout
======================================================

Both topologies read the same pixels.  The in-sensor path then spends
energy on the stacked encoder and Huffman coder so it can ship a few
bytes instead of the raw frame over the expensive sensor link.
"""

# %%
from pathlib import Path

from insensor import dse
from insensor.energy import format_uj

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"

# %%
report = dse.evaluate_scenario(SCENARIOS / "vww_resnet.json")
print(dse.format_energy_report(report))

# %%
# Where does the in-sensor energy go?
r = report.in_sensor
for term in ("e_aps", "e_tsv", "e_enc", "e_huff", "e_inf"):
    share = getattr(r, term) / r.e_total
    print(f"{term:<7}{format_uj(getattr(r, term)):>14}  {share:6.1%}")

# %%
# Every shipped scenario, side by side.  The identity encoder compresses
# nothing, so it loses to the raw readout.
for path in sorted(SCENARIOS.glob("*.json")):
    if "grid" in path.stem:
        continue
    rep = dse.evaluate_scenario(path)
    print(f"{rep.name:<18} reduction {rep.in_sensor.bandwidth_reduction:>9.1f}x  "
          f"energy ratio {rep.ratio:.3f}")
