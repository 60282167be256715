"""
Shapes and MAC counts of encoder networks
=========================================

Parse the text network specs shipped in ``specs/`` and walk through
their per-layer cost.  Then shrink the encoder's output to other
channel and spatial sizes, the knobs a design sweep turns.
"""

# %%
from pathlib import Path

from insensor.netspec import complete_encoder, count_macs, infer_shapes, load_spec

SPECS = Path(__file__).resolve().parents[1] / "specs"

# %%
for name in ("tiny_resnet_vww", "tiny_swinvit_vww"):
    net = load_spec(SPECS / f"{name}.spec")
    work = count_macs(net)
    print(f"{net.name}: {net.input} -> {work.output_shape}")
    for layer, shape, w in zip(net.layers, infer_shapes(net), work.per_layer):
        print(f"  {layer.kind.value:<17}{str(shape):>12}{w.macs:>14,} MACs")
    print(f"  total {work.total_macs:,} MACs, {work.total_weights:,} weights\n")

# %%
# Same backbone, different bottleneck.  Output channels d and pooled side s
# set how many symbols leave the sensor.
base = load_spec(SPECS / "tiny_resnet_vww.spec")
for d, s in [(1, 1), (4, 4), (16, 1), (16, 4)]:
    w = count_macs(complete_encoder(base, d, s))
    print(f"d={d:<3} s={s}: output {w.output_shape}, {w.total_macs:,} MACs")
