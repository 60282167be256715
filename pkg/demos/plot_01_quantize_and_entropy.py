"""
Quantizing activations and measuring their entropy
==================================================

An encoder output is squeezed into a handful of signed integer levels.
This walk-through quantizes a bell-shaped activation map, tracks the
clipping range with momentum, and prices the result with the entropy
terms used during training.
"""

# %%
# Start from real-valued activations with a few outliers.
import numpy as np

from insensor.entropy import (LossWeights, dataset_entropy, empirical_entropy,
                              entropy_loss, histogram, joint_loss, mse)
from insensor.quantizer import QuantizerState, fake_quantize, q_scale, quantize, update_range

rng = np.random.default_rng(0)
z = rng.normal(0.0, 0.4, size=(8, 4, 4, 4))

# %%
# Calibrate the range over a few batches.  Each update blends the old
# maximum with the batch maximum, so one outlier batch does not blow up
# the step size.
state = QuantizerState(bits=4, range_max=1.0, momentum=0.9)
for batch in z:
    state = update_range(state, batch)
print(f"range after calibration: {state.range_max:.3f}, step {q_scale(state):.4f}")

# %%
# Quantize.  Symbols live in -7..7 for 4 bits, and the reconstruction
# error of any in-range value stays under half a step.
symbols = quantize(z, state)
recon = fake_quantize(z, state)
print("symbol range:", symbols.min(), "..", symbols.max())
print(f"reconstruction MSE: {mse(z, recon):.5f}")

# %%
# The histogram piles up around zero, which is what makes entropy coding pay.
h = histogram(symbols)
for s, n in h.counts.items():
    print(f"{s:+d} {'#' * (60 * n // h.total)}")
print(f"entropy: {empirical_entropy(h):.3f} bits/symbol "
      f"(dataset-level {dataset_entropy(symbols):.3f})")

# %%
# The entropy penalty is a hinge: nothing below the threshold, linear above.
for ref in (0.7, 1.5, 3.0):
    print(f"H_ref={ref}: entropy loss {entropy_loss(h, ref):.3f}")
print("joint loss:", round(joint_loss(mse(z, recon), entropy_loss(h, 0.7), 0.1,
                                      LossWeights()), 4))
